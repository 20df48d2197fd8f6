"""Evolved state, velocity recovery, right-hand side and RK4 stepping.

State variables are the surface traces ``eta``, ``V`` (horizontal velocity),
``B`` (vertical velocity), the bottom trace ``Vb`` and the vorticity ``omega``
on the flattened strip.  Vorticity is stored by its independent components
``omega_ij = d_i v^j - d_j v^i`` for ``i < j`` (index ``d`` is the vertical):
one component ``omega_12`` for ``d = 1``, three for ``d = 2``.

Evolution:

    d_t eta   = B - V . grad eta
    d_t V     = -V . grad V - a grad eta
    d_t B     = -V . grad B + a - 1
    d_t Vb    = -Vb . grad Vb - grad P |_{y=-1}
    d_t omega = -vbar . grad_{x,z} omega + stretching

with ``a`` the Taylor coefficient and ``vbar`` the strip transport velocity.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable

import numpy as np

from .dn import PressureResult, solve_pressure, velocity_gradient
from .elliptic import EllipticProblem, solve
from .errors import (DepthViolation, EllipticityViolation, FlatteningFailure,
                     InstabilityError, NoConvergence)
from .geometry import (FlatteningMap, assemble_map, build_map, physical_gradient, pushforward,
                       transport_velocity)
from .grid import GridSpec, dealias, fourier_multiplier, grad
from .zgrid import zops

__all__ = [
    "SimParams",
    "WaveState",
    "StateDerivative",
    "Evaluation",
    "VelocityField",
    "omega_pairs",
    "omega_tensor",
    "recover_velocity",
    "rotational_split",
    "compute_R_omega",
    "assemble_rhs",
    "rk4_step",
    "stable_dt",
    "spectral_filter",
    "run",
    "RunResult",
]


def omega_pairs(d: int) -> list[tuple[int, int]]:
    return list(combinations(range(d + 1), 2))


@dataclass(frozen=True)
class SimParams:
    """Numerical parameters shared by every right-hand-side evaluation."""

    h0: float = 0.1
    tolerance: float = 1e-12
    backend: str = "direct"
    cfl: float = 0.5
    filter: bool = True
    dealias: bool = True


@dataclass(eq=False)
class WaveState:
    grid: GridSpec
    t: float
    eta: np.ndarray
    V: np.ndarray
    B: np.ndarray
    Vb: np.ndarray
    omega: np.ndarray
    delta: float | None = None
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        g = self.grid
        npair = len(omega_pairs(g.d))
        checks = [("eta", self.eta, g.shape), ("V", self.V, (g.d,) + g.shape),
                  ("B", self.B, g.shape), ("Vb", self.Vb, (g.d,) + g.shape),
                  ("omega", self.omega, (npair,) + g.strip_shape)]
        for name, arr, shape in checks:
            if np.shape(arr) != shape:
                raise ValueError(f"{name} has shape {np.shape(arr)}, expected {shape}")

    @classmethod
    def rest(cls, grid: GridSpec) -> "WaveState":
        z = np.zeros(grid.shape)
        zv = np.zeros((grid.d,) + grid.shape)
        om = np.zeros((len(omega_pairs(grid.d)),) + grid.strip_shape)
        return cls(grid, 0.0, z, zv, z.copy(), zv.copy(), om)

    def fields(self) -> dict[str, np.ndarray]:
        return {"eta": self.eta, "V": self.V, "B": self.B, "Vb": self.Vb,
                "omega": self.omega}

    def copy(self) -> "WaveState":
        f = {k: np.array(v, copy=True) for k, v in self.fields().items()}
        return WaveState(self.grid, self.t, f["eta"], f["V"], f["B"], f["Vb"], f["omega"],
                         self.delta)

    def axpy(self, h: float, dv: "StateDerivative") -> "WaveState":
        return WaveState(self.grid, self.t + h, self.eta + h * dv.d_eta,
                         self.V + h * dv.d_V, self.B + h * dv.d_B, self.Vb + h * dv.d_Vb,
                         self.omega + h * dv.d_omega, self.delta)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.fields().values())


@dataclass(eq=False)
class StateDerivative:
    d_eta: np.ndarray
    d_V: np.ndarray
    d_B: np.ndarray
    d_Vb: np.ndarray
    d_omega: np.ndarray

    def arrays(self):
        return (self.d_eta, self.d_V, self.d_B, self.d_Vb, self.d_omega)

    def max_abs(self) -> float:
        return max(float(np.abs(a).max()) for a in self.arrays())

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass(eq=False)
class VelocityField:
    """Recovered strip velocity with its z-derivative and consistency residuals."""

    v: np.ndarray
    dz_v: np.ndarray
    map: FlatteningMap
    div_residual: float
    curl_residual: float

    def gradient(self) -> np.ndarray:
        return velocity_gradient(self.map, self.v, self.dz_v)


@dataclass(eq=False)
class Evaluation:
    deriv: StateDerivative
    map: FlatteningMap
    velocity: VelocityField
    pressure: PressureResult


# ---------------------------------------------------------------------------
# geometry and vorticity helpers
# ---------------------------------------------------------------------------

def state_map(state: WaveState, params: SimParams) -> FlatteningMap:
    m = state.cache.get("map")
    if m is None:
        m = build_map(state.grid, state.eta, params.h0, delta=state.delta)
        state.cache["map"] = m
    return m


def omega_tensor(omega: np.ndarray, d: int) -> list[list[np.ndarray | None]]:
    """Antisymmetric ``W[i][j]`` from the stored components (``None`` on the diagonal)."""
    W: list[list[np.ndarray | None]] = [[None] * (d + 1) for _ in range(d + 1)]
    for n, (i, j) in enumerate(omega_pairs(d)):
        W[i][j] = omega[n]
        W[j][i] = -omega[n]
    return W


def _curl_source(m: FlatteningMap, omega: np.ndarray) -> np.ndarray:
    """``S^i = sum_j d_j omega_{ji}`` (so that ``Lap v = S`` for div-free ``v``)."""
    g = m.grid
    d = g.d
    grads = [physical_gradient(m, omega[n]) for n in range(omega.shape[0])]
    S = np.zeros((d + 1,) + g.strip_shape)
    for n, (i, j) in enumerate(omega_pairs(d)):
        # omega_{ji} = -omega_ij contributes -d_j omega_ij to S^i
        S[i] -= grads[n][j]
        S[j] += grads[n][i]
    return S


def _solve_components(m: FlatteningMap, F: np.ndarray, top: np.ndarray,
                      bottom: np.ndarray, params: SimParams):
    c = m.coefficients()
    v = np.empty(F.shape)
    dz_v = np.empty(F.shape)
    for i in range(F.shape[0]):
        prob = EllipticProblem(c, c.alpha * F[i], top[i], "dirichlet", bottom[i],
                               tolerance=params.tolerance)
        sol = solve(prob, params.backend)
        v[i], dz_v[i] = sol.v, sol.dz_v
    return v, dz_v


def _traces(state: WaveState):
    top = np.concatenate([state.V, state.B[None]], axis=0)
    bottom = np.concatenate([state.Vb, np.zeros((1,) + state.grid.shape)], axis=0)
    return top, bottom


def _residuals(m: FlatteningMap, v, dz_v, omega):
    Gv = velocity_gradient(m, v, dz_v)
    d = m.grid.d
    div = sum(Gv[i, i] for i in range(d + 1))
    curl = 0.0
    for n, (i, j) in enumerate(omega_pairs(d)):
        curl = curl + np.mean((Gv[i, j] - Gv[j, i] - omega[n]) ** 2)
    return float(np.sqrt(np.mean(div ** 2))), float(np.sqrt(curl))


def recover_velocity(state: WaveState, params: SimParams = SimParams()) -> VelocityField:
    """Velocity from vorticity and traces: ``Lap v^i = sum_j d_j omega_{ji}``,
    ``v = (V, B)`` on top and ``(Vb, 0)`` on the bottom."""
    cached = state.cache.get("velocity")
    if cached is not None:
        return cached
    m = state_map(state, params)
    S = _curl_source(m, state.omega)
    top, bottom = _traces(state)
    v, dz_v = _solve_components(m, S, top, bottom, params)
    div, curl = _residuals(m, v, dz_v, state.omega)
    out = VelocityField(v, dz_v, m, div, curl)
    state.cache["velocity"] = out
    return out


def rotational_split(state: WaveState, params: SimParams = SimParams()):
    """``(v_ir, v_om)``: harmonic part carrying the surface traces and the
    vortical part carrying the bottom trace and the curl source."""
    m = state_map(state, params)
    g = state.grid
    top, bottom = _traces(state)
    zero_top = np.zeros_like(top)
    zero_src = np.zeros((g.d + 1,) + g.strip_shape)
    v_ir = _solve_components(m, zero_src, top, np.zeros_like(bottom), params)
    v_om = _solve_components(m, _curl_source(m, state.omega), zero_top, bottom, params)
    return v_ir, v_om


def compute_R_omega(state: WaveState, v_om, params: SimParams = SimParams()) -> np.ndarray:
    """Surface term ``R_omega`` built from the vortical velocity part.

    ``v_om`` is the pair ``(v, d_z v)`` returned by :func:`rotational_split`.
    """
    m = state_map(state, params)
    g = state.grid
    d = g.d
    v, dz_v = v_om
    Gv = velocity_gradient(m, v, dz_v)[:, :, -1]  # top level
    zeta = grad(g, state.eta)
    W = omega_tensor(state.omega[:, -1], d)
    out = np.zeros((d,) + g.shape)
    for i in range(d):
        t1 = Gv[d, i] - sum(Gv[j, i] * zeta[j] for j in range(d))
        t2 = zeta[i] * (Gv[d, d] - sum(zeta[j] * Gv[j, d] for j in range(d)))
        t3 = W[i][d] - sum(zeta[j] * W[i][j] for j in range(d) if j != i)
        t3 = t3 + zeta[i] * sum(zeta[j] * W[j][d] for j in range(d))
        out[i] = t1 + t2 + t3
    return out


# ---------------------------------------------------------------------------
# right-hand side
# ---------------------------------------------------------------------------

def _dealias(g: GridSpec, f: np.ndarray, on: bool) -> np.ndarray:
    return dealias(g, f) if on else f


def _advect(g: GridSpec, U: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``U . grad f`` for horizontal ``U`` (leading axis ``d``)."""
    gf = grad(g, f)
    return np.sum(U * gf, axis=0)


def _stretching(Gv: np.ndarray, omega: np.ndarray, d: int) -> np.ndarray:
    """``sum_k (d_j v^k omega_{ki} - d_i v^k omega_{kj})`` for each stored pair."""
    W = omega_tensor(omega, d)
    out = np.zeros_like(omega)
    for n, (i, j) in enumerate(omega_pairs(d)):
        acc = 0.0
        for k in range(d + 1):
            if W[k][i] is not None:
                acc = acc + Gv[j, k] * W[k][i]
            if W[k][j] is not None:
                acc = acc - Gv[i, k] * W[k][j]
        out[n] = acc
    return out


def assemble_rhs(state: WaveState, params: SimParams = SimParams()) -> Evaluation:
    """Full time derivative of the state together with the solver products."""
    g = state.grid
    da = params.dealias
    m = state_map(state, params)
    vel = recover_velocity(state, params)
    pr = state.cache.get("pressure")
    if pr is None:
        pr = solve_pressure(m, vel.v, vel.dz_v, params.backend, params.tolerance)
        state.cache["pressure"] = pr
    a = pr.taylor_a
    zeta = grad(g, state.eta)
    d_eta = state.B - _dealias(g, np.sum(state.V * zeta, axis=0), da)
    d_V = np.stack([-_dealias(g, _advect(g, state.V, state.V[i]) + a * zeta[i], da)
                    for i in range(g.d)])
    d_B = -_dealias(g, _advect(g, state.V, state.B), da) + (a - 1.0)
    d_Vb = np.stack([-_dealias(g, _advect(g, state.Vb, state.Vb[i]), da)
                     - pr.bottom_grad[i] for i in range(g.d)])
    mt = m.with_dt(d_eta)
    vbar = transport_velocity(mt, vel.v)
    Z = zops(g.Nz)
    d_om = np.empty_like(state.omega)
    for n in range(state.omega.shape[0]):
        gw = np.concatenate([grad(g, state.omega[n]), Z.dz(state.omega[n])[None]], axis=0)
        d_om[n] = -_dealias(g, np.sum(vbar * gw, axis=0), da)
    if g.d > 1:
        d_om += _dealias(g, _stretching(vel.gradient(), state.omega, g.d), da)
    deriv = StateDerivative(d_eta, d_V, d_B, d_Vb, d_om)
    return Evaluation(deriv, m, vel, pr)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def spectral_filter(g: GridSpec, f: np.ndarray) -> np.ndarray:
    """Exponential filter ``exp(-36 (|xi| / xi_max)^36)``."""
    sig = np.exp(-36.0 * (g.kabs / g.kmax) ** 36)
    return fourier_multiplier(g, f, sig)


def stable_dt(g: GridSpec, a_max: float, cfl: float) -> float:
    """``cfl / sqrt(max a * k_max)`` from the gravity-wave frequency ``sqrt(a k)``."""
    return cfl / np.sqrt(max(a_max, 1e-12) * g.kmax)


def _ensure_map(state: WaveState, params: SimParams) -> WaveState:
    """Fix ``delta`` on first use; if the fixed value no longer flattens,
    search again and carry the vorticity over to the new strip coordinates."""
    if state.delta is None:
        m = build_map(state.grid, state.eta, params.h0)
        state.delta = m.delta
        state.cache["map"] = m
        return state
    try:
        state_map(state, params)
        return state
    except FlatteningFailure:
        # the stored strip fields still refer to the old map; it only needs
        # to be invertible to carry them over
        old = assemble_map(state.grid, state.eta, state.delta, params.h0)
        if old.dz_rho_min <= 0:
            raise
    new = build_map(state.grid, state.eta, params.h0)
    om = np.stack([pushforward(old, w, new.rho) for w in state.omega])
    out = WaveState(state.grid, state.t, state.eta, state.V, state.B, state.Vb, om, new.delta)
    out.cache["map"] = new
    return out


def rk4_step(state: WaveState, dt: float, params: SimParams = SimParams(),
             first: Evaluation | None = None) -> WaveState:
    """Classical four-stage step, optionally filtered afterwards."""
    state = _ensure_map(state, params)
    k1 = first.deriv if first is not None else assemble_rhs(state, params).deriv
    s2 = state.axpy(0.5 * dt, k1)
    k2 = assemble_rhs(s2, params).deriv
    s3 = state.axpy(0.5 * dt, k2)
    k3 = assemble_rhs(s3, params).deriv
    s4 = state.axpy(dt, k3)
    k4 = assemble_rhs(s4, params).deriv
    comb = StateDerivative(*[(a1 + 2 * a2 + 2 * a3 + a4) / 6.0 for a1, a2, a3, a4 in
                             zip(k1.arrays(), k2.arrays(), k3.arrays(), k4.arrays())])
    out = state.axpy(dt, comb)
    if params.filter:
        g = state.grid
        out = WaveState(g, out.t, spectral_filter(g, out.eta), spectral_filter(g, out.V),
                        spectral_filter(g, out.B), spectral_filter(g, out.Vb),
                        spectral_filter(g, out.omega), out.delta)
    return out


@dataclass(eq=False)
class RunResult:
    state: WaveState
    steps: int
    status: str  # "ok", "depth", "nan", "solver"
    message: str = ""

    @property
    def exit_code(self) -> int:
        return {"ok": 0, "depth": 2, "nan": 3, "solver": 4}[self.status]


SOLVER_ERRORS = (NoConvergence, FlatteningFailure, EllipticityViolation, InstabilityError)


def run(state: WaveState, params: SimParams, T_final: float,
        on_step: Callable[[WaveState, Evaluation, WaveState | None, float], None] | None = None,
        dt: float | None = None, max_steps: int | None = None) -> RunResult:
    """Integrate to ``T_final``.

    ``on_step(state, evaluation, previous_state, dt)`` is called for the
    initial state and after every accepted step.  Without ``dt`` the step is
    chosen from the CFL rule at the start of each step.  Aborts return the
    last accepted state with a status instead of raising.
    """
    prev, prev_dt = None, 0.0
    steps = 0
    while True:
        try:
            state = _ensure_map(state, params)
            ev = assemble_rhs(state, params)
        except DepthViolation as exc:
            return RunResult(state, steps, "depth", str(exc))
        except SOLVER_ERRORS as exc:
            return RunResult(state, steps, "solver", str(exc))
        if not ev.deriv.is_finite():
            return RunResult(state, steps, "nan", "non-finite right-hand side")
        if on_step is not None:
            on_step(state, ev, prev, prev_dt)
        remaining = T_final - state.t
        if remaining <= 1e-12 * max(1.0, T_final) or (max_steps is not None and steps >= max_steps):
            return RunResult(state, steps, "ok")
        h = dt if dt is not None else stable_dt(state.grid, float(ev.pressure.taylor_a.max()),
                                                params.cfl)
        h = min(h, remaining)
        try:
            new = rk4_step(state, h, params, first=ev)
        except DepthViolation as exc:
            return RunResult(state, steps, "depth",
                             f"within t in ({state.t:.6g}, {state.t + h:.6g}]: {exc}")
        except SOLVER_ERRORS as exc:
            return RunResult(state, steps, "solver", str(exc))
        if not new.is_finite():
            return RunResult(state, steps, "nan", f"non-finite state at t = {new.t:.6g}")
        depth = float((1.0 + new.eta).min())
        if depth < params.h0:
            # the violating step is rejected; the last accepted state is returned
            return RunResult(state, steps, "depth",
                             f"t = {new.t:.6g}: {DepthViolation(depth, params.h0)}")
        prev, prev_dt = state, h
        state = new
        steps += 1
