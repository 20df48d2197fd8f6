"""Energies, break-down quantities and formulation residuals."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from math import ceil

import numpy as np

from .dn import dn_apply, dn_symbol
from .dynamics import (Evaluation, SimParams, WaveState, assemble_rhs,
                       compute_R_omega, rotational_split)
from .errors import TaylorSignViolation
from .grid import GridSpec, dealias, div, fft_forward, fourier_multiplier, grad, resample
from .norms import lp_norm, sobolev_norm
from .paradiff import SymbolField, bony_remainder, paradiff_apply, paraproduct
from .zgrid import zops

__all__ = [
    "DiagnosticsRecord",
    "basic_energy",
    "mean_curvature",
    "curvature_norms",
    "curvature_identity_residual",
    "lipschitz_norm",
    "energy_Es",
    "good_unknown",
    "good_unknown_rate",
    "good_unknown_residual",
    "symmetrizer_energy",
    "zeta_residual",
    "breakdown_report",
    "BreakdownReport",
    "make_record",
]


@dataclass
class DiagnosticsRecord:
    """One row of the per-step diagnostics table (fixed column order)."""

    t: float
    E_basic: float
    E_s: float
    E_symm: float
    a_min: float
    depth_min: float
    curvature_L2: float
    curvature_Lp: float
    lipschitz_v: float
    zeta_residual: float
    div_residual: float
    curl_residual: float
    good_unknown_residual: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [float(v) for v in asdict(self).values()]


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def basic_energy(state: WaveState, ev: Evaluation) -> float:
    """``||v||^2_{L2(Omega)} + ||eta||^2_{L2}``; the domain integral carries the
    Jacobian ``d_z rho``."""
    g = state.grid
    Z = zops(g.Nz)
    v = ev.velocity.v
    col = Z.integrate(np.sum(v ** 2, axis=0) * ev.map.dz_rho)
    return float((np.sum(col) + np.sum(state.eta ** 2)) * g.cell_volume)


def energy_Es(state: WaveState, ev: Evaluation, s: float) -> float:
    """``||eta||_{H^{s+1/2}} + ||v||_{H^{s+1/2}}`` with the strip norm
    ``sum_j ||<D>^{s+1/2-j} d_z^j v~||_{L2_z L2_x}``, ``j <= ceil(s + 1/2)``."""
    g = state.grid
    Z = zops(g.Nz)
    r = s + 0.5
    total = sobolev_norm(g, state.eta, r)
    f = ev.velocity.v
    for j in range(int(ceil(r)) + 1):
        if j == 1:
            f = ev.velocity.dz_v
        elif j > 1:
            f = Z.dz(f, axis=1)
        c = fft_forward(g, f)
        w = (1.0 + g.kabs ** 2) ** (r - j)
        lev = g.volume * np.sum(w * np.abs(c) ** 2, axis=tuple(range(-g.d, 0)))
        total += float(np.sqrt(Z.integrate(np.sum(lev, axis=0))))
    return total


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def _fine(grid: GridSpec, pad: int) -> GridSpec:
    return GridSpec(grid.d, grid.N * pad, grid.L, grid.Nz, grid.dealias_fraction)


def _pointwise(grid: GridSpec, fn, arrays, pad: int):
    """Evaluate the nonlinearity ``fn`` on a grid refined ``pad`` times and
    truncate back, which removes its aliasing error.

    The coarse Nyquist modes are dropped rather than folded: spectral
    derivatives vanish there, so truncation then commutes with them.
    """
    if pad == 1:
        return fn(*arrays)
    fg = _fine(grid, pad)
    fine = [resample(grid, a, fg.N) for a in arrays]
    res = resample(fg, fn(*fine), grid.N)
    keep = np.ones(grid.shape)
    for ax in range(grid.d):
        sl = [slice(None)] * grid.d
        sl[ax] = grid.N // 2
        keep[tuple(sl)] = 0.0
    return fourier_multiplier(grid, res, keep)


def mean_curvature(grid: GridSpec, eta: np.ndarray, pad: int = 1) -> np.ndarray:
    """``H = div(grad eta / sqrt(1 + |grad eta|^2))``; ``pad > 1`` evaluates the
    quotient on a refined grid."""
    ge = grad(grid, eta)
    n = _pointwise(grid, lambda q: q / np.sqrt(1.0 + np.sum(q ** 2, axis=0)), [ge], pad)
    return div(grid, n)


def curvature_norms(grid: GridSpec, H: np.ndarray, p: float) -> tuple[float, float]:
    return float(lp_norm(grid, H, 2)), float(lp_norm(grid, H, p))


def curvature_identity_residual(grid: GridSpec, eta: np.ndarray, pad: int = 4) -> float:
    """``max_l |d_j(a_ij d_i eta_l) - d_l H|`` with
    ``a_ij = W^{-3} (W^2 delta_ij - eta_i eta_j)``, ``W^2 = 1 + |grad eta|^2``.

    Both nonlinear fluxes are formed on a grid refined ``pad`` times, so the
    residual measures the identity rather than aliasing.
    """
    d = grid.d
    ge = grad(grid, eta)
    H = mean_curvature(grid, eta, pad)
    gH = grad(grid, H)
    worst = 0.0
    for l in range(d):
        hess = grad(grid, ge[l])  # hess[i] = d_i eta_l

        def flux(q, h):
            W2 = 1.0 + np.sum(q ** 2, axis=0)
            return np.stack([sum(((W2 if i == j else 0.0) - q[i] * q[j]) * h[i]
                                 for i in range(d)) / W2 ** 1.5 for j in range(d)])

        F = _pointwise(grid, flux, [ge, hess], pad)
        worst = max(worst, float(np.abs(div(grid, F) - gH[l]).max()))
    return worst


def lipschitz_norm(ev: Evaluation) -> float:
    """``||v||_{W^{1,inf}}`` as a grid sup over the strip."""
    v = ev.velocity.v
    G = ev.velocity.gradient()
    return float(np.sqrt(np.sum(v ** 2, axis=0)).max()
                 + np.sqrt(np.sum(G ** 2, axis=(0, 1))).max())


# ---------------------------------------------------------------------------
# good unknown
# ---------------------------------------------------------------------------

def good_unknown(state: WaveState) -> np.ndarray:
    """``U = V + T_zeta B`` (one component per horizontal direction)."""
    g = state.grid
    zeta = grad(g, state.eta)
    return np.stack([state.V[i] + paraproduct(g, zeta[i], state.B) for i in range(g.d)])


def _TV_grad(g: GridSpec, V: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``T_V . grad f``."""
    gf = grad(g, f)
    return sum(paraproduct(g, V[j], gf[j]) for j in range(g.d))


def good_unknown_rate(state: WaveState, ev: Evaluation) -> np.ndarray:
    """``d_t U`` predicted by the paralinearized equation:

    ``-T_a zeta + h1 + [D_t, T_zeta] B - T_V . grad U`` with
    ``h1 = (T_V - V) . grad V - R(a, zeta) + T_zeta (T_V - V) . grad B`` and
    ``D_t = d_t + T_V . grad``.
    """
    g = state.grid
    V, B = state.V, state.B
    a = ev.pressure.taylor_a
    zeta = grad(g, state.eta)
    dzeta = grad(g, ev.deriv.d_eta)
    U = good_unknown(state)
    adv_B = _TV_grad(g, V, B) - np.sum(V * grad(g, B), axis=0)
    out = np.empty((g.d,) + g.shape)
    for i in range(g.d):
        adv_V = _TV_grad(g, V, V[i]) - np.sum(V * grad(g, V[i]), axis=0)
        h1 = adv_V - bony_remainder(g, a, zeta[i]) + paraproduct(g, zeta[i], adv_B)
        TzB = paraproduct(g, zeta[i], B)
        comm = (paraproduct(g, dzeta[i], B) + _TV_grad(g, V, TzB)
                - paraproduct(g, zeta[i], _TV_grad(g, V, B)))
        out[i] = -paraproduct(g, a, zeta[i]) + h1 + comm - _TV_grad(g, V, U[i])
    return out


def good_unknown_residual(state: WaveState, previous: WaveState, dt: float,
                          ev: Evaluation | None = None, ev_prev: Evaluation | None = None,
                          params: SimParams = SimParams()) -> float:
    """L2 norm of ``(U1 - U0)/dt - (F(s0) + F(s1))/2`` with ``F`` from
    :func:`good_unknown_rate`; second order in ``dt`` (trapezoid rule)."""
    g = state.grid
    if ev is None:
        ev = assemble_rhs(state, params)
    if ev_prev is None:
        ev_prev = assemble_rhs(previous, params)
    diff = (good_unknown(state) - good_unknown(previous)) / dt
    rate = 0.5 * (good_unknown_rate(state, ev) + good_unknown_rate(previous, ev_prev))
    return float(np.sqrt(np.sum((diff - rate) ** 2) * g.cell_volume))


def symmetrizer_energy(state: WaveState, ev: Evaluation, s: float,
                       previous: WaveState | None = None, dt: float = 0.0) -> float:
    """``||T_{sqrt(a lambda)} U||_{H^{s-1/2}} + ||D_t U||_{H^{s-1/2}}``.

    ``D_t U`` is the backward difference over the last step plus
    ``T_V . grad U``; without a previous state the paralinearized rate is used.
    """
    g = state.grid
    a = ev.pressure.taylor_a
    if np.any(a <= 0):
        raise TaylorSignViolation("a <= 0: sqrt(a lambda) undefined")
    lam = dn_symbol(ev.map)
    sel = np.broadcast_to(g.kabs > 0, lam.values.shape)
    if np.any(lam.values.real[sel] <= 0):
        raise TaylorSignViolation("Re lambda <= 0 at a nonzero mode")
    sym = SymbolField(g, np.sqrt(a.reshape(a.shape + (1,) * g.d) * lam.values), 0.5)
    U = good_unknown(state)
    if previous is not None and dt > 0:
        dU = (U - good_unknown(previous)) / dt
        DtU = np.stack([dU[i] + _TV_grad(g, state.V, U[i]) for i in range(g.d)])
    else:
        rate = good_unknown_rate(state, ev)
        DtU = np.stack([rate[i] + _TV_grad(g, state.V, U[i]) for i in range(g.d)])
    r = s - 0.5
    e1 = np.sqrt(sum(sobolev_norm(g, paradiff_apply(sym, U[i]), r) ** 2 for i in range(g.d)))
    e2 = np.sqrt(sum(sobolev_norm(g, DtU[i], r) ** 2 for i in range(g.d)))
    return float(e1 + e2)


def zeta_residual(state: WaveState, ev: Evaluation, params: SimParams = SimParams()) -> float:
    """L2 norm of ``(d_t + V.grad) zeta - G(eta) V - zeta G(eta) B - R_omega``.

    ``G`` is the Dirichlet-bottom operator paired with the split
    ``v = v_ir + v_om`` (``v_ir`` vanishes on the bottom).
    """
    g = state.grid
    m = ev.map
    zeta = grad(g, state.eta)
    dzeta = grad(g, ev.deriv.d_eta)
    GB = dn_apply(g, state.eta, state.B, "dirichlet0", m=m, paralinearize=False,
                  tolerance=params.tolerance).Gf
    _, v_om = rotational_split(state, params)
    R = compute_R_omega(state, v_om, params)
    total = 0.0
    for i in range(g.d):
        GV = dn_apply(g, state.eta, state.V[i], "dirichlet0", m=m, paralinearize=False,
                      tolerance=params.tolerance).Gf
        lhs = dzeta[i] + dealias(g, np.sum(state.V * grad(g, zeta[i]), axis=0))
        total += np.sum((lhs - GV - zeta[i] * GB - R[i]) ** 2)
    return float(np.sqrt(total * g.cell_volume))


def make_record(state: WaveState, ev: Evaluation, previous: WaveState | None = None,
                dt: float = 0.0, ev_prev: Evaluation | None = None, s: float = 2.0,
                curvature_p: float = 5.0, params: SimParams = SimParams(),
                with_zeta: bool = True, with_symm: bool = True) -> DiagnosticsRecord:
    """All per-step diagnostics for ``state`` (residuals needing a previous
    state are NaN at the first record)."""
    g = state.grid
    H = mean_curvature(g, state.eta)
    cl2, clp = curvature_norms(g, H, curvature_p)
    gu = np.nan
    if previous is not None and dt > 0:
        gu = good_unknown_residual(state, previous, dt, ev, ev_prev, params)
    try:
        symm = symmetrizer_energy(state, ev, s, previous, dt) if with_symm else np.nan
    except TaylorSignViolation:
        symm = np.nan
    zr = zeta_residual(state, ev, params) if with_zeta else np.nan
    return DiagnosticsRecord(
        t=state.t,
        E_basic=basic_energy(state, ev),
        E_s=energy_Es(state, ev, s),
        E_symm=symm,
        a_min=float(ev.pressure.taylor_a.min()),
        depth_min=float((1.0 + state.eta).min()),
        curvature_L2=cl2,
        curvature_Lp=clp,
        lipschitz_v=lipschitz_norm(ev),
        zeta_residual=zr,
        div_residual=ev.velocity.div_residual,
        curl_residual=ev.velocity.curl_residual,
        good_unknown_residual=gu,
    )


# ---------------------------------------------------------------------------
# break-down monitor
# ---------------------------------------------------------------------------

@dataclass
class BreakdownReport:
    t_final: float
    M_sup: float
    curvature_L2_sup: float
    curvature_Lp_sup: float
    lipschitz_sup: float
    E_s_sup: float
    a_min_inf: float
    depth_min_inf: float
    taylor_violation_time: float | None
    depth_violation_time: float | None
    first_violation: str | None
    abort_reason: str | None = None

    def lines(self) -> list[str]:
        out = [f"{k} = {v}" for k, v in asdict(self).items()]
        return out


def breakdown_report(records: list[DiagnosticsRecord], c0: float, h0: float,
                     abort_reason: str | None = None) -> BreakdownReport:
    """Sups of the continuation quantities and first violation times.

    ``M(T) = sup_t (||H||_{L^p} + ||H||_{L^2} + ||v||_{W^{1,inf}})``.  The
    Taylor hypothesis is ``a >= c0``, the depth hypothesis ``1 + eta >= h0``.
    """
    if not records:
        raise ValueError("breakdown_report needs at least one record")
    t = np.array([r.t for r in records])
    M = np.array([r.curvature_Lp + r.curvature_L2 + r.lipschitz_v for r in records])
    a = np.array([r.a_min for r in records])
    dep = np.array([r.depth_min for r in records])

    def first(mask):
        idx = np.flatnonzero(mask)
        return float(t[idx[0]]) if idx.size else None

    ta = first(a < c0)
    td = first(dep < h0)
    if abort_reason == "depth" and td is None:
        td = float(t[-1])
    cands = [(tv, name) for tv, name in ((ta, "taylor_sign"), (td, "depth")) if tv is not None]
    firstv = min(cands)[1] if cands else None
    return BreakdownReport(
        t_final=float(t[-1]),
        M_sup=float(M.max()),
        curvature_L2_sup=float(max(r.curvature_L2 for r in records)),
        curvature_Lp_sup=float(max(r.curvature_Lp for r in records)),
        lipschitz_sup=float(max(r.lipschitz_v for r in records)),
        E_s_sup=float(max(r.E_s for r in records)),
        a_min_inf=float(a.min()),
        depth_min_inf=float(dep.min()),
        taylor_violation_time=ta,
        depth_violation_time=td,
        first_violation=firstv,
        abort_reason=abort_reason,
    )
