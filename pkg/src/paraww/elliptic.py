"""Solvers for the flattened elliptic problem on the strip.

    d_z^2 v + alpha Lap v + beta . grad d_z v - gamma d_z v = F0,
    v(., 0) = f,   v(., -1) = f_b  or  d_z v(., -1) = 0.

Every backend is built on the same per-mode z-solver for

    (d_z - a)(d_z - A) v = F,   a = -|xi|, A = |xi|  (flat case),

written as two first-order marches: ``w = (d_z - A) v`` goes up from the
bottom (``d_z w = a w + F``), then ``v`` goes down from the top
(``d_z v = A v + w``).  Both marches are integrated exactly for the degree-7
interpolant of their source (:mod:`paraww.zgrid`), so ``d_z v = A v + w``
holds at every level and gives the z-derivative for free.  The unknown
bottom value of ``w`` is fixed by adding a multiple of the analytic unit
response.

Backends
--------
solve_flat      the exact frequency-diagonal solve (``alpha = 1``, ``beta = gamma = 0``)
solve_direct    fixed point ``v = flat^{-1}(F0 - (L - L_flat) v)``
solve_factored  marches with the paradifferential symbols ``a``, ``A``
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EllipticityViolation, InstabilityError, NoConvergence
from .geometry import EllipticCoefficients
from .grid import GridSpec, fft_forward, fft_inverse, grad, laplacian
from .paradiff import SymbolField, paradiff_apply
from .zgrid import zops

__all__ = [
    "EllipticProblem",
    "EllipticSolution",
    "FactorizationSymbols",
    "solve_flat",
    "solve_direct",
    "solve_factored",
    "solve",
    "factorization_symbols",
    "parabolic_march",
    "apply_operator",
]

BOTTOM_KINDS = ("dirichlet", "neumann")


def _rms(x) -> float:
    x = np.asarray(x)
    return float(np.sqrt(np.mean(np.abs(x) ** 2))) if x.size else 0.0


@dataclass(eq=False)
class EllipticProblem:
    """One strip boundary-value problem.

    ``F0`` is the volume source; an optional ``G0`` adds ``d_z G0`` to it
    without differentiating ``G0`` numerically.  ``bottom`` is the Dirichlet
    trace ``f_b`` (zero when omitted) and is ignored for a Neumann bottom.
    """

    coeffs: EllipticCoefficients
    F0: np.ndarray
    top: np.ndarray
    bottom_kind: str = "dirichlet"
    bottom: np.ndarray | None = None
    G0: np.ndarray | None = None
    tolerance: float = 1e-11
    max_iterations: int = 200

    def __post_init__(self):
        g = self.coeffs.grid
        if self.bottom_kind not in BOTTOM_KINDS:
            raise ValueError(f"bottom_kind must be one of {BOTTOM_KINDS}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if np.shape(self.F0) != g.strip_shape:
            raise ValueError(f"F0 shape {np.shape(self.F0)} != strip shape {g.strip_shape}")
        if np.shape(self.top) != g.shape:
            raise ValueError("top data does not match the grid")
        if self.bottom is not None and np.shape(self.bottom) != g.shape:
            raise ValueError("bottom data does not match the grid")
        if self.G0 is not None and np.shape(self.G0) != g.strip_shape:
            raise ValueError("G0 does not match the strip shape")

    @property
    def grid(self) -> GridSpec:
        return self.coeffs.grid

    @property
    def data_scale(self) -> float:
        s = _rms(self.F0) + _rms(self.top)
        if self.bottom is not None and self.bottom_kind == "dirichlet":
            s += _rms(self.bottom)
        if self.G0 is not None:
            s += _rms(self.G0)
        return s


@dataclass(eq=False)
class EllipticSolution:
    v: np.ndarray
    dz_v: np.ndarray
    iterations: int
    residual: float
    backend: str
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# per-mode two-march core
# ---------------------------------------------------------------------------

def _unit_response(z: np.ndarray, a: np.ndarray, A: np.ndarray):
    """Solution with ``w(-1) = 1``, no source, ``v(0) = 0``.

    ``w1 = e^{a(z+1)}`` and ``v1 = e^{a(z+1)} (e^{sigma z} - 1) / sigma``
    with ``sigma = A - a``; ``v1 = z`` in the limit ``sigma -> 0``.
    """
    zc = z[:, None]
    sig = A - a
    small = np.abs(sig) < 1e-12
    safe = np.where(small, 1.0, sig)
    w1 = np.exp(a[None, :] * (zc + 1.0))
    ratio = np.where(small[None, :], zc, np.expm1(safe[None, :] * zc) / safe[None, :])
    return w1 * ratio, w1


def _two_march(nz: int, a: np.ndarray, A: np.ndarray, g_up: np.ndarray,
               top: np.ndarray, kind: str, bottom, lag_v: np.ndarray | None = None,
               G: np.ndarray | None = None):
    """Solve ``d_z w = a w + g_up`` then ``d_z v = A v + lag_v + w`` per mode.

    Arrays are spectral with shape ``(nz, P)``; ``a``, ``A`` have shape ``(P,)``
    and must satisfy ``Re a <= 0 <= Re A``.  With ``G`` the upward source is
    ``g_up + d_z G`` (treated through ``w = w~ + G``).  Returns ``(v, dz_v, w)``.
    """
    Z = zops(nz)
    P = a.shape[0]
    if G is not None:
        w0 = Z.march(a, g_up + a[None, :] * G, np.zeros(P, complex), +1) + G
    else:
        w0 = Z.march(a, g_up, np.zeros(P, complex), +1)
    src = w0 if lag_v is None else w0 + lag_v
    v0 = Z.march(A, src, top, -1)
    key = ("unit", a.tobytes(), A.tobytes())
    unit = Z._march_cache.get(key)
    if unit is None:
        unit = Z._march_cache[key] = _unit_response(Z.z, a, A)
    v1, w1 = unit
    lag_b = 0.0 if lag_v is None else lag_v[0]
    if kind == "dirichlet":
        fb = 0.0 if bottom is None else bottom
        c = (fb - v0[0]) / v1[0]
    else:
        dv0 = A * v0[0] + lag_b + w0[0]
        dv1 = A * v1[0] + w1[0]
        c = -dv0 / dv1
    v = v0 + c[None, :] * v1
    w = w0 + c[None, :] * w1
    dz_v = A[None, :] * v + w
    if lag_v is not None:
        dz_v = dz_v + lag_v
    return v, dz_v, w


def _spec(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    c = fft_forward(grid, f)
    return c.reshape(c.shape[: c.ndim - grid.d] + (grid.N ** grid.d,))


def _phys(grid: GridSpec, c: np.ndarray, real: bool) -> np.ndarray:
    u = fft_inverse(grid, c.reshape(c.shape[:-1] + grid.shape))
    return u.real if real else u


def solve_flat(grid: GridSpec, F: np.ndarray, top: np.ndarray,
               bottom_kind: str = "dirichlet", bottom: np.ndarray | None = None,
               G: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-mode solve of ``d_z^2 v + Lap v = F (+ d_z G)``.

    Returns ``(v, d_z v)`` on the strip grid.
    """
    if bottom_kind not in BOTTOM_KINDS:
        raise ValueError(f"bottom_kind must be one of {BOTTOM_KINDS}")
    real = all(np.isrealobj(x) for x in (F, top, bottom, G) if x is not None)
    k = grid.kabs.ravel()
    a, A = -k.astype(complex), k.astype(complex)
    fb = None if bottom is None else _spec(grid, bottom)
    Gc = None if G is None else _spec(grid, G)
    v, dz_v, _ = _two_march(grid.Nz, a, A, _spec(grid, F), _spec(grid, top),
                            bottom_kind, fb, G=Gc)
    return _phys(grid, v, real), _phys(grid, dz_v, real)


# ---------------------------------------------------------------------------
# full operator and the direct backend
# ---------------------------------------------------------------------------

def _variable_part(coeffs: EllipticCoefficients, v: np.ndarray, dz_v: np.ndarray):
    """``(alpha - 1) Lap v + beta . grad d_z v - gamma d_z v``."""
    g = coeffs.grid
    out = (coeffs.alpha - 1.0) * laplacian(g, v) - coeffs.gamma * dz_v
    return out + np.sum(coeffs.beta * grad(g, dz_v), axis=0)


def apply_operator(coeffs: EllipticCoefficients, v: np.ndarray,
                   dz_v: np.ndarray | None = None,
                   dzz_v: np.ndarray | None = None) -> np.ndarray:
    """``L v`` with z-derivatives from the degree-7 differentiation matrix
    unless supplied."""
    Z = zops(coeffs.grid.Nz)
    if dz_v is None:
        dz_v = Z.dz(v)
    if dzz_v is None:
        dzz_v = Z.dz(dz_v)
    return dzz_v + laplacian(coeffs.grid, v) + _variable_part(coeffs, v, dz_v)


def solve_direct(problem: EllipticProblem) -> EllipticSolution:
    """Residual-correction iteration preconditioned by the flat solver.

    ``v^{m+1} = v^m + flat^{-1}(F0 - L v^m)`` is iterated in the equivalent
    form ``v^{m+1} = flat^{-1}(F0 - N v^m)`` with ``N = L - L_flat``.  The
    reported residual ``L v^{m+1} - F0 = N v^{m+1} - N v^m`` is exact at the
    grid levels.
    """
    p = problem
    g, c = p.grid, p.coeffs
    scale = p.data_scale
    v, dz_v = solve_flat(g, p.F0, p.top, p.bottom_kind, p.bottom, p.G0)
    if scale == 0.0:
        return EllipticSolution(v, dz_v, 1, 0.0, "direct")
    if c.is_flat:
        return EllipticSolution(v, dz_v, 1, 0.0, "direct")
    Nv = _variable_part(c, v, dz_v)
    history = []
    for it in range(2, p.max_iterations + 1):
        v, dz_v = solve_flat(g, p.F0 - Nv, p.top, p.bottom_kind, p.bottom, p.G0)
        Nn = _variable_part(c, v, dz_v)
        res = _rms(Nn - Nv) / scale
        history.append(res)
        Nv = Nn
        if not np.isfinite(res) or (len(history) > 5 and res > 1e3 * min(history)):
            raise NoConvergence("direct elliptic iteration diverged", res, it)
        if res <= p.tolerance:
            return EllipticSolution(v, dz_v, it, res, "direct", history)
    raise NoConvergence("direct elliptic iteration hit max_iterations",
                        history[-1], p.max_iterations)


# ---------------------------------------------------------------------------
# factorization
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FactorizationSymbols:
    """Symbols ``a``, ``A`` per z-level with ``a A = -alpha |xi|^2``,
    ``a + A = -i beta . xi``."""

    a: SymbolField
    A: SymbolField
    c2: float

    @property
    def grid(self) -> GridSpec:
        return self.a.grid


def _xi(grid: GridSpec):
    d = grid.d
    return [k.reshape((1,) * (1 + d) + grid.shape) for k in grid.k]


def _coef(grid: GridSpec, f: np.ndarray):
    """Strip coefficient ``(Nz,) + shape`` broadcast against xi axes."""
    return f.reshape(f.shape + (1,) * grid.d)


def factorization_symbols(coeffs: EllipticCoefficients) -> FactorizationSymbols:
    """``a, A = (-i beta.xi -/+ sqrt(4 alpha |xi|^2 - (beta.xi)^2)) / 2``."""
    g = coeffs.grid
    xi = _xi(g)
    bxi = sum(_coef(g, coeffs.beta[i]) * xi[i] for i in range(g.d))
    k2 = g.kabs.reshape((1,) * (1 + g.d) + g.shape) ** 2
    disc = 4.0 * _coef(g, coeffs.alpha) * k2 - bxi ** 2
    nz = k2 > 0
    nzb = np.broadcast_to(nz, disc.shape)
    if np.any(disc[nzb] <= 0):
        raise EllipticityViolation("4 alpha |xi|^2 - (beta . xi)^2 <= 0 at a retained mode")
    root = np.sqrt(np.maximum(disc, 0.0))
    a = 0.5 * (-1j * bxi - root)
    A = 0.5 * (-1j * bxi + root)
    c2 = float((4.0 * coeffs.alpha - np.sum(coeffs.beta ** 2, axis=0)).min())
    return FactorizationSymbols(SymbolField(g, a, 1.0), SymbolField(g, A, 1.0), c2)


def _diag_mean(sym: SymbolField) -> np.ndarray:
    """Mean over the x-axes and any batch axes, flattened over xi."""
    g = sym.grid
    lead = tuple(range(sym.values.ndim - g.d))
    return sym.values.mean(axis=lead).reshape(-1)


def parabolic_march(a_sym: SymbolField, w0: np.ndarray, F: np.ndarray,
                    direction: str = "forward", tol: float = 1e-13,
                    max_iterations: int = 100, c1: float | None = None) -> np.ndarray:
    """Solve ``d_z w + T_a w = F`` from ``z = -1`` upward (``forward``) or
    ``-d_z w + T_a w = F`` from ``z = 0`` downward (``backward``).

    The x-mean of the effective symbol is integrated exactly per mode; the
    x-dependent remainder is iterated (Picard).  ``a_sym`` may carry one batch
    axis of z-levels or none.
    """
    g = a_sym.grid
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    kab = g.kabs
    vals = a_sym.values
    sel = np.broadcast_to(kab > 0, vals.shape)
    ratio = (vals.real[sel] / np.broadcast_to(kab, vals.shape)[sel])
    cmin = float(ratio.min()) if ratio.size else 1.0
    if cmin <= 0 or (c1 is not None and cmin < c1):
        raise EllipticityViolation(f"Re a / |xi| reaches {cmin:.3g}")
    Z = zops(g.Nz)
    P = g.N ** g.d
    sig = a_sym.sigma
    lead = tuple(range(sig.ndim - g.d))
    D = sig.mean(axis=lead).reshape(-1)
    real = np.isrealobj(w0) and np.isrealobj(F) and a_sym.hermitian
    Fc = _spec(g, F)
    start = _spec(g, w0).reshape(P)
    if direction == "forward":
        mu, dirn, sgn = -D, +1, 1.0
    else:
        mu, dirn, sgn = D, -1, -1.0
    scale = _rms(Fc) + _rms(start) + 1e-300
    w = Z.march(mu, sgn * Fc, start, dirn)
    for _ in range(max_iterations):
        wp = _phys(g, w, False)
        rem = _spec(g, paradiff_apply(a_sym, wp)) - D[None, :] * w
        w_new = Z.march(mu, sgn * (Fc - rem), start, dirn)
        inc = _rms(w_new - w)
        w = w_new
        if inc <= tol * (scale + _rms(w)):
            break
    else:
        raise NoConvergence("parabolic march remainder iteration", inc, max_iterations)
    norms = np.sqrt(np.sum(np.abs(w) ** 2, axis=1))
    floor = 1e-12 * scale
    order = norms if dirn > 0 else norms[::-1]
    for j in range(len(order) - 1):
        if order[j + 1] > 10.0 * max(order[j], floor):
            raise InstabilityError(f"march amplified by more than 10x at level {j + 1}")
    return _phys(g, w, real)


def _dz_A(coeffs: EllipticCoefficients, fs: FactorizationSymbols) -> np.ndarray:
    """``d_z A``: exact from ``d_z alpha``, ``d_z beta`` when known, else on the z-grid."""
    g = coeffs.grid
    if coeffs.dz_alpha is None or coeffs.dz_beta is None:
        return zops(g.Nz).dz(fs.A.values)
    xi = _xi(g)
    bxi = sum(_coef(g, coeffs.beta[i]) * xi[i] for i in range(g.d))
    dbxi = sum(_coef(g, coeffs.dz_beta[i]) * xi[i] for i in range(g.d))
    k2 = g.kabs.reshape((1,) * (1 + g.d) + g.shape) ** 2
    root = fs.A.values.real * 2.0  # sqrt(4 alpha |xi|^2 - (beta.xi)^2)
    d_disc = 4.0 * _coef(g, coeffs.dz_alpha) * k2 - 2.0 * bxi * dbxi
    safe = np.where(root > 0, root, 1.0)
    return 0.5 * (-1j * dbxi + np.where(root > 0, 0.5 * d_disc / safe, 0.0))


def _symbols_for(coeffs: EllipticCoefficients):
    fs = factorization_symbols(coeffs)
    dzA = SymbolField(coeffs.grid, _dz_A(coeffs, fs), 1.0)
    return fs, dzA


def solve_factored(problem: EllipticProblem, damping: float = 1.0,
                   symbols=None) -> EllipticSolution:
    """Fixed-point solve of ``(d_z - T_a)(d_z - T_A) v = F0 + F1 + F2 + F3``.

    ``F1 = gamma d_z v``, ``F2 = (T_alpha - alpha) Lap v + (T_beta - beta) . grad d_z v``
    and ``F3 = (T_a T_A - T_alpha Lap) v - (T_a + T_A + T_beta . grad) d_z v - T_{d_z A} v``
    are evaluated at the previous iterate until two successive relative
    increments fall below the tolerance.  Each sweep marches
    ``w = (d_z - T_A) v`` upward and then ``v`` downward, with the
    (x, z)-mean of each symbol integrated exactly and the rest lagged.
    The seed is the flat solve.
    """
    p = problem
    g, c = p.grid, p.coeffs
    scale = p.data_scale
    v, dz_v = solve_flat(g, p.F0, p.top, p.bottom_kind, p.bottom, p.G0)
    if scale == 0.0 or c.is_flat:
        return EllipticSolution(v, dz_v, 1, 0.0, "factored")
    fs, dzA = symbols if symbols is not None else _symbols_for(c)
    Da, DA = _diag_mean(fs.a), _diag_mean(fs.A)
    real = all(np.isrealobj(x) for x in (p.F0, p.top, p.bottom, p.G0) if x is not None)
    Fc = _spec(g, p.F0)
    topc = _spec(g, p.top)
    fb = None if p.bottom is None else _spec(g, p.bottom)
    Gc = None if p.G0 is None else _spec(g, p.G0)

    def T(sym, u):
        return paradiff_apply(sym, u)

    w = dz_v - T(fs.A, v)
    theta = damping
    history = []
    prev = np.inf
    for it in range(2, p.max_iterations + 1):
        TAv = T(fs.A, v)
        Tadz = T(fs.a, dz_v)
        # F1 + F2 + F3; the T_alpha and T_beta pieces cancel between F2 and F3
        rhs = (c.gamma * dz_v - c.alpha * laplacian(g, v)
               - np.sum(c.beta * grad(g, dz_v), axis=0)
               + T(fs.a, TAv) - Tadz - T(fs.A, dz_v) - T(dzA, v))
        g_up = Fc + _spec(g, rhs) + _spec(g, T(fs.a, w)) - Da[None, :] * _spec(g, w)
        lag_v = _spec(g, TAv) - DA[None, :] * _spec(g, v)
        vn, dzn, wn = _two_march(g.Nz, Da, DA, g_up, topc, p.bottom_kind, fb,
                                 lag_v=lag_v, G=Gc)
        vn, dzn, wn = _phys(g, vn, real), _phys(g, dzn, real), _phys(g, wn, real)
        inc = _rms(vn - v) / max(_rms(vn), scale)
        history.append(inc)
        if not np.isfinite(inc):
            raise NoConvergence("factored elliptic iteration diverged", inc, it)
        if inc > prev and theta > 0.5:
            theta = 0.5
        v = v + theta * (vn - v)
        dz_v = dz_v + theta * (dzn - dz_v)
        w = w + theta * (wn - w)
        # the sweep can contract non-monotonically: one small increment is not enough
        if inc <= p.tolerance and prev <= p.tolerance:
            return EllipticSolution(v, dz_v, it, max(inc, prev), "factored", history)
        prev = inc
        if len(history) > 8 and inc > 1e3 * min(history):
            raise NoConvergence("factored elliptic iteration diverged", inc, it)
    raise NoConvergence("factored elliptic iteration hit max_iterations",
                        history[-1], p.max_iterations)


def solve(problem: EllipticProblem, backend: str = "direct") -> EllipticSolution:
    """Dispatch on ``backend``: ``direct``, ``factored`` or ``both``.

    ``both`` runs the two backends and returns the direct solution with the
    relative L2 difference appended to its ``history`` as
    ``("cross_check", diff)``.
    """
    if backend == "direct":
        return solve_direct(problem)
    if backend == "factored":
        return solve_factored(problem)
    if backend == "both":
        d = solve_direct(problem)
        f = solve_factored(problem)
        diff = _rms(d.v - f.v) / max(problem.data_scale, 1e-300)
        d.history = d.history + [("cross_check", diff)]
        return d
    raise ValueError(f"unknown elliptic backend {backend!r}")
