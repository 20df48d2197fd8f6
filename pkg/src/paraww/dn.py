"""Dirichlet-Neumann operator, its paralinearization, pressure and Taylor coefficient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import EllipticProblem, EllipticSolution, solve
from .geometry import (FlatteningMap, build_map, physical_gradient,
                       surface_extension)
from .grid import GridSpec, dealias, grad, l2_inner, laplacian
from .paradiff import SymbolField, paradiff_apply
from .errors import EllipticityViolation

__all__ = [
    "DNResult",
    "PressureResult",
    "OrderReport",
    "dn_apply",
    "dn_symbol",
    "dn_remainder",
    "remainder_order_check",
    "dn_selfadjoint_check",
    "dn_positivity_check",
    "solve_pressure",
    "taylor_sign_check",
]

DN_BOTTOMS = {"dirichlet0": "dirichlet", "neumann0": "neumann",
              "dirichlet": "dirichlet", "neumann": "neumann"}


def _bottom(kind: str) -> str:
    try:
        return DN_BOTTOMS[kind]
    except KeyError:
        raise ValueError(f"unknown bottom kind {kind!r}") from None


@dataclass(eq=False)
class DNResult:
    """``G(eta) f`` with the harmonic extension and the paralinear split.

    ``Gf = T_lambda f + remainder`` holds by construction.
    """

    Gf: np.ndarray
    phi_tilde: np.ndarray
    lambda_sym: SymbolField | None
    remainder: np.ndarray | None
    bottom_kind: str
    map: FlatteningMap
    solution: EllipticSolution


def _trace_top(m: FlatteningMap, phi: np.ndarray, dz_phi: np.ndarray) -> np.ndarray:
    """``((1 + |grad rho|^2) / d_z rho) d_z phi - grad rho . grad phi`` at ``z = 0``."""
    g = m.grid
    gr = m.grad_rho[:, -1]
    zeta1 = (1.0 + np.sum(gr ** 2, axis=0)) / m.dz_rho[-1]
    return zeta1 * dz_phi[-1] - np.sum(gr * grad(g, phi[-1]), axis=0)


def dn_symbol(m: FlatteningMap) -> SymbolField:
    """``lambda = zeta1 A - i zeta2 . xi`` at ``z = 0``."""
    g = m.grid
    c = m.coefficients()
    gr = m.grad_rho[:, -1]
    zeta1 = (1.0 + np.sum(gr ** 2, axis=0)) / m.dz_rho[-1]
    ex = (Ellipsis,) + (None,) * g.d
    xi = [k[(None,) * g.d] for k in g.k]
    bxi = sum(c.beta[i, -1][ex] * xi[i] for i in range(g.d))
    disc = 4.0 * c.alpha[-1][ex] * g.kabs[(None,) * g.d] ** 2 - bxi ** 2
    if np.any(disc[..., g.kabs > 0] <= 0):
        raise EllipticityViolation("4 alpha |xi|^2 - (beta . xi)^2 <= 0 at z = 0")
    A = 0.5 * (-1j * bxi + np.sqrt(np.maximum(disc, 0.0)))
    z2xi = sum(gr[i][ex] * xi[i] for i in range(g.d))
    lam = zeta1[ex] * A - 1j * z2xi
    return SymbolField(g, lam, 1.0)


def dn_apply(grid: GridSpec, eta: np.ndarray, f: np.ndarray,
             bottom_kind: str = "dirichlet0", h0: float = 0.1,
             m: FlatteningMap | None = None, backend: str = "direct",
             tolerance: float = 1e-12, paralinearize: bool = True) -> DNResult:
    """``G(eta) f``: harmonic extension on the strip, then the flattened trace.

    ``bottom_kind`` is ``dirichlet0`` (extension vanishes on ``y = -1``) or
    ``neumann0`` (zero normal derivative there).
    """
    kind = _bottom(bottom_kind)
    if m is None:
        m = build_map(grid, eta, h0)
    c = m.coefficients()
    prob = EllipticProblem(c, np.zeros(grid.strip_shape), np.asarray(f, dtype=float),
                           kind, tolerance=tolerance)
    sol = solve(prob, backend)
    Gf = _trace_top(m, sol.v, sol.dz_v)
    lam = rem = None
    if paralinearize:
        lam = dn_symbol(m)
        rem = Gf - paradiff_apply(lam, f)
    return DNResult(Gf, sol.v, lam, rem, kind, m, sol)


def dn_remainder(result: DNResult, f: np.ndarray) -> np.ndarray:
    """``R(eta) f = G(eta) f - T_lambda f``."""
    lam = result.lambda_sym if result.lambda_sym is not None else dn_symbol(result.map)
    return result.Gf - paradiff_apply(lam, f)


@dataclass(frozen=True)
class OrderReport:
    ks: np.ndarray
    G_norms: np.ndarray
    R_norms: np.ndarray
    G_slope: float
    R_slope: float
    gain: float

    @property
    def passed(self) -> bool:
        return self.R_slope <= self.G_slope - self.gain


def remainder_order_check(grid: GridSpec, eta: np.ndarray, ks=None,
                          bottom_kind: str = "dirichlet0", h0: float = 0.1,
                          gain: float = 0.75) -> OrderReport:
    """Log-log slopes of ``||G f_k||`` and ``||R(eta) f_k||`` for ``f_k = cos(k x_1)``."""
    if ks is None:
        ks = np.arange(2, grid.N // 4 + 1)
    ks = np.asarray(ks)
    m = build_map(grid, eta, h0)
    lam = dn_symbol(m)
    x = grid.x[0]
    Gn, Rn = [], []
    for k in ks:
        f = np.cos(k * x)
        res = dn_apply(grid, eta, f, bottom_kind, m=m, paralinearize=False)
        Gn.append(np.linalg.norm(res.Gf))
        Rn.append(np.linalg.norm(res.Gf - paradiff_apply(lam, f)))
    Gn, Rn = np.array(Gn), np.array(Rn)
    lk = np.log(ks.astype(float))
    sG = float(np.polyfit(lk, np.log(Gn), 1)[0])
    sR = float(np.polyfit(lk, np.log(Rn), 1)[0])
    return OrderReport(ks, Gn, Rn, sG, sR, gain)


def dn_selfadjoint_check(grid: GridSpec, eta: np.ndarray, f: np.ndarray, g: np.ndarray,
                         bottom_kind: str = "dirichlet0", h0: float = 0.1,
                         m: FlatteningMap | None = None) -> tuple[float, float]:
    """``(<G f, g>, <f, G g>)``."""
    if m is None:
        m = build_map(grid, eta, h0)
    Gf = dn_apply(grid, eta, f, bottom_kind, m=m, paralinearize=False).Gf
    Gg = dn_apply(grid, eta, g, bottom_kind, m=m, paralinearize=False).Gf
    return l2_inner(grid, Gf, g), l2_inner(grid, f, Gg)


def dn_positivity_check(grid: GridSpec, eta: np.ndarray, f: np.ndarray,
                        bottom_kind: str = "dirichlet0", h0: float = 0.1,
                        m: FlatteningMap | None = None) -> float:
    """``<G f, f>``."""
    Gf = dn_apply(grid, eta, f, bottom_kind, h0, m=m, paralinearize=False).Gf
    return l2_inner(grid, Gf, f)


# ---------------------------------------------------------------------------
# pressure
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PressureResult:
    """Pressure on the strip, Taylor coefficient and bottom pressure gradient."""

    P_tilde: np.ndarray
    taylor_a: np.ndarray
    bottom_grad: np.ndarray
    solution: EllipticSolution

    @property
    def neumann_residual(self) -> float:
        """``|d_z P2~|`` on the bottom, which the solver imposes."""
        return float(np.abs(self.solution.dz_v[0]).max())


def velocity_gradient(m: FlatteningMap, v: np.ndarray,
                      dz_v: np.ndarray | None = None) -> np.ndarray:
    """``G[i, j] = d_i v^j`` in physical variables, shape ``(d+1, d+1) + strip``."""
    n = v.shape[0]
    cols = [physical_gradient(m, v[j], None if dz_v is None else dz_v[j]) for j in range(n)]
    return np.stack(cols, axis=1)


def solve_pressure(m: FlatteningMap, v: np.ndarray, dz_v: np.ndarray | None = None,
                   backend: str = "direct", tolerance: float = 1e-12) -> PressureResult:
    """Pressure for the velocity ``v`` (components on the leading axis).

    Physical problem: ``-Lap P = d_i v^j d_j v^i``, ``P = 0`` on the surface and
    ``d_y P = -1`` on the bottom.  With the lift ``P2 = P + y - eta_bar``,
    ``eta_bar~ = cosh(|D|(z+1)) / cosh|D| eta``, both boundary conditions become
    homogeneous (Dirichlet on top, Neumann below) and

        L P2~ = -alpha (d_i v^j d_j v^i)~ - L eta_bar~.
    """
    g = m.grid
    c = m.coefficients()
    Gv = velocity_gradient(m, v, dz_v)
    Q = dealias(g, np.einsum("ij...,ji...->...", Gv, Gv))
    e0, e1, e2 = surface_extension(g, m.eta)
    Le = e2 + c.alpha * laplacian(g, e0) + np.sum(c.beta * grad(g, e1), axis=0) - c.gamma * e1
    F0 = -c.alpha * Q - Le
    prob = EllipticProblem(c, F0, np.zeros(g.shape), "neumann", tolerance=tolerance)
    sol = solve(prob, backend)
    P2 = sol.v
    P = P2 - m.rho + e0
    a = 1.0 - (sol.dz_v[-1] + e1[-1]) / m.dz_rho[-1]
    bottom_grad = grad(g, P2[0] + e0[0])
    return PressureResult(P, a, bottom_grad, sol)


def taylor_sign_check(pr: PressureResult, c0: float) -> tuple[float, bool]:
    """``(min a, min a < c0)``."""
    amin = float(pr.taylor_a.min())
    return amin, amin < c0
