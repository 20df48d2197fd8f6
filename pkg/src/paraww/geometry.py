"""Boundary flattening of the fluid domain onto the strip ``z in [-1, 0]``.

The map is ``y = rho(x, z) = z + (1 + z) e^{delta z |D|} eta(x)``.  With
``E(z) = e^{delta z |D|} eta`` every z-derivative of ``rho`` is again a
multiplier applied to ``eta``, so all of them are evaluated spectrally and
exactly; no finite differences in z are involved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DepthViolation, FlatteningFailure, OutsideDomain
from .grid import GridSpec, fft_forward, fft_inverse, grad
from .zgrid import zops

__all__ = [
    "FlatteningMap",
    "EllipticCoefficients",
    "build_map",
    "assemble_map",
    "coefficients",
    "ellipticity_constant",
    "pullback",
    "pushforward",
    "transport_velocity",
    "physical_gradient",
    "surface_extension",
]


def _levels(grid: GridSpec, eta: np.ndarray, delta: float, extra=1.0):
    """``e^{delta z |D|} (extra * eta_hat)`` on every level, spectral."""
    c = fft_forward(grid, eta) * extra
    z = grid.zcol(grid.z)
    return np.exp(delta * z * grid.kabs) * c


@dataclass(eq=False)
class FlatteningMap:
    """``rho_delta`` and its derivatives on the strip grid.

    Strip arrays have shape ``grid.strip_shape``; gradients carry a leading
    axis of length ``d``.
    """

    grid: GridSpec
    eta: np.ndarray
    delta: float
    h0: float
    rho: np.ndarray
    dz_rho: np.ndarray
    dzz_rho: np.ndarray
    grad_rho: np.ndarray
    grad_dz_rho: np.ndarray
    lap_rho: np.ndarray
    dt_rho: np.ndarray | None = None
    _coeffs: "EllipticCoefficients | None" = field(default=None, init=False, repr=False)

    @property
    def dz_rho_min(self) -> float:
        return float(self.dz_rho.min())

    def with_dt(self, deta_dt: np.ndarray) -> "FlatteningMap":
        """Copy carrying ``d_t rho = (1 + z) e^{delta z |D|} d_t eta``."""
        g = self.grid
        E = np.real(fft_inverse(g, _levels(g, deta_dt, self.delta)))
        out = FlatteningMap(g, self.eta, self.delta, self.h0, self.rho, self.dz_rho,
                            self.dzz_rho, self.grad_rho, self.grad_dz_rho, self.lap_rho,
                            (1.0 + g.zcol(g.z)) * E)
        out._coeffs = self._coeffs
        return out

    def coefficients(self) -> "EllipticCoefficients":
        if self._coeffs is None:
            self._coeffs = coefficients(self)
        return self._coeffs


@dataclass(eq=False)
class EllipticCoefficients:
    """``alpha``, ``beta`` (leading axis ``d``) and ``gamma`` on the strip.

    ``dz_alpha`` and ``dz_beta`` are exact z-derivatives when the
    coefficients come from a flattening map, else ``None``.
    """

    grid: GridSpec
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    dz_alpha: np.ndarray | None = None
    dz_beta: np.ndarray | None = None

    @classmethod
    def flat(cls, grid: GridSpec) -> "EllipticCoefficients":
        s = grid.strip_shape
        return cls(grid, np.ones(s), np.zeros((grid.d,) + s), np.zeros(s))

    @property
    def is_flat(self) -> bool:
        return (np.all(self.alpha == 1.0) and not np.any(self.beta)
                and not np.any(self.gamma))


def assemble_map(grid: GridSpec, eta: np.ndarray, delta: float, h0: float) -> FlatteningMap:
    """Map for a given ``delta`` without any admissibility check."""
    g = grid
    z = g.zcol(g.z)
    Ec = _levels(g, eta, delta)
    kab = g.kabs
    E = np.real(fft_inverse(g, Ec))
    E1 = np.real(fft_inverse(g, delta * kab * Ec))             # d_z E
    E2 = np.real(fft_inverse(g, (delta * kab) ** 2 * Ec))      # d_z^2 E
    gE = np.stack([np.real(fft_inverse(g, 1j * kk * Ec)) for kk in g.kdiff])
    gE1 = np.stack([np.real(fft_inverse(g, 1j * kk * delta * kab * Ec)) for kk in g.kdiff])
    lapE = np.real(fft_inverse(g, -kab ** 2 * Ec))
    one_z = 1.0 + z
    rho = z + one_z * E
    dz_rho = 1.0 + E + one_z * E1
    dzz_rho = 2.0 * E1 + one_z * E2
    grad_rho = one_z * gE
    grad_dz_rho = gE + one_z * gE1
    lap_rho = one_z * lapE
    return FlatteningMap(g, np.asarray(eta, dtype=float), delta, h0, rho, dz_rho,
                         dzz_rho, grad_rho, grad_dz_rho, lap_rho)


def build_map(grid: GridSpec, eta: np.ndarray, h0: float,
              delta: float | None = None, max_halvings: int = 20) -> FlatteningMap:
    """Flattening map for ``eta``.

    Raises :class:`DepthViolation` when ``min(1 + eta) < h0`` and
    :class:`FlatteningFailure` when ``d_z rho >= h0/2`` cannot be met.  Without
    an explicit ``delta`` the search starts at 1/2 and halves.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != grid.shape:
        raise ValueError(f"eta shape {eta.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(eta)):
        raise ValueError("eta contains non-finite values")
    if h0 <= 0:
        raise ValueError("h0 must be positive")
    depth = float((1.0 + eta).min())
    if depth < h0:
        raise DepthViolation(depth, h0)
    if delta is not None:
        m = assemble_map(grid, eta, delta, h0)
        if m.dz_rho_min < h0 / 2:
            raise FlatteningFailure(
                f"d_z rho min {m.dz_rho_min:.4g} < h0/2 = {h0 / 2:.4g} at delta = {delta}")
        return m
    d = 0.5
    for _ in range(max_halvings + 1):
        m = assemble_map(grid, eta, d, h0)
        if m.dz_rho_min >= h0 / 2:
            return m
        d *= 0.5
    raise FlatteningFailure(f"d_z rho >= h0/2 not reached after {max_halvings} halvings")


def coefficients(m: FlatteningMap) -> EllipticCoefficients:
    """``alpha``, ``beta``, ``gamma`` of the flattened Laplacian."""
    g2 = np.sum(m.grad_rho ** 2, axis=0)
    denom = 1.0 + g2
    alpha = m.dz_rho ** 2 / denom
    beta = -2.0 * m.dz_rho * m.grad_rho / denom
    gamma = (m.dzz_rho + alpha * m.lap_rho
             + np.sum(beta * m.grad_dz_rho, axis=0)) / m.dz_rho
    dz_denom = 2.0 * np.sum(m.grad_rho * m.grad_dz_rho, axis=0)
    dz_alpha = (2.0 * m.dz_rho * m.dzz_rho - alpha * dz_denom) / denom
    dz_beta = (-2.0 * (m.dzz_rho * m.grad_rho + m.dz_rho * m.grad_dz_rho)
               - beta * dz_denom) / denom
    return EllipticCoefficients(m.grid, alpha, beta, gamma, dz_alpha, dz_beta)


def ellipticity_constant(c: EllipticCoefficients) -> float:
    """Largest ``c2`` with ``4 alpha |xi|^2 - (beta . xi)^2 >= c2 |xi|^2``.

    Pointwise the minimum over directions is ``4 alpha - |beta|^2``.
    """
    return float((4.0 * c.alpha - np.sum(c.beta ** 2, axis=0)).min())


# ---------------------------------------------------------------------------
# chain rule and transport
# ---------------------------------------------------------------------------

def physical_gradient(m: FlatteningMap, f: np.ndarray,
                      dz_f: np.ndarray | None = None) -> np.ndarray:
    """``(d_x1, .., d_xd, d_y) f`` for a strip field through the map.

    ``d_y = d_z / d_z rho`` and ``d_xi = d_i - (d_i rho / d_z rho) d_z``.
    """
    g = m.grid
    if dz_f is None:
        dz_f = zops(g.Nz).dz(f)
    gy = dz_f / m.dz_rho
    gx = grad(g, f) - m.grad_rho * gy
    return np.concatenate([gx, gy[None]], axis=0)


def transport_velocity(m: FlatteningMap, v: np.ndarray) -> np.ndarray:
    """Velocity transporting strip fields: ``(v^h, (v^y - d_t rho - v^h . grad rho) / d_z rho)``."""
    if m.dt_rho is None:
        raise ValueError("map carries no d_t rho; use FlatteningMap.with_dt")
    d = m.grid.d
    vh = v[:d]
    vz = (v[d] - m.dt_rho - np.sum(vh * m.grad_rho, axis=0)) / m.dz_rho
    return np.concatenate([vh, vz[None]], axis=0)


def surface_extension(grid: GridSpec, eta: np.ndarray):
    """``cosh(|D|(z+1)) / cosh|D| eta`` and its first two z-derivatives.

    Equals ``eta`` on top, has zero z-derivative on the bottom, and is
    harmonic in the flat strip; used to lift the pressure data.
    """
    c = fft_forward(grid, eta)
    k = grid.kabs
    z1 = grid.zcol(grid.z) + 1.0
    # cosh(k z1)/cosh(k) written with decaying exponentials
    ez = np.exp(k * (z1 - 1.0))
    ez2 = np.exp(-k * (z1 + 1.0))
    den = 1.0 + np.exp(-2.0 * k)
    ch = (ez + ez2) / den
    sh = (ez - ez2) / den
    e0 = np.real(fft_inverse(grid, ch * c))
    e1 = np.real(fft_inverse(grid, k * sh * c))
    e2 = np.real(fft_inverse(grid, k ** 2 * ch * c))
    return e0, e1, e2


# ---------------------------------------------------------------------------
# physical <-> strip
# ---------------------------------------------------------------------------

def _columns(grid: GridSpec):
    return np.ndindex(*grid.shape)


def pullback(m: FlatteningMap, f, y_points: np.ndarray | None = None) -> np.ndarray:
    """``f~(x, z) = f(x, rho(x, z))``.

    ``f`` is either a callable ``f(x, y)`` taking coordinate tuples, or an
    array of samples of shape ``(Ny,) + grid.shape`` at the heights
    ``y_points`` (same shape), interpolated per column by monotone cubics.
    """
    g = m.grid
    if callable(f):
        xs = tuple(np.broadcast_to(x, g.strip_shape) for x in g.x)
        return np.asarray(f(xs, m.rho), dtype=float)
    f = np.asarray(f, dtype=float)
    y_points = np.asarray(y_points, dtype=float)
    out = np.empty(g.strip_shape)
    for idx in _columns(g):
        col = (slice(None),) + idx
        yc, fc = y_points[col], f[col]
        target = m.rho[col]
        tol = 1e-12 * (1 + np.abs(yc).max())
        if target.min() < yc.min() - tol or target.max() > yc.max() + tol:
            raise OutsideDomain("strip levels map outside the sampled column")
        out[col] = PchipInterpolator(yc, fc)(np.clip(target, yc.min(), yc.max()))
    return out


def pushforward(m: FlatteningMap, f_tilde: np.ndarray, y_points: np.ndarray) -> np.ndarray:
    """Samples of ``f = f~ o Phi^{-1}`` at heights ``y_points`` (shape ``(Ny,) + grid.shape``).

    Interpolation in z uses the degree-7 level interpolant, so smooth strip
    fields are carried over at the accuracy of the z-grid.
    """
    g = m.grid
    Z = zops(g.Nz)
    y_points = np.asarray(y_points, dtype=float)
    out = np.empty(y_points.shape)
    for idx in _columns(g):
        col = (slice(None),) + idx
        rc = m.rho[col]
        yq = y_points[col]
        tol = 1e-12 * (1 + np.abs(rc).max())
        if yq.min() < rc[0] - tol or yq.max() > rc[-1] + tol:
            raise OutsideDomain(f"sample height outside [-1, eta] in column {idx}")
        yq = np.clip(yq, rc[0], rc[-1])
        # monotone first guess, then Newton on the level interpolant of rho
        zq = PchipInterpolator(rc, g.z)(yq)
        for _ in range(3):
            r = Z.interpolate_column(rc, zq) - yq
            zq = np.clip(zq - r / Z.interpolate_column(m.dz_rho[col], zq), -1.0, 0.0)
        out[col] = Z.interpolate_column(f_tilde[col], zq)
    return out
