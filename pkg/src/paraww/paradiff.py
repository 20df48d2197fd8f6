"""Paraproducts, Bony remainder and paradifferential operators.

Two realisations of ``T_a`` coexist, matching the two places they are used:

* functions ``a(x)``: the Bony paraproduct ``T_a u = sum_k S_{k-3}a Delta_k u``
  (no low-frequency cutoff, ``S_j = 0`` for ``j < 0``);
* symbols ``a(x, xi)``: ``T_a u(x) = sum_xi sigma(x, xi) u_hat(xi) e^{i x.xi}``
  with ``sigma = psi(xi) * IFFT_theta[chi(theta, xi) a_hat(theta, xi)]`` and the
  admissible cutoff ``chi(theta, xi) = sum_k zeta_{k-3}(theta) phi_k(xi)``.

The symbol route is a direct Kohn-Nirenberg quadrature, ``O(N^{2d})`` per
application.  The dense kernel is delegated to :mod:`paraww.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .grid import GridSpec, fft_forward, fft_inverse, fourier_multiplier, grad
from .littlewood_paley import (block_symbol, k_max, low_symbol, phi_k, psi,
                               zeta_k)

__all__ = [
    "paraproduct",
    "paraproduct_dot",
    "bony_remainder",
    "SymbolField",
    "SymbolSeminorm",
    "paradiff_apply",
    "symbol_seminorm",
    "composition_residual",
    "commutator_Ds",
    "measure_order",
]


def _same_grid(grid: GridSpec, *fields):
    for f in fields:
        if np.shape(f)[-grid.d:] != grid.shape:
            raise ValueError(f"field shape {np.shape(f)} does not match grid {grid.shape}")


def _back(grid, c, like_real):
    out = fft_inverse(grid, c)
    return out.real if like_real else out


# ---------------------------------------------------------------------------
# function case
# ---------------------------------------------------------------------------

def paraproduct(grid: GridSpec, a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Bony paraproduct ``T_a u``; leading batch axes broadcast."""
    _same_grid(grid, a, u)
    real = np.isrealobj(a) and np.isrealobj(u)
    ca, cu = fft_forward(grid, a), fft_forward(grid, u)
    out = 0
    for k in range(3, k_max(grid) + 1):
        low = _back(grid, low_symbol(grid, k - 3) * ca, real)
        blk = _back(grid, block_symbol(grid, k) * cu, real)
        out = out + low * blk
    if np.isscalar(out):
        return np.zeros(np.broadcast_shapes(np.shape(a), np.shape(u)),
                        dtype=float if real else complex)
    return out


def paraproduct_dot(grid: GridSpec, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``sum_i T_{a_i} w_i`` for vector fields stacked on the leading axis."""
    return sum(paraproduct(grid, a[i], w[i]) for i in range(len(a)))


def bony_remainder(grid: GridSpec, u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``R(u, a) = sum_{|k - l| <= 2} Delta_k a Delta_l u``."""
    _same_grid(grid, a, u)
    real = np.isrealobj(a) and np.isrealobj(u)
    ca, cu = fft_forward(grid, a), fft_forward(grid, u)
    km = k_max(grid)
    ublocks = [_back(grid, block_symbol(grid, l) * cu, real) for l in range(km + 1)]
    out = 0
    for k in range(km + 1):
        ak = _back(grid, block_symbol(grid, k) * ca, real)
        near = sum(ublocks[l] for l in range(max(0, k - 2), min(km, k + 2) + 1))
        out = out + ak * near
    return out


# ---------------------------------------------------------------------------
# symbol case
# ---------------------------------------------------------------------------

def _chi(grid: GridSpec) -> np.ndarray:
    """Admissible cutoff on the (theta, xi) lattice, shape ``shape + shape``."""
    cache = grid._cache
    if "chi" not in cache:
        th = grid.kabs.reshape(grid.shape + (1,) * grid.d)
        xi = grid.kabs.reshape((1,) * grid.d + grid.shape)
        chi = 0.0
        for k in range(k_max(grid) + 1):
            chi = chi + zeta_k(th, k - 3) * phi_k(xi, k)
        chi = np.broadcast_to(chi, grid.shape + grid.shape).copy()
        chi.setflags(write=False)
        cache["chi"] = chi
    return cache["chi"]


def _nyquist_free(grid: GridSpec) -> np.ndarray:
    mask = np.ones(grid.shape)
    for ax in range(grid.d):
        sl = [slice(None)] * grid.d
        sl[ax] = grid.N // 2
        mask[tuple(sl)] = 0.0
    return mask


def _phase(grid: GridSpec) -> np.ndarray:
    cache = grid._cache
    if "phase" not in cache:
        xs = [x.reshape(grid.shape + (1,) * grid.d) for x in grid.x]
        ks = [k.reshape((1,) * grid.d + grid.shape) for k in grid.k]
        ph = np.exp(1j * sum(x * k for x, k in zip(xs, ks)))
        ph.setflags(write=False)
        cache["phase"] = ph
    return cache["phase"]


@dataclass(eq=False)
class SymbolField:
    """Symbol ``a(x, xi)`` sampled on the grid.

    ``values`` has shape ``batch + grid.shape + grid.shape``: optional leading
    batch axes (for instance z-levels), then the ``d`` x-axes, then the ``d``
    xi-axes in FFT ordering.
    """

    grid: GridSpec
    values: np.ndarray
    order_m: float = 0.0
    _sigma: np.ndarray | None = field(default=None, init=False, repr=False)
    _kernel: np.ndarray | None = field(default=None, init=False, repr=False)
    _hermitian: bool | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        g = self.grid
        v = np.asarray(self.values)
        if v.shape[-2 * g.d:] != g.shape + g.shape:
            raise ValueError(f"symbol shape {v.shape} incompatible with grid {g.shape}")
        xi_ok = g.kabs >= 0.5
        if not np.all(np.isfinite(v[..., xi_ok])):
            raise ValueError("symbol has non-finite values on retained modes")
        self.values = v

    # -- constructors --------------------------------------------------------
    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable, order_m: float = 0.0):
        """``fn(x, xi)`` with ``x`` and ``xi`` tuples of broadcastable arrays."""
        xs = tuple(x.reshape(grid.shape + (1,) * grid.d) for x in grid.x)
        ks = tuple(k.reshape((1,) * grid.d + grid.shape) for k in grid.k)
        vals = np.broadcast_to(fn(xs, ks), grid.shape + grid.shape)
        return cls(grid, np.array(vals, dtype=complex), order_m)

    @classmethod
    def from_multiplier(cls, grid: GridSpec, m: np.ndarray, order_m: float = 0.0):
        vals = np.broadcast_to(np.asarray(m).reshape((1,) * grid.d + grid.shape),
                               grid.shape + grid.shape)
        return cls(grid, np.array(vals, dtype=complex), order_m)

    @classmethod
    def from_coefficient(cls, grid: GridSpec, b: np.ndarray, order_m: float = 0.0):
        """``a(x, xi) = b(x)`` (batch axes of ``b`` preserved)."""
        b = np.asarray(b)
        vals = np.broadcast_to(b.reshape(b.shape + (1,) * grid.d),
                               b.shape + grid.shape)
        return cls(grid, np.array(vals, dtype=complex), order_m)

    # -- derived -------------------------------------------------------------
    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.values.shape[: self.values.ndim - 2 * self.grid.d]

    @property
    def x_axes(self) -> tuple[int, ...]:
        d = self.grid.d
        return tuple(range(-2 * d, -d))

    @property
    def hermitian(self) -> bool:
        """True when ``sigma(x, -xi) = conj sigma(x, xi)``: real input stays real."""
        if self._hermitian is None:
            g = self.grid
            sig = self.sigma
            flip = sig
            for ax in range(-g.d, 0):
                flip = np.roll(np.flip(flip, axis=ax), 1, axis=ax)
            scale = max(np.abs(sig).max(), 1.0)
            self._hermitian = bool(np.abs(flip - np.conj(sig)).max() <= 1e-12 * scale)
        return self._hermitian

    def __add__(self, other):
        return SymbolField(self.grid, self.values + other.values,
                           max(self.order_m, other.order_m))

    def __sub__(self, other):
        return SymbolField(self.grid, self.values - other.values,
                           max(self.order_m, other.order_m))

    def __mul__(self, other):
        if isinstance(other, SymbolField):
            return SymbolField(self.grid, self.values * other.values,
                               self.order_m + other.order_m)
        return SymbolField(self.grid, self.values * other, self.order_m)

    __rmul__ = __mul__

    def level(self, j: int) -> "SymbolField":
        return SymbolField(self.grid, self.values[j], self.order_m)

    @property
    def sigma(self) -> np.ndarray:
        """Effective Kohn-Nirenberg symbol after the x-smoothing of each block."""
        if self._sigma is None:
            g = self.grid
            ax = self.x_axes
            ahat = np.fft.fftn(self.values, axes=ax)
            sig = np.fft.ifftn(_chi(g) * ahat, axes=ax)
            # Nyquist modes carry no odd-symbol information on a real grid
            sig *= psi(g.kabs) * _nyquist_free(g)
            self._sigma = sig
        return self._sigma

    @property
    def kernel(self) -> np.ndarray:
        """Dense operator ``K[x, xi] = sigma(x, xi) e^{i x.xi}``, flattened."""
        if self._kernel is None:
            g = self.grid
            n = g.N ** g.d
            k = self.sigma * _phase(g)
            self._kernel = np.ascontiguousarray(k.reshape(self.batch_shape + (n, n)))
        return self._kernel


@dataclass(frozen=True)
class SymbolSeminorm:
    m: float
    rho: float
    value: float


def paradiff_apply(a: SymbolField, u: np.ndarray) -> np.ndarray:
    """``T_a u`` for a symbol; ``u`` may carry the symbol's batch axes."""
    g = a.grid
    _same_grid(g, u)
    c = fft_forward(g, u).reshape(np.shape(u)[: np.ndim(u) - g.d] + (g.N ** g.d,))
    out = kernels.kn_apply(a.kernel, c).reshape(np.shape(u))
    if np.isrealobj(u) and a.hermitian:
        return out.real
    return out


# ---------------------------------------------------------------------------
# seminorms
# ---------------------------------------------------------------------------

def _xi_shifted(grid, vals):
    """Move xi axes to centred (fftshift) ordering."""
    return np.fft.fftshift(vals, axes=tuple(range(-grid.d, 0)))


def _winf_norm(grid: GridSpec, f: np.ndarray, rho: float) -> np.ndarray:
    """Discrete ``W^{rho, inf}`` norm over the x-axes (just before the last
    ``d`` axes of ``f``), one value per trailing xi-point."""
    d = grid.d
    xax = tuple(range(-2 * d, -d))
    n = int(np.floor(rho))
    theta = rho - n
    total = np.abs(f).max(axis=xax)
    derivs = [f]
    for j in range(1, n + 1):
        nxt = []
        for h in derivs:
            hh = np.moveaxis(h, tuple(range(-2 * d, -d)), tuple(range(-d, 0)))
            gr = grad(grid, hh)
            nxt.extend(np.moveaxis(gr[i], tuple(range(-d, 0)), tuple(range(-2 * d, -d)))
                       for i in range(d))
        derivs = nxt
        total = total + np.max([np.abs(h).max(axis=xax) for h in derivs], axis=0)
    if theta > 0:
        hol = 0.0
        for h in derivs:
            for ax in xax:
                for s in range(1, grid.N // 2 + 1):
                    diff = np.abs(np.roll(h, s, axis=ax) - h).max(axis=xax)
                    hol = np.maximum(hol, diff / (s * grid.dx) ** theta)
        total = total + hol
    return total


def symbol_seminorm(a: SymbolField, rho: float) -> SymbolSeminorm:
    """Discrete ``M^m_rho(a)``: sup over ``|alpha| <= 2`` and ``|xi| >= 1/2`` of
    ``(1 + |xi|)^{|alpha| - m} ||d_xi^alpha a(., xi)||_{W^{rho, inf}}``.

    xi-derivatives are centred differences on the wavenumber lattice, evaluated
    where both neighbours exist.
    """
    if not 0.0 <= rho <= 2.0:
        raise ValueError("rho must lie in [0, 2]")
    g = a.grid
    if a.batch_shape:
        vals = [a.values[idx] for idx in np.ndindex(*a.batch_shape)]
    else:
        vals = [a.values]
    dk = 2 * np.pi / g.L
    kabs_c = np.fft.fftshift(g.kabs)
    # second differences reach two lattice points; drop the wrapped edges
    interior = np.ones(g.shape, dtype=bool)
    for ax in range(g.d):
        sl = [slice(None)] * g.d
        for edge in (0, 1, -2, -1):
            sl[ax] = edge
            interior[tuple(sl)] = False
    sel = (kabs_c >= 0.5) & interior
    best = 0.0
    for v in vals:
        vc = _xi_shifted(g, v)
        stack = [(0, vc)]
        first = []
        for ax in range(-g.d, 0):
            first.append((np.roll(vc, -1, axis=ax) - np.roll(vc, 1, axis=ax)) / (2 * dk))
        stack += [(1, f) for f in first]
        for ax in range(-g.d, 0):
            for f in first:
                stack.append((2, (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2 * dk)))
        for order, f in stack:
            nrm = _winf_norm(g, f, rho)
            w = (1.0 + kabs_c) ** (order - a.order_m)
            best = max(best, float((w * nrm)[sel].max()))
    return SymbolSeminorm(a.order_m, rho, best)


# ---------------------------------------------------------------------------
# symbolic-calculus residuals
# ---------------------------------------------------------------------------

def composition_residual(a: SymbolField, b: SymbolField, u: np.ndarray) -> np.ndarray:
    """``(T_a T_b - T_{ab}) u``: the composition error at calculus order one."""
    return paradiff_apply(a, paradiff_apply(b, u)) - paradiff_apply(a * b, u)


def commutator_Ds(a: SymbolField, u: np.ndarray, s: float) -> np.ndarray:
    """``[<D>^s, T_a] u``."""
    g = a.grid
    jap = (1.0 + g.kabs ** 2) ** (s / 2)
    return (fourier_multiplier(g, paradiff_apply(a, u), jap)
            - paradiff_apply(a, fourier_multiplier(g, u, jap)))


def measure_order(grid: GridSpec, op: Callable[[np.ndarray], np.ndarray],
                  ks, axis: int = 0) -> tuple[float, np.ndarray]:
    """Least-squares log2-slope of ``||op(cos(k x))|| / ||cos(k x)||`` in ``k``.

    Returns ``(slope, ratios)``.
    """
    x = grid.x[axis]
    ratios = []
    for k in ks:
        u = np.cos(k * x)
        ratios.append(np.linalg.norm(op(u)) / np.linalg.norm(u))
    ratios = np.array(ratios)
    slope = np.polyfit(np.log2(np.asarray(ks, dtype=float)), np.log2(ratios), 1)[0]
    return float(slope), ratios
