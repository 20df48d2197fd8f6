"""Periodic grids, FFT conventions and spectral differentiation.

Surface fields are real arrays whose trailing ``d`` axes are the horizontal
torus; strip fields carry one extra leading axis for the ``Nz`` levels of the
flattened strip ``z in [-1, 0]``.  Every routine here acts on the trailing
``d`` axes, so leading batch axes (levels, vector components) broadcast.

Spectral coefficients are normalised so that ``cos(x)`` has weight 1/2 on the
modes +1 and -1:  ``c = fft(u) / N**d``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "fft_forward",
    "fft_inverse",
    "grad",
    "div",
    "laplacian",
    "fourier_multiplier",
    "dealias",
    "l2_inner",
    "resample",
]


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Horizontal torus ``[0, L)^d`` with ``N`` points per axis plus a z-grid.

    Parameters
    ----------
    d : int
        Horizontal dimension, 1 or 2.
    N : int
        Points per horizontal axis; a power of two, at least 8.
    L : float
        Period per axis.
    Nz : int
        Number of uniformly spaced levels on ``[-1, 0]``; odd and at least 9
        so that ``z = -1, -1/2, 0`` are grid levels.
    dealias_fraction : float
        Fraction of the resolved wavenumber range kept by :func:`dealias`.
    """

    d: int = 1
    N: int = 64
    L: float = 2 * np.pi
    Nz: int = 33
    dealias_fraction: float = 2.0 / 3.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if self.N < 8 or not _is_pow2(self.N):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.Nz < 9 or self.Nz % 2 == 0:
            raise ValueError(f"Nz must be odd and >= 9, got {self.Nz}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        if not self.L > 0:
            raise ValueError("L must be positive")

    # -- horizontal geometry -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.d

    @property
    def volume(self) -> float:
        return self.L ** self.d

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays, each of shape ``grid.shape``."""
        x1 = np.arange(self.N) * self.dx
        return tuple(np.meshgrid(*([x1] * self.d), indexing="ij"))

    @cached_property
    def k1(self) -> np.ndarray:
        return 2 * np.pi / self.L * np.fft.fftfreq(self.N, d=1.0 / self.N)

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Wavenumber arrays (with the Nyquist mode kept), one per axis."""
        return tuple(np.meshgrid(*([self.k1] * self.d), indexing="ij"))

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(sum(kk ** 2 for kk in self.k))

    @cached_property
    def kdiff(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers for odd derivatives: Nyquist mode zeroed."""
        k1 = self.k1.copy()
        k1[self.N // 2] = 0.0
        return tuple(np.meshgrid(*([k1] * self.d), indexing="ij"))

    @cached_property
    def kmax(self) -> float:
        return float(self.kabs.max())

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_fraction * (np.pi / self.dx)
        mask = np.ones(self.shape, dtype=bool)
        for kk in self.k:
            mask &= np.abs(kk) <= cut * (1 + 1e-12)
        return mask

    @cached_property
    def kmax_retained(self) -> float:
        return float(self.kabs[self.dealias_mask].max())

    # -- vertical geometry ---------------------------------------------------
    @cached_property
    def z(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.Nz)

    @property
    def hz(self) -> float:
        return 1.0 / (self.Nz - 1)

    @property
    def strip_shape(self) -> tuple[int, ...]:
        return (self.Nz,) + self.shape

    def zcol(self, arr1d: np.ndarray) -> np.ndarray:
        """Reshape a length-``Nz`` vector to broadcast against strip fields."""
        return np.asarray(arr1d).reshape((self.Nz,) + (1,) * self.d)

    def random_field(self, rng: np.random.Generator, kcut: float, decay: float = 1.0,
                     batch: tuple[int, ...] = ()) -> np.ndarray:
        """Real random field band-limited to ``|xi| <= kcut``."""
        shape = batch + self.shape
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        c *= (self.kabs <= kcut) * np.exp(-decay * self.kabs / max(kcut, 1.0))
        return np.real(fft_inverse(self, c))


def fft_forward(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    """Spectral coefficients over the trailing ``d`` axes."""
    u = np.asarray(u)
    if u.shape[-grid.d:] != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.shape}")
    return np.fft.fftn(u, axes=grid.axes) / grid.N ** grid.d


def fft_inverse(grid: GridSpec, c: np.ndarray, real: bool = False) -> np.ndarray:
    c = np.asarray(c)
    if c.shape[-grid.d:] != grid.shape:
        raise ValueError(f"coefficient shape {c.shape} does not match grid {grid.shape}")
    u = np.fft.ifftn(c, axes=grid.axes) * grid.N ** grid.d
    return u.real if real else u


def _realify(u: np.ndarray, like: np.ndarray) -> np.ndarray:
    return u.real if np.isrealobj(like) else u


def fourier_multiplier(grid: GridSpec, u: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply ``symbol(D)`` to ``u``; real input with a real-preserving symbol
    gives real output."""
    out = fft_inverse(grid, symbol * fft_forward(grid, u))
    return _realify(out, u)


def grad(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    """Gradient stacked on a new leading axis of length ``d``."""
    c = fft_forward(grid, u)
    out = np.stack([fft_inverse(grid, 1j * kk * c) for kk in grid.kdiff])
    return _realify(out, u)


def div(grid: GridSpec, w: np.ndarray) -> np.ndarray:
    """Divergence of a vector field stacked on the leading axis."""
    total = 0
    for i, kk in enumerate(grid.kdiff):
        total = total + 1j * kk * fft_forward(grid, w[i])
    return _realify(fft_inverse(grid, total), w)


def laplacian(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    return fourier_multiplier(grid, u, -grid.kabs ** 2)


def dealias(grid: GridSpec, u: np.ndarray) -> np.ndarray:
    """Zero the modes outside the retained (2/3-rule by default) box."""
    return fourier_multiplier(grid, u, grid.dealias_mask.astype(float))


def l2_inner(grid: GridSpec, f: np.ndarray, g: np.ndarray) -> float:
    """Real L2 pairing on the torus."""
    return float(np.sum(np.real(f * np.conj(g)), axis=grid.axes).sum() * grid.cell_volume)


def _axis_map(n_from: int, n_to: int) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs of the wavenumbers shared by two FFT orderings (no Nyquist)."""
    h = min(n_from, n_to) // 2
    ks = np.r_[0:h, -h + 1:0]
    return ks % n_from, ks % n_to


def resample(grid: GridSpec, u: np.ndarray, n_to: int) -> np.ndarray:
    """Spectral interpolation (``n_to > N``) or truncation (``n_to < N``) of a
    real field to ``n_to`` points per axis; the shared Nyquist mode is split or
    folded so that real fields stay real."""
    c = fft_forward(grid, u)
    n = grid.N
    out = c
    for ax in range(-grid.d, 0):
        shape = list(out.shape)
        shape[ax] = n_to
        new = np.zeros(shape, dtype=complex)
        src, dst = _axis_map(n, n_to)
        sl_s = [slice(None)] * out.ndim
        sl_d = [slice(None)] * out.ndim
        sl_s[ax], sl_d[ax] = src, dst
        new[tuple(sl_d)] = out[tuple(sl_s)]
        m = min(n, n_to) // 2
        if n_to > n:  # split the coarse Nyquist mode over +-m
            sl_s[ax] = m
            for idx in (m, n_to - m):
                sl_d[ax] = idx
                new[tuple(sl_d)] = 0.5 * out[tuple(sl_s)]
        elif n_to < n:  # fold +-m onto the new Nyquist index
            sl_d[ax] = m
            sl_s[ax] = m
            acc = out[tuple(sl_s)].copy()
            sl_s[ax] = n - m
            acc = acc + out[tuple(sl_s)]
            new[tuple(sl_d)] = acc
        else:
            new = out
        out = new
    vals = np.fft.ifftn(out, axes=grid.axes) * n_to ** grid.d
    return vals.real if np.isrealobj(u) else vals
