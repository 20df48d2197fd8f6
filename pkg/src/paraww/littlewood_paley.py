"""Dyadic Littlewood-Paley decomposition on the periodic grid.

Cutoffs follow the construction used throughout the package:

* ``zeta(r) = 1`` for ``r <= 1.1`` and ``0`` for ``r >= 1.9``, joined by a
  degree-9 smoothstep (C^4);
* ``zeta_k(r) = zeta(2**-k r)``;
* ``phi_0 = zeta``, ``phi_k = zeta_k - zeta_{k-1}`` for ``k >= 1``;
* ``Delta_k = phi_k(D)`` for ``k >= 0`` and ``Delta_k = 0`` for ``k < 0``;
* ``S_k = sum_{l <= k} Delta_l``, hence ``S_k = zeta_k(D)`` for ``k >= 0``
  and ``S_k = 0`` for ``k < 0``.

Block 0 is the low-frequency ball ``|xi| <= 1.9``.  Block ``k >= 1`` lives in
the annulus ``1.1 * 2**(k-1) <= |xi| <= 1.9 * 2**k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

import numpy as np

from .grid import GridSpec, fft_forward, fft_inverse

R_IN = 1.1
R_OUT = 1.9

__all__ = [
    "R_IN",
    "R_OUT",
    "smoothstep",
    "zeta",
    "zeta_k",
    "phi_k",
    "psi",
    "k_max",
    "block_support",
    "dyadic_block",
    "low_pass",
    "DyadicDecomposition",
    "decompose",
]


def smoothstep(t):
    """Order-4 smoothstep: 0 for t <= 0, 1 for t >= 1, C^4 in between."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    # 126 t^5 - 420 t^6 + 540 t^7 - 315 t^8 + 70 t^9
    return t ** 5 * (126 + t * (-420 + t * (540 + t * (-315 + 70 * t))))


def zeta(r):
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - R_IN) / (R_OUT - R_IN))


def zeta_k(r, k: int):
    return zeta(np.asarray(r, dtype=float) * 2.0 ** (-k))


def phi_k(r, k: int):
    if k < 0:
        return np.zeros_like(np.asarray(r, dtype=float))
    if k == 0:
        return zeta(r)
    return zeta_k(r, k) - zeta_k(r, k - 1)


def psi(r):
    """Low-frequency cutoff of the symbolic calculus: 0 for r <= 1, 1 for r >= 2."""
    return smoothstep(np.asarray(r, dtype=float) - 1.0)


def k_max(grid: GridSpec) -> int:
    """Index of the last non-empty dyadic shell on ``grid``."""
    km = grid.kmax
    if km <= R_IN:
        return 0
    return max(0, ceil(log2(km / R_IN)))


def block_support(k: int) -> tuple[float, float]:
    """Closed radial interval outside which ``phi_k`` vanishes."""
    if k < 0:
        return (0.0, 0.0)
    if k == 0:
        return (0.0, R_OUT)
    return (R_IN * 2.0 ** (k - 1), R_OUT * 2.0 ** k)


def _lp_symbol(grid: GridSpec, k: int, low: bool) -> np.ndarray:
    key = ("S" if low else "D", k)
    cache = grid._cache.setdefault("lp", {})
    if key not in cache:
        if low:
            sym = zeta_k(grid.kabs, k) if k >= 0 else np.zeros(grid.shape)
        else:
            sym = phi_k(grid.kabs, k)
        sym.setflags(write=False)
        cache[key] = sym
    return cache[key]


def _apply(grid: GridSpec, u: np.ndarray, sym: np.ndarray) -> np.ndarray:
    out = fft_inverse(grid, sym * fft_forward(grid, u))
    return out.real if np.isrealobj(u) else out


def dyadic_block(grid: GridSpec, u: np.ndarray, k: int) -> np.ndarray:
    """``Delta_k u``; zero for ``k < 0`` and beyond the last shell."""
    if k < 0 or k > k_max(grid):
        return np.zeros_like(u)
    return _apply(grid, u, _lp_symbol(grid, k, low=False))


def low_pass(grid: GridSpec, u: np.ndarray, k: int) -> np.ndarray:
    """``S_k u``; zero for ``k < 0`` and the identity once ``k >= k_max``."""
    if k < 0:
        return np.zeros_like(u)
    if k >= k_max(grid):
        return np.array(u, copy=True)
    return _apply(grid, u, _lp_symbol(grid, k, low=True))


def block_symbol(grid: GridSpec, k: int) -> np.ndarray:
    return _lp_symbol(grid, k, low=False)


def low_symbol(grid: GridSpec, k: int) -> np.ndarray:
    if k < 0:
        return np.zeros(grid.shape)
    return _lp_symbol(grid, k, low=True)


@dataclass(frozen=True)
class DyadicDecomposition:
    """Blocks ``(k, Delta_k u)`` for ``k = 0..k_max``."""

    grid: GridSpec
    blocks: tuple[tuple[int, np.ndarray], ...]

    @property
    def k_max(self) -> int:
        return self.blocks[-1][0]

    def reconstruct(self) -> np.ndarray:
        return sum(b for _, b in self.blocks)

    def __getitem__(self, k: int) -> np.ndarray:
        for kk, b in self.blocks:
            if kk == k:
                return b
        raise KeyError(k)

    def __iter__(self):
        return iter(self.blocks)


def decompose(grid: GridSpec, u: np.ndarray) -> DyadicDecomposition:
    """All dyadic blocks of ``u`` from a single forward transform."""
    c = fft_forward(grid, u)
    blocks = []
    for k in range(k_max(grid) + 1):
        b = fft_inverse(grid, _lp_symbol(grid, k, low=False) * c)
        blocks.append((k, b.real if np.isrealobj(u) else b))
    return DyadicDecomposition(grid, tuple(blocks))
