"""Sobolev, Besov/Zygmund and Chemin-Lerner norm calculators."""
from __future__ import annotations

import numpy as np

from .grid import GridSpec, fft_forward
from .littlewood_paley import decompose

__all__ = [
    "lp_norm",
    "sobolev_norm",
    "besov_norm",
    "zygmund_norm",
    "chemin_lerner_norm",
    "trapezoid_weights",
]


def _check_finite(u):
    if not np.all(np.isfinite(u)):
        raise ValueError("field contains non-finite values")


def lp_norm(grid: GridSpec, u: np.ndarray, p: float) -> np.ndarray:
    """L^p norm over the torus (trailing ``d`` axes), by grid quadrature."""
    a = np.abs(u)
    if np.isinf(p):
        return a.max(axis=grid.axes)
    return (np.sum(a ** p, axis=grid.axes) * grid.cell_volume) ** (1.0 / p)


def sobolev_norm(grid: GridSpec, u: np.ndarray, s: float) -> float:
    """``(sum <xi>^{2s} |u_hat|^2)^{1/2}`` scaled so that s=0 is the L2 norm."""
    _check_finite(u)
    c = fft_forward(grid, u)
    w = (1.0 + grid.kabs ** 2) ** s
    return float(np.sqrt(grid.volume * np.sum(w * np.abs(c) ** 2)))


def besov_norm(grid: GridSpec, u: np.ndarray, s: float, p: float, q: float) -> float:
    _check_finite(u)
    terms = np.array([2.0 ** (k * s) * lp_norm(grid, b, p) for k, b in decompose(grid, u)])
    if np.isinf(q):
        return float(terms.max())
    return float(np.sum(terms ** q) ** (1.0 / q))


def zygmund_norm(grid: GridSpec, u: np.ndarray, s: float) -> float:
    return besov_norm(grid, u, s, np.inf, np.inf)


def trapezoid_weights(nz: int) -> np.ndarray:
    h = 1.0 / (nz - 1)
    w = np.full(nz, h)
    w[0] = w[-1] = h / 2
    return w


def chemin_lerner_norm(grid: GridSpec, w: np.ndarray, q: float, s: float, p: float,
                       r: float) -> float:
    """``(sum_k 2^{ksr} ||Delta_k w||^r_{L^q_z(L^p)})^{1/r}`` on ``z in [-1, 0]``.

    ``w`` is a strip field of shape ``(Nz, *grid.shape)``; the z-integral is the
    composite trapezoid rule on the level grid.
    """
    _check_finite(w)
    nz = w.shape[0]
    tw = trapezoid_weights(nz)
    terms = []
    for k, b in decompose(grid, w):
        col = lp_norm(grid, b, p)  # one value per level
        if np.isinf(q):
            zq = col.max()
        else:
            zq = np.sum(tw * col ** q) ** (1.0 / q)
        terms.append(2.0 ** (k * s) * zq)
    terms = np.array(terms)
    if np.isinf(r):
        return float(terms.max())
    return float(np.sum(terms ** r) ** (1.0 / r))
