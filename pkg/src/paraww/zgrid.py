"""High-order operators on the uniform z-grid of ``[-1, 0]``.

Everything here is built from one ingredient: on each cell
``[z_j, z_{j+1}]`` a level field is represented by its degree-7 Lagrange
interpolant through eight neighbouring levels (shifted to stay inside the
grid near ``z = -1`` and ``z = 0``).  From it we get

* :meth:`ZOps.march`: the exact solution of ``du/dz = mu u + g`` for the
  interpolated ``g`` (an exponential integrator), marched up or down;
* :attr:`ZOps.D1`: a differentiation matrix (derivative of the interpolant);
* :attr:`ZOps.weights`: a quadrature rule consistent with the interpolant.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import kernels

DEGREE = 7
_QNODES = 12


def _lagrange_basis(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``L[m, q] = l_m(t_q)`` for the Lagrange basis on ``nodes``."""
    n = len(nodes)
    out = np.ones((n, len(t)))
    for m in range(n):
        for r in range(n):
            if r != m:
                out[m] *= (t - nodes[r]) / (nodes[m] - nodes[r])
    return out


def _lagrange_deriv(nodes: np.ndarray, t: float) -> np.ndarray:
    n = len(nodes)
    out = np.zeros(n)
    for m in range(n):
        tot = 0.0
        for r in range(n):
            if r == m:
                continue
            prod = 1.0 / (nodes[m] - nodes[r])
            for q in range(n):
                if q != m and q != r:
                    prod *= (t - nodes[q]) / (nodes[m] - nodes[q])
            tot += prod
        out[m] = tot
    return out


class ZOps:
    """Cached z-operators for ``nz`` uniform levels."""

    def __init__(self, nz: int):
        if nz < DEGREE + 2:
            raise ValueError(f"need at least {DEGREE + 2} levels, got {nz}")
        self.nz = nz
        self.h = 1.0 / (nz - 1)
        self.z = np.linspace(-1.0, 0.0, nz)
        M = nz - 1
        S = DEGREE + 1
        self.S = S
        j = np.arange(M)
        self.starts = np.clip(j - (S // 2 - 1), 0, M - DEGREE).astype(np.int_)
        self.types = (j - self.starts).astype(np.int_)
        self.ntypes = int(self.types.max()) + 1
        self._local = np.arange(S, dtype=float)
        self._march_cache: dict = {}

    # -- differentiation and quadrature ---------------------------------------
    @property
    def D1(self) -> np.ndarray:
        if not hasattr(self, "_D1"):
            nz, S = self.nz, self.S
            D = np.zeros((nz, nz))
            for i in range(nz):
                s0 = min(max(i - S // 2 + 1, 0), nz - S)
                D[i, s0:s0 + S] = _lagrange_deriv(self._local, float(i - s0)) / self.h
            self._D1 = D
        return self._D1

    @property
    def weights(self) -> np.ndarray:
        if not hasattr(self, "_w"):
            x, w = np.polynomial.legendre.leggauss(_QNODES)
            tau, wq = 0.5 * (x + 1), 0.5 * w
            wz = np.zeros(self.nz)
            for j in range(self.nz - 1):
                t, s0 = self.types[j], self.starts[j]
                L = _lagrange_basis(self._local, t + tau)
                wz[s0:s0 + self.S] += self.h * (L @ wq)
            self._w = wz
        return self._w

    def dz(self, f: np.ndarray, axis: int = 0) -> np.ndarray:
        """z-derivative along ``axis`` (the level axis)."""
        out = np.tensordot(self.D1, np.moveaxis(f, axis, 0), axes=(1, 0))
        return np.moveaxis(out, 0, axis)

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """``int_{-1}^0 f dz`` along axis 0."""
        return np.tensordot(self.weights, f, axes=(0, 0))

    def interpolate(self, f: np.ndarray, zq: float) -> np.ndarray:
        """Evaluate the level interpolant of ``f`` (axis 0) at ``zq``."""
        t = (zq + 1.0) / self.h
        j = int(min(max(np.floor(t), 0), self.nz - 2))
        s0 = self.starts[j]
        L = _lagrange_basis(self._local, np.array([t - s0]))[:, 0]
        return np.tensordot(L, f[s0:s0 + self.S], axes=(0, 0))

    def interpolate_column(self, f: np.ndarray, zq: np.ndarray) -> np.ndarray:
        """Level interpolant of the column ``f`` (shape ``(nz,)``) at many points."""
        zq = np.asarray(zq, dtype=float)
        t = (zq + 1.0) / self.h
        j = np.clip(np.floor(t), 0, self.nz - 2).astype(np.int_)
        s0 = self.starts[j]
        tl = t - s0
        out = np.zeros_like(zq)
        for m in range(self.S):
            lm = np.ones_like(zq)
            for r in range(self.S):
                if r != m:
                    lm *= (tl - r) / (m - r)
            out += lm * f[s0 + m]
        return out

    # -- exponential march ------------------------------------------------------
    def _march_weights(self, mu: np.ndarray, direction: int):
        key = (direction, mu.tobytes())
        hit = self._march_cache.get(key)
        if hit is not None:
            return hit
        h = self.h
        x, w = np.polynomial.legendre.leggauss(_QNODES)
        nsub = max(1, int(np.ceil(np.abs(mu).max() * h / 4.0)))
        tau = (np.arange(nsub)[:, None] + 0.5 * (x[None, :] + 1)) / nsub
        tau = tau.ravel()
        wq = np.tile(0.5 * w / nsub, nsub)
        if direction > 0:
            expo = np.exp(np.outer(h * (1.0 - tau), mu))  # (Q, P)
            E = np.exp(mu * h)
            sign = 1.0
        else:
            expo = np.exp(np.outer(-h * tau, mu))
            E = np.exp(-mu * h)
            sign = -1.0
        W = np.empty((self.ntypes, self.S, len(mu)), dtype=complex)
        for t in range(self.ntypes):
            L = _lagrange_basis(self._local, t + tau)  # (S, Q)
            W[t] = sign * h * (L * wq) @ expo
        if len(self._march_cache) > 64:
            self._march_cache.clear()
        self._march_cache[key] = (E, W)
        return E, W

    def march(self, mu: np.ndarray, g: np.ndarray, u_start: np.ndarray,
              direction: int) -> np.ndarray:
        """Solve ``du/dz = mu u + g`` per mode.

        ``mu`` has shape ``(P,)``; ``g`` has shape ``(nz, P)``.  Upward
        (``direction=+1``) starts from ``u(-1) = u_start`` and needs
        ``Re mu <= 0``; downward starts from ``u(0) = u_start`` and needs
        ``Re mu >= 0``.  Returns ``u`` at every level.
        """
        mu = np.ascontiguousarray(mu, dtype=complex)
        E, W = self._march_weights(mu, direction)
        return kernels.march(E, W, g, self.starts, self.types, u_start, direction)


@lru_cache(maxsize=16)
def zops(nz: int) -> ZOps:
    return ZOps(nz)
