"""Pure-numpy reference for the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def march(E, W, g, starts, types, u0, direction):
    """Exponential march over the z-levels.

    ``direction > 0``:  ``u[j+1] = E u[j] + sum_m W[t_j, m] g[s_j + m]``
    ``direction < 0``:  ``u[j]   = E u[j+1] + sum_m W[t_j, m] g[s_j + m]``
    with ``t_j = types[j]``, ``s_j = starts[j]``; all ops per mode (last axis).
    """
    nz, P = g.shape
    S = W.shape[1]
    idx = starts[:, None] + np.arange(S)[None, :]
    inc = np.einsum("jmp,jmp->jp", W[types], g[idx])
    u = np.empty((nz, P), dtype=complex)
    if direction > 0:
        u[0] = u0
        for j in range(nz - 1):
            u[j + 1] = E * u[j] + inc[j]
    else:
        u[-1] = u0
        for j in range(nz - 2, -1, -1):
            u[j] = E * u[j + 1] + inc[j]
    return u
