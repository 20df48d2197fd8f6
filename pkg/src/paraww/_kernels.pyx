# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled z-march kernel; see ``paraww._kernels_py`` for the reference."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def march(double complex[::1] E, double complex[:, :, ::1] W,
          double complex[:, ::1] g, long[::1] starts, long[::1] types,
          double complex[::1] u0, int direction):
    cdef Py_ssize_t nz = g.shape[0]
    cdef Py_ssize_t P = g.shape[1]
    cdef Py_ssize_t S = W.shape[1]
    cdef Py_ssize_t M = nz - 1
    cdef Py_ssize_t j, p, m, src, dst, s0, t
    cdef double complex acc
    out = np.empty((nz, P), dtype=np.complex128)
    cdef double complex[:, ::1] u = out
    if direction > 0:
        for p in range(P):
            u[0, p] = u0[p]
        for j in range(M):
            s0 = starts[j]
            t = types[j]
            for p in range(P):
                acc = E[p] * u[j, p]
                for m in range(S):
                    acc = acc + W[t, m, p] * g[s0 + m, p]
                u[j + 1, p] = acc
    else:
        for p in range(P):
            u[M, p] = u0[p]
        for j in range(M - 1, -1, -1):
            s0 = starts[j]
            t = types[j]
            for p in range(P):
                acc = E[p] * u[j + 1, p]
                for m in range(S):
                    acc = acc + W[t, m, p] * g[s0 + m, p]
                u[j, p] = acc
    return out
