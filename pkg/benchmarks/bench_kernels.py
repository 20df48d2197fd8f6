"""Compiled vs pure-Python kernels.

Times the z-march kernel on its own and a full strip elliptic solve (which
is dominated by it) with each backend, and checks the two agree.

    python3 benchmarks/bench_kernels.py [--N 128] [--Nz 65] [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from paraww import GridSpec, kernels
from paraww.dn import dn_apply
from paraww.zgrid import zops


def bench_march(nz: int, P: int, repeat: int):
    Z = zops(nz)
    rng = np.random.default_rng(0)
    mu = -np.abs(rng.standard_normal(P)) * 20 + 0j
    g = rng.standard_normal((nz, P)) + 1j * rng.standard_normal((nz, P))
    u0 = np.zeros(P, complex)
    Z.march(mu, g, u0, +1)  # fill the weight cache outside the timing
    out = {}
    for name in ("cython", "python"):
        kernels.use_backend(name)
        t = min(timeit.repeat(lambda: Z.march(mu, g, u0, +1), number=10, repeat=repeat)) / 10
        out[name] = (t, Z.march(mu, g, u0, +1))
    return out


def bench_dn(N: int, nz: int, repeat: int):
    g = GridSpec(1, N, Nz=nz)
    x = g.x[0]
    eta = 0.1 * np.cos(x)
    f = np.cos(3 * x)
    out = {}
    for name in ("cython", "python"):
        kernels.use_backend(name)
        run = lambda: dn_apply(g, eta, f, paralinearize=False).Gf  # noqa: E731
        t = min(timeit.repeat(run, number=1, repeat=repeat))
        out[name] = (t, run())
    return out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--N", type=int, default=128)
    p.add_argument("--Nz", type=int, default=65)
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    try:
        kernels.use_backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'case':<28}{'cython [ms]':>12}{'python [ms]':>13}{'speedup':>9}{'max diff':>11}")
    cases = [(f"march Nz={a.Nz} P={a.N // 2 + 1}", bench_march(a.Nz, a.N // 2 + 1, a.repeat)),
             (f"march Nz={a.Nz} P={4 * a.N}", bench_march(a.Nz, 4 * a.N, a.repeat)),
             (f"DN solve N={a.N} Nz={a.Nz}", bench_dn(a.N, a.Nz, a.repeat))]
    for label, r in cases:
        tc, rc = r["cython"]
        tp, rp = r["python"]
        print(f"{label:<28}{1e3 * tc:>12.3f}{1e3 * tp:>13.3f}{tp / tc:>9.2f}"
              f"{np.abs(rc - rp).max():>11.1e}")
    kernels.use_backend("cython")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
