import numpy as np
import pytest
from hypothesis import given, strategies as st

from paraww import GridSpec
from paraww.grid import fft_forward
from paraww.littlewood_paley import (R_IN, R_OUT, block_support, block_symbol, decompose, dyadic_block,
                                     k_max, low_pass, phi_k, psi, smoothstep, zeta)


def test_cutoff_values():
    assert zeta(0.0) == 1.0 and zeta(R_IN) == 1.0 and zeta(R_OUT) == 0.0
    assert psi(1.0) == 0.0 and psi(2.0) == 1.0
    assert smoothstep(0.0) == 0.0 and smoothstep(1.0) == 1.0


@given(st.floats(0, 1))
def test_smoothstep_monotone_symmetric(t):
    assert 0.0 <= smoothstep(t) <= 1.0
    assert np.isclose(smoothstep(t) + smoothstep(1 - t), 1.0)


@given(st.floats(0, 5000))
def test_partition_of_unity_pointwise(r):
    total = sum(phi_k(np.array(r), k) for k in range(16))
    assert np.isclose(total, 1.0, atol=1e-14)


@pytest.mark.parametrize("d,N", [(1, 128), (2, 32)])
def test_reconstruction(d, N, rng):
    g = GridSpec(d=d, N=N)
    u = g.random_field(rng, N // 2)
    err = np.abs(decompose(g, u).reconstruct() - u).max() / np.abs(u).max()
    assert err <= 1e-13


@pytest.mark.parametrize("d,N", [(1, 256), (2, 64)])
def test_block_supports_exact(d, N):
    g = GridSpec(d=d, N=N)
    for k in range(k_max(g) + 1):
        lo, hi = block_support(k)
        outside = (g.kabs < lo) | (g.kabs > hi)
        assert np.all(block_symbol(g, k)[outside] == 0.0)


def test_block_coefficients_vanish_outside(rng):
    g = GridSpec(d=1, N=256)
    u = g.random_field(rng, 128, decay=0.0)
    for k, b in decompose(g, u):
        lo, hi = block_support(k)
        outside = (g.kabs < lo) | (g.kabs > hi)
        # only the round-off of one transform pair survives
        assert np.abs(fft_forward(g, b)[outside]).max(initial=0.0) < 1e-15


def test_low_pass_is_partial_sum(g64, rng):
    u = g64.random_field(rng, 30)
    for k in range(k_max(g64) + 1):
        s = sum(dyadic_block(g64, u, j) for j in range(k + 1))
        assert np.allclose(low_pass(g64, u, k), s, atol=1e-13)
    assert np.all(low_pass(g64, u, -1) == 0)
    assert np.all(dyadic_block(g64, u, -2) == 0)
