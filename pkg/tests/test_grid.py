import numpy as np
import pytest
from hypothesis import given, strategies as st

from paraww import GridSpec
from paraww.grid import (dealias, div, fft_forward, fft_inverse, fourier_multiplier, grad,
                         l2_inner, laplacian, resample)


def test_gridspec_validation():
    for kw in ({"d": 3}, {"N": 48}, {"N": 4}, {"Nz": 10}, {"Nz": 7}, {"L": -1.0},
               {"dealias_fraction": 0.0}):
        with pytest.raises(ValueError):
            GridSpec(**kw)


def test_fft_convention_cos_weight(g64):
    c = fft_forward(g64, np.cos(3 * g64.x[0]))
    assert np.isclose(c[3], 0.5) and np.isclose(c[-3], 0.5)
    assert np.allclose(fft_inverse(g64, c).real, np.cos(3 * g64.x[0]))


@pytest.mark.parametrize("d", [1, 2])
def test_derivatives_of_trig(d):
    g = GridSpec(d=d, N=32)
    x = g.x
    u = np.sin(2 * x[0]) * (np.cos(3 * x[-1]) if d == 2 else 1.0)
    gu = grad(g, u)
    if d == 1:
        assert np.allclose(gu[0], 2 * np.cos(2 * x[0]), atol=1e-12)
        assert np.allclose(laplacian(g, u), -4 * u, atol=1e-11)
    else:
        assert np.allclose(gu[1], -3 * np.sin(2 * x[0]) * np.sin(3 * x[1]), atol=1e-12)
        assert np.allclose(laplacian(g, u), -13 * u, atol=1e-11)
    assert np.allclose(div(g, gu), laplacian(g, u), atol=1e-11)


def test_period_scaling():
    g = GridSpec(d=1, N=32, L=4 * np.pi)
    x = g.x[0]
    assert np.allclose(grad(g, np.sin(x / 2))[0], 0.5 * np.cos(x / 2), atol=1e-13)


def test_dealias_removes_high_modes(g64):
    x = g64.x[0]
    u = np.cos(3 * x) + np.cos(30 * x)
    assert np.allclose(dealias(g64, u), np.cos(3 * x), atol=1e-13)


def test_l2_inner_parseval(g64):
    x = g64.x[0]
    assert np.isclose(l2_inner(g64, np.cos(x), np.cos(x)), np.pi)


def test_fourier_multiplier_identity(g64, rng):
    u = g64.random_field(rng, 20)
    assert np.allclose(fourier_multiplier(g64, u, np.ones(g64.shape)), u)


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 4]))
def test_resample_round_trip(seed, pad):
    g = GridSpec(d=1, N=32)
    u = g.random_field(np.random.default_rng(seed), 16)
    fine = resample(g, u, 32 * pad)
    gf = GridSpec(d=1, N=32 * pad)
    assert np.allclose(fine[::pad], u, atol=1e-13)
    assert np.allclose(resample(gf, fine, 32), u, atol=1e-13)


def test_resample_2d():
    g = GridSpec(d=2, N=16)
    u = g.random_field(np.random.default_rng(0), 8)
    f = resample(g, u, 32)
    assert np.allclose(f[::2, ::2], u, atol=1e-13)


@given(st.integers(0, 2**31 - 1))
def test_random_field_is_band_limited(seed):
    g = GridSpec(d=1, N=64)
    u = g.random_field(np.random.default_rng(seed), 10)
    c = fft_forward(g, u)
    assert np.all(np.abs(c[g.kabs > 10]) < 1e-14)
    assert np.isrealobj(u)
