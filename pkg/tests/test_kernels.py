import numpy as np
import pytest

from paraww import kernels, _kernels_py
from paraww.zgrid import zops


def _case(nz=33, P=17, seed=0):
    rng = np.random.default_rng(seed)
    Z = zops(nz)
    mu = -np.abs(rng.standard_normal(P)) * 10 + 1j * rng.standard_normal(P)
    g = rng.standard_normal((nz, P)) + 1j * rng.standard_normal((nz, P))
    return Z, mu, g


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="extension not built")
@pytest.mark.parametrize("direction", [1, -1])
def test_compiled_matches_reference(direction):
    Z, mu, g = _case()
    m = mu if direction > 0 else -mu
    E, W = Z._march_weights(np.asarray(m, complex), direction)
    u0 = np.ones(len(mu), complex)
    from paraww import _kernels
    a = _kernels.march(E, W, g, Z.starts, Z.types, u0, direction)
    b = _kernels_py.march(E, W, g, Z.starts, Z.types, u0, direction)
    assert np.allclose(a, b, rtol=0, atol=1e-13)


def test_use_backend_round_trip():
    old = kernels.use_backend("python")
    try:
        assert kernels.BACKEND == "python"
        Z, mu, g = _case()
        py = Z.march(mu, g, np.zeros(len(mu), complex), 1)
    finally:
        kernels.use_backend(old)
    assert np.allclose(Z.march(mu, g, np.zeros(len(mu), complex), 1), py, atol=1e-13)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_kn_apply_is_matrix_vector():
    rng = np.random.default_rng(1)
    K = rng.standard_normal((3, 5, 5))
    c = rng.standard_normal((3, 5))
    assert np.allclose(kernels.kn_apply(K, c), np.einsum("bij,bj->bi", K, c))
