import numpy as np
import pytest

from paraww import GridSpec
from paraww.dynamics import (RunResult, SimParams, WaveState, _ensure_map, assemble_rhs,
                             omega_pairs, recover_velocity, rk4_step, run, spectral_filter,
                             stable_dt)
from paraww.diagnostics import basic_energy
from paraww.errors import FlatteningFailure


def test_state_validation(g64):
    s = WaveState.rest(g64)
    with pytest.raises(ValueError):
        WaveState(g64, 0.0, s.eta[:10], s.V, s.B, s.Vb, s.omega)
    assert omega_pairs(1) == [(0, 1)] and len(omega_pairs(2)) == 3
    c = s.copy()
    c.eta[0] = 1.0
    assert s.eta[0] == 0.0
    assert s.is_finite()


@pytest.mark.parametrize("d,N", [(1, 32), (2, 16)])
def test_rest_is_fixed_point(d, N):
    g = GridSpec(d=d, N=N, Nz=17)
    ev = assemble_rhs(WaveState.rest(g))
    assert ev.deriv.max_abs() <= 1e-10
    assert np.abs(ev.pressure.taylor_a - 1).max() <= 1e-10


@pytest.mark.parametrize("d,N", [(1, 32), (2, 16)])
def test_uniform_stream_is_fixed_point(d, N):
    g = GridSpec(d=d, N=N, Nz=17)
    s = WaveState.rest(g)
    s.V[:] = 0.7
    s.Vb[:] = 0.7
    assert assemble_rhs(s).deriv.max_abs() <= 1e-10


def test_constant_shear_is_steady(g64):
    w0 = 0.8
    s = WaveState.rest(g64)
    s.V[0] = -w0
    s.omega[:] = w0
    ev = assemble_rhs(s)
    z = g64.zcol(g64.z)
    assert np.abs(ev.velocity.v[0] + w0 * (z + 1)).max() < 1e-12
    assert ev.velocity.curl_residual < 1e-12 and ev.velocity.div_residual < 1e-12
    assert ev.deriv.max_abs() < 1e-10


def test_linear_gravity_response(g64):
    k, eps = 3, 1e-6
    s = WaveState.rest(g64)
    s.eta = eps * np.cos(k * g64.x[0])
    ev = assemble_rhs(s)
    # hydrostatic adjustment: d_t B = a - 1 = -k tanh(k) eta to first order
    assert np.abs(ev.deriv.d_B + k * np.tanh(k) * s.eta).max() < 1e-3 * eps
    assert np.abs(ev.deriv.d_eta).max() == 0.0


def test_velocity_recovery_is_cached(g64):
    s = WaveState.rest(g64)
    assert recover_velocity(s) is recover_velocity(s)


def test_filter_and_cfl(g64):
    x = g64.x[0]
    assert np.allclose(spectral_filter(g64, np.cos(3 * x)), np.cos(3 * x), atol=1e-14)
    hi = spectral_filter(g64, np.cos(31 * x))
    assert np.abs(hi).max() < 1e-4
    assert stable_dt(g64, 1.0, 0.5) == pytest.approx(0.5 / np.sqrt(g64.kmax))


def test_energy_conserved_over_short_run():
    g = GridSpec(d=1, N=32, Nz=17)
    s = WaveState.rest(g)
    s.eta = 1e-3 * np.cos(2 * g.x[0])
    p = SimParams(cfl=0.3)
    E = []
    res = run(s, p, 1.0, on_step=lambda st, ev, prev, dt: E.append(basic_energy(st, ev)))
    assert res.status == "ok" and res.exit_code == 0
    assert abs(E[-1] - E[0]) / E[0] < 1e-6


def test_run_respects_max_steps(g64):
    res = run(WaveState.rest(g64), SimParams(), 10.0, dt=0.1, max_steps=3)
    assert res.steps == 3 and res.state.t == pytest.approx(0.3)


def test_depth_violation_returns_last_accepted_state():
    g = GridSpec(d=1, N=32, Nz=17)
    s = WaveState.rest(g)
    s.B = -0.3 * np.cos(g.x[0])
    res = run(s, SimParams(h0=0.85), 3.0)
    assert isinstance(res, RunResult)
    assert res.status == "depth" and res.exit_code == 2
    assert (1 + res.state.eta).min() >= 0.85
    assert 0 < res.state.t < 3.0


def test_initial_depth_violation():
    g = GridSpec(d=1, N=32, Nz=17)
    s = WaveState.rest(g)
    s.eta = -0.5 * np.ones(g.shape)
    res = run(s, SimParams(h0=0.6), 1.0)
    assert res.status == "depth" and res.steps == 0


def test_nan_state_aborts():
    g = GridSpec(d=1, N=32, Nz=17)
    s = WaveState.rest(g)
    s.B[3] = np.nan
    res = run(s, SimParams(), 1.0)
    assert res.exit_code in (3, 4)


def test_map_refresh_keeps_vorticity():
    g = GridSpec(d=1, N=32, Nz=33)
    s = WaveState.rest(g)
    s.omega[:] = 0.4
    s.eta = 0.17 * np.cos(8 * g.x[0])
    s.delta = 0.5  # d_z rho dips below h0/2 but the map stays invertible
    p = SimParams(h0=0.5)
    out = _ensure_map(s, p)
    assert out.delta < 0.5
    assert np.allclose(out.omega, 0.4, atol=1e-12)
    s.eta = 0.5 * np.cos(12 * g.x[0])  # not invertible at delta = 1/2
    s.cache.clear()
    with pytest.raises(FlatteningFailure):
        _ensure_map(s, p)


def test_rk4_step_advances_time(g64):
    s = WaveState.rest(g64)
    out = rk4_step(s, 0.05)
    assert out.t == pytest.approx(0.05) and np.all(out.eta == 0)
