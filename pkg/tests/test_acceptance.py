"""Acceptance criteria 1-13.

Each test prints one ``PASS``/``FAIL`` line (visible without ``-s``) and then
asserts.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import time

import numpy as np
import pytest
from scipy.optimize import curve_fit

from paraww import GridSpec
from paraww.cli import main
from paraww.diagnostics import basic_energy, curvature_identity_residual, good_unknown_residual
from paraww.dn import dn_apply, dn_positivity_check, dn_selfadjoint_check, remainder_order_check
from paraww.dynamics import SimParams, WaveState, assemble_rhs, rk4_step, run
from paraww.elliptic import EllipticProblem, factorization_symbols, solve
from paraww.geometry import build_map
from paraww.grid import fft_forward, grad, l2_inner
from paraww.littlewood_paley import block_support, block_symbol, decompose, k_max
from paraww.paradiff import bony_remainder, paraproduct
from paraww.persistence import read_diagnostics, read_snapshot, write_snapshot


@pytest.fixture
def report(capsys):
    def _report(n: int, name: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n:2d} ({name}): {detail}")
        assert ok, detail
    return _report


def _norm(g, f):
    return np.sqrt(l2_inner(g, f, f))


def _steep(g, eta, s):
    """Rescale ``eta`` to maximal slope ``s``."""
    return eta * s / np.sqrt(np.sum(grad(g, eta) ** 2, axis=0)).max()


def test_01_bony_identity(report):
    g = GridSpec(d=1, N=128)
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        a, u = g.random_field(rng, 60), g.random_field(rng, 60)
        r = a * u - paraproduct(g, a, u) - paraproduct(g, u, a) - bony_remainder(g, u, a)
        worst = max(worst, np.abs(r).max() / (np.abs(a).max() * np.abs(u).max()))
    elapsed = time.perf_counter() - t0
    report(1, "Bony identity", worst <= 1e-12 and elapsed < 10,
           f"max relative defect {worst:.2e} (<= 1e-12), {elapsed:.2f} s (< 10 s)")


def test_02_partition_of_unity(report):
    worst, support_ok, leak = 0.0, True, 0.0
    rng = np.random.default_rng(102)
    for d, N in ((1, 128), (1, 256), (2, 64)):
        g = GridSpec(d=d, N=N)
        u = g.random_field(rng, N // 2, decay=0.0)
        blocks = decompose(g, u)
        worst = max(worst, np.abs(blocks.reconstruct() - u).max() / np.abs(u).max())
        uh = fft_forward(g, u)
        for k in range(k_max(g) + 1):
            lo, hi = block_support(k)
            outside = (g.kabs < lo) | (g.kabs > hi)
            sym = block_symbol(g, k)
            support_ok &= bool(np.all(sym[outside] == 0.0))
            support_ok &= bool(np.all((sym * uh)[outside] == 0.0))
        for k, b in blocks:
            lo, hi = block_support(k)
            outside = (g.kabs < lo) | (g.kabs > hi)
            leak = max(leak, np.abs(fft_forward(g, b)[outside]).max(initial=0.0))
    report(2, "Littlewood-Paley partition", worst <= 1e-13 and support_ok,
           f"reconstruction {worst:.2e} (<= 1e-13), block symbols zero outside annuli: "
           f"{support_ok}, transform round-off outside {leak:.1e}")


def test_03_factorization_identities(report):
    rng = np.random.default_rng(103)
    worst_prod = worst_sum = 0.0
    for i in range(20):
        g = GridSpec(d=1, N=64, Nz=33) if i < 16 else GridSpec(d=2, N=16, Nz=17)
        eta = _steep(g, g.random_field(rng, 4), rng.uniform(0.05, 0.5))
        eta *= min(1.0, 0.3 / np.abs(eta).max())
        c = build_map(g, eta, 0.1).coefficients()
        fs = factorization_symbols(c)
        ex = (Ellipsis,) + (None,) * g.d
        xi = [k[(None,) * (1 + g.d)] for k in g.k]
        bxi = sum(c.beta[j][ex] * xi[j] for j in range(g.d))
        k2 = g.kabs[(None,) * (1 + g.d)] ** 2
        worst_prod = max(worst_prod, np.abs(fs.a.values * fs.A.values + c.alpha[ex] * k2).max())
        worst_sum = max(worst_sum, np.abs(fs.a.values + fs.A.values + 1j * bxi).max())
    ok = worst_prod <= 1e-12 and worst_sum <= 1e-12
    report(3, "factorization identities", ok,
           f"sup |aA + alpha|xi|^2| = {worst_prod:.2e}, sup |a + A + i beta.xi| = "
           f"{worst_sum:.2e} (<= 1e-12) over 20 fields")


def test_04_dn_flat_symbols(report):
    g = GridSpec(d=1, N=128, Nz=129)
    x = g.x[0]
    t0 = time.perf_counter()
    worst = {}
    for bottom, sym in (("dirichlet0", lambda k: k / np.tanh(k)),
                        ("neumann0", lambda k: k * np.tanh(k))):
        m = build_map(g, np.zeros(g.shape), 0.1)
        err = 0.0
        for k in range(1, g.N // 4 + 1):
            f = np.cos(k * x)
            Gf = dn_apply(g, np.zeros(g.shape), f, bottom, m=m, paralinearize=False).Gf
            err = max(err, _norm(g, Gf - sym(k) * f) / _norm(g, sym(k) * f))
        worst[bottom] = err
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-6 and elapsed < 30
    report(4, "DN flat symbols", ok,
           f"k coth k: {worst['dirichlet0']:.2e}, k tanh k: {worst['neumann0']:.2e} (<= 1e-6), "
           f"{elapsed:.1f} s (< 30 s)")


def test_05_dn_selfadjoint_positive(report):
    g = GridSpec(d=1, N=64, Nz=65)
    eta = 0.1 * np.cos(g.x[0])
    m = build_map(g, eta, 0.1)
    rng = np.random.default_rng(105)
    sym_worst, pos_min = 0.0, np.inf
    for _ in range(50):
        f, h = g.random_field(rng, 10), g.random_field(rng, 10)
        a, b = dn_selfadjoint_check(g, eta, f, h, m=m)
        sym_worst = max(sym_worst, abs(a - b) / (_norm(g, f) * _norm(g, h)))
        pos_min = min(pos_min, dn_positivity_check(g, eta, f, m=m))
    ok = sym_worst <= 1e-8 and pos_min >= -1e-10
    report(5, "DN self-adjoint and positive", ok,
           f"max |<Gf,g> - <f,Gg>| / |f||g| = {sym_worst:.2e} (<= 1e-8), "
           f"min <Gf,f> = {pos_min:.3e} (>= -1e-10)")


def test_06_paralinearization_gain(report):
    g = GridSpec(d=1, N=128, Nz=65)
    rep = remainder_order_check(g, 0.1 * np.cos(g.x[0]))
    report(6, "paralinearization gain", rep.passed,
           f"DN slope {rep.G_slope:.3f}, remainder slope {rep.R_slope:.3f} "
           f"(<= {rep.G_slope - 0.75:.3f}) over k = {rep.ks[0]}..{rep.ks[-1]}")


def _manufactured(g, m, kind, p):
    """Exact ``v`` with parameters ``p`` and the problem it solves on map ``m``."""
    k1, k2, ph, lam = p
    x = np.broadcast_to(g.x[0], g.strip_shape)
    z = np.broadcast_to(g.zcol(g.z), g.strip_shape)
    e = np.exp(lam * z)
    v = e * np.sin(k1 * x + ph) + np.cos(k2 * x) * np.cosh(z + 1)
    vz = lam * e * np.sin(k1 * x + ph) + np.cos(k2 * x) * np.sinh(z + 1)
    vzz = lam ** 2 * e * np.sin(k1 * x + ph) + np.cos(k2 * x) * np.cosh(z + 1)
    lap = -k1 ** 2 * e * np.sin(k1 * x + ph) - k2 ** 2 * np.cos(k2 * x) * np.cosh(z + 1)
    gxz = k1 * lam * e * np.cos(k1 * x + ph) - k2 * np.sin(k2 * x) * np.sinh(z + 1)
    c = m.coefficients()
    F0 = vzz + c.alpha * lap + c.beta[0] * gxz - c.gamma * vz
    if kind == "neumann":
        # subtract q = lam e^{-lam} sin(k1 x + ph) z so that d_z v(-1) = 0
        s, co = np.sin(k1 * x + ph), np.cos(k1 * x + ph)
        q = lam * np.exp(-lam)
        v = v - q * s * z
        F0 = F0 - q * (-k1 ** 2 * c.alpha * s * z + k1 * c.beta[0] * co - c.gamma * s)
        return v, EllipticProblem(c, F0, v[-1], "neumann", tolerance=1e-12)
    return v, EllipticProblem(c, F0, v[-1], "dirichlet", v[0], tolerance=1e-12)


def test_07_elliptic_backends(report):
    g = GridSpec(d=1, N=64, Nz=33)
    rng = np.random.default_rng(107)
    rms = lambda f: np.sqrt(np.mean(f ** 2))  # noqa: E731
    agree = err_d = err_f = 0.0
    agree_ok = True
    for i in range(20):
        eta = _steep(g, g.random_field(rng, 4), rng.uniform(0.05, 0.3))
        eta *= min(1.0, 0.15 / np.abs(eta).max())
        m = build_map(g, eta, 0.1)
        p = (int(rng.integers(1, 5)), int(rng.integers(1, 5)), rng.uniform(0, 2 * np.pi),
             rng.uniform(0.5, 2.0))
        v, prob = _manufactured(g, m, "dirichlet" if i % 2 == 0 else "neumann", p)
        d, f = solve(prob, "direct"), solve(prob, "factored")
        diff = rms(d.v - f.v)
        agree = max(agree, diff)
        agree_ok &= diff <= 10 * 2 * prob.tolerance
        err_d = max(err_d, rms(d.v - v))
        err_f = max(err_f, rms(f.v - v))
    ok = agree_ok and err_d <= 1e-8 and err_f <= 2 * 1e-8
    report(7, "elliptic backend agreement", ok,
           f"max |factored - direct| = {agree:.2e} (<= 10 x 2e-12), manufactured error "
           f"direct {err_d:.2e} (<= 1e-8), factored {err_f:.2e} (<= 2e-8)")


def test_08_fixed_points(report):
    worst_rhs, worst_a = 0.0, 0.0
    for d, N in ((1, 64), (2, 16)):
        g = GridSpec(d=d, N=N, Nz=17)
        ev = assemble_rhs(WaveState.rest(g))
        worst_rhs = max(worst_rhs, ev.deriv.max_abs())
        worst_a = max(worst_a, np.abs(ev.pressure.taylor_a - 1.0).max())
        s = WaveState.rest(g)
        s.V[:] = 0.7
        s.Vb[:] = 0.7
        worst_rhs = max(worst_rhs, assemble_rhs(s).deriv.max_abs())
    ok = worst_rhs <= 1e-10 and worst_a <= 1e-10
    report(8, "rest and stream fixed points", ok,
           f"max |rhs| = {worst_rhs:.2e} (<= 1e-10), max |a - 1| at rest = {worst_a:.2e}")


@pytest.fixture(scope="module")
def dispersion_runs():
    """One period of a standing wave of amplitude 1e-4 for k = 1, 2, 4 at N = 128."""
    g = GridSpec(d=1, N=128, Nz=33)
    x = g.x[0]
    out = {}
    t0 = time.perf_counter()
    for k in (1, 2, 4):
        s = WaveState.rest(g)
        s.eta = 1e-4 * np.cos(k * x)
        period = 2 * np.pi / np.sqrt(k * np.tanh(k))
        ts, cs, E = [], [], []

        def on_step(st, ev, prev, dt, k=k):
            ts.append(st.t)
            cs.append(2.0 * np.mean(st.eta * np.cos(k * x)))
            E.append(basic_energy(st, ev))

        res = run(s, SimParams(cfl=0.3), period, on_step=on_step)
        out[k] = (period, res, np.array(ts), np.array(cs), np.array(E))
    return out, time.perf_counter() - t0


def test_09_linear_dispersion(dispersion_runs, report):
    runs, elapsed = dispersion_runs
    errs = {}
    ok = elapsed < 120
    for k, (period, res, ts, cs, _) in runs.items():
        model = lambda t, A, w, ph: A * np.cos(w * t + ph)  # noqa: E731
        (A, w, ph), _ = curve_fit(model, ts, cs, p0=[1e-4, 2 * np.pi / period, 0.0])
        errs[k] = abs(2 * np.pi / abs(w) - period) / period
        ok &= res.status == "ok" and errs[k] <= 0.01
    report(9, "linear dispersion", ok,
           ", ".join(f"k={k}: {e:.1e}" for k, e in errs.items())
           + f" relative period error (<= 1e-2), {elapsed:.1f} s (< 120 s)")


def test_10_energy_law(dispersion_runs, report):
    runs, _ = dispersion_runs
    drift = {k: np.abs(E - E[0]).max() / E[0] / period for k, (period, _, _, _, E) in runs.items()}
    report(10, "energy law", max(drift.values()) <= 1e-6,
           ", ".join(f"k={k}: {v:.1e}" for k, v in drift.items())
           + " relative drift per unit time (<= 1e-6)")


def test_11_curvature_identity(report):
    g = GridSpec(d=1, N=128)
    rng = np.random.default_rng(111)
    worst = 0.0
    for _ in range(20):
        eta = _steep(g, g.random_field(rng, 5), rng.uniform(0.05, 0.5))
        worst = max(worst, curvature_identity_residual(g, eta))
    report(11, "curvature identity", worst <= 1e-8,
           f"max divergence-form residual {worst:.2e} (<= 1e-8) over 20 surfaces")


def test_12_good_unknown_order(report):
    g = GridSpec(d=1, N=64, Nz=33)
    p = SimParams(filter=False)
    x = g.x[0]
    s0 = WaveState.rest(g)
    s0.eta = 0.05 * np.cos(x) + 0.02 * np.sin(2 * x)
    s0.V = 0.03 * np.sin(x)[None]
    ev0 = assemble_rhs(s0, p)
    dts = (0.1, 0.05, 0.025)
    res = np.array([good_unknown_residual(rk4_step(s0, dt, p, first=ev0), s0, dt,
                                          ev_prev=ev0, params=p) for dt in dts])
    slopes = np.log2(res[:-1] / res[1:])
    report(12, "good-unknown residual order", bool(np.all(slopes >= 1.75)),
           f"residuals {', '.join(f'{r:.2e}' for r in res)}, slopes "
           f"{', '.join(f'{s:.2f}' for s in slopes)} (>= 1.75)")


def test_13_breakdown_monitor(tmp_path, report, capsys):
    rest = tmp_path / "rest.cfg"
    rest.write_text(f"grid.N = 32\ngrid.Nz = 17\nc0 = 1.5\nT_final = 0.5\n"
                    f"output_dir = {tmp_path / 'rest'}\n")
    code_rest = main(["run", str(rest)])
    text = (tmp_path / "rest" / "breakdown.txt").read_text()
    taylor_ok = (code_rest == 0 and "first_violation = taylor_sign" in text
                 and "taylor_violation_time = 0.0" in text)

    g = GridSpec(d=1, N=32, Nz=17)
    s = WaveState.rest(g)
    s.B = -0.3 * np.cos(g.x[0])
    write_snapshot(tmp_path / "init.wwsn", s)
    deep = tmp_path / "depth.cfg"
    deep.write_text("grid.N = 32\ngrid.Nz = 17\ninitial_condition = file\n"
                    "initial_condition.path = init.wwsn\nh0 = 0.85\nT_final = 3\n"
                    f"output_dir = {tmp_path / 'depth'}\n")
    code_depth = main(["run", str(deep)])
    capsys.readouterr()
    snap = tmp_path / "depth" / "snapshot_final.wwsn"
    recs, comments = read_diagnostics(tmp_path / "depth" / "diagnostics.csv")
    snap_ok = snap.exists() and read_snapshot(snap).t == recs[-1].t
    ok = taylor_ok and code_depth == 2 and snap_ok and bool(comments)
    report(13, "break-down monitor", ok,
           f"rest with c0 = 1.5 names taylor_sign at t = 0: {taylor_ok}; depth abort exit "
           f"code {code_depth} (== 2), final snapshot at t = {recs[-1].t:.3f}: {snap_ok}")
