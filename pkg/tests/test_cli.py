import numpy as np
import pytest

from paraww import GridSpec
from paraww.cli import initial_state, main, run_simulation
from paraww.config import parse_config_text
from paraww.dynamics import WaveState, assemble_rhs
from paraww.persistence import read_diagnostics, read_snapshot, write_snapshot


def test_rest_run_constant_rows(tmp_path):
    cfg = parse_config_text(f"grid.N = 16\ngrid.Nz = 9\nT_final = 1\noutput_dir = {tmp_path}")
    out = run_simulation(cfg)
    assert out.exit_code == 0
    recs, comments = read_diagnostics(tmp_path / "diagnostics.csv")
    assert len(recs) == out.steps + 1 and not comments
    assert all(r.E_basic == 0 and r.a_min == 1.0 for r in recs)
    assert (tmp_path / "snapshot_final.wwsn").exists()


def test_env_var_overrides_output_dir(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv("WW_OUTPUT_DIR", str(target))
    cfg = parse_config_text(f"grid.N = 16\ngrid.Nz = 9\nT_final = 0.2\n"
                            f"output_dir = {tmp_path / 'cfg'}")
    run_simulation(cfg)
    assert (target / "diagnostics.csv").exists() and not (tmp_path / "cfg").exists()


def test_deterministic_csv(tmp_path):
    text = ("grid.N = 16\ngrid.Nz = 9\nT_final = 0.5\ninitial_condition = standing_wave\n"
            "initial_condition.amplitude = 0.01\noutput_dir = {}\n")
    run_simulation(parse_config_text(text.format(tmp_path / "a")))
    run_simulation(parse_config_text(text.format(tmp_path / "b")))
    assert ((tmp_path / "a" / "diagnostics.csv").read_bytes()
            == (tmp_path / "b" / "diagnostics.csv").read_bytes())


@pytest.mark.parametrize("kind,extra", [("shear", "initial_condition.omega0 = 0.5"),
                                        ("stream", "initial_condition.c = 0.3")])
def test_steady_initial_conditions(kind, extra):
    cfg = parse_config_text(f"grid.N = 16\ngrid.Nz = 9\ninitial_condition = {kind}\n{extra}")
    assert assemble_rhs(initial_state(cfg)).deriv.max_abs() < 1e-10


def test_file_initial_condition_checks_grid(tmp_path):
    g = GridSpec(d=1, N=16, Nz=9)
    write_snapshot(tmp_path / "s.wwsn", WaveState.rest(g))
    cfg = parse_config_text("grid.N = 32\ninitial_condition = file\n"
                            f"initial_condition.path = {tmp_path / 's.wwsn'}")
    with pytest.raises(ValueError):
        initial_state(cfg)


def test_main_run_and_plot_data(tmp_path, capsys):
    cfg = tmp_path / "r.cfg"
    cfg.write_text(f"grid.N = 16\ngrid.Nz = 9\nT_final = 0.3\nc0 = 1.5\n"
                   f"output_dir = {tmp_path / 'o'}\n")
    assert main(["run", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "first_violation = taylor_sign" in out and "taylor_violation_time = 0.0" in out
    assert main(["plot-data", str(tmp_path / "o" / "diagnostics.csv"), "a_min"]) == 0
    rows = (tmp_path / "o" / "a_min.dat").read_text().splitlines()[1:]
    assert all(float(r.split()[1]) == 1.0 for r in rows)
    assert main(["plot-data", str(tmp_path / "o" / "diagnostics.csv"), "bogus"]) == 1
    assert "valid names" in capsys.readouterr().err


def test_main_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("T_final = -1\n")
    assert main(["run", str(cfg)]) == 1
    assert "T_final" in capsys.readouterr().err


def test_main_warns_on_small_p(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text(f"grid.N = 16\ngrid.Nz = 9\nT_final = 0.1\ncurvature_p = 1.5\n"
                   f"output_dir = {tmp_path / 'o'}\n")
    assert main(["run", str(cfg)]) == 0
    assert "curvature_p" in capsys.readouterr().err


def test_depth_abort_exit_code_and_snapshot(tmp_path):
    g = GridSpec(d=1, N=32, Nz=17)
    s = WaveState.rest(g)
    s.B = -0.3 * np.cos(g.x[0])
    write_snapshot(tmp_path / "init.wwsn", s)
    cfg = tmp_path / "d.cfg"
    cfg.write_text("grid.N = 32\ngrid.Nz = 17\ninitial_condition = file\n"
                   "initial_condition.path = init.wwsn\nh0 = 0.85\nT_final = 3\n"
                   f"output_dir = {tmp_path / 'o'}\n")
    assert main(["run", str(cfg)]) == 2
    recs, comments = read_diagnostics(tmp_path / "o" / "diagnostics.csv")
    assert comments and comments[-1].startswith("abort: depth")
    final = read_snapshot(tmp_path / "o" / "snapshot_final.wwsn")
    assert final.t == recs[-1].t and (1 + final.eta).min() >= 0.85
    assert "first_violation = depth" in (tmp_path / "o" / "breakdown.txt").read_text()


def test_check_subcommand(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out


def test_two_dimensional_run(tmp_path):
    cfg = parse_config_text(f"grid.d = 2\ngrid.N = 16\ngrid.Nz = 17\nT_final = 0.2\n"
                            f"initial_condition = standing_wave\ninitial_condition.amplitude = 1e-3\n"
                            f"output_dir = {tmp_path}")
    out = run_simulation(cfg)
    assert out.exit_code == 0
    recs, _ = read_diagnostics(tmp_path / "diagnostics.csv")
    assert np.isfinite(recs[-1].zeta_residual)
