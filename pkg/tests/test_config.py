import warnings

import pytest

from paraww.config import (ConfigError, CurvatureExponentWarning, RunConfig, config_keys,
                           parse_config, parse_config_text)


def test_minimal_file_fills_defaults(tmp_path):
    p = tmp_path / "min.cfg"
    p.write_text("T_final = 2\n")
    cfg = parse_config(p)
    assert cfg.T_final == 2.0 and cfg.cfl_safety == 0.5 and cfg.filter is True
    assert cfg.initial_condition.kind == "rest" and cfg.grid.N == 64


def test_full_file():
    cfg = parse_config_text("""
        # a comment
        grid.d = 1
        grid.N = 128
        grid.Nz = 65
        initial_condition = standing_wave
        initial_condition.amplitude = 1e-4   # trailing comment
        initial_condition.mode = 2
        T_final = 3.5
        filter = off
        dn_bottom = neumann0
        elliptic_backend = both
    """)
    assert cfg.grid.N == 128 and cfg.grid.Nz == 65
    assert cfg.initial_condition.mode == 2 and cfg.initial_condition.amplitude == 1e-4
    assert cfg.filter is False and cfg.dn_bottom == "neumann0"


def test_negative_T_final_names_field():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("T_final = -1")
    assert exc.value.key == "T_final" and "T_final" in str(exc.value)


@pytest.mark.parametrize("text,key", [
    ("grid.M = 3", "grid.M"),
    ("colour = blue", "colour"),
    ("grid.N = lots", "grid.N"),
    ("filter = maybe", "filter"),
    ("c0 = 0", "c0"),
    ("h0 = 1.5", "h0"),
    ("dn_bottom = robin", "dn_bottom"),
    ("elliptic_backend = lu", "elliptic_backend"),
    ("initial_condition = vortex", "initial_condition"),
    ("initial_condition = file", "initial_condition.path"),
    ("snapshot_every = -2", "snapshot_every"),
])
def test_rejections_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.key == key


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("T_final = 1\nthis line has no equals sign\n")
    assert exc.value.line == 2
    with pytest.raises(ConfigError) as exc:
        parse_config_text("T_final = 1\nT_final = 2\n")
    assert exc.value.line == 2 and "duplicate" in str(exc.value)


def test_grid_validation_is_reported():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("grid.N = 100")
    assert exc.value.key == "grid"


def test_small_curvature_exponent_warns_but_proceeds():
    with pytest.warns(CurvatureExponentWarning):
        cfg = parse_config_text("curvature_p = 1.5")
    assert cfg.curvature_p == 1.5
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_config_text("curvature_p = 2.5")


def test_relative_snapshot_path(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("initial_condition = file\ninitial_condition.path = s.wwsn\n")
    assert parse_config(p).initial_condition.path == str(tmp_path / "s.wwsn")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.cfg")


def test_keys_listed():
    keys = config_keys()
    assert "grid.N" in keys and "T_final" in keys and len(keys) == len(set(keys))
    assert RunConfig().validate() is not None
