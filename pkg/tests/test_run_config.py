import os

import pytest
from pydantic import ValidationError

from Cli.run_config import RunConfig


def test_defaults_without_env_file(tmp_path):
    cfg = RunConfig.from_env(str(tmp_path / "missing.env"))
    assert cfg.scheme == "central4"
    assert cfg.smooth_window is None
    assert cfg.tol == 1e-6 and cfg.tol_a == 1e-9
    assert cfg.format == "json"


def test_env_file_values_are_read(tmp_path):
    env = tmp_path / "run.env"
    env.write_text("GALINV_SCHEME=central2\nGALINV_TOL=1e-4\nGALINV_FORMAT=csv\nGALINV_SHIFT_GRID=51\n")
    cfg = RunConfig.from_env(str(env))
    assert cfg.scheme == "central2"
    assert cfg.tol == 1e-4
    assert cfg.format == "csv"
    assert cfg.shift_grid == 51


def test_process_environment_wins_over_file(tmp_path):
    env = tmp_path / "run.env"
    env.write_text("GALINV_SEED=3\n")
    os.environ["GALINV_SEED"] = "11"
    assert RunConfig.from_env(str(env)).seed == 11


def test_overrides_win_and_none_is_ignored(tmp_path):
    env = tmp_path / "run.env"
    env.write_text("GALINV_TOL_B=1e-7\n")
    cfg = RunConfig.from_env(str(env), tol_b=1e-5, scheme=None)
    assert cfg.tol_b == 1e-5
    assert cfg.scheme == "central4"


@pytest.mark.parametrize("kwargs", [
    {"smooth_window": 10},
    {"smooth_window": 5, "smooth_degree": 6},
    {"smooth_degree": 3},
    {"tol": 0.0},
    {"scheme": "central6"},
    {"format": "xml"},
    {"shift_grid": 2},
    {"window_margin": -1.0},
])
def test_invalid_settings_are_rejected(kwargs):
    with pytest.raises(ValidationError):
        RunConfig(**kwargs)


def test_valid_smoothing():
    cfg = RunConfig(smooth_window=11, smooth_degree=5)
    assert cfg.smooth_window == 11
