import json

import numpy as np
import pytest
from click.testing import CliRunner

from Cli.cli import EQUIV_FIELDS, cli
from Cli.trajectory_io import INVARIANT_FIELDS, JET_HEADER, SCHEMA_VERSION, write_trajectory


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def invoke(runner, *args):
    return runner.invoke(cli, list(args), obj={})


def gen_file(runner, path, *args):
    result = invoke(runner, "gen", *args)
    assert result.exit_code == 0, result.stderr
    path.write_text(result.stdout)
    return str(path)


def test_gen_is_deterministic(runner):
    first = invoke(runner, "gen", "poly", "--seed", "4", "--samples", "50")
    second = invoke(runner, "gen", "poly", "--seed", "4", "--samples", "50")
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    lines = first.stdout.splitlines()
    assert lines[0] == "t,x,y,z" and len(lines) == 51
    assert first.stdout != invoke(runner, "gen", "poly", "--seed", "5", "--samples", "50").stdout


def test_circle_invariants(runner, tmp_path):
    path = gen_file(runner, tmp_path / "circle.csv", "circle")
    result = invoke(runner, "invariants", path)
    assert result.exit_code == 0, result.stderr
    records = [json.loads(line) for line in result.stdout.splitlines()]
    assert len(records) == 3001
    assert list(records[0]) == ["schema_version", *INVARIANT_FIELDS]
    assert records[0]["schema_version"] == SCHEMA_VERSION
    interior = [r for r in records if not r["boundary"]]
    assert interior and len(interior) < len(records)
    for r in interior:
        assert abs(r["a1"] - 1.0) < 1e-5
        assert abs(r["a2"] - 1.0) < 1e-5
        assert abs(r["a3"]) < 1e-5
        assert r["regular"] is True


def test_invariants_csv_output(runner, tmp_path):
    path = gen_file(runner, tmp_path / "helix.csv", "helix-like", "--samples", "101")
    result = invoke(runner, "invariants", path, "--format", "csv", "--scheme", "central2")
    assert result.exit_code == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0] == "schema_version," + ",".join(INVARIANT_FIELDS)
    assert len(lines) == 102
    assert lines[1].split(",")[0] == str(SCHEMA_VERSION)
    assert lines[1].split(",")[7] == "true"


def test_too_few_samples_exit_2(runner, tmp_path):
    path = tmp_path / "short.csv"
    write_trajectory(str(path), np.arange(5.0), np.zeros((5, 3)))
    result = invoke(runner, "invariants", str(path))
    assert result.exit_code == 2
    assert result.stderr.startswith("error: GridTooSmall")


def test_parse_error_exit_2(runner, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,x,y,z\n0,0,0,0\n0.1,0,zero,0\n")
    result = invoke(runner, "invariants", str(path))
    assert result.exit_code == 2
    assert "line 3" in result.stderr


def test_invalid_config_exit_2(runner, tmp_path):
    path = gen_file(runner, tmp_path / "circle.csv", "circle", "--samples", "101")
    result = invoke(runner, "invariants", path, "--smooth-window", "8")
    assert result.exit_code == 2
    assert result.stderr.startswith("error: invalid configuration")


def test_boosted_copy_is_recognised(runner, tmp_path):
    a = gen_file(runner, tmp_path / "a.csv", "helix-like", "--t1", "2", "--samples", "1001")
    transform = tmp_path / "g.json"
    b = gen_file(runner, tmp_path / "b.csv", "boosted-copy", "--input", a,
                 "--transform-out", str(transform), "--seed", "3")
    g = json.loads(transform.read_text())
    result = invoke(runner, "equiv", a, b)
    assert result.exit_code == 0, result.stderr
    report = json.loads(result.stdout)
    assert report["equivalent"] is True
    assert report["schema_version"] == SCHEMA_VERSION
    assert report["time_shift"] == pytest.approx(g["s"], abs=1e-3)
    assert np.allclose(report["transform"]["R"], g["R"], atol=1e-3)
    assert np.allclose(report["transform"]["v"], g["v"], atol=1e-3)
    assert np.allclose(report["transform"]["y"], g["y"], atol=1e-3)


def test_equiv_csv_output(runner, tmp_path):
    a = gen_file(runner, tmp_path / "a.csv", "helix-like", "--t1", "2", "--samples", "1001")
    b = gen_file(runner, tmp_path / "b.csv", "boosted-copy", "--input", a)
    result = invoke(runner, "equiv", a, b, "--format", "csv")
    assert result.exit_code == 0, result.stderr
    header, row = result.stdout.splitlines()
    assert header == "schema_version," + ",".join(EQUIV_FIELDS)
    assert row.startswith(f"{SCHEMA_VERSION},true,")


def test_unrelated_trajectories_exit_1(runner, tmp_path):
    a = gen_file(runner, tmp_path / "a.csv", "helix-like", "--t1", "2", "--samples", "1001")
    b = gen_file(runner, tmp_path / "b.csv", "helix-like", "--t1", "2", "--samples", "1001", "--radius", "2")
    result = invoke(runner, "equiv", a, b)
    assert result.exit_code == 1
    report = json.loads(result.stdout)
    assert report["equivalent"] is False and report["transform"] is None


def test_empty_window_exit_2(runner, tmp_path):
    a = gen_file(runner, tmp_path / "a.csv", "helix-like", "--t1", "2", "--samples", "201")
    result = invoke(runner, "equiv", a, a, "--window-margin", "1.5")
    assert result.exit_code == 2
    assert result.stderr.startswith("error: NoRegularWindow")


def test_boosted_copy_needs_input(runner):
    assert invoke(runner, "gen", "boosted-copy").exit_code == 2


def test_check_suites(runner):
    result = invoke(runner, "check", "algebra")
    assert result.exit_code == 0
    assert result.stdout.startswith("algebra: PASS")
    faulty = invoke(runner, "check", "algebra", "--inject-fault")
    assert faulty.exit_code == 1
    assert faulty.stdout.startswith("algebra: FAIL")


def test_jets_csv_and_json(runner, tmp_path):
    path = gen_file(runner, tmp_path / "circle.csv", "circle", "--samples", "21")
    as_csv = invoke(runner, "jets", path, "--format", "csv")
    assert as_csv.exit_code == 0, as_csv.stderr
    lines = as_csv.stdout.splitlines()
    assert lines[0] == ",".join(JET_HEADER) and len(lines) == 22
    as_json = invoke(runner, "jets", path)
    assert as_json.exit_code == 0, as_json.stderr
    records = json.loads(as_json.stdout)
    assert len(records) == 21
    assert records[10]["schema_version"] == SCHEMA_VERSION and records[10]["boundary"] is False
    assert float(lines[11].split(",")[7]) == records[10]["x2"][0]


def test_strict_shift_fails_on_a_circle(runner, tmp_path):
    path = gen_file(runner, tmp_path / "circle.csv", "circle", "--samples", "301")
    assert invoke(runner, "equiv", path, path).exit_code == 0
    result = invoke(runner, "equiv", path, path, "--strict-shift")
    assert result.exit_code == 2
    assert result.stderr.startswith("error: AmbiguousShift")
