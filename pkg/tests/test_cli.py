"""Tests for the command-line interface."""

import csv
import json

import pytest
from typer.testing import CliRunner

from muqkd_cli import __version__
from muqkd_cli.cli import app
from muqkd_cli.metrics import SessionMetrics
from muqkd_cli.output import simulate_header, sweep_header

runner = CliRunner()


def _rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_simulate_is_byte_identical(config_file, tmp_path):
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    for out in (first, second):
        result = runner.invoke(app, ["simulate", "--config", str(config_file), "--seed", "7", "--out", str(out), "-q"])
        assert result.exit_code == 0, result.output
    assert first.read_bytes() == second.read_bytes()


def test_simulate_csv_schema(config_file, tmp_path):
    out = tmp_path / "run.csv"
    result = runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    header = out.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(simulate_header())
    rows = _rows(out)
    assert len(rows) == 1
    assert rows[0]["qber_z"] in ("0", "")
    assert rows[0]["multi_given_nonempty"] == ""


def test_simulate_json_mirrors_metrics(config_file, tmp_path):
    out = tmp_path / "run.json"
    result = runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(out), "-f", "json", "-q"])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text(encoding="utf-8"))
    assert list(data[0]) == ["trial", "seed"] + SessionMetrics.field_names()
    assert data[0]["multi_given_nonempty"] is None


def test_simulate_trials_are_ordered_and_parallel_safe(tmp_path, minimal_config_text):
    config = tmp_path / "trials.cfg"
    config.write_text(minimal_config_text + "trials = 3\n", encoding="utf-8")
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    assert runner.invoke(app, ["simulate", "-c", str(config), "-o", str(serial), "-q"]).exit_code == 0
    result = runner.invoke(app, ["simulate", "-c", str(config), "-o", str(parallel), "-w", "2", "-q"])
    assert result.exit_code == 0, result.output
    assert [row["trial"] for row in _rows(serial)] == ["0", "1", "2"]
    assert serial.read_bytes() == parallel.read_bytes()


def test_simulate_writes_stdout(config_file):
    result = runner.invoke(app, ["simulate", "-c", str(config_file), "-q"])
    assert result.exit_code == 0
    assert result.output.splitlines()[0] == ",".join(simulate_header())


def test_invalid_config_exits_one(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("d = 2\nn_rounds = 10\np_bm = 0.5\np_cm = 0.5\np_d = 0.6\n", encoding="utf-8")
    result = runner.invoke(app, ["simulate", "-c", str(bad)])
    assert result.exit_code == 1
    assert "p_d must be < 0.5" in result.output


def test_missing_config_exits_one(tmp_path):
    result = runner.invoke(app, ["simulate", "-c", str(tmp_path / "nope.cfg")])
    assert result.exit_code == 1


def test_poisson_table(tmp_path):
    out = tmp_path / "poisson.csv"
    result = runner.invoke(app, ["poisson-table", "--mu", "0.05,0.1", "-o", str(out)])
    assert result.exit_code == 0, result.output
    rows = _rows(out)
    assert float(rows[0]["multi_given_nonempty"]) == pytest.approx(0.024782, abs=1e-6)
    assert float(rows[0]["p_empty"]) == pytest.approx(0.951229, abs=1e-6)
    assert len(rows) == 2


def test_poisson_table_rejects_bad_mu():
    assert runner.invoke(app, ["poisson-table", "--mu", "abc"]).exit_code == 1
    assert runner.invoke(app, ["poisson-table", "--mu", "0"]).exit_code == 1


def test_sweep_p_d(config_file, tmp_path):
    """p_eu follows 2(1-p)p; the rejected value keeps its analytic column."""
    out = tmp_path / "sweep.csv"
    result = runner.invoke(
        app,
        ["sweep", "-c", str(config_file), "--key", "p_d", "--values", "0.1,0.2,0.3,0.4,0.5", "-o", str(out), "-q"],
    )
    assert result.exit_code == 0, result.output
    assert out.read_text(encoding="utf-8").splitlines()[0] == ",".join(sweep_header())
    rows = _rows(out)
    assert [row["value"] for row in rows] == ["0.1", "0.2", "0.3", "0.4", "0.5"]
    for row in rows:
        p = float(row["value"])
        assert float(row["p_eu_expected"]) == pytest.approx(2 * (1 - p) * p)
    assert rows[-1]["error"] and "p_d must be < 0.5" in rows[-1]["error"]
    assert all(not row["error"] for row in rows[:-1])


def test_sweep_unknown_key(config_file):
    result = runner.invoke(app, ["sweep", "-c", str(config_file), "--key", "colour", "--values", "1"])
    assert result.exit_code == 1


def test_verify_failure_exits_two(monkeypatch):
    from muqkd_cli import cli
    from muqkd_cli.evaluation import OracleCheck, OracleSuite

    def broken_suite(seed=None):
        suite = OracleSuite()
        suite.add_check(OracleCheck("always passes", lambda: (True, "ok")))
        suite.add_check(OracleCheck("always fails", lambda: (False, "nope")))
        return suite

    monkeypatch.setattr(cli, "build_suite", broken_suite)
    result = runner.invoke(app, ["verify", "--quiet"])
    assert result.exit_code == 2
    assert "always fails" in result.output


def test_verify_success_exits_zero(monkeypatch):
    from muqkd_cli import cli
    from muqkd_cli.evaluation import OracleCheck, OracleSuite

    def tiny_suite(seed=None):
        suite = OracleSuite()
        suite.add_check(OracleCheck("always passes", lambda: (True, "ok")))
        return suite

    monkeypatch.setattr(cli, "build_suite", tiny_suite)
    assert runner.invoke(app, ["verify", "-q"]).exit_code == 0


def test_oracle_exceptions_count_as_failures():
    from muqkd_cli.evaluation import OracleCheck, OracleSuite

    def boom():
        raise RuntimeError("exploded")

    suite = OracleSuite()
    suite.add_check(OracleCheck("raises", boom))
    results = suite.run(quiet=True)
    assert not results[0].passed
    assert results[0].error == "exploded"


def test_verify_writes_oracle_rows(monkeypatch, tmp_path):
    from muqkd_cli import cli
    from muqkd_cli.evaluation import OracleCheck, OracleSuite

    seen = []

    def seeded_suite(seed=None):
        seen.append(seed)
        suite = OracleSuite()
        suite.add_check(OracleCheck("passes", lambda: (True, "ok")))
        suite.add_check(OracleCheck("fails", lambda: (False, "off by 3 sigma")))
        return suite

    monkeypatch.setattr(cli, "build_suite", seeded_suite)
    out = tmp_path / "verify.json"
    result = runner.invoke(app, ["verify", "--seed", "5", "--format", "json", "--out", str(out), "-q"])
    assert result.exit_code == 2
    assert seen == [5]
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data == [
        {"oracle": "passes", "passed": True, "detail": "ok", "error": None},
        {"oracle": "fails", "passed": False, "detail": "off by 3 sigma", "error": None},
    ]

    csv_out = tmp_path / "verify.csv"
    runner.invoke(app, ["verify", "-o", str(csv_out), "-q"])
    assert seen[-1] is None
    assert csv_out.read_text(encoding="utf-8").splitlines()[0] == "oracle,passed,detail,error"
    assert [row["passed"] for row in _rows(csv_out)] == ["true", "false"]


def test_verify_rejects_negative_seed():
    assert runner.invoke(app, ["verify", "--seed", "-1"]).exit_code == 1


def test_build_suite_seeds_monte_carlo_oracles():
    from muqkd_cli.evaluation import ORACLE_SEEDS, build_suite

    default = build_suite()
    seeded = build_suite(seed=42)
    assert [c.name for c in default.checks] == [c.name for c in seeded.checks]
    for check in seeded.checks:
        if check.name in ORACLE_SEEDS:
            assert check.check.args == (42,)
    for check in default.checks:
        if check.name in ORACLE_SEEDS:
            assert check.check.args == (ORACLE_SEEDS[check.name][1],)
