import csv
import io
import json

import pytest
from click.testing import CliRunner

from bdspaces.cli import main, parse_steps


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.setenv("BDSPACES_CACHE", str(tmp_path / "cache"))
    out = tmp_path / "out"
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, ["--out", str(out), *args])

    invoke.out = out
    return invoke


def test_parse_steps():
    assert parse_steps(None) is None and parse_steps("all") is None
    assert parse_steps("2..4,7") == [2, 3, 4, 7]
    for bad in ("0", "1..9", "x", ""):
        with pytest.raises(Exception):
            parse_steps(bad)


def test_build_then_cache_hit(run):
    first = run("build", "--space", "r2", "--rank", "5")
    assert first.exit_code == 0, first.output
    info = json.loads(first.output)
    assert info["elements"] == 16 and not info["cached"]
    second = json.loads(run("build", "--space", "r2", "--rank", "5").output)
    assert second["cached"] and second["config_hash"] == info["config_hash"]


def test_verify_r2_steps_writes_report(run):
    res = run("verify", "--space", "r2", "--rank", "8", "--steps", "1..8")
    assert res.exit_code == 0, res.output
    assert res.output.strip().endswith("OK")
    rep = json.loads((run.out / "report-r2-steps.json").read_text())
    assert rep["suite"] == "steps" and rep["ok"]


def test_verify_ah_suites(run):
    res = run("verify", "--k", "3", "--rank", "5", "--suite", "sigma", "--suite", "nilpotency")
    assert res.exit_code == 0, res.output
    assert (run.out / "report-xk-sigma.json").exists()


def test_dump_dstar_csv_matches_known_rows(run):
    res = run("--format", "csv", "dump", "dstar", "--space", "r2", "--rank", "3")
    assert res.exit_code == 0, res.output
    rows = list(csv.reader(io.StringIO((run.out / "r2-dstar.csv").read_text())))
    assert rows[0] == ["id", "gamma", "value"]
    assert ["1", "0", "-1/2"] in rows and ["3", "1", "-1/2"] in rows


def test_dump_gamma_and_operators(run):
    assert run("dump", "gamma", "--space", "original", "--rank", "4").exit_code == 0
    data = json.loads((run.out / "original-gamma.json").read_text())
    assert len(data["rows"]) == 45
    assert run("dump", "operators", "--space", "xinf", "--rank", "4").exit_code == 0
    data = json.loads((run.out / "xinf-operators.json").read_text())
    assert data["columns"][:2] == ["id", "G"]
    assert run("dump", "projection", "--space", "r2", "--rank", "3", "--q", "2").exit_code == 0
    assert run("dump", "projection", "--space", "r2", "--rank", "3", "--q", "7").exit_code == 2


def test_bench_reports_timings(run):
    res = run("bench", "--space", "r2", "--rank", "4", "--suite", "core")
    assert res.exit_code == 0, res.output
    out = json.loads(res.output)
    assert out["elements"] == 8 and out["suites"]["core"]["ok"]


@pytest.mark.parametrize(
    "args",
    [
        ("build", "--space", "original", "--a", "1/0"),
        ("build", "--space", "original", "--b", "1/2"),
        ("verify", "--space", "r2", "--suite", "nope"),
        ("verify", "--space", "r2", "--steps", "9"),
        ("build", "--space", "hilbert"),
        ("dump", "matrix"),
    ],
)
def test_usage_errors_exit_2(run, args):
    assert run(*args).exit_code == 2


def test_budget_exceeded_exits_3(run):
    res = run("--budget", "20", "build", "--k", "3", "--rank", "5")
    assert res.exit_code == 3
