import json
import subprocess
import sys

import pytest

from translator_lab import cli
from translator_lab.fdsolver import GridFunction

AFFINE = {
    "rect": [-2, 2, -3, 1],
    "h": 0.25,
    "trace": {"segments": [{"type": "Affine", "a": 0.5, "b": 1.0}], "extent": [-2, 2]},
}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    return tmp_path


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.mark.parametrize(
    "fn, x, expected",
    [("k0", 1.0, 0.42102443824070834), ("i0", 1.0, 1.2660658777520082), ("k1", 2.0, 0.13986588181652243)],
)
def test_kernel_eval_specfun(capsys, fn, x, expected):
    assert cli.run(["kernel", "eval", "--fn", fn, "--x", str(x)]) == 0
    out = capsys.readouterr().out.strip()
    assert float(out) == pytest.approx(expected, rel=1e-14)
    assert len(out.replace(".", "").lstrip("0")) >= 16


def test_kernel_eval_field(capsys):
    assert cli.run(["kernel", "eval", "--fn", "green", "--x2", "1", "--x3", "0"]) == 0
    assert float(capsys.readouterr().out) > 0


@pytest.mark.parametrize(
    "argv",
    [
        ["kernel", "eval", "--fn", "nope", "--x", "1"],
        ["kernel", "eval", "--fn", "k0"],
        ["bogus"],
        ["experiment", "not-an-experiment"],
        ["experiment", "duffin-mass", "--no-such-arg", "1"],
        ["verify", "missing.json"],
    ],
)
def test_configuration_errors_exit_one(workdir, capsys, argv):
    assert cli.run(argv) == 1
    err = _err(capsys)
    assert set(err) == {"error", "message"}


def test_solve_affine_trace(workdir, capsys):
    (workdir / "cfg.json").write_text(json.dumps(AFFINE))
    assert cli.run(["solve", "--config", "cfg.json", "--out", "o"]) == 0
    report = json.loads((workdir / "o" / "solve.json").read_text())
    assert report["metrics"]["residual"] < 1e-12
    u = GridFunction.from_csv((workdir / "o" / "solution.csv").read_text())
    assert u.at(1.0, 0.0) == pytest.approx(1.5, abs=1e-12)


def test_solve_flags_override_config(workdir, capsys):
    (workdir / "cfg.json").write_text(json.dumps(AFFINE))
    assert cli.run(["solve", "--config", "cfg.json", "--h", "0.5", "--out", "o", "--seed", "4"]) == 0
    params = json.loads((workdir / "o" / "solve.json").read_text())["params"]
    assert params["solve_config"]["h"] == 0.5
    assert params["seed"] == 4


def test_config_rejects_unknown_keys(workdir, capsys):
    (workdir / "cfg.json").write_text(json.dumps(dict(AFFINE, colour="red")))
    assert cli.run(["solve", "--config", "cfg.json", "--out", "o"]) == 1
    assert "colour" in _err(capsys)["message"]


def test_out_dir_from_environment(workdir, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(workdir / "envout"))
    assert cli.run(["experiment", "specfun-fidelity"]) == 0
    assert (workdir / "envout" / "specfun-fidelity.json").exists()


def test_experiment_writes_only_into_out_dir(workdir, capsys):
    assert cli.run(["experiment", "doubling-obstruction", "--seed", "3", "--out", "o"]) == 0
    assert sorted(p.name for p in workdir.iterdir()) == ["o"]
    report = json.loads((workdir / "o" / "doubling-obstruction.json").read_text())
    assert report["params"]["seed"] == 3
    assert report["passed"]


def test_experiment_config_args_and_flag_override(workdir, capsys):
    (workdir / "cfg.json").write_text(json.dumps({"args": {"n": 5, "tol": 1e-10}, "seed": 2}))
    assert cli.run(["experiment", "doubling-obstruction", "--config", "cfg.json", "--n", "7", "--out", "o"]) == 0
    params = json.loads((workdir / "o" / "doubling-obstruction.json").read_text())["params"]
    assert params["n"] == 7 and params["seed"] == 2


def test_verdict_failure_exits_two(workdir, capsys):
    assert cli.run(["experiment", "doubling-obstruction", "--tol", "0", "--out", "o"]) == 2


def test_downward_limit_example(workdir, capsys):
    assert cli.run(["experiment", "downward-limit", "--c-minus", "0", "--c-plus", "1", "--out", "o"]) == 0
    report = json.loads((workdir / "o" / "downward-limit.json").read_text())
    assert report["metrics"]["limit"] == pytest.approx(0.5, abs=1e-2)


def test_verify_round_trip_and_tamper(workdir, capsys):
    assert cli.run(["experiment", "limit-bookkeeping", "--seed", "5", "--out", "o"]) == 0
    path = workdir / "o" / "limit-bookkeeping.json"
    assert cli.run(["verify", str(path)]) == 0
    report = json.loads(path.read_text())
    report["metrics"]["n_configurations"] = -1
    path.write_text(json.dumps(report))
    capsys.readouterr()
    assert cli.run(["verify", str(path)]) == 2
    assert json.loads(capsys.readouterr().out)["differing_sections"] == ["metrics"]


def test_verify_solve_report(workdir, capsys):
    (workdir / "cfg.json").write_text(json.dumps(AFFINE))
    cli.run(["solve", "--config", "cfg.json", "--out", "o"])
    assert cli.run(["verify", "o/solve.json"]) == 0


def test_probes(workdir, capsys):
    assert cli.run(["duffin", "--c-minus", "0", "--c-plus", "1", "--x2", "0", "--x3", "-10000"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.5, abs=5e-2)
    assert cli.run(["heat", "--c-minus", "0", "--c-plus", "2", "--x", "0", "--t", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0, abs=1e-12)


def test_counterexample_command(workdir, capsys):
    assert cli.run(["counterexample", "--eps", "0.05", "--n-rounds", "2", "--out", "o"]) == 0
    report = json.loads((workdir / "o" / "counterexample.json").read_text())
    assert report["params"]["experiment_args"]["n_rounds"] == 2


def test_module_entry_point(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "translator_lab", "kernel", "eval", "--fn", "ei", "--x", "-1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert float(proc.stdout) == pytest.approx(-0.21938393439552029, rel=1e-14)
