"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import filecmp
import sys
import time
from pathlib import Path

import pytest

from translator_lab.cli import run_suite
from translator_lab.experiments import SUITE, run_experiment

# criterion -> (summary, wall-clock limit in seconds)
CRITERIA = {
    1: ("special functions match quadrature, K1 bound holds", 5),
    2: ("model residuals: exact planes, reaper order, L-harmonic probes", 30),
    3: ("doubling obstruction closed form and sign", 1),
    4: ("Duffin kernel mass and step centreline", 20),
    5: ("Duffin versus heat relaxation bound", 60),
    6: ("derivative decay exponents and u_K control", 120),
    7: ("exponential approach in the wedge", 60),
    8: ("downward limit equals the side average", 120),
    9: ("oscillation persists and local oscillation decays", 60),
    10: ("oscillating data: heat gap, Duffin relaxation, control", 120),
    11: ("limit configuration bookkeeping", 1),
}
SUITE_DETERMINISM_LIMIT = 600


def _jobs(criterion):
    return [(job, name, args) for job, name, args, crit in SUITE if crit == criterion]


def _line(criterion, ok, summary, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {criterion:>2}: {summary} ({detail})"


def check_criterion(criterion):
    summary, limit = CRITERIA[criterion]
    t0 = time.perf_counter()
    reports = {job: run_experiment(name, args) for job, name, args in _jobs(criterion)}
    elapsed = time.perf_counter() - t0
    failed = [f"{job}.{v}" for job, r in reports.items() for v, ok in r.verdicts.items() if not ok]
    ok = not failed and elapsed <= limit
    detail = f"{elapsed:.2f}s of {limit}s"
    if failed:
        detail += "; failed " + ", ".join(failed)
    return ok, _line(criterion, ok, summary, detail)


def check_suite_determinism(root: Path):
    t0 = time.perf_counter()
    a, b = root / "workers1", root / "workers2"
    run_suite(a, workers=1)
    run_suite(b, workers=2)
    elapsed = time.perf_counter() - t0
    same = (a / "suite.json").read_bytes() == (b / "suite.json").read_bytes()
    names = sorted(p.name for p in (a / "suite").iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a / "suite", b / "suite", names, shallow=False)
    ok = same and not mismatch and not errors and elapsed <= SUITE_DETERMINISM_LIMIT
    detail = f"{len(match)} job reports identical, aggregate {'identical' if same else 'differs'}, {elapsed:.1f}s"
    return ok, _line(12, ok, "suite reports byte-identical across runs and worker counts", detail)


def _report(capsys, line):
    with capsys.disabled():
        print("\n" + line)


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(criterion, capsys):
    ok, line = check_criterion(criterion)
    _report(capsys, line)
    assert ok, line


def test_criterion_12_suite_determinism(tmp_path, capsys):
    ok, line = check_suite_determinism(tmp_path)
    _report(capsys, line)
    assert ok, line


if __name__ == "__main__":
    import tempfile

    results = [check_criterion(c) for c in sorted(CRITERIA)]
    with tempfile.TemporaryDirectory() as tmp:
        results.append(check_suite_determinism(Path(tmp)))
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
