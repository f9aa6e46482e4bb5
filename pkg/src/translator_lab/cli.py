"""Command-line front end.

Every subcommand takes ``--config FILE`` (JSON), ``--out DIR`` and ``--seed N``.
Flags override config values and unknown config keys are rejected.  Reports are
JSON with floats written to 17 significant digits.

Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on a
configuration or numerical error (with an error object on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import fdsolver as fd
from . import kernels as kn
from . import models, specfun
from .domains import Rectangle, domain_from_dict
from .errors import ConfigurationError, TranslatorLabError
from .experiments import REGISTRY, SUITE, run_experiment
from .experiments.report import ExperimentReport, dumps17

OUT_ENV = "TRANSLATOR_LAB_OUT"
DEFAULT_OUT = "translator_lab_out"

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

# closed-form fields reachable from ``kernel eval``
FIELDS = {
    "u_K": lambda a: models.UKField(),
    "u_I": lambda a: models.UIField(),
    "green": lambda a: (lambda x2, x3: models.green_L_xy(x2, x3, 0.0, 0.0)),
    "superbarrier": lambda a: models.Superbarrier(a),
    "reaper": lambda a: models.TiltedReaper(a),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as a verdict failure
    def error(self, message):
        raise ConfigurationError(message)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _emit(obj) -> None:
    sys.stdout.write(dumps17(obj) + "\n")


# --- configuration ----------------------------------------------------------


def _load_config(path, allowed) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(allowed) - {"out", "seed"})
    if unknown:
        raise ConfigurationError(f"unknown config keys: {unknown}")
    return data


def _merge(config: dict, ns, keys) -> dict:
    """Config values overridden by any flag the user actually gave."""
    out = dict(config)
    for key in keys:
        v = getattr(ns, key, None)
        if v is not None:
            out[key] = v
    return out


def _out_dir(ns, config) -> Path:
    if ns.out is not None:
        path = Path(ns.out)
    elif "out" in config:
        path = Path(config["out"])
    else:
        path = Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed(ns, config) -> int:
    seed = ns.seed if ns.seed is not None else config.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigurationError("seed must be an integer")
    return seed


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _extra_kwargs(tokens) -> dict:
    """``--c-minus 0 --depths [25,50]`` -> ``{"c_minus": 0, "depths": [25, 50]}``."""
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigurationError(f"unexpected argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        if not eq:
            try:
                val = next(it)
            except StopIteration:
                raise ConfigurationError(f"flag {tok} needs a value") from None
        out[key.replace("-", "_")] = _parse_value(val)
    return out


def _write_report(report: ExperimentReport, out: Path, stem: str) -> Path:
    path = out / f"{stem}.json"
    path.write_text(report.to_json() + "\n")
    for key, text in report.samples_csv().items():
        (out / f"{stem}.{key}.csv").write_text(text)
    return path


def _finish(report: ExperimentReport, path: Path) -> int:
    _emit({"report": str(path), "name": report.name, "passed": report.passed, "verdicts": report.verdicts})
    return EXIT_OK if report.passed else EXIT_FAIL


# --- kernel eval ------------------------------------------------------------


def cmd_kernel_eval(ns) -> int:
    if ns.fn in specfun.FUNCTIONS:
        if ns.x is None:
            raise ConfigurationError(f"{ns.fn} needs --x")
        res = specfun.evaluate(ns.fn, ns.x)
        print(_fmt(res.value))
        return EXIT_OK
    if ns.fn in FIELDS:
        if ns.x2 is None or ns.x3 is None:
            raise ConfigurationError(f"{ns.fn} needs --x2 and --x3")
        fld = FIELDS[ns.fn](ns.alpha)
        print(_fmt(np.asarray(fld(ns.x2, ns.x3), float)))
        return EXIT_OK
    raise ConfigurationError(f"unknown function {ns.fn!r}; choose from {sorted(specfun.FUNCTIONS) + sorted(FIELDS)}")


# --- solve ------------------------------------------------------------------

SOLVE_KEYS = ("domain", "rect", "h", "trace", "linear", "newton", "tol")


def solve_report(config: dict) -> tuple[ExperimentReport, fd.GridFunction]:
    """Solve the Dirichlet problem described by ``config``; the report records the config."""
    unknown = sorted(set(config) - set(SOLVE_KEYS) - {"seed"})
    if unknown:
        raise ConfigurationError(f"unknown solve keys: {unknown}")
    for key in ("rect", "h", "trace"):
        if key not in config:
            raise ConfigurationError(f"solve needs {key!r}")
    rect = Rectangle(*map(float, config["rect"]))
    dom = domain_from_dict(config["domain"]) if config.get("domain") else None
    trace = kn.BoundaryTrace.from_dict(config["trace"])
    h = float(config["h"])
    linear = bool(config.get("linear", False))
    tol = float(config.get("tol", 1e-8))
    t0 = time.perf_counter()
    params = {
        "experiment": "solve",
        "solve_config": json.loads(json.dumps(config)),
        "seed": config.get("seed", 0),
        "tol": tol,
    }
    report = ExperimentReport("solve", params)
    if linear:
        u = fd.solve_L_dirichlet(dom, rect, trace, h=h)
        res = fd.drift_laplacian(u)
    else:
        try:
            cfg = fd.NewtonConfig(**config.get("newton", {}))
        except TypeError as exc:
            raise ConfigurationError(f"bad newton settings: {exc}") from None
        u = fd.solve_translator_dirichlet(dom, rect, trace, cfg, h=h)
        res = fd.residual(u)
        report.metrics["iterations"] = u.info.get("iterations", 0)
    r = res.values[u.grid.interior]
    worst = float(np.max(np.abs(r))) if r.size else 0.0
    report.metrics.update(
        residual=worst,
        nodes=int(u.grid.active.sum()),
        max_principle_violation=fd.max_principle_violation(u),
    )
    report.verdict("residual_small", worst <= tol, "tol")
    report.runtime_seconds = time.perf_counter() - t0
    return report, u


def cmd_solve(ns) -> int:
    config = _load_config(ns.config, SOLVE_KEYS)
    out = _out_dir(ns, config)
    config.pop("out", None)
    config = _merge(config, ns, ("h", "tol"))
    if ns.linear:
        config["linear"] = True
    if ns.trace is not None:
        config["trace"] = _parse_json_flag(ns.trace, "--trace")
    if ns.rect is not None:
        config["rect"] = ns.rect
    config["seed"] = _seed(ns, config)
    report, u = solve_report(config)
    (out / "solution.csv").write_text(u.to_csv())
    return _finish(report, _write_report(report, out, "solve"))


def _parse_json_flag(text, flag):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{flag} must be JSON: {exc}") from None


# --- kernel probes ----------------------------------------------------------

PROBE_KEYS = ("trace", "c_minus", "c_plus", "x2", "x3", "b", "x", "t")


def _probe_trace(cfg) -> kn.BoundaryTrace:
    if cfg.get("trace") is not None:
        tr = cfg["trace"]
        return kn.BoundaryTrace.from_dict(_parse_json_flag(tr, "--trace") if isinstance(tr, str) else tr)
    return kn.step_trace(float(cfg.get("c_minus", 0.0)), float(cfg.get("c_plus", 1.0)))


def cmd_duffin(ns) -> int:
    cfg = _merge(_load_config(ns.config, PROBE_KEYS), ns, PROBE_KEYS)
    trace = _probe_trace(cfg)
    x2, x3, b = float(cfg.get("x2", 0.0)), float(cfg.get("x3", -1.0)), float(cfg.get("b", 0.0))
    value = kn.poisson_duffin(trace, b, (x2, x3))
    _emit({"probe": "duffin", "x2": x2, "x3": x3, "b": b, "value": value, "trace": trace.to_dict()})
    return EXIT_OK


def cmd_heat(ns) -> int:
    cfg = _merge(_load_config(ns.config, PROBE_KEYS), ns, PROBE_KEYS)
    trace = _probe_trace(cfg)
    x, t = float(cfg.get("x", 0.0)), float(cfg.get("t", 1.0))
    value = kn.heat_convolve(trace, x, t)
    _emit({"probe": "heat", "x": x, "t": t, "value": value, "trace": trace.to_dict()})
    return EXIT_OK


# --- experiments ------------------------------------------------------------


def cmd_experiment(ns, extra) -> int:
    config = _load_config(ns.config, ("args",))
    args = dict(config.get("args", {}))
    args.update(_extra_kwargs(extra))
    out = _out_dir(ns, config)
    report = run_experiment(ns.name, args, _seed(ns, config))
    return _finish(report, _write_report(report, out, ns.name))


COUNTEREXAMPLE_FLAGS = ("alpha", "beta", "eps", "eps1", "a0", "t0", "n_rounds", "c0")


def cmd_counterexample(ns) -> int:
    config = _load_config(ns.config, COUNTEREXAMPLE_FLAGS)
    out = _out_dir(ns, config)
    args = _merge({k: v for k, v in config.items() if k in COUNTEREXAMPLE_FLAGS}, ns, COUNTEREXAMPLE_FLAGS)
    report = run_experiment("counterexample", args, _seed(ns, config))
    return _finish(report, _write_report(report, out, "counterexample"))


def _suite_job(job):
    job_id, name, args, criterion, seed = job
    t0 = time.perf_counter()
    report = run_experiment(name, args, seed)
    return job_id, report.to_json(include_runtime=False), report.passed, time.perf_counter() - t0


def run_suite(out: Path, workers: int = 1, seed: int = 0) -> bool:
    """Run every suite job; outputs other than timings.json do not depend on ``workers``."""
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    jobs = [(job_id, name, args, crit, seed) for job_id, name, args, crit in SUITE]
    if workers == 1:
        results = [_suite_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_suite_job, jobs))
    folder = out / "suite"
    folder.mkdir(parents=True, exist_ok=True)
    entries, timings = [], {}
    for (job_id, name, args, crit, _), (_, text, passed, seconds) in zip(jobs, results):
        (folder / f"{job_id}.json").write_text(text + "\n")
        entries.append({"job": job_id, "experiment": name, "criterion": crit, "passed": passed, "report": json.loads(text)})
        timings[job_id] = seconds
    ok = all(e["passed"] for e in entries)
    (out / "suite.json").write_text(dumps17({"seed": seed, "passed": ok, "jobs": entries}) + "\n")
    (out / "timings.json").write_text(dumps17(timings) + "\n")
    return ok


def cmd_suite(ns) -> int:
    config = _load_config(ns.config, ("workers",))
    out = _out_dir(ns, config)
    workers = ns.workers if ns.workers is not None else config.get("workers", 1)
    ok = run_suite(out, int(workers), _seed(ns, config))
    summary = json.loads((out / "suite.json").read_text())
    _emit({"suite": str(out / "suite.json"), "passed": ok, "jobs": {e["job"]: e["passed"] for e in summary["jobs"]}})
    return EXIT_OK if ok else EXIT_FAIL


# --- verify -----------------------------------------------------------------


def _rerun(recorded: dict) -> ExperimentReport:
    params = recorded.get("params", {})
    if params.get("experiment") == "solve":
        return solve_report(dict(params["solve_config"]))[0]
    name = params.get("experiment")
    if name is None:
        raise ConfigurationError("report does not record its experiment name")
    return run_experiment(name, params.get("experiment_args", {}), params.get("seed", 0))


def verify_report(recorded: dict) -> dict:
    """Re-run a report from its own parameters and compare everything but the runtime."""
    fresh = _rerun(recorded)
    want = dict(recorded)
    want.pop("runtime", None)
    got = fresh.to_dict(include_runtime=False)
    # compare through the canonical text so float formatting cannot differ
    same = dumps17(json.loads(dumps17(got))) == dumps17(want)
    diff = sorted(k for k in set(got) | set(want) if dumps17(got.get(k)) != dumps17(want.get(k)))
    return {"reproduced": same, "passed": fresh.passed, "differing_sections": diff}


def cmd_verify(ns) -> int:
    try:
        recorded = json.loads(Path(ns.report).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"report not found: {ns.report}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"report is not valid JSON: {exc}") from None
    result = verify_report(recorded)
    result["report"] = ns.report
    _emit(result)
    return EXIT_OK if result["reproduced"] and result["passed"] else EXIT_FAIL


# --- entry points -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int)

    p = _Parser(prog="translator-lab", description="Translator equation numerics and experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kernel", help="point evaluations")
    ksub = k.add_subparsers(dest="kernel_command", required=True, parser_class=_Parser)
    ke = ksub.add_parser("eval", parents=[common], help="special function or model field value")
    ke.add_argument("--fn", required=True)
    ke.add_argument("--x", type=float)
    ke.add_argument("--x2", type=float)
    ke.add_argument("--x3", type=float)
    ke.add_argument("--alpha", type=float, default=1.0, help="slope parameter for superbarrier/reaper")
    ke.set_defaults(func=cmd_kernel_eval)

    s = sub.add_parser("solve", parents=[common], help="finite-difference Dirichlet solve")
    s.add_argument("--h", type=float)
    s.add_argument("--rect", type=float, nargs=4, metavar=("X2LO", "X2HI", "X3LO", "X3HI"))
    s.add_argument("--trace", help="boundary trace as JSON")
    s.add_argument("--tol", type=float)
    s.add_argument("--linear", action="store_true", help="solve Lu = 0 instead")
    s.set_defaults(func=cmd_solve)

    for name, fn in (("duffin", cmd_duffin), ("heat", cmd_heat)):
        q = sub.add_parser(name, parents=[common], help=f"{name} extension of a trace at one point")
        q.add_argument("--trace", help="boundary trace as JSON (default: a step)")
        q.add_argument("--c-minus", dest="c_minus", type=float)
        q.add_argument("--c-plus", dest="c_plus", type=float)
        if name == "duffin":
            q.add_argument("--x2", type=float)
            q.add_argument("--x3", type=float)
            q.add_argument("--b", type=float)
        else:
            q.add_argument("--x", type=float)
            q.add_argument("--t", type=float)
        q.set_defaults(func=fn)

    e = sub.add_parser("experiment", parents=[common], help="run one experiment; extra --key value pairs are its arguments")
    e.add_argument("name", choices=sorted(REGISTRY))
    e.set_defaults(func=cmd_experiment, takes_extra=True)

    c = sub.add_parser("counterexample", parents=[common], help="build and verify the oscillating data")
    for flag in COUNTEREXAMPLE_FLAGS:
        c.add_argument("--" + flag.replace("_", "-"), dest=flag, type=int if flag == "n_rounds" else float)
    c.set_defaults(func=cmd_counterexample)

    st = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    st.add_argument("--workers", type=int)
    st.set_defaults(func=cmd_suite)

    v = sub.add_parser("verify", parents=[common], help="re-run a report from its recorded parameters")
    v.add_argument("report")
    v.set_defaults(func=cmd_verify)
    return p


def run(argv=None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit status."""
    try:
        parser = build_parser()
        ns, extra = parser.parse_known_args(argv)
        if getattr(ns, "takes_extra", False):
            return ns.func(ns, extra)
        if extra:
            raise ConfigurationError(f"unrecognized arguments: {' '.join(extra)}")
        return ns.func(ns)
    except (TranslatorLabError, ValueError, ArithmeticError, OSError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
