"""Experiments: each runner returns an :class:`ExperimentReport`."""

from __future__ import annotations

import json

from ..errors import ConfigurationError
from . import battery
from .decay import run_decay_suite
from .limits import run_downward_limit, run_exponential_wedge, run_exterior_limits, run_periodic_limit
from .oscillation import build_oscillating_data, run_counterexample, run_oscillation_persistence, verify_oscillation
from .report import ExperimentReport, fit_decay_exponent, fit_log_linear
from .wings import (
    Planar,
    Reaper,
    WingConfiguration,
    predict_limit_configuration,
    run_limit_bookkeeping,
    run_ray_scan,
    scan_ray_limits,
)

REGISTRY = {
    "specfun-fidelity": battery.run_specfun_fidelity,
    "model-residuals": battery.run_model_residuals,
    "doubling-obstruction": battery.run_doubling_obstruction,
    "duffin-mass": battery.run_duffin_mass,
    "global-stab": battery.run_global_stab,
    "decay-upward": lambda **kw: run_decay_suite("upward", **kw),
    "decay-general": lambda **kw: run_decay_suite("general", **kw),
    "exponential-wedge": run_exponential_wedge,
    "downward-limit": run_downward_limit,
    "periodic-limit": run_periodic_limit,
    "exterior-limits": run_exterior_limits,
    "oscillation-persistence": run_oscillation_persistence,
    "counterexample": run_counterexample,
    "limit-bookkeeping": run_limit_bookkeeping,
    "ray-scan": run_ray_scan,
}

# (job id, experiment, arguments, acceptance criterion); order fixes the suite output
SUITE = (
    ("specfun-fidelity", "specfun-fidelity", {}, 1),
    ("model-residuals", "model-residuals", {}, 2),
    ("doubling-obstruction", "doubling-obstruction", {}, 3),
    ("duffin-mass", "duffin-mass", {}, 4),
    ("global-stab", "global-stab", {}, 5),
    ("decay-upward", "decay-upward", {}, 6),
    ("decay-general", "decay-general", {}, 6),
    ("exponential-wedge", "exponential-wedge", {}, 7),
    ("exponential-wedge-superbarrier", "exponential-wedge", {"superbarrier": [0.5, 0.2]}, 7),
    ("downward-limit-0-1", "downward-limit", {"c_minus": 0.0, "c_plus": 1.0}, 8),
    ("downward-limit-m2-3", "downward-limit", {"c_minus": -2.0, "c_plus": 3.0}, 8),
    ("downward-limit-const", "downward-limit", {"c_minus": 0.7, "c_plus": 0.7}, 8),
    ("oscillation-persistence", "oscillation-persistence", {}, 9),
    ("counterexample", "counterexample", {"alpha": 0.0, "beta": 1.0, "eps": 0.05, "n_rounds": 2}, 10),
    ("limit-bookkeeping", "limit-bookkeeping", {}, 11),
    ("periodic-limit", "periodic-limit", {}, None),
    ("exterior-limits", "exterior-limits", {}, None),
    ("ray-scan", "ray-scan", {}, None),
)


# experiments that draw random probes take the run seed
SEEDED = frozenset({"model-residuals", "doubling-obstruction", "global-stab", "limit-bookkeeping"})


def run_experiment(name: str, args: dict | None = None, seed: int = 0) -> ExperimentReport:
    """Run a registered experiment; the name, arguments and seed land in its parameters."""
    if name not in REGISTRY:
        raise ConfigurationError(f"unknown experiment {name!r}; choose from {sorted(REGISTRY)}")
    args = dict(args or {})
    if "seed" in args:
        raise ConfigurationError("pass the seed through the seed argument, not the experiment arguments")
    kwargs = dict(args, seed=seed) if name in SEEDED else args
    try:
        report = REGISTRY[name](**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad arguments for {name}: {exc}") from None
    # arguments are stored JSON-normalized so a re-run from the file sees the same values
    report.parameters["experiment"] = name
    report.parameters["experiment_args"] = json.loads(json.dumps(args))
    report.parameters["seed"] = seed
    return report


def rerun(report_dict: dict) -> ExperimentReport:
    """Re-run an experiment from the parameters recorded in its report."""
    params = report_dict.get("params", {})
    try:
        name = params["experiment"]
    except KeyError:
        raise ConfigurationError("report does not record its experiment name") from None
    return run_experiment(name, params.get("experiment_args", {}), params.get("seed", 0))


__all__ = [
    "ExperimentReport",
    "Planar",
    "REGISTRY",
    "Reaper",
    "SUITE",
    "WingConfiguration",
    "build_oscillating_data",
    "fit_decay_exponent",
    "fit_log_linear",
    "predict_limit_configuration",
    "rerun",
    "run_counterexample",
    "run_decay_suite",
    "run_downward_limit",
    "run_experiment",
    "run_exponential_wedge",
    "run_exterior_limits",
    "run_oscillation_persistence",
    "run_periodic_limit",
    "scan_ray_limits",
    "verify_oscillation",
]
