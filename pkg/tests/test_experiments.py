import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab.errors import ConfigurationError, FitError
from translator_lab.experiments import (
    REGISTRY,
    SUITE,
    ExperimentReport,
    Planar,
    Reaper,
    WingConfiguration,
    build_oscillating_data,
    fit_decay_exponent,
    fit_log_linear,
    predict_limit_configuration,
    rerun,
    run_experiment,
    scan_ray_limits,
)
from translator_lab.experiments import wings
from translator_lab.experiments.limits import fit_inverse_sqrt_tail, periodic_profile
from translator_lab.experiments.oscillation import chi_eps
from translator_lab.experiments.report import dumps17

# --- fitting helpers ----------------------------------------------------------


@given(st.floats(-3.0, -0.1), st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_decay_exponent_recovers_power(p, c):
    d = np.geomspace(1.0, 100.0, 12)
    assert fit_decay_exponent(np.column_stack([d, c * d**p])) == pytest.approx(p, abs=1e-10)


@pytest.mark.parametrize(
    "samples",
    [
        np.column_stack([np.geomspace(1, 100, 5), np.ones(5)]),
        np.column_stack([np.geomspace(1, 4, 10), np.ones(10)]),
        np.column_stack([np.geomspace(1, 100, 10), -np.ones(10)]),
        np.ones((10, 3)),
    ],
)
def test_decay_exponent_rejects_bad_samples(samples):
    with pytest.raises(FitError):
        fit_decay_exponent(samples)


def test_log_linear_fit():
    s = np.linspace(0, 10, 30)
    beta, c, r2 = fit_log_linear(s, 2.5 * np.exp(-0.7 * s))
    assert beta == pytest.approx(0.7)
    assert c == pytest.approx(2.5)
    assert r2 == pytest.approx(1.0)


def test_inverse_sqrt_tail_fit():
    t = np.linspace(4, 200, 80)
    m, *_ = fit_inverse_sqrt_tail(t, 0.5 + 0.3 / np.sqrt(t) - 0.1 / t)
    assert m == pytest.approx(0.5, abs=1e-12)


# --- reports ----------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False)
json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | finite | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=4), inner, max_size=4),
    max_leaves=15,
)


@given(json_values)
@settings(max_examples=100, deadline=None)
def test_dumps17_round_trips(value):
    assert json.loads(dumps17(value)) == value


def test_dumps17_is_idempotent_and_sorted():
    text = dumps17({"b": 0.1, "a": [1e-300, 2.0]})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text
    assert dumps17(json.loads(text)) == text


def test_report_requires_declared_tolerance():
    r = ExperimentReport("x", {"tol": 1.0})
    r.verdict("ok", True, "tol")
    with pytest.raises(KeyError):
        r.verdict("bad", True, "missing")
    assert r.passed


def test_report_excludes_runtime_on_request():
    r = ExperimentReport("x", {"tol": 1.0}, runtime_seconds=3.0)
    assert "runtime" in r.to_dict()
    assert "runtime" not in r.to_dict(include_runtime=False)


# --- registry ---------------------------------------------------------------


def test_suite_covers_every_numbered_criterion():
    assert {c for *_, c in SUITE if c is not None} == set(range(1, 12))
    assert all(name in REGISTRY for _, name, _, _ in SUITE)
    assert len({job for job, *_ in SUITE}) == len(SUITE)


def test_unknown_experiment_and_arguments():
    with pytest.raises(ConfigurationError):
        run_experiment("no-such-thing")
    with pytest.raises(ConfigurationError):
        run_experiment("duffin-mass", {"nonsense": 1})
    with pytest.raises(ConfigurationError):
        run_experiment("global-stab", {"seed": 3})


@pytest.mark.parametrize("name", ["specfun-fidelity", "doubling-obstruction", "limit-bookkeeping", "ray-scan"])
def test_cheap_experiments_pass_and_rerun_identically(name):
    report = run_experiment(name, seed=7)
    assert report.passed, report.verdicts
    assert report.parameters["seed"] == 7
    again = rerun(report.to_dict())
    assert again.to_json(False) == report.to_json(False)


def test_seed_changes_random_probes():
    a = run_experiment("doubling-obstruction", seed=1).metrics["max_value"]
    b = run_experiment("doubling-obstruction", seed=2).metrics["max_value"]
    assert a != b


# --- small solver-backed runs ----------------------------------------------


def test_downward_limit_small():
    r = run_experiment("downward-limit", {"c_minus": 0.0, "c_plus": 2.0, "depths": [20, 40], "tol": 5e-2})
    assert r.metrics["limit"] == pytest.approx(1.0, abs=5e-2)
    assert r.passed


def test_periodic_profile_accepts_samples():
    xs = np.linspace(0, 2 * math.pi, 33)[:-1]
    f = periodic_profile(2 * math.pi, list(np.sin(xs)))
    assert f(0.0) == pytest.approx(0.0, abs=1e-12)


def test_oscillation_persistence_defaults():
    r = run_experiment("oscillation-persistence")
    assert r.passed, r.verdicts


# --- oscillating data ---------------------------------------------------------


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.5])
def test_chi_eps_against_mpmath(eps):
    chi = chi_eps(eps)
    assert float(mpmath.erfc(chi)) == pytest.approx(eps / 2, rel=1e-12)


def test_oscillating_data_layout():
    built = build_oscillating_data(alpha=0.0, beta=1.0, eps=0.05, n_rounds=2)
    assert built.levels[0] == 1.0
    assert built.radii == sorted(built.radii)
    assert built.trace(0.0) == pytest.approx(1.0)
    # the trace is even and bounded by the levels
    xs = np.linspace(-5000, 5000, 2001)
    assert np.allclose(built.trace(xs), built.trace(-xs))
    assert built.trace.sup_norm() <= 1.0 + 1e-12
    json.dumps(built.to_dict())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 1.0, "beta": 0.0},
        {"eps": 0.2},
        {"eps1": 0.0},
        {"n_rounds": 1},
        {"n_rounds": 2.5},
    ],
)
def test_oscillating_data_preconditions(kwargs):
    with pytest.raises(ConfigurationError):
        build_oscillating_data(**kwargs)


def test_counterexample_three_rounds():
    r = run_experiment("counterexample", {"n_rounds": 3})
    assert r.passed, r.verdicts
    assert r.metrics["heat_gap"] >= 0.8


# --- wing bookkeeping -------------------------------------------------------


def test_grim_reaper_prediction():
    pred = predict_limit_configuration(wings.grim_reaper_configuration())
    assert pred["down"] == ()
    assert [m for _, m in pred["up"]] == [1, 1]
    assert pred["entropy"] == 2


def test_pitchfork_prediction():
    pred = predict_limit_configuration(wings.pitchfork_configuration())
    assert pred["down"] == ((0.0, 1),)
    assert len(pred["up"]) == 3
    assert pred["entropy"] == 3


@pytest.mark.parametrize("seed", range(10))
def test_random_configurations_round_trip(seed):
    cfg = wings.random_configuration(np.random.default_rng(seed))
    back = WingConfiguration.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert predict_limit_configuration(back) == predict_limit_configuration(cfg)
    assert cfg.omega_P % 2 == 0


@pytest.mark.parametrize(
    "wing_list",
    [
        [Planar("right", 0.0, 0.0)],
        [Planar("left", 0.0, 0.0), Planar("up", 0.0, 0.0)],
        [Planar("left", 0.0, 0.0), Planar("right", 5.0, 0.0)],
        [Reaper("left", math.pi, -1.0, 1.0), Reaper("right", math.pi, -1.0, 1.0)],
    ],
)
def test_invalid_wing_configurations(wing_list):
    with pytest.raises(ConfigurationError):
        WingConfiguration(tuple(wing_list))


def test_ray_scan_tangent_and_jump():
    comp = wings.tilted_reaper_composite()
    at_tangent = scan_ray_limits(comp, wings.reaper_directions(comp))
    assert all(wings.REAPER in dict(v) for v in at_tangent.values())
    planes = scan_ray_limits(wings.two_plane_composite(), [(1.0, 0.0), (0.0, -1.0), (-0.6, 0.8)])
    assert len(set(planes.values())) == 1
    down = scan_ray_limits(wings.pitchfork_composite(), [(0.0, -1.0)])
    assert down[(0.0, -1.0)] == wings.JUMP
