"""Oscillation persistence and the non-attenuating oscillation construction."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import special

from .. import fdsolver as fd
from .. import kernels as kn
from ..domains import LowerHalfPlane, Rectangle
from ..errors import ConfigurationError
from ..models import BarrierReef
from .report import ExperimentReport, fit_decay_exponent

TRANSITION_LENGTH = 1.0


# --- persistence of a step and decay on a fixed window -------------------------


def run_oscillation_persistence(
    c_minus: float = 0.0,
    c_plus: float = 1.0,
    *,
    depths=(1.0, 10.0, 100.0),
    local_depths=None,
    rel_tol: float = 0.05,
    exponent_max: float = -0.4,
) -> ExperimentReport:
    """Global oscillation of a step's Duffin extension stays |c+ - c-| at every depth,
    while the oscillation over the window [-1, 1] decays."""
    t0 = time.perf_counter()
    local_depths = np.geomspace(10.0, 1e4, 12) if local_depths is None else np.asarray(local_depths, float)
    trace = kn.step_trace(c_minus, c_plus)
    jump = abs(c_plus - c_minus)
    params = {
        "c_minus": c_minus,
        "c_plus": c_plus,
        "depths": list(depths),
        "local_depths": local_depths,
        "rel_tol": rel_tol,
        "exponent_max": exponent_max,
    }
    report = ExperimentReport("oscillation-persistence", params)
    globals_ = []
    for d in depths:
        # +-12 sqrt(2d) catches all but ~1e-17 of the kernel mass
        globals_.append(kn.global_oscillation(trace, d, 12.0 * math.sqrt(2.0 * d) + 10.0, n=41))
    rel = [abs(g - jump) / jump if jump else g for g in globals_]
    report.metrics.update(global_oscillation=globals_, global_relative_error=rel)
    report.verdict("global_persists", max(rel) <= rel_tol, "rel_tol")
    locals_ = np.array([kn.local_oscillation(trace, d) for d in local_depths])
    report.samples["local"] = {"depth": local_depths, "oscillation": locals_}
    if jump == 0:
        report.metrics["local_exponent"] = -math.inf
        report.verdict("local_decays", bool(np.all(locals_ == 0)), "exponent_max")
    else:
        e = fit_decay_exponent(list(zip(local_depths, locals_)))
        report.metrics["local_exponent"] = e
        report.verdict("local_decays", e <= exponent_max, "exponent_max")
    report.runtime_seconds = time.perf_counter() - t0
    return report


# --- the construction --------------------------------------------------------


def chi_eps(eps: float) -> float:
    """Tail parameter with erfc(chi) = eps / 2."""
    if not 0 < eps < 2:
        raise ConfigurationError("eps must lie in (0, 2)")
    return float(special.erfcinv(eps / 2.0))


@dataclass
class OscillatingData:
    trace: kn.BoundaryTrace
    times_lo: list
    times_hi: list
    chi_eps: float
    radii: list
    levels: list
    reef_counts: list
    zeta: float
    tau: float
    c2_norm: float
    parameters: dict

    def to_dict(self):
        return {
            "trace": self.trace.to_dict(),
            "times_lo": self.times_lo,
            "times_hi": self.times_hi,
            "chi_eps": self.chi_eps,
            "radii": self.radii,
            "levels": self.levels,
            "reef_counts": self.reef_counts,
            "zeta": self.zeta,
            "tau": self.tau,
            "c2_norm": self.c2_norm,
            "parameters": self.parameters,
        }


def _c2_norm(trace, breaks, length):
    """max(sup|g|, sup|g'|, sup|g''|) from dense samples over the transitions."""
    xs = np.concatenate([np.linspace(b - 0.25, b + length + 0.25, 801) for b in breaks])
    xs = np.sort(xs)
    d = 1e-3
    g = trace(xs)
    g1 = (trace(xs + d) - trace(xs - d)) / (2 * d)
    g2 = (trace(xs + d) - 2 * g + trace(xs - d)) / d**2
    return float(max(np.abs(g).max(), np.abs(g1).max(), np.abs(g2).max()))


def build_oscillating_data(
    alpha: float = 0.0,
    beta: float = 1.0,
    eps: float = 0.05,
    eps1: float = 0.1,
    a0: float = 1.0,
    t0: float = 1.0,
    n_rounds: int = 2,
    c_prime: float = 1.0,
) -> OscillatingData:
    """Even trace alternating between beta (inside a0) and alpha/beta rings.

    Round k picks t_k = max(t_{k-1}, a_{k-1}^2 / eps^2) and a_k = chi sqrt(4 t_k);
    the trace holds level_k on a_{k-1} < |x| < a_k. Odd rounds are low (alpha),
    even rounds high (beta), so the heat extension at x = 0 alternates between
    near alpha at the odd-round times and near beta at the even ones.
    """
    if not beta > alpha:
        raise ConfigurationError("need alpha < beta")
    if not 0 < eps < (beta - alpha) / 8.0:
        raise ConfigurationError("need 0 < eps < (beta - alpha) / 8")
    if eps1 <= 0 or a0 <= 0 or t0 <= 0:
        raise ConfigurationError("eps1, a0 and t0 must be positive")
    if int(n_rounds) != n_rounds or n_rounds < 2:
        raise ConfigurationError("n_rounds must be an integer >= 2")
    n_rounds = int(n_rounds)
    chi = chi_eps(eps)
    reef = BarrierReef(1, eps1, eps, c_prime=c_prime)
    ell = TRANSITION_LENGTH

    radii = [float(a0)]
    times = []
    levels = [float(beta)]
    t = float(t0)
    for k in range(1, n_rounds + 1):
        t = max(t, radii[-1] ** 2 / eps**2)
        times.append(t)
        radii.append(chi * math.sqrt(4.0 * t))
        levels.append(float(alpha) if k % 2 == 1 else float(beta))
    if any(b - a <= 2 * ell for a, b in zip(radii, radii[1:])):
        raise ConfigurationError("rings too thin for the smoothing length; enlarge a0 or t0")

    segs = [kn.Constant(levels[0])]
    for k in range(1, n_rounds + 1):
        jump = levels[k] - levels[k - 1]
        a = radii[k - 1]
        segs.append(kn.SmoothStep(a, ell, 0.0, jump))
        segs.append(kn.SmoothStep(-a - ell, ell, jump, 0.0))
    trace = kn.BoundaryTrace.of(*segs)

    times_lo = [times[k - 1] for k in range(1, n_rounds + 1) if k % 2 == 1]
    times_hi = [times[k - 1] for k in range(1, n_rounds + 1) if k % 2 == 0]
    counts = [int(math.ceil(a / reef.tau)) + 1 for a in radii[1:]]
    breaks = [r for a in radii[:-1] for r in (a, -a - ell)]
    params = dict(alpha=alpha, beta=beta, eps=eps, eps1=eps1, a0=a0, t0=t0, n_rounds=n_rounds, c_prime=c_prime)
    return OscillatingData(
        trace=trace,
        times_lo=times_lo,
        times_hi=times_hi,
        chi_eps=chi,
        radii=radii,
        levels=levels,
        reef_counts=counts,
        zeta=reef.zeta,
        tau=reef.tau,
        c2_norm=_c2_norm(trace, breaks, ell),
        parameters=params,
    )


def _ladder_gap(values_lo, values_hi):
    return min(values_hi) - max(values_lo)


def verify_oscillation(
    built: OscillatingData,
    *,
    c0: float = kn.RELAXATION_C0,
    nonlinear_h: float = 1.0,
    nonlinear_cells: int = 400,
) -> ExperimentReport:
    """Heat and Duffin ladder inequalities, a constant-trace control and the
    (capped) nonlinear stage."""
    t_start = time.perf_counter()
    p = built.parameters
    alpha, beta, eps = p["alpha"], p["beta"], p["eps"]
    width = beta - alpha
    lo_cap = alpha + 2.0 * eps * width
    hi_cap = beta - 2.0 * eps * width
    sup = built.trace.sup_norm()
    params = dict(p)
    params.update(
        c0=c0,
        heat_margin=2.0 * eps * width,
        gap_target=(1.0 - 4.0 * eps) * width,
        control_tol=1e-8,
        nonlinear_h=nonlinear_h,
        nonlinear_max_depth=nonlinear_cells * nonlinear_h,
        nonlinear_target=0.5 * width,
    )
    report = ExperimentReport("counterexample", params)

    heat_lo = [kn.heat_convolve(built.trace, 0.0, t) for t in built.times_lo]
    heat_hi = [kn.heat_convolve(built.trace, 0.0, t) for t in built.times_hi]
    heat_gap = _ladder_gap(heat_lo, heat_hi)
    report.metrics.update(heat_lo=heat_lo, heat_hi=heat_hi, heat_gap=heat_gap)
    report.verdict("heat_low_rounds", all(v <= lo_cap for v in heat_lo), "heat_margin")
    report.verdict("heat_high_rounds", all(v >= hi_cap for v in heat_hi), "heat_margin")
    report.verdict("heat_gap", heat_gap >= params["gap_target"], "gap_target")

    duff_lo = [kn.poisson_duffin(built.trace, 0.0, (0.0, -t)) for t in built.times_lo]
    duff_hi = [kn.poisson_duffin(built.trace, 0.0, (0.0, -t)) for t in built.times_hi]
    relax_lo = [c0 * sup / math.sqrt(t) for t in built.times_lo]
    relax_hi = [c0 * sup / math.sqrt(t) for t in built.times_hi]
    report.metrics.update(duffin_lo=duff_lo, duffin_hi=duff_hi, relaxation_lo=relax_lo, relaxation_hi=relax_hi)
    report.verdict("duffin_low_rounds", all(v <= lo_cap + r for v, r in zip(duff_lo, relax_lo)), "c0")
    report.verdict("duffin_high_rounds", all(v >= hi_cap - r for v, r in zip(duff_hi, relax_hi)), "c0")

    # a constant trace must show no separation between the ladders
    control = kn.BoundaryTrace.of(kn.Constant(0.5 * (alpha + beta)))
    ctrl_lo = [kn.heat_convolve(control, 0.0, t) for t in built.times_lo]
    ctrl_hi = [kn.heat_convolve(control, 0.0, t) for t in built.times_hi]
    ctrl_gap = abs(_ladder_gap(ctrl_lo, ctrl_hi))
    report.metrics["control_gap"] = ctrl_gap
    report.verdict("constant_control", ctrl_gap < params["control_tol"], "control_tol")

    _nonlinear_stage(built, report)
    report.metrics.update(
        chi_eps=built.chi_eps,
        times_lo=built.times_lo,
        times_hi=built.times_hi,
        radii=built.radii,
        reef_counts=built.reef_counts,
        zeta=built.zeta,
        tau=built.tau,
        c2_norm=built.c2_norm,
        trace_sup=sup,
    )
    report.runtime_seconds = time.perf_counter() - t_start
    return report


def _nonlinear_stage(built, report):
    """Quasilinear solve down to the capped depth; needs two ladder times inside it."""
    p = report.parameters
    cap = p["nonlinear_max_depth"]
    ladder = sorted([(t, "lo") for t in built.times_lo] + [(t, "hi") for t in built.times_hi])
    accessible = [(t, kind) for t, kind in ladder if t <= cap - 8.0]
    if len(accessible) < 2 or len({kind for _, kind in accessible[-2:]}) < 2:
        report.metrics["nonlinear_stage"] = "skipped"
        report.metrics["nonlinear_accessible_times"] = [t for t, _ in accessible]
        return
    (t_a, _), (t_b, _) = accessible[-2:]
    depth = min(cap, t_b + 8.0 + p["nonlinear_h"])
    X = max(built.radii[-1], 4.0 * depth)
    trace = built.trace
    u = fd.solve_translator_dirichlet(
        LowerHalfPlane(0.0), Rectangle(-X, X, -depth, 0.0), lambda x2, x3: trace(x2), fd.NewtonConfig(residual_tol=1e-10), h=p["nonlinear_h"]
    )
    osc = abs(u.interpolate(0.0, -t_a) - u.interpolate(0.0, -t_b))
    report.metrics["nonlinear_stage"] = "run"
    report.metrics["nonlinear_oscillation"] = float(osc)
    report.verdict("nonlinear_oscillation", osc >= p["nonlinear_target"], "nonlinear_target")


def run_counterexample(**kwargs) -> ExperimentReport:
    """Build the oscillating trace and verify it (the whole pipeline)."""
    verify_keys = {"c0", "nonlinear_h", "nonlinear_cells"}
    vk = {k: kwargs.pop(k) for k in list(kwargs) if k in verify_keys}
    try:
        built = build_oscillating_data(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
    return verify_oscillation(built, **vk)


__all__ = [
    "OscillatingData",
    "build_oscillating_data",
    "chi_eps",
    "run_counterexample",
    "run_oscillation_persistence",
    "verify_oscillation",
]
