"""Point checks of the special functions, model solutions and kernels, packaged as reports."""

from __future__ import annotations

import math
import time

import numpy as np
from scipy import integrate

from .. import fdsolver as fd
from .. import kernels as kn
from .. import models
from .. import specfun
from ..domains import Rectangle
from .report import ExperimentReport

_QUAD = dict(epsabs=1e-14, epsrel=1e-14, limit=200)


def quadrature_oracles():
    """Integral representations evaluated by adaptive quadrature."""
    k0 = integrate.quad(lambda t: math.exp(-math.cosh(t)), 0, 40, **_QUAD)[0]
    k1 = integrate.quad(lambda t: math.exp(-math.cosh(t)) * math.cosh(t), 0, 40, **_QUAD)[0]
    i0 = integrate.quad(lambda th: math.exp(math.cos(th)), 0, math.pi, **_QUAD)[0] / math.pi
    # Ei(-1) = -E1(1) = -int_1^inf e^-t / t dt
    ei = -integrate.quad(lambda t: math.exp(-t) / t, 1, np.inf, **_QUAD)[0]
    return {"k0": k0, "k1": k1, "i0": i0, "ei": ei}


def run_specfun_fidelity(tol: float = 1e-9, n_bound: int = 100) -> ExperimentReport:
    t0 = time.perf_counter()
    report = ExperimentReport("specfun-fidelity", {"tol": tol, "n_bound": n_bound, "bound_slack": 0.0})
    oracle = quadrature_oracles()
    ours = {
        "k0": specfun.bessel_k0.scalar(1.0),
        "k1": specfun.bessel_k1.scalar(1.0),
        "i0": specfun.bessel_i0.scalar(1.0),
        "ei": specfun.expint_ei.scalar(-1.0),
    }
    for name, v in ours.items():
        err = abs(v - oracle[name])
        report.metrics[f"{name}_value"] = v
        report.metrics[f"{name}_error"] = err
        report.verdict(f"{name}_matches_quadrature", err <= tol, "tol")
    xs = np.minimum(np.logspace(-3, math.log10(700.0), n_bound), 700.0)
    slack = [b - d for d, b in (specfun.bessel_k1_classical_bound(float(x)) for x in xs)]
    report.metrics["k1_bound_min_slack"] = min(slack)
    report.verdict("k1_classical_bound", min(slack) >= 0.0, "bound_slack")
    report.runtime_seconds = time.perf_counter() - t0
    return report


def run_model_residuals(seed: int = 0) -> ExperimentReport:
    t0 = time.perf_counter()
    params = {
        "seed": seed,
        "exact": 0.0,
        "order_range": [1.8, 2.2],
        "fd_tol": 1e-5,
        "ei_tol": 1e-6,
        "fd_step": 5e-4,
        "grids": [65, 129, 257],
    }
    report = ExperimentReport("model-residuals", params)
    h = params["fd_step"]

    # dyadic grid and coefficients: the stencils see exact samples
    g = fd.Grid.from_domain(None, Rectangle(-2.0, 2.0, -3.0, 1.0), 0.25)
    plane = fd.residual(fd.sample(models.plane_solution(-0.375, 5.0), g)).values
    const = fd.residual(fd.sample(models.plane_solution(0.0, 2.0), g)).values
    worst = float(max(np.nanmax(np.abs(plane)), np.nanmax(np.abs(const))))
    report.metrics["plane_residual"] = worst
    report.verdict("plane_exact", worst == 0.0, "exact")

    reaper = models.TiltedReaper(1.0)
    rect = Rectangle(-1.5, 1.5, -1.5, 1.5)
    res = []
    for n in params["grids"]:
        grid = fd.Grid.from_domain(None, rect, 3.0 / (n - 1))
        res.append(float(np.nanmax(np.abs(fd.residual(fd.sample(reaper, grid)).values))))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    report.metrics.update(reaper_residuals=res, reaper_orders=orders)
    lo, hi = params["order_range"]
    report.verdict("reaper_order", bool(np.all((orders >= lo) & (orders <= hi))), "order_range")

    rng = np.random.default_rng(seed)
    r = rng.uniform(0.5, 5.0, 100)
    th = rng.uniform(0.0, 2.0 * math.pi, 100)
    x2, x3 = r * np.cos(th), r * np.sin(th)
    alpha = 1.0
    wx2 = rng.uniform(-3, 3, 100)
    wx3 = alpha * np.abs(wx2) + rng.uniform(0.01, 4, 100)
    probes = {
        "superbarrier": np.abs(models.drift_laplacian_fd(models.Superbarrier(alpha), wx2, wx3, h)),
        "u_K": np.abs(models.drift_laplacian_fd(models.UKField(), x2, x3, h)),
        "u_I": np.abs(models.drift_laplacian_fd(models.UIField(), x2, x3, h)),
        "green": np.abs(models.drift_laplacian_fd(lambda a, b: models.green_L_xy(a, b, 0.0, 0.0), x2, x3, h)),
    }
    for name, v in probes.items():
        report.metrics[f"L_{name}"] = float(v.max())
        report.verdict(f"{name}_L_harmonic", float(v.max()) < params["fd_tol"], "fd_tol")

    z = np.linspace(-50.0, -2.0, 200)
    worst = 0.0
    for c_p in (0.5, 1.0, 3.0):
        fn = lambda a, b, c_p=c_p: models.ei_barrier_x3(c_p, -1.0, b) + 0.0 * a
        lw = models.drift_laplacian_fd(fn, np.zeros_like(z), z, h)
        worst = max(worst, float(np.max(np.abs(lw - c_p / z**2))))
    report.metrics["ei_barrier_error"] = worst
    report.verdict("ei_barrier_equation", worst < params["ei_tol"], "ei_tol")
    report.runtime_seconds = time.perf_counter() - t0
    return report


def run_doubling_obstruction(seed: int = 0, n: int = 100, tol: float = 1e-10) -> ExperimentReport:
    t0 = time.perf_counter()
    report = ExperimentReport("doubling-obstruction", {"seed": seed, "n": n, "tol": tol, "sign_bound": 0.0})
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-10.0, 10.0, (n, 3))
    th = rng.uniform(0.0, 2.0 * math.pi, n)
    vals = np.array([models.doubling_obstruction(p, (math.cos(a), math.sin(a), 0.0)) for p, a in zip(pts, th)])
    err = float(np.max(np.abs(vals + 0.25 * np.exp(-pts[:, 2]))))
    report.metrics.update(max_error=err, max_value=float(vals.max()))
    report.verdict("closed_form", err <= tol, "tol")
    report.verdict("negative", bool(np.all(vals < 0.0)), "sign_bound")
    report.runtime_seconds = time.perf_counter() - t0
    return report


def run_duffin_mass(depths=(0.01, 1.0, 100.0, 1e4, 1e8), tol: float = 1e-8, step_tol: float = 5e-2) -> ExperimentReport:
    t0 = time.perf_counter()
    report = ExperimentReport("duffin-mass", {"depths": list(depths), "mass_tol": tol, "step_tol": step_tol, "step_depth": 1e4})
    errs = [abs(kn.duffin_kernel_mass(t) - 1.0) for t in depths]
    report.metrics["mass_errors"] = errs
    report.verdict("unit_mass", max(errs) <= tol, "mass_tol")
    v = kn.poisson_duffin(kn.step_trace(0.0, 1.0), 0.0, (0.0, -1e4))
    report.metrics["step_centerline"] = v
    report.verdict("step_average", abs(v - 0.5) <= step_tol, "step_tol")
    report.runtime_seconds = time.perf_counter() - t0
    return report


def random_trace(rng):
    segs = [kn.Step(rng.uniform(-5, 5), rng.uniform(-2, 2), rng.uniform(-2, 2))]
    for _ in range(int(rng.integers(0, 3))):
        segs.append(kn.Bump(rng.uniform(-10, 10), rng.uniform(0.2, 3), rng.uniform(-1, 1)))
    if rng.random() < 0.3:
        segs.append(kn.SmoothStep(rng.uniform(-5, 5), rng.uniform(0.5, 4), rng.uniform(-1, 1), rng.uniform(-1, 1)))
    return kn.BoundaryTrace(tuple(segs))


def run_global_stab(seed: int = 0, n_traces: int = 50, n_depths: int = 10, c0: float = kn.RELAXATION_C0) -> ExperimentReport:
    t0 = time.perf_counter()
    report = ExperimentReport("global-stab", {"seed": seed, "n_traces": n_traces, "n_depths": n_depths, "c0": c0})
    rng = np.random.default_rng(seed)
    violations, worst_ratio = 0, 0.0
    for _ in range(n_traces):
        g = random_trace(rng)
        for x3 in -np.geomspace(1.0, 1e4, n_depths):
            gap = kn.relaxation_gap(g, float(rng.uniform(-10, 10)), float(x3), c0)
            violations += not gap.holds
            if gap.bound > 0:
                worst_ratio = max(worst_ratio, gap.gap / gap.bound)
    report.metrics.update(violations=violations, worst_gap_over_bound=worst_ratio)
    report.verdict("no_violations", violations == 0, "c0")
    report.runtime_seconds = time.perf_counter() - t0
    return report
