"""Integral representations on the lower half-plane and on the line.

The Poisson-Duffin kernel at depth t below the line x3 = b is

    k_t(xi) = t e^{t/2} K1(r/2) / (2 pi r),   r = sqrt(xi^2 + t^2),

and a bounded L-harmonic function with boundary values g on x3 = b is
u(x2, b - t) = int k_t(xi) g(x2 + xi) dxi.  For large t the kernel is close
to the heat kernel at time t, which is what ``relaxation_gap`` measures.

Boundary traces are sums of simple components (constants, steps, bumps,
smooth steps, sampled profiles).  Every component knows its side limits and
its breakpoints so quadratures can split at discontinuities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from . import specfun
from .domains import Point2
from .errors import ConfigurationError, DomainError, NumericError

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
TAIL_CUTOFF = 1e-16
NO_LIMIT = "no-limit"


# --- trace components -------------------------------------------------------


class Segment:
    """One additive component of a boundary trace."""

    left = 0.0
    right = 0.0

    def evaluate(self, x):
        raise NotImplementedError

    def breakpoints(self):
        return ()

    def support(self):
        """Interval outside of which the component equals its side limits."""
        bps = self.breakpoints()
        return (min(bps), max(bps)) if bps else None

    def sup_abs(self):
        raise NotImplementedError

    def to_dict(self):
        d = {"type": type(self).__name__}
        d.update({k: v for k, v in self.__dict__.items()})
        return d


@dataclass(frozen=True)
class Constant(Segment):
    c: float

    @property
    def left(self):
        return self.c

    @property
    def right(self):
        return self.c

    def evaluate(self, x):
        return np.full(np.shape(x), float(self.c)) if np.ndim(x) else float(self.c)

    def sup_abs(self):
        return abs(self.c)


@dataclass(frozen=True)
class Affine(Segment):
    """a x + b; only bounded when a = 0 or the trace has a finite extent."""

    a: float
    b: float

    @property
    def left(self):
        return self.b if self.a == 0 else math.copysign(math.inf, -self.a)

    @property
    def right(self):
        return self.b if self.a == 0 else math.copysign(math.inf, self.a)

    def evaluate(self, x):
        return self.a * np.asarray(x, float) + self.b

    def sup_abs(self):
        return abs(self.b) if self.a == 0 else math.inf


@dataclass(frozen=True)
class Step(Segment):
    x0: float
    c_left: float
    c_right: float

    @property
    def left(self):
        return self.c_left

    @property
    def right(self):
        return self.c_right

    def evaluate(self, x):
        # the value at the jump is the midpoint
        x = np.asarray(x, float)
        return np.where(x < self.x0, self.c_left, np.where(x > self.x0, self.c_right, 0.5 * (self.c_left + self.c_right)))

    def breakpoints(self):
        return (self.x0,)

    def sup_abs(self):
        return max(abs(self.c_left), abs(self.c_right))


@dataclass(frozen=True)
class Bump(Segment):
    """Gaussian bump height * exp(-(x - center)^2 / (2 width^2))."""

    center: float
    width: float
    height: float

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigurationError("bump width must be positive")

    def evaluate(self, x):
        z = (np.asarray(x, float) - self.center) / self.width
        return self.height * np.exp(-0.5 * z * z)

    def breakpoints(self):
        return (self.center - 40 * self.width, self.center, self.center + 40 * self.width)

    def sup_abs(self):
        return abs(self.height)


def _smooth_unit_step(s):
    """C-infinity transition from 0 (s <= 0) to 1 (s >= 1)."""
    s = np.asarray(s, float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, a / (a + b)))


@dataclass(frozen=True)
class SmoothStep(Segment):
    """C-infinity monotone transition from c_left to c_right over [x0, x0 + length]."""

    x0: float
    length: float
    c_left: float
    c_right: float

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError("smooth step length must be positive")

    @property
    def left(self):
        return self.c_left

    @property
    def right(self):
        return self.c_right

    def evaluate(self, x):
        s = (np.asarray(x, float) - self.x0) / self.length
        return self.c_left + (self.c_right - self.c_left) * _smooth_unit_step(s)

    def breakpoints(self):
        return (self.x0, self.x0 + self.length)

    def sup_abs(self):
        return max(abs(self.c_left), abs(self.c_right))


@dataclass(frozen=True)
class Sampled(Segment):
    """Piecewise-linear interpolation of (x, y) points, constant beyond the ends."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) < 2:
            raise ConfigurationError("sampled trace needs at least two points")
        xs = [p[0] for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigurationError("sampled x values must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def left(self):
        return self.points[0][1]

    @property
    def right(self):
        return self.points[-1][1]

    def evaluate(self, x):
        xs, ys = zip(*self.points)
        return np.interp(np.asarray(x, float), xs, ys)

    def breakpoints(self):
        return tuple(p[0] for p in self.points)

    def sup_abs(self):
        return max(abs(p[1]) for p in self.points)

    def to_dict(self):
        return {"type": "Sampled", "points": [list(p) for p in self.points]}


_SEGMENT_TYPES = {cls.__name__: cls for cls in (Constant, Affine, Step, Bump, SmoothStep, Sampled)}


def segment_from_dict(data: dict) -> Segment:
    data = dict(data)
    try:
        cls = _SEGMENT_TYPES[data.pop("type")]
    except KeyError as exc:
        raise ConfigurationError(f"unknown or missing segment type: {exc}") from None
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


@dataclass(frozen=True)
class BoundaryTrace:
    """g(x) = sum of segments, on the whole line or a finite extent."""

    segments: tuple
    extent: tuple | None = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ConfigurationError("a trace needs at least one segment")
        object.__setattr__(self, "segments", segs)
        if self.extent is not None:
            lo, hi = map(float, self.extent)
            if not lo < hi:
                raise ConfigurationError("trace extent must satisfy lo < hi")
            object.__setattr__(self, "extent", (lo, hi))
        elif not math.isfinite(self.sup_norm()):
            raise ConfigurationError("an unbounded trace needs a finite extent")

    @classmethod
    def of(cls, *segments, extent=None):
        return cls(tuple(segments), extent)

    @property
    def c_minus(self):
        return float(sum(s.left for s in self.segments))

    @property
    def c_plus(self):
        return float(sum(s.right for s in self.segments))

    def evaluate(self, x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape)
        for s in self.segments:
            out = out + s.evaluate(x)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def breakpoints(self):
        return sorted({float(b) for s in self.segments for b in s.breakpoints()})

    def sup_norm(self):
        """sup |g|; sampled densely around the breakpoints plus the side limits."""
        if self.extent is None and not all(math.isfinite(s.sup_abs()) for s in self.segments):
            return math.inf
        if len(self.segments) == 1:
            s = self.segments[0]
            if self.extent is None or isinstance(s, (Constant, Step, SmoothStep, Bump, Sampled)):
                return float(s.sup_abs())
        bps = self.breakpoints()
        if self.extent is not None:
            lo, hi = self.extent
        elif bps:
            lo, hi = bps[0] - 1.0, bps[-1] + 1.0
        else:
            lo, hi = -1.0, 1.0
        xs = np.concatenate([np.linspace(lo, hi, 20001), np.asarray(bps, float)])
        if self.extent is not None:
            xs = xs[(xs >= lo) & (xs <= hi)]
        vals = np.abs(self.evaluate(xs))
        cands = [float(vals.max())]
        if self.extent is None:
            cands += [abs(self.c_minus), abs(self.c_plus)]
        return max(cands)

    def to_dict(self):
        d = {"segments": [s.to_dict() for s in self.segments]}
        if self.extent is not None:
            d["extent"] = list(self.extent)
        return d

    @classmethod
    def from_dict(cls, data):
        segs = tuple(segment_from_dict(s) for s in data["segments"])
        ext = data.get("extent")
        return cls(segs, tuple(ext) if ext is not None else None)


def step_trace(c_minus, c_plus, x0=0.0):
    return BoundaryTrace.of(Step(x0, c_minus, c_plus))


# --- Poisson-Duffin ---------------------------------------------------------


def duffin_kernel(xi, t):
    """k_t(xi); uses e^{t/2} K1(r/2) = e^{(t-r)/2} K1e(r/2) to stay finite."""
    xi = np.asarray(xi, float)
    r = np.sqrt(xi * xi + t * t)
    # t - r = -xi^2 / (t + r) without cancellation at large depth
    return t * np.exp(-0.5 * xi * xi / (t + r)) * specfun.bessel_k1e(0.5 * r) / (2.0 * math.pi * r)


def _duffin_kernel_scalar(xi, t):
    r = math.sqrt(xi * xi + t * t)
    return t * math.exp(-0.5 * xi * xi / (t + r)) * specfun.bessel_k1e.scalar(0.5 * r) / (2.0 * math.pi * r)


def duffin_cutoff(t):
    """|xi| beyond which k_t < TAIL_CUTOFF * k_t(0)."""
    # e^{(t - r)/2} dominates the decay; the algebraic factor only helps
    gap = 2.0 * math.log(1.0 / TAIL_CUTOFF)
    r = t + gap
    return math.sqrt(r * r - t * t)


def _kernel_scale(t):
    return max(min(t, math.sqrt(t)), 0.05)


def _panels(lo, hi, breaks, scale):
    """Panel edges on [lo, hi]: breakpoints plus a geometric ladder around 0."""
    ladder = [0.0]
    s = scale / 4.0
    while s < max(abs(lo), abs(hi)):
        ladder += [s, -s]
        s *= 2.0
    inner = [b for b in breaks if lo < b < hi]
    # ladder edges that nearly coincide with a breakpoint would make sliver panels
    gap = 1e-6 * scale
    edges = {lo, hi, *inner}
    edges.update(e for e in ladder if lo < e < hi and all(abs(e - b) > gap for b in inner))
    return sorted(edges)


def _quad(fn, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"quadrature did not converge on [{a}, {b}]: {exc}") from None
    if not math.isfinite(val):
        raise NumericError(f"quadrature produced {val} on [{a}, {b}]")
    return val, err


def _integrate_kernel(kernel, g: BoundaryTrace, x, lo, hi):
    """int_lo^hi kernel(xi) g(x + xi) dxi split at the trace's breakpoints."""
    breaks = [b - x for b in g.breakpoints()]
    total = 0.0
    err = 0.0
    edges = _panels(lo, hi, breaks, kernel.scale)
    for a, b in zip(edges, edges[1:]):
        # constant pieces of the trace (away from any component's support) only need the kernel mass
        mid = 0.5 * (a + b)
        gv = float(g.evaluate(x + mid))
        if _trace_constant_on(g, x + a, x + b):
            v, e = _quad(kernel.scalar, a, b)
            total += gv * v
            err += abs(gv) * e
        else:
            v, e = _quad(lambda s: kernel.scalar(s) * float(g.evaluate(x + s)), a, b)
            total += v
            err += e
    return total, err


def _trace_constant_on(g, a, b):
    """True when no component varies on [a, b] (bumps count as zero beyond 40 widths)."""
    for s in g.segments:
        if isinstance(s, Affine) and s.a != 0:
            return False
        sup = s.support()
        if sup is not None and a < sup[1] and b > sup[0]:
            return False
    return True


class _Kernel:
    def __init__(self, scalar, scale):
        self.scalar = scalar
        self.scale = scale


def poisson_duffin(trace: BoundaryTrace, b: float, q) -> float:
    """Bounded L-harmonic extension of ``trace`` below the line x3 = b, evaluated at q."""
    q = Point2(*q)
    t = b - q.x3
    if not t > 0:
        raise DomainError(f"q must lie strictly below x3 = {b}, got x3 = {q.x3}")
    if trace.extent is not None:
        raise DomainError("the Duffin formula needs a trace on the whole line")
    cut = duffin_cutoff(t)
    kern = _Kernel(lambda s: _duffin_kernel_scalar(s, t), _kernel_scale(t))
    val, _ = _integrate_kernel(kern, trace, q.x2, -cut, cut)
    return val


def duffin_kernel_mass(t: float) -> float:
    return poisson_duffin(BoundaryTrace.of(Constant(1.0)), 0.0, (0.0, -t))


# --- heat kernel ------------------------------------------------------------


def _heat_segment(s: Segment, x, t):
    """Closed-form heat convolution of one component when available, else None."""
    sq = math.sqrt(4.0 * t)
    if isinstance(s, Constant):
        return s.c
    if isinstance(s, Affine):
        return s.a * x + s.b
    if isinstance(s, Step):
        # Prob(x' > x0) under N(x, 2t)
        p_right = 0.5 * special.erfc((s.x0 - x) / sq)
        return s.c_left + (s.c_right - s.c_left) * p_right
    if isinstance(s, Bump):
        var = s.width**2 + 2.0 * t
        return s.height * s.width / math.sqrt(var) * math.exp(-((x - s.center) ** 2) / (2.0 * var))
    return None


def heat_convolve(g: BoundaryTrace, x: float, t: float) -> float:
    """(1 / sqrt(4 pi t)) int exp(-(x - x')^2 / (4t)) g(x') dx'."""
    if not t > 0:
        raise DomainError(f"heat time must be positive, got {t}")
    if g.extent is not None:
        raise DomainError("heat convolution needs a trace on the whole line")
    total = 0.0
    sq = math.sqrt(4.0 * t)
    norm = 1.0 / math.sqrt(4.0 * math.pi * t)
    for s in g.segments:
        v = _heat_segment(s, x, t)
        if v is not None:
            total += v
            continue
        # non-closed-form component: its left/right limits as a step at the support edges,
        # plus a quadrature over the support
        lo, hi = s.support()
        tail = s.left * 0.5 * special.erfc((x - lo) / sq) + s.right * 0.5 * special.erfc((hi - x) / sq)
        pts = [p for p in s.breakpoints() if lo < p < hi]
        inner = 0.0
        edges = sorted({lo, hi, *pts})
        for a, b in zip(edges, edges[1:]):
            v, _ = _quad(lambda y: math.exp(-((x - y) ** 2) / (4.0 * t)) * float(s.evaluate(y)), a, b)
            inner += v
        total += tail + norm * inner
    return float(total)


# --- relaxation comparison --------------------------------------------------


@dataclass(frozen=True)
class RelaxationGap:
    duffin: float
    heat: float
    gap: float
    bound: float

    @property
    def holds(self):
        return self.gap <= self.bound

    def to_dict(self):
        return {"duffin": self.duffin, "heat": self.heat, "gap": self.gap, "bound": self.bound, "holds": self.holds}


RELAXATION_C0 = 5.0


def relaxation_gap(trace: BoundaryTrace, x2: float, x3: float, c0: float = RELAXATION_C0) -> RelaxationGap:
    """Compare the Duffin extension (b = 0) with the heat flow at time t = -x3."""
    if not x3 <= -1.0:
        raise DomainError(f"relaxation comparison needs x3 <= -1, got {x3}")
    d = poisson_duffin(trace, 0.0, (x2, x3))
    h = heat_convolve(trace, x2, -x3)
    return RelaxationGap(d, h, abs(d - h), c0 * trace.sup_norm() / math.sqrt(-x3))


# --- interval averages ------------------------------------------------------


def _segment_integral(s: Segment, lo, hi):
    if isinstance(s, Constant):
        return s.c * (hi - lo)
    if isinstance(s, Affine):
        return 0.5 * s.a * (hi * hi - lo * lo) + s.b * (hi - lo)
    if isinstance(s, Step):
        x0 = min(max(s.x0, lo), hi)
        return s.c_left * (x0 - lo) + s.c_right * (hi - x0)
    if isinstance(s, Bump):
        z = math.sqrt(2.0) * s.width
        return s.height * s.width * math.sqrt(math.pi / 2.0) * (
            special.erf((hi - s.center) / z) - special.erf((lo - s.center) / z)
        )
    slo, shi = s.support()
    total = s.left * max(0.0, min(hi, slo) - lo) + s.right * max(0.0, hi - max(lo, shi))
    a, b = max(lo, slo), min(hi, shi)
    if b > a:
        pts = sorted({a, b, *(p for p in s.breakpoints() if a < p < b)})
        for u, v in zip(pts, pts[1:]):
            total += _quad(lambda y: float(s.evaluate(y)), u, v)[0]
    return total


def interval_average(g: BoundaryTrace, a: float) -> float:
    """(1 / 2a) int_{-a}^{a} g."""
    if not a > 0:
        raise DomainError("interval half-length must be positive")
    return float(sum(_segment_integral(s, -a, a) for s in g.segments) / (2.0 * a))


@dataclass(frozen=True)
class AverageLadder:
    radii: tuple
    averages: tuple
    deviation: float
    limit: float | str


def average_ladder(g: BoundaryTrace, a0: float = 1.0, rungs: int = 40, tol: float = 1e-3, window: int = 4) -> AverageLadder:
    """I_a on a = a0 2^k; the limit is the Richardson value of the last rung when the
    last ``window`` rungs agree within ``tol``."""
    radii = tuple(a0 * 2.0**k for k in range(rungs + 1))
    avgs = tuple(interval_average(g, a) for a in radii)
    tail = np.asarray(avgs[-window:])
    dev = float(tail.max() - tail.min())
    if dev > tol:
        return AverageLadder(radii, avgs, dev, NO_LIMIT)
    # I_a = limit + O(1/a) for traces with side limits
    limit = 2.0 * avgs[-1] - avgs[-2]
    return AverageLadder(radii, avgs, dev, float(limit))


def average_limit(g: BoundaryTrace, a0: float = 1.0, rungs: int = 40, tol: float = 1e-3):
    """Limit of the interval averages, or ``NO_LIMIT``."""
    return average_ladder(g, a0, rungs, tol).limit


# --- oscillation diagnostics -----------------------------------------------


def duffin_profile(trace: BoundaryTrace, depth: float, x2s: Sequence[float], b: float = 0.0):
    return np.array([poisson_duffin(trace, b, (float(x), b - depth)) for x in x2s])


def global_oscillation(trace: BoundaryTrace, depth: float, half_width: float, n: int = 41) -> float:
    """sup - inf of the Duffin extension at depth ``depth`` over x2 in [-X, X]."""
    xs = np.linspace(-half_width, half_width, n)
    v = duffin_profile(trace, depth, xs)
    return float(v.max() - v.min())


def local_oscillation(trace: BoundaryTrace, depth: float, window=(-1.0, 1.0), n: int = 5) -> float:
    xs = np.linspace(window[0], window[1], n)
    v = duffin_profile(trace, depth, xs)
    return float(v.max() - v.min())
