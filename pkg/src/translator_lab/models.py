"""Closed-form solutions, barriers and kernels of the translator equation.

Coordinates are (x2, x3) with x3 the translation direction.  The graph value
u(x2, x3) is the x1 coordinate of the surface.  The drift Laplacian is
``L = Laplacian + d/dx3``.

Fields that are used on grids expose ``value``, ``gradient`` and ``hessian``
methods taking arrays of x2 and x3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .domains import Point2
from .errors import ConfigurationError, DomainError, SingularityError

OUTSIDE = math.inf
"""Value of barrier reefs outside the union of their strips."""


def drift_laplacian_fd(fn, x2, x3, h=1e-3):
    """Central-difference L fn at the given points (5-point Laplacian + centred d/dx3)."""
    x2 = np.asarray(x2, float)
    x3 = np.asarray(x3, float)
    c = fn(x2, x3)
    e = fn(x2 + h, x3)
    w = fn(x2 - h, x3)
    n = fn(x2, x3 + h)
    s = fn(x2, x3 - h)
    return (e + w + n + s - 4.0 * c) / (h * h) + (n - s) / (2.0 * h)


def nonlinear_term(grad, hess):
    """P(grad u, Hess u) = Hess(grad, grad) / (1 + |grad|^2) from arrays.

    ``grad`` is (u2, u3); ``hess`` is (u22, u23, u33).
    """
    u2, u3 = grad
    u22, u23, u33 = hess
    return (u22 * u2 * u2 + 2.0 * u23 * u2 * u3 + u33 * u3 * u3) / (1.0 + u2 * u2 + u3 * u3)


def quasilinear_operator(fld, x2, x3):
    """div(grad u / W) + u_3 / W with W = sqrt(1 + |grad u|^2), from exact derivatives.

    Equals (L u - P) / W, so it vanishes on solutions and is <= 0 on
    supersolutions.
    """
    g = fld.gradient(x2, x3)
    hs = fld.hessian(x2, x3)
    weight = np.sqrt(1.0 + g[0] ** 2 + g[1] ** 2)
    lu = hs[0] + hs[2] + g[1]
    return (lu - nonlinear_term(g, hs)) / weight


class Field:
    """A scalar field on the plane with exact first and second derivatives."""

    def value(self, x2, x3):
        raise NotImplementedError

    def gradient(self, x2, x3):
        raise NotImplementedError

    def hessian(self, x2, x3):
        raise NotImplementedError

    def __call__(self, x2, x3):
        return self.value(x2, x3)


@dataclass(frozen=True)
class PlaneSolution(Field):
    """The vertical plane u = a x2 + b; an exact solution with P = 0 and Lu = 0."""

    a: float = 0.0
    b: float = 0.0

    def value(self, x2, x3):
        return self.a * np.asarray(x2, float) + self.b + 0.0 * np.asarray(x3, float)

    def gradient(self, x2, x3):
        z = 0.0 * (np.asarray(x2, float) + np.asarray(x3, float))
        return (z + self.a, z)

    def hessian(self, x2, x3):
        z = 0.0 * (np.asarray(x2, float) + np.asarray(x3, float))
        return (z, z, z)


def plane_solution(a, b):
    return PlaneSolution(float(a), float(b))


# --- tilted grim reapers ----------------------------------------------------


@dataclass(frozen=True)
class TiltedReaper(Field):
    """Tilted grim reaper graph over the strip |x2 - apex.x2| < pi / (2B).

    u = orientation * (A log cos(B (x2 - a2)) + c (x3 - a3))

    with asymptotic slope c > 0, A = (1 + c^2)/c and B = c / sqrt(1 + c^2).
    These are the unique amplitude and frequency making the nonlinear residual
    vanish.  ``orientation = -1`` gives the convex profile used as an upper
    barrier.
    """

    slope: float
    apex_offset: Point2 = Point2(0.0, 0.0)
    orientation: int = 1

    def __post_init__(self):
        if not self.slope > 0:
            raise ConfigurationError("tilted reaper slope must be positive")
        if self.orientation not in (1, -1):
            raise ConfigurationError("orientation must be +1 or -1")
        object.__setattr__(self, "apex_offset", Point2(*map(float, self.apex_offset)))

    @classmethod
    def from_tilt_angle(cls, zeta, apex_offset=Point2(0.0, 0.0), orientation=-1):
        """Reaper with tilt angle zeta in (0, pi/2): slope cot(zeta), B = cos(zeta)."""
        if not 0.0 < zeta < math.pi / 2:
            raise ConfigurationError("tilt angle must lie in (0, pi/2)")
        return cls(math.cos(zeta) / math.sin(zeta), apex_offset, orientation)

    @property
    def amplitude(self):
        return (1.0 + self.slope**2) / self.slope

    @property
    def frequency(self):
        return self.slope / math.sqrt(1.0 + self.slope**2)

    @property
    def strip_halfwidth(self):
        return math.pi / (2.0 * self.frequency)

    @property
    def strip_width(self):
        return 2.0 * self.strip_halfwidth

    def in_strip(self, x2):
        return np.abs(self.frequency * (np.asarray(x2, float) - self.apex_offset.x2)) < math.pi / 2

    def _phase(self, x2):
        return self.frequency * (np.asarray(x2, float) - self.apex_offset.x2)

    def value(self, x2, x3):
        theta = self._phase(x2)
        if np.any(np.abs(theta) >= math.pi / 2):
            raise DomainError("point outside the reaper strip")
        base = self.amplitude * np.log(np.cos(theta)) + self.slope * (np.asarray(x3, float) - self.apex_offset.x3)
        return self.orientation * base

    def gradient(self, x2, x3):
        theta = self._phase(x2)
        u2 = -self.amplitude * self.frequency * np.tan(theta)
        u3 = self.slope + 0.0 * theta + 0.0 * np.asarray(x3, float)
        return (self.orientation * u2, self.orientation * u3)

    def hessian(self, x2, x3):
        theta = self._phase(x2)
        z = 0.0 * theta + 0.0 * np.asarray(x3, float)
        u22 = -self.amplitude * self.frequency**2 / np.cos(theta) ** 2 + z
        return (self.orientation * u22, z, z)


def tilted_reaper_eval(r: TiltedReaper, p) -> float:
    p = Point2(*p)
    if not bool(r.in_strip(p.x2)):
        raise DomainError(f"x2 = {p.x2} lies outside the reaper strip")
    return float(r.value(p.x2, p.x3))


# --- superbarrier -----------------------------------------------------------


@dataclass(frozen=True)
class Superbarrier(Field):
    """A w_alpha + K with w_alpha = exp(-(x3 + a x2)/(1+a^2)) + exp(-(x3 - a x2)/(1+a^2))."""

    alpha: float
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError("alpha must be >= 0")

    def _parts(self, x2, x3):
        beta = 1.0 / (1.0 + self.alpha**2)
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        ep = np.exp(-beta * (x3 + self.alpha * x2))
        em = np.exp(-beta * (x3 - self.alpha * x2))
        return beta, ep, em

    def value(self, x2, x3):
        _, ep, em = self._parts(x2, x3)
        return self.scale * (ep + em) + self.shift

    def gradient(self, x2, x3):
        beta, ep, em = self._parts(x2, x3)
        a = self.alpha
        return (self.scale * (-beta * a * ep + beta * a * em), self.scale * (-beta * (ep + em)))

    def hessian(self, x2, x3):
        beta, ep, em = self._parts(x2, x3)
        a = self.alpha
        b2 = beta * beta
        return (
            self.scale * b2 * a * a * (ep + em),
            self.scale * b2 * a * (ep - em),
            self.scale * b2 * (ep + em),
        )


def in_wedge_slope(alpha, x2, x3):
    return np.asarray(x3, float) - alpha * np.abs(np.asarray(x2, float)) >= -1e-12


def superbarrier_w(alpha, p) -> float:
    """w_alpha at p, defined on V_alpha = {x3 >= alpha |x2|}."""
    p = Point2(*p)
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    if not bool(in_wedge_slope(alpha, p.x2, p.x3)):
        raise DomainError(f"point {tuple(p)} is outside V_alpha for alpha={alpha}")
    return float(Superbarrier(alpha).value(p.x2, p.x3))


# --- Green's function and Bessel-type L-harmonic functions -------------------


def green_L_xy(x2, x3, xp2, xp3):
    """Vectorised Green's function of L: K0(|x - x'|/2) exp((x'_3 - x_3)/2) / (2 pi)."""
    x2, x3, xp2, xp3 = np.broadcast_arrays(*(np.asarray(v, float) for v in (x2, x3, xp2, xp3)))
    r = np.hypot(x2 - xp2, x3 - xp3)
    if np.any(r == 0.0):
        raise SingularityError("Green's function evaluated at coincident points")
    # e^{-r/2} from the scaled K0 combined with the drift factor avoids overflow
    return specfun.bessel_k0e(0.5 * r) * np.exp(0.5 * (xp3 - x3) - 0.5 * r) / (2.0 * math.pi)


def green_L(x, xp) -> float:
    x = Point2(*x)
    xp = Point2(*xp)
    return float(green_L_xy(x.x2, x.x3, xp.x2, xp.x3))


class UKField(Field):
    """u_K = exp(-x3/2) K0(|x|/2), L-harmonic away from the origin."""

    def value(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        r = np.hypot(x2, x3)
        if np.any(r == 0.0):
            raise SingularityError("u_K is singular at the origin")
        return specfun.bessel_k0e(0.5 * r) * np.exp(-0.5 * x3 - 0.5 * r)

    def gradient(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        r = np.hypot(x2, x3)
        if np.any(r == 0.0):
            raise SingularityError("u_K is singular at the origin")
        damp = np.exp(-0.5 * x3 - 0.5 * r)
        k0 = specfun.bessel_k0e(0.5 * r) * damp
        k1 = specfun.bessel_k1e(0.5 * r) * damp
        # d/dx K0(r/2) = -K1(r/2) x/(2r)
        return (-0.5 * k1 * x2 / r, -0.5 * k0 - 0.5 * k1 * x3 / r)


class UIField(Field):
    """u_I = exp(-x3/2) I0(|x|/2), L-harmonic everywhere."""

    def value(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        r = np.hypot(x2, x3)
        return specfun.bessel_i0e(0.5 * r) * np.exp(0.5 * r - 0.5 * x3)


def u_K_eval(p) -> float:
    p = Point2(*p)
    return float(UKField().value(p.x2, p.x3))


def u_I_eval(p) -> float:
    p = Point2(*p)
    return float(UIField().value(p.x2, p.x3))


# --- exponential-integral barrier ------------------------------------------


def ei_barrier_x3(c_P, b, x3):
    """Vectorised c_P (e^{-b} Ei(b) - e^{-x3} Ei(x3)) for x3 <= b < 0."""
    x3 = np.asarray(x3, float)
    if not b < 0:
        raise DomainError("the Ei barrier needs an anchor b < 0")
    if np.any(x3 > b):
        raise DomainError("the Ei barrier is defined for x3 <= b")
    return c_P * (specfun.expint_ei_scaled(b) - specfun.expint_ei_scaled(x3))


def ei_barrier(c_P, b, x3) -> float:
    """Barrier w_b with L w_b = c_P / x3^2 on {x3 < b}, vanishing on x3 = b."""
    if not c_P > 0:
        raise DomainError("c_P must be positive")
    if not x3 < b < 0:
        raise DomainError(f"need x3 < b < 0, got x3={x3}, b={b}")
    return float(ei_barrier_x3(c_P, b, x3))


# --- barrier reefs ----------------------------------------------------------


@dataclass(frozen=True)
class BarrierReef:
    """N period-shifted copies of one convex tilted reaper; their pointwise minimum.

    The anchor depth is b = (c_prime / eps1)^2, the tilt is
    zeta = arccos(eps / (4 b)), and the period tau is the x2-width of one
    copy's profile at height ``flat_height`` above its apex (default eps/4).
    Copy k has its apex at (origin_x2 + k tau, 0).
    """

    n_copies: int
    eps1: float
    eps: float
    c_prime: float = 1.0
    flat_height: float | None = None
    origin_x2: float = 0.0
    reaper: TiltedReaper = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_copies < 1:
            raise ConfigurationError("a reef needs at least one copy")
        if self.eps1 <= 0 or self.eps <= 0:
            raise ConfigurationError("eps1 and eps must be positive")
        if self.flat_height is None:
            object.__setattr__(self, "flat_height", self.eps / 4.0)
        ratio = self.eps / (4.0 * self.anchor_depth)
        if not 0.0 < ratio < 1.0:
            raise ConfigurationError(f"eps / (4 b) = {ratio} must lie in (0, 1)")
        object.__setattr__(self, "reaper", TiltedReaper.from_tilt_angle(self.zeta, orientation=-1))

    @property
    def anchor_depth(self):
        return (self.c_prime / self.eps1) ** 2

    @property
    def zeta(self):
        return math.acos(self.eps / (4.0 * self.anchor_depth))

    @property
    def tau(self):
        z = self.zeta
        return (2.0 / math.cos(z)) * math.acos(math.exp(-self.flat_height * math.cos(z) * math.sin(z)))

    @property
    def halfwidth(self):
        return math.pi / (2.0 * math.cos(self.zeta))

    @property
    def support(self):
        """Open x2-interval on which the reef is finite."""
        return (self.origin_x2 - self.halfwidth, self.origin_x2 + self.halfwidth + (self.n_copies - 1) * self.tau)

    def value(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        x2, x3 = np.broadcast_arrays(x2, x3)
        out = np.full(x2.shape, OUTSIDE)
        r = self.reaper
        amp, freq, slope = r.amplitude, r.frequency, r.slope
        rel = x2 - self.origin_x2
        # only the copies whose strips contain the point can contribute
        k_lo = np.maximum(np.ceil((rel - self.halfwidth) / self.tau), 0)
        k_hi = np.minimum(np.floor((rel + self.halfwidth) / self.tau), self.n_copies - 1)
        span = int(np.max(k_hi - k_lo, initial=-1)) + 1
        for j in range(max(span, 0)):
            k = k_lo + j
            valid = k <= k_hi
            theta = freq * (rel - k * self.tau)
            ok = valid & (np.abs(theta) < math.pi / 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = -amp * np.log(np.cos(np.where(ok, theta, 0.0))) - slope * x3
            out = np.where(ok, np.minimum(out, cand), out)
        return out


def barrier_reef_eval(r: BarrierReef, p) -> float:
    p = Point2(*p)
    return float(r.value(p.x2, p.x3))


# --- doubling obstruction ---------------------------------------------------


def _conformal_ricci_plus_a2(dphi, hess_phi, normal):
    """Ric(nu, nu) + |A|^2 for a Euclidean plane in the metric e^{2 phi} delta on R^3.

    Uses Ric_g = -(n-2)(Hess phi - dphi dphi) - (Lap phi + (n-2)|dphi|^2) delta
    and, for a totally geodesic Euclidean plane, |A|^2 = 2 e^{-2 phi} (d_N phi)^2.
    Both returned terms still need the e^{-2 phi} factor applied by the caller.
    """
    n = 3
    dphi = np.asarray(dphi, float)
    hess_phi = np.asarray(hess_phi, float)
    normal = np.asarray(normal, float) / np.linalg.norm(normal)
    d_n = float(dphi @ normal)
    ric_nn = -(n - 2) * (normal @ hess_phi @ normal - d_n**2) - (np.trace(hess_phi) + (n - 2) * float(dphi @ dphi))
    a2 = (n - 1) * d_n**2
    return ric_nn + a2


def doubling_obstruction(p, normal=(1.0, 0.0, 0.0)) -> float:
    """Ric_M(nu, nu) + |A|^2 at p = (x1, x2, x3) for a vertical plane in M = (R^3, e^{x3} delta).

    ``normal`` must be horizontal (a vertical plane contains e3).
    """
    x1, x2, x3 = map(float, p)
    normal = np.asarray(normal, float)
    if abs(normal[2]) > 1e-14 * np.linalg.norm(normal):
        raise DomainError("the plane must be vertical: its normal needs a zero e3 component")
    # e^{x3} delta = e^{2 phi} delta with phi = x3 / 2
    dphi = np.array([0.0, 0.0, 0.5])
    hess_phi = np.zeros((3, 3))
    return math.exp(-x3) * _conformal_ricci_plus_a2(dphi, hess_phi, normal)
