"""Planar domains in the (x2, x3) plane.

x3 is the translation direction ("up").  All domains are treated as closed
sets for membership, so boundary points count as contained; this is what the
finite-difference masks need.

Every domain offers vectorised ``contains_xy`` and ``distance_xy`` taking
arrays of x2 and x3; the module-level functions ``contains`` and
``dist_to_boundary`` are the scalar entry points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError


class Point2(NamedTuple):
    x2: float
    x3: float


def slope_from_half_angle(half_angle: float) -> float:
    """Slope alpha of the wedge {x3 >= alpha |x2|} with the given half-angle."""
    return 1.0 / math.tan(half_angle)


def half_angle_from_slope(slope: float) -> float:
    if slope <= 0:
        raise ConfigurationError("wedge slope must be positive")
    return math.atan2(1.0, slope)


def _segment_distance(x2, x3, a, b):
    """Euclidean distance from points to the closed segment [a, b]."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    if length2 == 0.0:
        return np.hypot(x2 - ax, x3 - ay)
    t = np.clip(((x2 - ax) * dx + (x3 - ay) * dy) / length2, 0.0, 1.0)
    return np.hypot(x2 - (ax + t * dx), x3 - (ay + t * dy))


def _ray_distance(x2, x3, origin, direction):
    ox, oy = origin
    dx, dy = direction
    t = np.maximum((x2 - ox) * dx + (x3 - oy) * dy, 0.0)
    return np.hypot(x2 - (ox + t * dx), x3 - (oy + t * dy))


class Domain:
    """Base class; subclasses are frozen dataclasses."""

    kind = "Domain"
    upward_sausage = False

    def contains_xy(self, x2, x3):
        raise NotImplementedError

    def distance_xy(self, x2, x3):
        """Distance to the boundary for points assumed inside."""
        raise NotImplementedError

    def bounding_box(self):
        """(x2_lo, x2_hi, x3_lo, x3_hi); infinite entries for unbounded sides."""
        return (-math.inf, math.inf, -math.inf, math.inf)

    def has_upward_sausage_property(self) -> bool:
        return self.upward_sausage

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class WholePlane(Domain):
    kind = "WholePlane"
    upward_sausage = True

    def contains_xy(self, x2, x3):
        return np.ones(np.broadcast(x2, x3).shape, dtype=bool)

    def distance_xy(self, x2, x3):
        return np.full(np.broadcast(x2, x3).shape, math.inf)

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Wedge(Domain):
    """Upward wedge {x3 - a3 >= cot(half_angle) |x2 - a2|}."""

    apex: Point2 = Point2(0.0, 0.0)
    half_angle: float = math.pi / 4
    kind = "Wedge"
    upward_sausage = True

    def __post_init__(self):
        object.__setattr__(self, "apex", Point2(*map(float, self.apex)))
        if not 0.0 < self.half_angle < math.pi / 2:
            raise ConfigurationError(f"wedge half_angle must lie in (0, pi/2), got {self.half_angle}")

    @property
    def slope(self) -> float:
        return slope_from_half_angle(self.half_angle)

    def contains_xy(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        # tolerance absorbs rounding on the sides
        return (x3 - self.apex.x3) - self.slope * np.abs(x2 - self.apex.x2) >= -1e-12

    def distance_xy(self, x2, x3):
        s, c = math.sin(self.half_angle), math.cos(self.half_angle)
        left = _ray_distance(x2, x3, self.apex, (-s, c))
        right = _ray_distance(x2, x3, self.apex, (s, c))
        return np.minimum(left, right)

    def bounding_box(self):
        return (-math.inf, math.inf, self.apex.x3, math.inf)

    def to_dict(self):
        return {"kind": self.kind, "apex": list(self.apex), "half_angle": self.half_angle}


@dataclass(frozen=True)
class SlantedUpperHalfPlane(Domain):
    """{x3 >= slope * x2 + offset}."""

    slope: float = 0.0
    offset: float = 0.0
    kind = "SlantedUpperHalfPlane"
    upward_sausage = True

    def contains_xy(self, x2, x3):
        return np.asarray(x3) - self.slope * np.asarray(x2) - self.offset >= -1e-12

    def distance_xy(self, x2, x3):
        return np.abs(np.asarray(x3) - self.slope * np.asarray(x2) - self.offset) / math.hypot(1.0, self.slope)

    def to_dict(self):
        return {"kind": self.kind, "slope": self.slope, "offset": self.offset}


@dataclass(frozen=True)
class LowerHalfPlane(Domain):
    """{x3 <= b}."""

    b: float = 0.0
    kind = "LowerHalfPlane"

    def contains_xy(self, x2, x3):
        return np.asarray(x3) + 0.0 * np.asarray(x2) <= self.b + 1e-12

    def distance_xy(self, x2, x3):
        return np.abs(self.b - np.asarray(x3)) + 0.0 * np.asarray(x2)

    def bounding_box(self):
        return (-math.inf, math.inf, -math.inf, self.b)

    def to_dict(self):
        return {"kind": self.kind, "b": self.b}


@dataclass(frozen=True)
class UShape(Domain):
    """Plane minus the upward half-infinite rectangle [-t, t] x [-s, inf)."""

    t: float = 1.0
    s: float = 1.0
    kind = "UShape"

    def __post_init__(self):
        if self.t <= 0 or self.s <= 0:
            raise ConfigurationError("UShape requires t > 0 and s > 0")

    def contains_xy(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        return (np.abs(x2) >= self.t - 1e-12) | (x3 <= -self.s + 1e-12)

    def distance_xy(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        bottom = _segment_distance(x2, x3, (-self.t, -self.s), (self.t, -self.s))
        left = _ray_distance(x2, x3, (-self.t, -self.s), (0.0, 1.0))
        right = _ray_distance(x2, x3, (self.t, -self.s), (0.0, 1.0))
        return np.minimum(bottom, np.minimum(left, right))

    def to_dict(self):
        return {"kind": self.kind, "t": self.t, "s": self.s}


@dataclass(frozen=True)
class Sausage(Domain):
    """Upward sausage: union over 0 <= t < width^2 of B_width(base) + t e3."""

    base: Point2 = Point2(0.0, 0.0)
    width: float = 1.0
    kind = "Sausage"

    def __post_init__(self):
        object.__setattr__(self, "base", Point2(*map(float, self.base)))
        if self.width <= 0:
            raise ConfigurationError("sausage width must be positive")

    def _axis(self):
        top = (self.base.x2, self.base.x3 + self.width**2)
        return self.base, top

    def contains_xy(self, x2, x3):
        a, b = self._axis()
        return _segment_distance(np.asarray(x2, float), np.asarray(x3, float), a, b) <= self.width + 1e-12

    def distance_xy(self, x2, x3):
        a, b = self._axis()
        return np.abs(self.width - _segment_distance(np.asarray(x2, float), np.asarray(x3, float), a, b))

    def bounding_box(self):
        w = self.width
        return (self.base.x2 - w, self.base.x2 + w, self.base.x3 - w, self.base.x3 + w * w + w)

    def to_dict(self):
        return {"kind": self.kind, "base": list(self.base), "width": self.width}


@dataclass(frozen=True)
class ExteriorDisk(Domain):
    """{|p| >= radius}."""

    radius: float = 1.0
    kind = "ExteriorDisk"

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigurationError("exterior disk radius must be positive")

    def contains_xy(self, x2, x3):
        return np.hypot(x2, x3) >= self.radius - 1e-12

    def distance_xy(self, x2, x3):
        return np.abs(np.hypot(x2, x3) - self.radius)

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius}


@dataclass(frozen=True)
class Rectangle(Domain):
    """Closed axis-aligned box (x2_lo, x2_hi, x3_lo, x3_hi); solver truncations."""

    x2_lo: float = -1.0
    x2_hi: float = 1.0
    x3_lo: float = -1.0
    x3_hi: float = 1.0
    kind = "Rectangle"

    def __post_init__(self):
        if not (self.x2_lo < self.x2_hi and self.x3_lo < self.x3_hi):
            raise ConfigurationError("rectangle bounds must satisfy lo < hi")

    @property
    def bounds(self):
        return (self.x2_lo, self.x2_hi, self.x3_lo, self.x3_hi)

    def contains_xy(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        eps = 1e-12
        return (
            (x2 >= self.x2_lo - eps) & (x2 <= self.x2_hi + eps) & (x3 >= self.x3_lo - eps) & (x3 <= self.x3_hi + eps)
        )

    def distance_xy(self, x2, x3):
        x2 = np.asarray(x2, float)
        x3 = np.asarray(x3, float)
        return np.minimum(
            np.minimum(np.abs(x2 - self.x2_lo), np.abs(self.x2_hi - x2)),
            np.minimum(np.abs(x3 - self.x3_lo), np.abs(self.x3_hi - x3)),
        )

    def bounding_box(self):
        return self.bounds

    def to_dict(self):
        return {"kind": self.kind, "bounds": list(self.bounds)}


_KINDS = {
    cls.kind: cls
    for cls in (WholePlane, Wedge, SlantedUpperHalfPlane, LowerHalfPlane, UShape, Sausage, ExteriorDisk, Rectangle)
}


def domain_from_dict(data: dict) -> Domain:
    data = dict(data)
    try:
        cls = _KINDS[data.pop("kind")]
    except KeyError as exc:
        raise ConfigurationError(f"unknown or missing domain kind: {exc}") from None
    if cls is Rectangle and "bounds" in data:
        return Rectangle(*map(float, data.pop("bounds")))
    for key in ("apex", "base"):
        if key in data:
            data[key] = Point2(*map(float, data[key]))
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def contains(d: Domain, p) -> bool:
    p = Point2(*p)
    return bool(d.contains_xy(p.x2, p.x3))


def dist_to_boundary(d: Domain, p) -> float:
    """Euclidean distance from ``p`` to the boundary of ``d`` (inf for the plane)."""
    p = Point2(*p)
    if not contains(d, p):
        raise DomainError(f"point {tuple(p)} is not in {d!r}")
    return float(d.distance_xy(p.x2, p.x3))


def has_upward_sausage_property(d: Domain) -> bool:
    return d.has_upward_sausage_property()


def sausage_points(p, rho, rng, n):
    """Random points of the open sausage S^+_rho(p)."""
    p = Point2(*p)
    t = rng.uniform(0.0, rho * rho, n)
    r = rho * np.sqrt(rng.uniform(0.0, 1.0, n)) * (1.0 - 1e-9)
    theta = rng.uniform(0.0, 2 * math.pi, n)
    return p.x2 + r * np.cos(theta), p.x3 + t + r * np.sin(theta)


def find_sausage_violation(d: Domain, rng, n_probes=10_000, box=(-10.0, 10.0, -10.0, 10.0), per_probe=16):
    """Search for p in d and q in S^+_rho(p) with q outside d, rho = dist(p, boundary).

    Returns ``(p, q)`` or ``None``.  Used to cross-check the analytic
    ``has_upward_sausage_property`` answers.
    """
    x2_lo, x2_hi, x3_lo, x3_hi = box
    found = 0
    while found < n_probes:
        x2 = rng.uniform(x2_lo, x2_hi, 4 * n_probes)
        x3 = rng.uniform(x3_lo, x3_hi, 4 * n_probes)
        inside = np.asarray(d.contains_xy(x2, x3), bool)
        for a, b in zip(x2[inside], x3[inside]):
            if found >= n_probes:
                break
            found += 1
            rho = float(d.distance_xy(a, b))
            if not math.isfinite(rho) or rho <= 0:
                continue
            q2, q3 = sausage_points((a, b), rho, rng, per_probe)
            ok = np.asarray(d.contains_xy(q2, q3), bool)
            if not ok.all():
                k = int(np.argmin(ok))
                return Point2(a, b), Point2(float(q2[k]), float(q3[k]))
    return None
