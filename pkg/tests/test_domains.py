import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab.domains import (
    ExteriorDisk,
    LowerHalfPlane,
    Point2,
    Rectangle,
    Sausage,
    SlantedUpperHalfPlane,
    UShape,
    Wedge,
    WholePlane,
    contains,
    dist_to_boundary,
    domain_from_dict,
    find_sausage_violation,
    half_angle_from_slope,
    has_upward_sausage_property,
    slope_from_half_angle,
)
from translator_lab.errors import ConfigurationError, DomainError

ALL_DOMAINS = [
    WholePlane(),
    Wedge(Point2(0.0, 0.0), math.pi / 4),
    Wedge(Point2(1.5, -2.0), 0.3),
    Wedge(Point2(0.0, 0.0), 1.4),
    SlantedUpperHalfPlane(0.7, -1.0),
    LowerHalfPlane(0.0),
    UShape(1.0, 1.0),
    Sausage(Point2(0.0, 0.0), 2.0),
    ExteriorDisk(1.0),
    Rectangle(-3.0, 3.0, -2.0, 5.0),
]

# explicit (p, q) pairs with p in d, q in the upward sausage of p, q outside d
WITNESSES = {
    "LowerHalfPlane": (LowerHalfPlane(0.0), (0.0, -1.0), (0.0, 0.5)),
    "UShape": (UShape(1.0, 1.0), (0.0, -3.0), (0.0, 0.0)),
    "Sausage": (Sausage(Point2(0.0, 0.0), 2.0), (0.0, 5.0), (0.0, 6.5)),
    "ExteriorDisk": (ExteriorDisk(1.0), (0.0, -3.0), (0.0, 0.0)),
    "Rectangle": (Rectangle(-3.0, 3.0, -2.0, 5.0), (0.0, 3.0), (0.0, 5.5)),
}


def test_membership_examples():
    assert contains(Wedge(Point2(0, 0), math.pi / 4), (0, 1))
    assert not contains(UShape(1, 1), (0, 0))
    s = Sausage(Point2(0, 0), 2.0)
    assert contains(s, (0, 3.9))
    assert not contains(s, (0, 6.1))


def test_distance_examples():
    assert dist_to_boundary(LowerHalfPlane(0.0), (5, -3)) == 3.0
    assert dist_to_boundary(Wedge(Point2(0, 0), math.pi / 4), (0, math.sqrt(2))) == pytest.approx(1.0, abs=1e-15)
    assert dist_to_boundary(ExteriorDisk(1.0), (3, 0)) == 2.0
    assert dist_to_boundary(WholePlane(), (1, 2)) == math.inf


def test_distance_outside_raises():
    with pytest.raises(DomainError):
        dist_to_boundary(UShape(1, 1), (0, 0))


@pytest.mark.parametrize("kind, expected", [
    (WholePlane(), True),
    (Wedge(Point2(3, -1), 0.2), True),
    (SlantedUpperHalfPlane(-2.0, 1.0), True),
    (UShape(1, 1), False),
    (LowerHalfPlane(0), False),
])
def test_sausage_property_examples(kind, expected):
    assert has_upward_sausage_property(kind) is expected


@pytest.mark.parametrize("d", [d for d in ALL_DOMAINS if d.has_upward_sausage_property()], ids=repr)
def test_sausage_property_confirmed_by_probes(d):
    rng = np.random.default_rng(1)
    assert find_sausage_violation(d, rng, n_probes=10_000) is None


@pytest.mark.parametrize("name", sorted(WITNESSES))
def test_sausage_witnesses(name):
    d, p, q = WITNESSES[name]
    assert not d.has_upward_sausage_property()
    assert contains(d, p)
    rho = dist_to_boundary(d, p)
    # q lies in the ball of radius rho around p + t e3 for some t in [0, rho^2)
    t = min(max(q[1] - p[1], 0.0), rho * rho * (1 - 1e-12))
    assert math.hypot(q[0] - p[0], q[1] - p[1] - t) < rho
    assert not contains(d, q)


@pytest.mark.parametrize("d", [d for d in ALL_DOMAINS if not d.has_upward_sausage_property()], ids=repr)
def test_random_search_finds_violation(d):
    rng = np.random.default_rng(2)
    assert find_sausage_violation(d, rng, n_probes=10_000) is not None


@pytest.mark.parametrize("d", ALL_DOMAINS[1:], ids=repr)
def test_distance_is_one_lipschitz(d):
    rng = np.random.default_rng(3)
    x2 = rng.uniform(-8, 8, 4000)
    x3 = rng.uniform(-8, 8, 4000)
    inside = d.contains_xy(x2, x3)
    x2, x3 = x2[inside], x3[inside]
    step = rng.normal(size=(2, x2.size)) * 0.05
    y2, y3 = x2 + step[0], x3 + step[1]
    both = d.contains_xy(y2, y3)
    lhs = np.abs(d.distance_xy(x2, x3) - d.distance_xy(y2, y3))[both]
    rhs = np.hypot(*step)[both]
    assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("d", ALL_DOMAINS, ids=repr)
def test_serialization_round_trip(d):
    data = json.loads(json.dumps(d.to_dict()))
    assert domain_from_dict(data) == d


def test_wedge_slope_helpers():
    assert slope_from_half_angle(math.pi / 4) == pytest.approx(1.0)
    assert half_angle_from_slope(slope_from_half_angle(0.3)) == pytest.approx(0.3)


@pytest.mark.parametrize("bad", [
    lambda: Wedge(Point2(0, 0), 0.0),
    lambda: Wedge(Point2(0, 0), math.pi / 2),
    lambda: UShape(0.0, 1.0),
    lambda: Sausage(Point2(0, 0), -1.0),
    lambda: ExteriorDisk(0.0),
    lambda: domain_from_dict({"kind": "Triangle"}),
])
def test_invalid_domains(bad):
    with pytest.raises(ConfigurationError):
        bad()


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.05, 1.5))
def test_wedge_distance_matches_rays(x2, x3, psi):
    w = Wedge(Point2(0.0, 0.0), psi)
    if not contains(w, (x2, x3)):
        return
    # distance to each side ray computed from the side's unit normal
    s, c = math.sin(psi), math.cos(psi)
    d_right = abs(c * x2 - s * x3) if x2 * s + x3 * c >= 0 else math.hypot(x2, x3)
    d_left = abs(c * x2 + s * x3) if -x2 * s + x3 * c >= 0 else math.hypot(x2, x3)
    assert dist_to_boundary(w, (x2, x3)) == pytest.approx(min(d_right, d_left), abs=1e-9)
