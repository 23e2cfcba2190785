import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbitlab import hyperbolic as hyp

finite_x = st.floats(-50.0, 50.0)
log_y = st.floats(-4.0, 4.0)


def random_point(rng):
    return hyp.HalfPlanePoint(rng.uniform(-10, 10), math.exp(rng.uniform(-3, 3)))


def geodesic_length_by_integration(p, q, n=200_000):
    """Independent oracle: numerically integrate |dz|/y along the connecting
    geodesic (circle arc or vertical line)."""
    if abs(p.x - q.x) < 1e-14:
        return abs(math.log(q.y / p.y))
    c = (q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y) / (2.0 * (q.x - p.x))
    r = math.hypot(p.x - c, p.y)
    th1 = math.atan2(p.y, p.x - c)
    th2 = math.atan2(q.y, q.x - c)
    th = np.linspace(th1, th2, n)
    y = r * np.sin(th)
    speed = r / y  # |dz| = r dtheta, ds = |dz|/y
    return float(np.trapezoid(speed, th)) * (1 if th2 > th1 else -1)


class TestDistance:
    def test_identity(self):
        assert hyp.distance((0.0, 1.0), (0.0, 1.0)) == 0.0

    def test_vertical_log_ratio(self):
        assert abs(hyp.distance((0.0, 1.0), (0.0, math.e ** 2)) - 2.0) < 1e-14

    def test_arcosh_value_vs_integration_oracle(self):
        # frozen closed form arcosh(3/2) cross-checked by quadrature
        d = hyp.distance((0.0, 1.0), (1.0, 1.0))
        assert abs(d - 0.9624236501192069) < 1e-12
        oracle = geodesic_length_by_integration(
            hyp.HalfPlanePoint(0.0, 1.0), hyp.HalfPlanePoint(1.0, 1.0))
        assert abs(d - abs(oracle)) < 1e-6

    def test_triangle_inequality_bulk(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-10, 10, (10_000, 3))
        y = np.exp(rng.uniform(-3, 3, (10_000, 3)))

        def d(i, j):
            arg = 1.0 + ((x[:, i] - x[:, j]) ** 2 + (y[:, i] - y[:, j]) ** 2) / (
                2.0 * y[:, i] * y[:, j])
            return np.arccosh(np.maximum(arg, 1.0))

        assert np.all(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            hyp.HalfPlanePoint(0.0, -1.0)
        with pytest.raises(ValueError):
            hyp.HalfPlanePoint(math.inf, 1.0)


class TestIsometry:
    def test_identity_acts_trivially(self):
        p = hyp.HalfPlanePoint(0.3, 2.0)
        q = hyp.apply(hyp.Isometry.identity(), p)
        assert abs(q.x - p.x) < 1e-15 and abs(q.y - p.y) < 1e-15

    def test_translation_and_inversion(self):
        T = hyp.Isometry.translation(1.0)
        S = hyp.Isometry(0.0, -1.0, 1.0, 0.0)
        p = hyp.HalfPlanePoint(0.0, 1.0)
        assert hyp.apply(T, p).as_tuple() == (1.0, 1.0)
        q = hyp.apply(S, p)
        assert abs(q.x) < 1e-15 and abs(q.y - 1.0) < 1e-15

    def test_det_normalized(self):
        g = hyp.Isometry(2.0, 0.0, 0.0, 0.5)
        assert abs(g.a * g.d - g.b * g.c - 1.0) <= 1e-12

    def test_bad_det_rejected(self):
        with pytest.raises(ValueError):
            hyp.Isometry(1.0, 0.0, 0.0, 2.0)

    @settings(max_examples=100, deadline=None)
    @given(finite_x, log_y, finite_x, log_y, st.integers(0, 120))
    def test_distance_invariance(self, x1, v1, x2, v2, word):
        # pseudo-random word in S, T from the integer seed
        g = hyp.Isometry.identity()
        S = hyp.Isometry(0.0, -1.0, 1.0, 0.0)
        T = hyp.Isometry.translation(1.0)
        w = word
        for _ in range(6):
            g = g.compose(S if w % 2 else T)
            w //= 2
        p = hyp.HalfPlanePoint(x1, math.exp(v1))
        q = hyp.HalfPlanePoint(x2, math.exp(v2))
        d0 = hyp.distance(p, q)
        d1 = hyp.distance(hyp.apply(g, p), hyp.apply(g, q))
        assert abs(d0 - d1) <= 1e-9 * (1.0 + d0)

    def test_composition_associative(self):
        rng = np.random.default_rng(4)
        mats = []
        for _ in range(3):
            u, v = sorted(rng.uniform(-4, 4, 2))
            mats.append(hyp.Isometry.hyperbolic_with_axis(u, v + 0.5, rng.uniform(0.5, 2)))
        a, b, c = mats
        lhs = a.compose(b).compose(c)
        rhs = a.compose(b.compose(c))
        assert np.allclose(lhs.matrix(), rhs.matrix(), atol=1e-12)

    def test_hyperbolic_with_axis_translates_by_length(self):
        g = hyp.Isometry.hyperbolic_with_axis(-1.0, 1.0, 1.5)
        # apex of the axis semicircle is (0, 1); translation length 1.5
        p = hyp.HalfPlanePoint(0.0, 1.0)
        assert abs(hyp.distance(p, hyp.apply(g, p)) - 1.5) < 1e-9


class TestGeodesics:
    def test_segment_endpoints_and_length(self):
        seg = hyp.GeodesicSegment(hyp.HalfPlanePoint(-2.0, 1.0),
                                  hyp.HalfPlanePoint(3.0, 0.5))
        assert seg.point_at(0.0) == seg.start
        assert seg.point_at(1.0) == seg.end
        mid = seg.point_at(0.5)
        assert abs(hyp.distance(seg.start, mid) - seg.length / 2) < 1e-9

    def test_projection_fixes_axis_points(self):
        axis = hyp.FullGeodesic((0.0, 1.0), (0.0, 2.0))
        p = hyp.HalfPlanePoint(0.0, 5.0)
        q = hyp.project_to_geodesic(p, axis)
        assert abs(q.x) < 1e-12 and abs(q.y - 5.0) < 1e-12

    def test_projection_symmetry(self):
        axis = hyp.FullGeodesic((0.0, 1.0), (0.0, 2.0))
        a = hyp.project_to_geodesic((1.0, 1.0), axis)
        b = hyp.project_to_geodesic((-1.0, 1.0), axis)
        assert abs(a.y - b.y) < 1e-12
        assert abs(a.y - math.sqrt(2.0)) < 1e-12  # foot of (1,1) is (0, |z|)

    def test_projection_minimizes_distance(self):
        rng = np.random.default_rng(1)
        axis = hyp.FullGeodesic((0.0, 1.0), (0.0, 2.0))
        for _ in range(50):
            p = random_point(rng)
            foot = hyp.project_to_geodesic(p, axis)
            d0 = hyp.distance(p, foot)
            for t in np.linspace(-4, 4, 81):
                other = axis.point_at_parameter(axis.foot_parameter(p) + t)
                assert d0 <= hyp.distance(p, other) + 1e-9

    def test_projection_one_lipschitz(self):
        rng = np.random.default_rng(2)
        axis = hyp.FullGeodesic((0.0, 1.0), (0.0, 2.0))
        for _ in range(200):
            p, q = random_point(rng), random_point(rng)
            dp = hyp.distance(hyp.project_to_geodesic(p, axis),
                              hyp.project_to_geodesic(q, axis))
            assert dp <= hyp.distance(p, q) + 1e-9

    def test_segment_projection_clamps(self):
        seg = hyp.GeodesicSegment(hyp.HalfPlanePoint(0.0, 1.0),
                                  hyp.HalfPlanePoint(0.0, 2.0))
        q = hyp.project_to_geodesic((0.0, 10.0), seg)
        assert abs(q.y - 2.0) < 1e-12

    def test_ball_projection_diameter_vs_dense_oracle(self):
        # frozen oracle value from a 2e6-point boundary sweep
        axis = hyp.FullGeodesic((0.0, 1.0), (0.0, 2.0))
        theta = np.linspace(0.0, 2 * math.pi, 20_000, endpoint=False)
        rho = math.tanh(0.5)
        w = rho * np.exp(1j * theta)
        z = 1j * (1 + w) / (1 - w)
        pts = [(float(zz.real + 10.0), float(zz.imag)) for zz in z]
        diam = hyp.set_projection_diameter(pts, axis)
        assert abs(diam - 0.23334402454842484) < 1e-3

    def test_empty_set_rejected(self):
        axis = hyp.FullGeodesic((0.0, 1.0), (0.0, 2.0))
        with pytest.raises(ValueError):
            hyp.set_projection_diameter([], axis)


class TestBallsAndHoroballs:
    def test_ball_area_monte_carlo(self):
        rng = np.random.default_rng(3)
        for R in (1.0, 2.0, 3.0):
            X = 2.0 * math.sinh(R / 2) * math.exp(R / 2)
            n = 400_000
            x = rng.uniform(-X, X, n)
            v = rng.uniform(-R, R, n)
            y = np.exp(v)
            arg = np.maximum(1.0, 1.0 + (x * x + (y - 1.0) ** 2) / (2.0 * y))
            inside = np.arccosh(arg) <= R
            w = np.where(inside, np.exp(-v), 0.0) * (2 * X) * (2 * R)
            est, se = w.mean(), w.std(ddof=1) / math.sqrt(n)
            assert abs(est - hyp.ball_area(R)) <= 3.0 * se

    def test_horoball_membership_conjugated(self):
        g = hyp.Isometry.translation(2.0)
        hb = hyp.Horoball(1.0, g)
        assert hb.contains((5.0, 1.5))
        assert not hb.contains((5.0, 0.5))

    def test_rectangle_closed_form(self):
        X, Y = 3.0, 50.0
        closed = 2.0 * X * (1.0 - 1.0 / Y)
        assert abs(hyp.rectangle_volume_quadrature(X, Y) - closed) < 1e-10
        R, b, C = 10.0, 0.8, 1.3
        vol = hyp.horoball_ball_volume(R, b, C)
        assert abs(vol - 2 * C * math.exp(b * R / 2) * (1 - math.exp(-b * R))) < 1e-12

    def test_rectangle_degenerate_small_R(self):
        assert hyp.horoball_ball_volume(1e-9, 1.0) < 1e-8

    def test_rectangle_growth_exponent(self):
        b = 0.6
        radii = np.arange(5.0, 20.5, 1.0)
        vols = [hyp.horoball_ball_volume(R, b) for R in radii]
        slope = np.polyfit(radii, np.log(vols), 1)[0]
        assert abs(slope - b / 2) <= 0.02

    def test_rectangle_domain_checks(self):
        with pytest.raises(ValueError):
            hyp.horoball_ball_volume(-1.0, 0.5)
        with pytest.raises(ValueError):
            hyp.horoball_ball_volume(1.0, 1.5)


def test_parse_entry_rationals():
    assert hyp.parse_entry("3/2") == 1.5
    assert hyp.parse_entry("0.25") == 0.25
    assert hyp.parse_entry(2) == 2.0
