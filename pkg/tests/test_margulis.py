import math

import numpy as np
import pytest

from orbitlab import margulis as mg
from orbitlab import model as md

SPACE = md.ModelSpace((md.PlaneFactor(), md.PlaneFactor(), md.LineFactor()),
                      eps_systole=0.1)
MU = md.NorburyModelMeasure(SPACE)
F = mg.MargulisFn(SPACE)

# frozen oracle values: associated Legendre function P_{-1/2}(cosh tau),
# computed with 30-digit mpmath before the build
SPHERE_ORACLE = {1.0: 0.94086215924934982,
                 2.0: 0.79565169560597402,
                 3.0: 0.62336752062420884}


def pt(y1, y2, u=1.0, x=0.0):
    return SPACE.point((x, y1), (x, y2), u)


class TestEvaluate:
    def test_single_plane(self):
        sp1 = md.ModelSpace((md.PlaneFactor(),), eps_systole=0.1)
        f1 = mg.MargulisFn(sp1)
        assert f1(sp1.point((0.0, 1.0))) == 1.0

    def test_max_of_square_roots(self):
        assert F(pt(1.0, 4.0)) == 2.0

    def test_monotone_in_heights(self):
        assert F(pt(1.0, 4.0)) <= F(pt(1.0, 9.0))
        assert F(pt(1.0, 4.0)) <= F(pt(2.0, 4.0))

    def test_comparison_sandwich_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            x = pt(math.exp(rng.uniform(-2, 6)), math.exp(rng.uniform(-2, 6)))
            assert F.comparison(x) / SPACE.n_plane <= F(x) <= F.comparison(x)

    def test_needs_plane_factor(self):
        with pytest.raises(ValueError):
            mg.MargulisFn(md.ModelSpace((md.LineFactor(),), eps_systole=0.1))


class TestSphericalAverage:
    def test_tau_zero(self):
        assert mg.spherical_average((0.0, 4.0), 0.0) == 2.0

    def test_frozen_oracle_values(self):
        for tau, want in SPHERE_ORACLE.items():
            assert mg.spherical_average((0.0, 1.0), tau) == pytest.approx(want, abs=1e-9)

    def test_scaling_covariance(self):
        lam = 5.0
        a = mg.spherical_average((0.0, lam), 2.0)
        b = mg.spherical_average((0.0, 1.0), 2.0)
        assert a == pytest.approx(math.sqrt(lam) * b, rel=1e-12)


class TestBallAverage:
    def test_constant_function_exact(self):
        class One:
            def on_packed(self, rows):
                return np.ones(rows.shape[0])
        ba = mg.ball_average(One(), MU, pt(1.0, 1.0), 3.0, 20_000, seed=1)
        assert ba.value == 1.0

    def test_deep_point_matches_quadrature(self):
        deep = pt(math.exp(9.0), 1.0)
        for tau in (2.0, 4.0):
            ba = mg.ball_average(F, MU, deep, tau, 80_000, seed=2)
            want = mg.ball_average_ratio_quadrature(tau) * F(deep)
            assert abs(ba.value - want) <= 5.0 * ba.std_error + 0.01 * want

    def test_monotone_under_pointwise_domination(self):
        class Comparison:
            def on_packed(self, rows):
                return np.sqrt(rows[:, 1]) + np.sqrt(rows[:, 3])
        x = pt(math.exp(5.0), math.exp(4.5))
        a = mg.ball_average(F, MU, x, 3.0, 60_000, seed=3)
        b = mg.ball_average(Comparison(), MU, x, 3.0, 60_000, seed=3)
        assert a.value <= b.value + 3.0 * (a.std_error + b.std_error)

    def test_ratio_decreasing_in_tau(self):
        qs = [mg.ball_average_ratio_quadrature(t) for t in (2, 3, 4, 5, 6)]
        assert all(b < a for a, b in zip(qs, qs[1:]))
        deep = pt(math.exp(10.0), 1.0)
        mc = [mg.ball_average(F, MU, deep, t, 40_000, seed=4).value / F(deep)
              for t in (2.0, 4.0, 6.0)]
        assert mc[0] > mc[1] > mc[2]

    def test_deterministic(self):
        a = mg.ball_average(F, MU, pt(2.0, 1.0), 2.0, 10_000, seed=5, workers=3)
        b = mg.ball_average(F, MU, pt(2.0, 1.0), 2.0, 10_000, seed=5, workers=3)
        assert a.value == b.value


class TestRegionsAndDrift:
    def test_region_tags(self):
        tau, eps = 4.0, 0.25
        deep = math.exp(tau + 2.0) / eps
        assert mg.region_tag(SPACE, pt(deep, 1.0), tau, eps) == "R1"
        assert mg.region_tag(SPACE, pt(deep, deep), tau, eps) == "R2"
        assert mg.region_tag(SPACE, pt(1.0, 1.0), tau, eps) == "R3"

    def test_tags_exhaustive_exclusive(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            x = pt(math.exp(rng.uniform(-2, 10)), math.exp(rng.uniform(-2, 10)))
            tags = [mg.region_tag(SPACE, x, 4.0, 0.25)]
            assert tags[0] in ("R1", "R2", "R3")

    def test_r3_bound_alone(self):
        # on thick points the bounded term alone carries the inequality
        tau, eps = 4.0, 0.25
        x = pt(1.0, 1.0)
        ba = mg.ball_average(F, MU, x, tau, 30_000, seed=7)
        rep = mg.verify_drift(F, MU, [x], tau, eps, bound_b=2.0 * ba.value,
                              n_samples=30_000, seed=7)
        row = rep.rows[0]
        assert row.region == "R3" and row.c_used == 0.0 and row.ok

    def test_r1_decay_bound(self):
        # quadrature ratio sits under a poly(tau) * exp(-0.4 tau) envelope
        taus = np.array([2.0, 3.0, 4.0, 5.0, 6.0])
        cs = np.array([mg.ball_average_ratio_quadrature(t) for t in taus])
        envelope = cs[0] / (taus[0] * math.exp(-0.4 * taus[0]))
        assert np.all(cs <= envelope * taus * np.exp(-0.4 * taus) + 1e-12)

    def test_r2_via_comparison_slack(self):
        tau, eps = 4.0, 0.25
        deep = math.exp(tau + 2.5) / eps
        x = pt(deep, deep * 1.5)
        rep = mg.verify_drift(F, MU, [x], tau, eps, bound_b=5.0,
                              n_samples=60_000, seed=8)
        row = rep.rows[0]
        assert row.region == "R2"
        assert row.c_used == pytest.approx(
            mg.ball_average_ratio_quadrature(tau) * 1.10 * SPACE.n_plane)
        assert row.ok

    def test_counterexample_reported_not_silent(self):
        # an absurd bound must surface as a counterexample row
        x = pt(math.exp(8.0), 1.0)
        rep = mg.verify_drift(F, MU, [x], 4.0, 0.25, bound_b=0.0,
                              n_samples=20_000, seed=9, c_safety=1e-6)
        assert len(rep.counterexamples) == 1

    def test_csv_export(self, tmp_path):
        x = pt(1.0, 1.0)
        rep = mg.verify_drift(F, MU, [x], 3.0, 0.25, bound_b=10.0,
                              n_samples=10_000, seed=10)
        path = tmp_path / "drift.csv"
        rep.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header.split(",")[:3] == ["point_id", "region", "tau"]


class TestFitDecay:
    def test_recovers_planted_exponent(self):
        taus = np.array([2.0, 3.0, 4.0, 5.0, 6.0])
        cs = 3.0 * taus * np.exp(-0.7 * taus)
        assert mg.fit_decay(taus, cs) == pytest.approx(-0.7, abs=1e-9)
        assert mg.fit_decay(taus, np.exp(-0.3 * taus), 0.0) == pytest.approx(-0.3, abs=1e-9)

    def test_needs_enough_points(self):
        with pytest.raises(ValueError):
            mg.fit_decay([2.0, 3.0], [1.0, 0.5])
