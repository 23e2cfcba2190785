import itertools
import math
from math import ceil, cosh, floor, gcd, sqrt

import numpy as np
import pytest

from orbitlab import fuchsian as fg
from orbitlab import hyperbolic as hyp

BASE = (0.0, 1.0)


def exact_psl2z_count(R):
    """Independent oracle: PSL(2,Z) elements with d(i, g i) <= R are integer
    matrices with a^2+b^2+c^2+d^2 <= 2 cosh R and det 1, counted modulo sign
    (first column coprime; the second column solves a linear Diophantine
    equation, so each (a, c) contributes a lattice interval)."""
    M = 2.0 * cosh(R)
    total = 0
    amax = int(sqrt(M))
    for a in range(-amax, amax + 1):
        for c in range(-amax, amax + 1):
            n2 = a * a + c * c
            if n2 == 0 or n2 > M or gcd(a, c) != 1:
                continue
            old_r, r = a, c
            old_s, s = 1, 0
            old_t, t = 0, 1
            while r != 0:
                q = old_r // r
                old_r, r = r, old_r - q * r
                old_s, s = s, old_s - q * s
                old_t, t = t, old_t - q * t
            d0 = old_s * old_r
            b0 = -old_t * old_r
            K = M - n2
            B = 2.0 * (b0 * a + d0 * c)
            C = b0 * b0 + d0 * d0 - K
            disc = B * B - 4.0 * n2 * C
            if disc < 0:
                continue
            sd = sqrt(disc)
            total += floor((-B + sd) / (2 * n2)) - ceil((-B - sd) / (2 * n2)) + 1
    return total // 2


def brute_force_words_integer(group, p, max_len, R):
    """Oracle for integer groups: all words up to max_len, deduplicated on
    exact canonical matrices, filtered by displacement."""
    p = hyp.HalfPlanePoint(*p)
    seen = {}
    frontier = [hyp.Isometry.identity()]
    seen[frontier[0].int_entries] = 0.0
    for _ in range(max_len):
        nxt = []
        for g in frontier:
            for gen in group.generators:
                h = g.compose(gen)
                if h.int_entries not in seen:
                    seen[h.int_entries] = hyp.distance(p, hyp.apply(h, p))
                    nxt.append(h)
        frontier = nxt
    return sum(1 for d in seen.values() if d <= R)


def brute_force_words_free(group, p, max_len, R):
    """Oracle for freely-acting float groups: all words up to max_len,
    deduplicated on orbit points with the metric-aware spatial hash."""
    p = hyp.HalfPlanePoint(*p)
    cells = {}
    fg._dedup_float_points(cells, np.array([[p.x, p.y]]), 1e-7)
    dists = [0.0]
    frontier = [hyp.Isometry.identity()]
    for _ in range(max_len):
        nxt = []
        for g in frontier:
            for gen in group.generators:
                h = g.compose(gen)
                q = hyp.apply(h, p)
                if fg._dedup_float_points(cells, np.array([[q.x, q.y]]), 1e-7):
                    dists.append(hyp.distance(p, q))
                    nxt.append(h)
        frontier = nxt
    return sum(1 for d in dists if d <= R)


class TestEnumeration:
    def test_stabilizer_count_at_zero(self, psl_group):
        enum = fg.enumerate_orbit(psl_group, BASE, 0.0)
        assert enum.count(0.0) == 2  # identity and the elliptic flip fixing i
        assert brute_force_words_integer(psl_group, BASE, 6, 1e-9) == 2

    def test_counts_match_exact_oracle(self, psl_enum8):
        for R in (6.0, 8.0):
            assert psl_enum8.count(R) == exact_psl2z_count(R)

    def test_counts_match_word_oracle_small(self, psl_group):
        enum = fg.enumerate_orbit(psl_group, BASE, 3.0)
        assert enum.count(3.0) == brute_force_words_integer(psl_group, BASE, 10, 3.0)

    def test_counts_monotone(self, psl_enum8):
        counts = psl_enum8.counts(np.arange(1.0, 8.1, 0.5))
        assert np.all(np.diff(counts) >= 0)

    def test_every_recorded_distance_within_radius(self, psl_enum8):
        assert psl_enum8.dists.max() <= 8.0

    def test_no_duplicate_elements(self, psl_enum8):
        mats = psl_enum8.matrices
        keys = {tuple(m) for m in mats.tolist()}
        assert len(keys) == len(mats)

    def test_cyclic_count_formula(self):
        # generator diag(q, 1/q) with q = e moves i by 2|n| per power
        G = fg.GroupPresentation.cyclic_hyperbolic(2.0)
        for R in (3.0, 6.0, 9.0):
            enum = fg.enumerate_orbit(G, BASE, R)
            assert enum.count(R) == 2 * math.floor(R / 2.0) + 1

    def test_parabolic_count_formula(self):
        G = fg.GroupPresentation.parabolic(1.0)
        for R in (4.0, 8.0):
            enum = fg.enumerate_orbit(G, BASE, R)
            # d(i, i+n) = 2 arcsinh(|n|/2) <= R  <=>  |n| <= 2 sinh(R/2)
            assert enum.count(R) == 2 * math.floor(2.0 * math.sinh(R / 2.0)) + 1

    def test_basepoint_equivariance(self, psl_group):
        a = fg.enumerate_orbit(psl_group, BASE, 4.5).count(4.5)
        gp = hyp.apply(hyp.Isometry.from_integers(1, 1, 0, 1),
                       hyp.HalfPlanePoint(*BASE))
        b = fg.enumerate_orbit(psl_group, gp, 4.5).count(4.5)
        assert a == b

    def test_submultiplicative_counts(self, psl_enum8):
        n4 = psl_enum8.count(4.0)
        n8 = psl_enum8.count(8.0)
        assert n8 <= n4 * n4 * 2.0

    def test_budget_error_carries_radius(self, psl_group):
        with pytest.raises(fg.EnumerationBudgetError) as exc:
            fg.enumerate_orbit(psl_group, BASE, 10.0, max_elements=50)
        assert exc.value.completed_radius >= 0.0

    def test_tree_bfs_matches_word_oracle_schottky(self):
        S = fg.GroupPresentation.schottky([((-6.0, -4.0), 2.2), ((4.0, 6.0), 2.2)])
        enum = fg.enumerate_orbit(S, BASE, 8.0)
        assert enum.count(8.0) == brute_force_words_free(S, BASE, 4, 8.0)

    def test_slack_doubling_stable(self):
        # doubling the pruning collar does not change the reported counts
        S = fg.GroupPresentation.schottky([((-6.0, -4.0), 2.2), ((4.0, 6.0), 2.2)])
        a = fg.enumerate_orbit(S, BASE, 10.0).count(10.0)
        b = fg.enumerate_orbit(S, BASE, 10.0, slack=12.0).count(10.0)
        assert a == b

    def test_words_compose_to_elements(self, psl_group):
        enum = fg.enumerate_orbit(psl_group, BASE, 3.0)
        name_to_gen = dict(zip(psl_group.labels, psl_group.generators))
        for i in range(len(enum)):
            w = enum.word(i)
            g = hyp.Isometry.identity()
            if w != "e":
                for letter in w.split("*"):
                    g = g.compose(name_to_gen[letter])
            q = hyp.apply(g, hyp.HalfPlanePoint(*BASE))
            assert math.hypot(q.x - enum.points[i, 0], q.y - enum.points[i, 1]) < 1e-9

    def test_csv_export(self, tmp_path, psl_group):
        enum = fg.enumerate_orbit(psl_group, BASE, 2.0)
        path = tmp_path / "orbit.csv"
        enum.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "word,x,y,distance"
        assert len(lines) == len(enum) + 1


class TestExponents:
    def test_cyclic_exponent_near_zero(self):
        G = fg.GroupPresentation.cyclic_hyperbolic(2.0)
        slope, _ = fg.estimate_critical_exponent(G, BASE, np.arange(30.0, 91.0, 10.0))
        assert abs(slope) <= 0.05

    def test_psl_exponent(self, psl_enum8):
        slope, ci = fg.fit_exponent(np.arange(4.0, 8.1, 1.0),
                                    psl_enum8.counts(np.arange(4.0, 8.1, 1.0)))
        assert 0.8 <= slope <= 1.25
        assert ci[0] <= slope <= ci[1]

    def test_schottky_exponent_in_unit_interval(self):
        S = fg.GroupPresentation.schottky([((-6.0, -4.0), 2.2), ((4.0, 6.0), 2.2)])
        slope, _ = fg.estimate_critical_exponent(S, (0.0, 1.2),
                                                 np.arange(7.0, 14.1, 1.0))
        assert 0.0 < slope < 1.0

    def test_degenerate_counts_rejected(self):
        with pytest.raises(fg.EstimationError):
            fg.fit_exponent([1, 2, 3, 4], [5, 5, 5, 5])
        with pytest.raises(fg.EstimationError):
            fg.fit_exponent([1, 2, 3], [1, 2, 4])


class TestPoincare:
    def test_cyclic_h0_counts(self):
        G = fg.GroupPresentation.cyclic_hyperbolic(2.0)
        est = fg.poincare_partial_sum(G, BASE, 0.0, 12.0)
        # at exponent zero the partial sum is the counting function
        enum = fg.enumerate_orbit(G, BASE, 12.0)
        assert est.value == enum.count(12.0)
        assert est.verdict == "inconclusive"

    def test_partial_sums_nondecreasing_and_monotone_in_h(self, psl_enum8):
        est1 = fg.poincare_partial_sum(None, BASE, 1.5, 8.0, enum=psl_enum8)
        est2 = fg.poincare_partial_sum(None, BASE, 2.5, 8.0, enum=psl_enum8)
        assert np.all(np.diff(est1.partial_sums) >= 0)
        assert np.all(est2.partial_sums <= est1.partial_sums + 1e-12)

    def test_psl_h2_convergent_by_12(self, psl_enum12):
        est = fg.poincare_partial_sum(None, BASE, 2.0, 12.0, enum=psl_enum12)
        assert est.verdict == "convergent"


class TestFreeProduct:
    def test_trivial_factor_returns_other(self):
        A = fg.GroupPresentation([], [], "cyclic-hyperbolic")
        B = fg.GroupPresentation.schottky([((-6.0, -4.0), 2.2), ((4.0, 6.0), 2.2)])
        assert fg.free_product(A, B) is B

    def test_certified_product(self):
        A = fg.GroupPresentation.cyclic_hyperbolic(1.6, axis=(-1.0, 1.0))
        B = fg.GroupPresentation.schottky([((-6.0, -4.0), 2.2), ((4.0, 6.0), 2.2)])
        H = fg.free_product(A, B)
        assert H.kind == "free-product"
        assert len(H.generators) == 6

    def test_overlapping_domains_rejected(self):
        A = fg.GroupPresentation.cyclic_hyperbolic(0.4, axis=(-1.0, 1.0))
        B = fg.GroupPresentation.schottky([((-6.0, -4.0), 2.2), ((4.0, 6.0), 2.2)])
        with pytest.raises(fg.ConstructionError):
            fg.free_product(A, B)  # short translation inflates the discs


class TestConcave:
    def test_no_room_below_2s(self, psl_group):
        res = fg.count_concave_lattice_points(psl_group, BASE, 4.0, 0.5,
                                              radii=[4.0], s=2.2)
        assert res.concave_counts[0] == 0

    def test_parabolic_all_excursions(self):
        G = fg.GroupPresentation.parabolic(1.0)
        R = 9.0
        res = fg.count_concave_lattice_points(G, BASE, R, 0.5, radii=[R], s=2.0)
        enum = fg.enumerate_orbit(G, BASE, R)
        # oracle: every nontrivial orbit geodesic [i, i+n] rises to |n|/2-ish;
        # those with room (d > 2s) and apex above 2 all count
        count = 0
        for i in range(len(enum)):
            d = enum.dists[i]
            if d <= 2 * 2.0 + 1e-12:
                continue
            seg = hyp.GeodesicSegment(hyp.HalfPlanePoint(*BASE),
                                      hyp.HalfPlanePoint(*enum.points[i]))
            t = np.linspace(2.0, d - 2.0, 60)
            heights = [seg.point_at_arclength(s).y for s in t]
            if min(heights) > 2.0:
                count += 1
        assert res.concave_counts[0] == count
        assert count == enum.count(R) - enum.counts([2 * 2.0])[0]

    def test_spacing_guard(self, psl_group):
        with pytest.raises(fg.ConfigurationError):
            fg.count_concave_lattice_points(psl_group, BASE, 6.0, 0.5, spacing=0.7)

    def test_basepoint_must_be_thick(self, psl_group):
        with pytest.raises(fg.ConfigurationError):
            fg.count_concave_lattice_points(psl_group, (0.0, 5.0), 6.0, 0.5)

    def test_concave_below_total(self, psl_enum8, psl_group):
        res = fg.count_concave_lattice_points(psl_group, BASE, 8.0, 0.5,
                                              radii=[5.0, 6.0, 7.0, 8.0],
                                              enum=psl_enum8)
        assert np.all(res.concave_counts <= res.total_counts)


class TestModularOrbitDistance:
    def test_fast_path_matches_direct_min(self, psl_enum8):
        rng = np.random.default_rng(5)
        pts = np.column_stack([rng.uniform(-10, 10, 300),
                               np.exp(rng.uniform(-2, 2, 300))])
        fast = fg.nearest_orbit_distances_modular(pts, psl_enum8)
        orbit = psl_enum8.points
        for k in range(len(pts)):
            arg = 1.0 + ((orbit[:, 0] - pts[k, 0]) ** 2 +
                         (orbit[:, 1] - pts[k, 1]) ** 2) / (2 * orbit[:, 1] * pts[k, 1])
            direct = float(np.arccosh(np.maximum(arg, 1.0)).min())
            if direct <= 3.5:  # direct min is trustworthy well inside the ball
                assert abs(fast[k] - direct) < 1e-9
