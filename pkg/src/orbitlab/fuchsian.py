"""Fuchsian groups as generator sets, with breadth-first orbit enumeration.

The enumeration walks the Cayley graph, pruning at an exploration radius
R + slack; integer-matrix groups are deduplicated exactly on canonicalized
matrices, floating groups on orbit points via a spatial hash (the actions we
enumerate there are free).  Completeness within R is validated in the tests
against brute-force word enumeration and, for the modular group, against an
exact integer-point count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic as hyp
from ._kernels import concave_flags_int, expand_round_int, hyp_dist, reduce_modular

__all__ = [
    "GroupPresentation",
    "OrbitEnumeration",
    "PoincareSeriesEstimate",
    "ConcaveCountResult",
    "enumerate_orbit",
    "count_concave_lattice_points",
    "poincare_partial_sum",
    "estimate_critical_exponent",
    "free_product",
    "fit_exponent",
    "EnumerationBudgetError",
    "EstimationError",
    "ConstructionError",
    "ConfigurationError",
]


class EnumerationBudgetError(RuntimeError):
    """Raised when the element budget is hit; carries the completed radius."""

    def __init__(self, message, completed_radius):
        super().__init__(message)
        self.completed_radius = completed_radius


class EstimationError(ValueError):
    pass


class ConstructionError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class PingPongDomain:
    """Hyperbolic half-plane bounded by a semicircle on the real axis.

    For a generator with c != 0 this is its isometric disc; a generator maps
    the exterior of its own disc onto the interior of its inverse's disc.
    """

    center: float
    radius: float

    def disjoint_from(self, other: "PingPongDomain") -> bool:
        return abs(self.center - other.center) > self.radius + other.radius


def isometric_domain(g: hyp.Isometry) -> PingPongDomain:
    if abs(g.c) < 1e-12:
        raise ConstructionError("generator fixes infinity; no isometric disc")
    return PingPongDomain(-g.d / g.c, 1.0 / abs(g.c))


@dataclass
class GroupPresentation:
    """A group given by generators together with their formal inverses.

    ``generators`` holds the closed list g_0, g_0^{-1}, g_1, g_1^{-1}, ...
    (involutions appear once); ``labels`` names each entry for word output.
    Schottky-type presentations carry ping-pong domains, one per generator
    entry, whose pairwise disjointness certifies freeness.
    """

    generators: list
    labels: list
    kind: str
    domains: list | None = None
    name: str = ""

    KINDS = ("lattice", "cyclic-hyperbolic", "parabolic", "schottky", "free-product")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if len(self.generators) != len(self.labels):
            raise ValueError("one label per generator required")
        if self.kind in ("schottky", "free-product") and self.generators:
            if self.domains is None:
                self.domains = [isometric_domain(g) for g in self.generators]
            self.validate_ping_pong()

    def validate_ping_pong(self):
        doms = self.domains
        for i in range(len(doms)):
            for j in range(i + 1, len(doms)):
                if not doms[i].disjoint_from(doms[j]):
                    raise ConstructionError(
                        f"ping-pong domains {i} and {j} overlap; free product not certified"
                    )

    @property
    def is_integer(self) -> bool:
        return all(g.int_entries is not None for g in self.generators)

    def int_generator_array(self) -> np.ndarray:
        return np.array([g.int_entries for g in self.generators], dtype=np.int64)

    @classmethod
    def psl2z(cls) -> "GroupPresentation":
        S = hyp.Isometry.from_integers(0, -1, 1, 0)
        T = hyp.Isometry.from_integers(1, 1, 0, 1)
        Tinv = hyp.Isometry.from_integers(1, -1, 0, 1)
        return cls([S, T, Tinv], ["S", "T", "T^-1"], "lattice", name="PSL(2,Z)")

    @classmethod
    def parabolic(cls, t: float = 1.0) -> "GroupPresentation":
        T = hyp.Isometry.translation(t)
        return cls([T, T.inverse()], ["T", "T^-1"], "parabolic", name=f"parabolic({t})")

    @classmethod
    def cyclic_hyperbolic(cls, length: float, axis=(0.0, math.inf)) -> "GroupPresentation":
        """Cyclic group generated by a hyperbolic element of the given
        translation length.  The default axis is the imaginary axis."""
        u, v = axis
        if math.isinf(v):
            g = hyp.Isometry.dilation(math.exp(length / 2.0))
        else:
            g = hyp.Isometry.hyperbolic_with_axis(u, v, length)
        return cls([g, g.inverse()], ["A", "A^-1"], "cyclic-hyperbolic", name="cyclic")

    @classmethod
    def schottky(cls, axes_and_lengths) -> "GroupPresentation":
        """Schottky group from (axis endpoints, translation length) pairs.

        Certification requires the isometric discs of all generators and
        inverses to be pairwise disjoint; otherwise ConstructionError.
        """
        gens, labels = [], []
        for k, ((u, v), length) in enumerate(axes_and_lengths):
            g = hyp.Isometry.hyperbolic_with_axis(u, v, length)
            gens.extend([g, g.inverse()])
            labels.extend([f"B{k}", f"B{k}^-1"])
        return cls(gens, labels, "schottky", name="schottky")

    def max_displacement(self, p) -> float:
        p = hyp._as_point(p)
        if not self.generators:
            return 0.0
        return max(hyp.distance(p, hyp.apply(g, p)) for g in self.generators)


class OrbitEnumeration:
    """BFS enumeration of {g : d(p, g p) <= R} with word reconstruction.

    ``points`` is an (n, 2) array of orbit points, ``dists`` the displacement
    of each element, both restricted to the requested radius.  The full
    explored tree (which may extend into the pruning collar) is kept
    privately so that words can be rebuilt on demand; indices into the
    public arrays are stable.
    """

    def __init__(self, group, basepoint, radius, full_points, full_dists,
                 full_parents, full_gen_idx, full_matrices=None):
        self.group = group
        self.basepoint = basepoint
        self.radius = radius
        self._points = full_points
        self._dists = full_dists
        self._parents = full_parents
        self._gen_idx = full_gen_idx
        self._matrices = full_matrices
        self._order = np.nonzero(full_dists <= radius)[0]

    @property
    def points(self) -> np.ndarray:
        return self._points[self._order]

    @property
    def dists(self) -> np.ndarray:
        return self._dists[self._order]

    @property
    def matrices(self):
        return None if self._matrices is None else self._matrices[self._order]

    def __len__(self):
        return self._order.size

    def count(self, R=None) -> int:
        if R is None:
            R = self.radius
        if R > self.radius + 1e-12:
            raise ValueError("asked for a radius beyond the enumeration")
        return int(np.count_nonzero(self._dists[self._order] <= R))

    def counts(self, radii) -> np.ndarray:
        sorted_d = np.sort(self.dists)
        return np.searchsorted(sorted_d, np.asarray(radii, dtype=float), side="right")

    def word(self, i: int) -> str:
        i = int(self._order[int(i)])
        letters = []
        while i > 0:
            letters.append(self.group.labels[self._gen_idx[i]])
            i = int(self._parents[i])
        if not letters:
            return "e"
        return "*".join(reversed(letters))

    def to_csv(self, path):
        pts, ds = self.points, self.dists
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word", "x", "y", "distance"])
            for i in range(len(self)):
                w.writerow([self.word(i), pts[i, 0], pts[i, 1], ds[i]])


def _dedup_float_points(existing_cells, pts, tol):
    """Indices of rows in pts that are new w.r.t. the hash and one another.

    Cells follow the hyperbolic metric (rows in log-height, column width
    proportional to the height), so the merge tolerance is a true hyperbolic
    distance: Euclidean hashing would spuriously merge points accumulating
    near a boundary fixed point.
    """
    fresh = []
    for i in range(pts.shape[0]):
        x, y = pts[i, 0], pts[i, 1]
        v = math.log(y)
        row = math.floor(v / tol)
        dup = False
        for rr in (row - 1, row, row + 1):
            w = tol * math.exp(rr * tol)
            cc = math.floor(x / w)
            for col in (cc - 1, cc, cc + 1):
                for (ox, oy) in existing_cells.get((rr, col), ()):
                    if hyp_dist(ox, oy, x, y) <= tol:
                        dup = True
                        break
                if dup:
                    break
            if dup:
                break
        if not dup:
            fresh.append(i)
            w = tol * math.exp(row * tol)
            existing_cells.setdefault((row, math.floor(x / w)), []).append((x, y))
    return fresh


def enumerate_orbit(group: GroupPresentation, p, R: float, slack: float | None = None,
                    max_elements: int = 20_000_000) -> OrbitEnumeration:
    """Breadth-first orbit enumeration, complete within R.

    Words are expanded until every prefix path would exceed R + slack; the
    default slack is the maximal generator displacement at p plus one, which
    the test suite validates against independent oracles.
    """
    if R < 0:
        raise ValueError("R must be non-negative")
    p = hyp._as_point(p)
    if slack is None:
        slack = group.max_displacement(p) + 1.0
    r_explore = R + slack
    if group.is_integer:
        full = _enumerate_integer(group, p, r_explore, max_elements)
    else:
        full = _enumerate_float(group, p, r_explore, max_elements)
    return OrbitEnumeration(group, p, R, *full)


def _enumerate_integer(group, p, r_explore, max_elements):
    gens = group.int_generator_array()
    if np.abs(gens).max(initial=0) >= (1 << 15):
        raise OverflowError("generator entries exceed packing range")
    px, py = p.x, p.y
    id_mat = np.array([[1, 0, 0, 1]], dtype=np.int64)
    mats = [id_mat]
    dists = [np.array([0.0])]
    parents = [np.array([-1], dtype=np.int64)]
    genidx = [np.array([-1], dtype=np.int16)]
    seen = {_key_of(1, 0, 0, 1)}
    frontier = id_mat
    offset = 0
    total = 1
    completed = 0.0
    while frontier.shape[0]:
        prod, keys, par, gidx, d = expand_round_int(frontier, gens, px, py, r_explore)
        uniq, first = np.unique(keys, return_index=True)
        mask = np.zeros(len(keys), dtype=bool)
        new_rows = [i for u, i in zip(uniq.tolist(), first.tolist()) if u not in seen]
        if new_rows:
            mask[new_rows] = True
            seen.update(int(keys[i]) for i in new_rows)
        prod, par, gidx, d = prod[mask], par[mask], gidx[mask], d[mask]
        total += prod.shape[0]
        if total > max_elements:
            raise EnumerationBudgetError(
                f"element budget {max_elements} exceeded", completed_radius=completed)
        mats.append(prod)
        dists.append(d)
        parents.append(par + offset)
        genidx.append(gidx)
        offset = total - prod.shape[0]
        completed = max(completed, float(d.max()) if d.size else completed)
        frontier = prod
    all_mats = np.concatenate(mats)
    x, y = _points_of_int(all_mats, px, py)
    return (np.column_stack([x, y]), np.concatenate(dists), np.concatenate(parents),
            np.concatenate(genidx), all_mats)


def _key_of(a, b, c, d):
    off = 1 << 15
    return ((a + off) << 48) | ((b + off) << 32) | ((c + off) << 16) | (d + off)


def _points_of_int(mats, px, py):
    a = mats[:, 0].astype(float)
    b = mats[:, 1].astype(float)
    c = mats[:, 2].astype(float)
    d = mats[:, 3].astype(float)
    den = (c * px + d) ** 2 + (c * py) ** 2
    return ((a * px + b) * (c * px + d) + a * c * py * py) / den, py / den


def _inverse_index(group):
    """For each generator entry, the index of its formal inverse."""
    gens = group.generators
    inv = np.full(len(gens), -1, dtype=np.int64)
    for i, g in enumerate(gens):
        gi = g.inverse()
        for j, h in enumerate(gens):
            if max(abs(gi.a - h.a), abs(gi.b - h.b), abs(gi.c - h.c), abs(gi.d - h.d)) < 1e-9:
                inv[i] = j
                break
        if inv[i] < 0:
            raise ValueError("generator list is not closed under inversion")
    return inv


def _enumerate_float(group, p, r_explore, max_elements):
    """Tree enumeration over reduced words.

    The floating presentations (cyclic, parabolic, certified Schottky and
    free products) all act freely through reduced words, so forbidding
    immediate backtracking enumerates each element exactly once; no point
    dedup is required.  The test suite cross-checks this against the
    spatial-hash dedup on small radii.
    """
    gens = np.array([[g.a, g.b, g.c, g.d] for g in group.generators])
    inv = _inverse_index(group)
    px, py = p.x, p.y
    m = gens.shape[0]
    points = [np.array([[px, py]])]
    dists = [np.array([0.0])]
    parents = [np.array([-1], dtype=np.int64)]
    genidx = [np.array([-1], dtype=np.int16)]
    frontier = np.array([[1.0, 0.0, 0.0, 1.0]])
    frontier_last = np.array([-1], dtype=np.int16)
    offset = 0
    total = 1
    completed = 0.0
    while frontier.shape[0]:
        n = frontier.shape[0]
        a, b, c, d = frontier[:, 0], frontier[:, 1], frontier[:, 2], frontier[:, 3]
        blocks = []
        for g in range(m):
            allow = frontier_last != inv[g]
            if not allow.any():
                continue
            idx = np.nonzero(allow)[0]
            ga, gb, gc, gd = gens[g]
            prod = np.empty((idx.size, 4))
            prod[:, 0] = a[idx] * ga + b[idx] * gc
            prod[:, 1] = a[idx] * gb + b[idx] * gd
            prod[:, 2] = c[idx] * ga + d[idx] * gc
            prod[:, 3] = c[idx] * gb + d[idx] * gd
            blocks.append((prod, idx, g))
        if not blocks:
            break
        prod = np.concatenate([blk[0] for blk in blocks])
        par = np.concatenate([blk[1] for blk in blocks])
        gidx = np.concatenate([np.full(blk[1].size, blk[2], dtype=np.int16) for blk in blocks])
        den = (prod[:, 2] * px + prod[:, 3]) ** 2 + (prod[:, 2] * py) ** 2
        x = ((prod[:, 0] * px + prod[:, 1]) * (prod[:, 2] * px + prod[:, 3])
             + prod[:, 0] * prod[:, 2] * py * py) / den
        y = py / den
        arg = np.maximum(1.0, 1.0 + ((x - px) ** 2 + (y - py) ** 2) / (2.0 * y * py))
        d_new = np.arccosh(arg)
        keep = d_new <= r_explore
        prod, x, y, d_new, par, gidx = (prod[keep], x[keep], y[keep], d_new[keep],
                                        par[keep], gidx[keep])
        total += prod.shape[0]
        if total > max_elements:
            raise EnumerationBudgetError(
                f"element budget {max_elements} exceeded", completed_radius=completed)
        points.append(np.column_stack([x, y]))
        dists.append(d_new)
        parents.append(par + offset)
        genidx.append(gidx)
        offset = total - prod.shape[0]
        completed = max(completed, float(d_new.max()) if d_new.size else completed)
        frontier = prod
        frontier_last = gidx
    return (np.concatenate(points), np.concatenate(dists), np.concatenate(parents),
            np.concatenate(genidx), None)


def fit_exponent(radii, counts):
    """Least-squares slope of log(count) against radius, with a 2-sigma
    half-width from the regression residuals."""
    radii = np.asarray(radii, dtype=float)
    counts = np.asarray(counts, dtype=float)
    ok = counts > 0
    radii, counts = radii[ok], counts[ok]
    if radii.size < 4:
        raise EstimationError("need at least 4 radii with positive counts")
    if np.all(counts == counts[0]):
        raise EstimationError("degenerate counts: no growth to fit")
    logc = np.log(counts)
    A = np.column_stack([radii, np.ones_like(radii)])
    coef, res, *_ = np.linalg.lstsq(A, logc, rcond=None)
    slope = float(coef[0])
    dof = max(1, radii.size - 2)
    rss = float(res[0]) if res.size else float(np.sum((A @ coef - logc) ** 2))
    var = rss / dof / float(np.sum((radii - radii.mean()) ** 2))
    half = 2.0 * math.sqrt(max(var, 0.0))
    return slope, (slope - half, slope + half)


def estimate_critical_exponent(group, p, radii, slack=None):
    """Fitted growth exponent of the lattice count over the given radii."""
    radii = sorted(float(r) for r in radii)
    if len(radii) < 4:
        raise EstimationError("need at least 4 radii")
    enum = enumerate_orbit(group, p, radii[-1], slack=slack)
    counts = enum.counts(radii)
    return fit_exponent(radii, counts)


@dataclass
class PoincareSeriesEstimate:
    exponent: float
    radii: np.ndarray
    partial_sums: np.ndarray
    verdict: str

    @property
    def value(self) -> float:
        return float(self.partial_sums[-1])


def poincare_partial_sum(group, p, h, R, tail_tol=1e-4, slack=None,
                         enum: OrbitEnumeration | None = None) -> PoincareSeriesEstimate:
    """Partial sums of sum_gamma exp(-h d(p, gamma p)) indexed by radius.

    Verdict is "convergent" when the increment over the last unit of radius
    falls below tail_tol, otherwise "inconclusive".  For the modular group at
    exponent 2 the measured increment over (11, 12] is about 3e-5, which sets
    the scale of the default tolerance; enumerating far enough for a 1e-6
    increment is out of desk range.
    """
    if enum is None:
        enum = enumerate_orbit(group, p, R, slack=slack)
    d = np.sort(enum.dists)
    radii = np.arange(1.0, math.floor(R) + 1.0)
    if radii.size == 0 or radii[-1] < R:
        radii = np.append(radii, R)
    weights = np.exp(-h * d)
    csum = np.cumsum(weights)
    idx = np.searchsorted(d, radii, side="right")
    sums = np.where(idx > 0, csum[np.maximum(idx - 1, 0)], 0.0)
    verdict = "inconclusive"
    if radii.size >= 2:
        tail = sums[-1] - sums[np.searchsorted(radii, radii[-1] - 1.0)]
        if tail < tail_tol:
            verdict = "convergent"
    return PoincareSeriesEstimate(h, radii, sums, verdict)


def free_product(A: GroupPresentation, B: GroupPresentation) -> GroupPresentation:
    """Combine two presentations into a certified free product.

    Requires every generator (and inverse) of both factors to carry an
    isometric ping-pong disc, and all discs to be pairwise disjoint.  A
    trivial factor returns the other factor unchanged.
    """
    if not A.generators:
        return B
    if not B.generators:
        return A
    gens = list(A.generators) + list(B.generators)
    labels = [f"a:{l}" for l in A.labels] + [f"b:{l}" for l in B.labels]
    domains = [isometric_domain(g) for g in gens]
    return GroupPresentation(gens, labels, "free-product", domains=domains,
                             name=f"{A.name}*{B.name}")


@dataclass
class ConcaveCountResult:
    radii: np.ndarray
    total_counts: np.ndarray
    concave_counts: np.ndarray
    exponent: float | None
    exponent_interval: tuple | None
    s: float
    eps_thin: float


def modular_thick_diameter(height: float, n_boundary: int = 160) -> float:
    """Diameter of the standard modular fundamental domain truncated at the
    given height, measured on a dense boundary sample."""
    if height < 1.0:
        raise ValueError("truncation height below the domain floor")
    pts = []
    for t in np.linspace(0.0, 1.0, n_boundary):
        th = math.pi / 3 + t * math.pi / 3  # bottom arc |z| = 1
        pts.append((math.cos(th), math.sin(th)))
        yy = math.sqrt(3) / 2 + t * (height - math.sqrt(3) / 2)
        pts.append((0.5, yy))
        pts.append((-0.5, yy))
        pts.append((t - 0.5, height))
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = max(best, hyp_dist(pts[i][0], pts[i][1], pts[j][0], pts[j][1]))
    return best


def count_concave_lattice_points(group, p, R, eps_thin, radii=None, s=None,
                                 spacing=0.05, injectivity_scale=0.5, slack=None,
                                 enum: OrbitEnumeration | None = None) -> ConcaveCountResult:
    """Count orbit elements whose connecting geodesic makes a single long
    excursion above height 1/eps_thin in the quotient.

    The geodesic [p, gamma p] is sampled at the given arclength spacing; the
    prefix and suffix of length s are ignored and every remaining sample must
    reduce to a point of height > 1/eps_thin.  Elements without a middle
    (d <= 2s) never count.  s defaults to twice the diameter of the truncated
    fundamental domain.
    """
    if spacing > injectivity_scale:
        raise ConfigurationError("sampling spacing exceeds the injectivity scale")
    p = hyp._as_point(p)
    y_cut = 1.0 / eps_thin
    if group.kind == "lattice":
        if p.y > y_cut:
            raise ConfigurationError("basepoint must lie in the thick region")
        if s is None:
            s = 2.0 * modular_thick_diameter(y_cut)
        if enum is None:
            enum = enumerate_orbit(group, p, R, slack=slack)
        flags = concave_flags_int(enum.matrices, enum.dists, p.x, p.y, y_cut, s, spacing)
    elif group.kind == "parabolic":
        if s is None:
            s = 2.0
        if enum is None:
            enum = enumerate_orbit(group, p, R, slack=slack)
        flags = _concave_flags_translation(enum, p, y_cut, s, spacing,
                                           period=abs(group.generators[0].b))
    else:
        raise ConfigurationError(
            "concave counting needs a quotient reduction rule; available for "
            "lattice and parabolic kinds")
    if radii is None:
        radii = np.arange(1.0, math.floor(R) + 1.0)
        if radii.size == 0 or radii[-1] < R:
            radii = np.append(radii, R)
    radii = np.asarray(radii, dtype=float)
    d_sorted_idx = np.argsort(enum.dists)
    d_sorted = enum.dists[d_sorted_idx]
    f_sorted = np.asarray(flags, dtype=np.int64)[d_sorted_idx]
    cum = np.concatenate([[0], np.cumsum(f_sorted)])
    idx = np.searchsorted(d_sorted, radii, side="right")
    concave_counts = cum[idx]
    total_counts = idx
    exponent, interval = None, None
    if np.count_nonzero(concave_counts > 0) >= 4:
        try:
            exponent, interval = fit_exponent(radii, concave_counts)
        except EstimationError:
            pass
    return ConcaveCountResult(radii, total_counts, concave_counts, exponent,
                              interval, s, eps_thin)


def nearest_orbit_distances_modular(points, enum, chunk=2048,
                                    candidate_radius=8.0):
    """Exact distance to the PSL(2,Z) orbit of i for a batch of points.

    Each point is reduced to the standard fundamental domain (an isometric
    move), where the nearest orbit point is pinned down by a bounded
    candidate set: a reduced point z within distance 4 of the basepoint has
    its nearest orbit point w satisfying d(i, w) <= 2 d(z, i) <= 8, and a
    reduced point farther out sits in the cusp, where every orbit point has
    height at most 1 and |x| >= |x_z| among integer translates, so the
    basepoint itself is nearest.  Requires enum to reach candidate_radius.
    """
    if enum.radius + 1e-9 < candidate_radius:
        raise ValueError("orbit enumeration too small for the candidate set")
    cand = enum.points[enum.dists <= candidate_radius]
    points = np.asarray(points, dtype=float)
    xr, yr = reduce_modular(points[:, 0], points[:, 1])
    out = np.empty(len(points))
    for k in range(0, len(points), chunk):
        sl = slice(k, min(k + chunk, len(points)))
        dx = xr[sl, None] - cand[None, :, 0]
        dy = yr[sl, None] - cand[None, :, 1]
        arg = 1.0 + (dx * dx + dy * dy) / (2.0 * yr[sl, None] * cand[None, :, 1])
        np.maximum(arg, 1.0, out=arg)
        out[sl] = np.arccosh(arg).min(axis=1)
    return out


def _concave_flags_translation(enum, p, y_cut, s, spacing, period):
    """Concavity flags for a cyclic parabolic group: the quotient reduction
    is x mod period, which leaves heights unchanged."""
    n = len(enum.dists)
    flags = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        d = enum.dists[i]
        if d <= 2.0 * s + 1e-12:
            continue
        seg = hyp.GeodesicSegment(p, hyp.HalfPlanePoint(*enum.points[i]))
        t = s
        good = True
        while True:
            q = seg.point_at_arclength(min(t, d - s))
            if q.y <= y_cut:
                good = False
                break
            if t >= d - s:
                break
            t += spacing
        flags[i] = 1 if good else 0
    return flags
