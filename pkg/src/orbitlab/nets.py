"""Separated-and-covering nets, net counting, entropy fits, packing checks,
and good/bad classification of net points against a group orbit."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import greedy_select, sup_dist_many
from .fuchsian import EstimationError, fit_exponent
from .regions import Metric

__all__ = ["Net", "GridIndex", "EntropyEstimate", "GoodBadClassification",
           "build_net", "net_count", "fit_entropy", "verify_packing",
           "classify_good_bad", "CoverageWarning"]


class CoverageWarning(UserWarning):
    pass


class GridIndex:
    """Cell index over packed points for radius queries under the sup metric.

    Rows bucket the log-height of plane factor 0 (or the line coordinate when
    there is no plane factor); columns have width proportional to the row
    height, so cell lookups per query stay O(1) as heights vary.
    """

    def __init__(self, points, metric: Metric, cell: float):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        self.metric = metric
        self.cell = cell
        buckets = {}
        if metric.n_plane > 0:
            v = np.log(self.points[:, 1])
            rows = np.floor(v / cell).astype(np.int64)
            widths = cell * np.exp(rows * cell)
            if metric.period > 0:
                # columns must divide the period exactly for seam-safe wrap
                ncols = np.maximum(1, np.floor(metric.period / widths)).astype(np.int64)
                widths = metric.period / ncols
                cols = np.floor(self.points[:, 0] / widths).astype(np.int64) % ncols
            else:
                cols = np.floor(self.points[:, 0] / widths).astype(np.int64)
        else:
            rows = np.zeros(len(self.points), dtype=np.int64)
            cols = np.floor(self.points[:, 0] / cell).astype(np.int64)
        for i, key in enumerate(zip(rows.tolist(), cols.tolist())):
            buckets.setdefault(key, []).append(i)
        self._cells = {k: np.asarray(v, dtype=np.int64) for k, v in buckets.items()}

    def _row_width(self, row):
        w = self.cell * math.exp(row * self.cell)
        if self.metric.period > 0:
            ncols = max(1, math.floor(self.metric.period / w))
            return self.metric.period / ncols, ncols
        return w, 0

    def _candidate_indices(self, q, radius):
        cell = self.cell
        chunks = []
        if self.metric.n_plane > 0:
            x, y = float(q[0]), float(q[1])
            v = math.log(y)
            reach = 2.0 * math.sinh(0.5 * radius)
            for row in range(math.floor((v - radius) / cell), math.floor((v + radius) / cell) + 1):
                w, ncols = self._row_width(row)
                hx = reach * math.sqrt(y * math.exp((row + 1) * cell))
                clo = math.floor((x - hx) / w)
                chi = math.floor((x + hx) / w)
                if self.metric.period > 0:
                    if chi - clo + 1 >= ncols:
                        cols = range(ncols)
                    else:
                        cols = {c % ncols for c in range(clo, chi + 1)}
                else:
                    cols = range(clo, chi + 1)
                for col in cols:
                    got = self._cells.get((row, col))
                    if got is not None:
                        chunks.append(got)
        else:
            s = float(q[0])
            for col in range(math.floor((s - radius) / cell), math.floor((s + radius) / cell) + 1):
                got = self._cells.get((0, col))
                if got is not None:
                    chunks.append(got)
        if not chunks:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(chunks)

    def query(self, q, radius):
        """Indices of stored points within the given sup-metric radius of q."""
        q = np.asarray(q, dtype=np.float64)
        cand = self._candidate_indices(q, radius)
        if cand.size == 0:
            return cand
        d = sup_dist_many(self.points[cand], q, self.metric.n_plane, self.metric.period)
        return cand[d <= radius]

    def nearest(self, q, start_radius):
        """(index, distance) of the nearest stored point, widening as needed."""
        q = np.asarray(q, dtype=np.float64)
        radius = start_radius
        for _ in range(64):
            cand = self._candidate_indices(q, radius)
            if cand.size:
                d = sup_dist_many(self.points[cand], q, self.metric.n_plane, self.metric.period)
                j = int(np.argmin(d))
                if d[j] <= radius:
                    return int(cand[j]), float(d[j])
            radius *= 2.0
        raise RuntimeError("nearest-point search failed to terminate")


@dataclass
class Net:
    """A maximal eps-separated point set over a region.

    Separation >= eps_sep holds pairwise by construction; the covering radius
    is certified statistically (``covering_radius`` is the largest observed
    probe-to-net distance over the certification probes).
    """

    points: np.ndarray
    eps_sep: float
    metric: Metric
    region_descriptor: dict
    covering_radius: float
    _index: GridIndex | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    def index(self, cell=None) -> GridIndex:
        if self._index is None or (cell is not None and self._index.cell != cell):
            self._index = GridIndex(self.points, self.metric,
                                    cell if cell is not None else self.eps_sep)
        return self._index

    def count_in_ball(self, center, radius) -> int:
        d = sup_dist_many(self.points, np.asarray(center, float),
                          self.metric.n_plane, self.metric.period)
        return int(np.count_nonzero(d <= radius))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["# layout", json.dumps({
                "n_plane": self.metric.n_plane, "n_line": self.metric.n_line,
                "period": self.metric.period, "eps_sep": self.eps_sep,
                "covering_radius": self.covering_radius,
                "region": self.region_descriptor})])
            w.writerow([f"c{i}" for i in range(self.points.shape[1])])
            for row in self.points:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Net":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            meta = json.loads(header[1])
            next(r)
            pts = np.array([[float(v) for v in row] for row in r])
        return cls(pts, meta["eps_sep"],
                   Metric(meta["n_plane"], meta["n_line"], meta["period"]),
                   meta["region"], meta["covering_radius"])


def build_net(region, eps_sep, seed=0, n_stream=65_536, max_rounds=6,
              n_probes=10_000) -> Net:
    """Greedy maximal eps-separated net from a measure-weighted sample stream.

    Maximality gives 2*eps covering of the sampled region up to sampling
    gaps; coverage at 2*eps is certified on fresh probe points, and the
    stream is doubled (up to max_rounds times) until certification passes.
    If it still fails, a CoverageWarning reports the achieved covering
    radius.  ``n_stream`` should be sized to a few times the expected net
    cardinality.
    """
    if eps_sep <= 0:
        raise ValueError("eps_sep must be positive")
    metric = region.metric
    kept_pts = np.zeros((0, metric.dim))
    covering = math.inf
    for round_no in range(max_rounds):
        fresh = region.sample(n_stream, seed=seed + round_no)
        stream = np.vstack([kept_pts, fresh])
        idx = greedy_select(stream, eps_sep, metric.n_plane, metric.period)
        kept_pts = stream[idx]
        probes = region.sample(n_probes, seed=seed + 90_000 + round_no)
        g = GridIndex(kept_pts, metric, eps_sep)
        worst = 0.0
        for row in probes:
            hits = g.query(row, 2.0 * eps_sep)
            if hits.size == 0:
                _, d = g.nearest(row, 2.0 * eps_sep)
                worst = max(worst, d)
            else:
                d = sup_dist_many(kept_pts[hits], row, metric.n_plane, metric.period)
                worst = max(worst, float(d.min()))
        covering = worst
        if covering <= 2.0 * eps_sep:
            break
        n_stream *= 2
    else:
        warnings.warn(
            f"coverage not certified: achieved covering radius {covering:.4f} "
            f"> {2*eps_sep:.4f}", CoverageWarning)
    return Net(kept_pts, eps_sep, metric, region.descriptor(), covering)


def net_count(net: Net, center, radius) -> int:
    return net.count_in_ball(center, radius)


@dataclass
class EntropyEstimate:
    """Fitted exponential growth rate of a counting function."""

    radii: np.ndarray
    counts: np.ndarray
    slope: float
    interval: tuple
    source: str = ""

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise EstimationError("non-finite slope")


def fit_entropy(radii, counts, source="net") -> EntropyEstimate:
    slope, interval = fit_exponent(radii, counts)
    return EntropyEstimate(np.asarray(radii, float), np.asarray(counts, float),
                           slope, interval, source)


def verify_packing(net: Net, radius, n_centers=100) -> int:
    """Max number of net points in any ball of the given radius, scanning
    balls centered on an evenly strided subset of net points."""
    n = len(net)
    if n == 0:
        return 0
    stride = max(1, n // n_centers)
    idx = net.index()
    best = 0
    for i in range(0, n, stride):
        best = max(best, int(idx.query(net.points[i], radius).size))
    return best


@dataclass
class GoodBadClassification:
    """Net points inside B_R(p) split by distance to the nearest orbit point."""

    net_indices: np.ndarray
    dist_to_orbit: np.ndarray
    good: np.ndarray
    nearest_element: list
    eps_b: float
    radius: float

    @property
    def good_count(self) -> int:
        return int(np.count_nonzero(self.good))

    @property
    def bad_count(self) -> int:
        return int(np.count_nonzero(~self.good))

    @property
    def bad_fraction(self) -> float:
        return self.bad_count / max(1, len(self.good))

    def buckets(self) -> dict:
        """Good-point counts keyed by the nearest group element's word."""
        out = {}
        for i, g in enumerate(self.good):
            if g:
                out[self.nearest_element[i]] = out.get(self.nearest_element[i], 0) + 1
        return out


def classify_good_bad(net: Net, orbit, p, R, eps_b,
                      want_words: bool = True) -> GoodBadClassification:
    """Tag net points in B_R(p) as good (within eps_b * R of the orbit) or bad.

    Requires the orbit enumerated to R(1 + eps_b): a net point in the ball
    can only be good via an orbit point within that radius.  Modular-group
    orbits get an exact reduction-based distance pass; nearest-element words
    are resolved for good points only (bad points report None), since the
    per-element buckets are built from good points.
    """
    if orbit.radius + 1e-9 < R * (1.0 + eps_b):
        raise ValueError("orbit not enumerated far enough for classification")
    p = np.asarray(p, dtype=float)
    m = net.metric
    d_center = sup_dist_many(net.points, p, m.n_plane, m.period)
    inside = np.nonzero(d_center <= R)[0]
    cutoff = eps_b * R
    pts = net.points[inside]
    from .fuchsian import nearest_orbit_distances_modular

    is_modular = (orbit.group.kind == "lattice"
                  and orbit.group.name == "PSL(2,Z)"
                  and np.allclose(p, (0.0, 1.0))
                  and orbit.radius >= 8.0)
    orbit_grid = GridIndex(orbit.points, Metric(1, 0, 0.0),
                           max(min(cutoff / 2.0, 1.0), 0.25))
    if is_modular:
        dists = nearest_orbit_distances_modular(pts, orbit)
    else:
        dists = np.empty(inside.size)
        for k in range(inside.size):
            _, dists[k] = orbit_grid.nearest(pts[k], cutoff)
    good = dists <= cutoff
    words = [None] * inside.size
    if want_words:
        for k in np.nonzero(good)[0]:
            cand = orbit_grid.query(pts[k], dists[k] + 1e-9)
            d = sup_dist_many(orbit.points[cand], pts[k], 1, 0.0)
            words[k] = orbit.word(int(cand[int(np.argmin(d))]))
    return GoodBadClassification(inside, dists, good, words, eps_b, R)
