"""Net random walks: uniform steps over tau-neighbourhoods, concave
trajectory counting, and discretization of geodesics into trajectories."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import sup_dist_many
from .fuchsian import fit_exponent, EstimationError
from .nets import GridIndex, Net

__all__ = ["WalkConfig", "Trajectory", "WalkError", "NeighborTable", "step",
           "run_and_count_concave", "ConcaveWalkResult", "discretize_geodesic",
           "thin_tags"]


class WalkError(RuntimeError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    """Random-walk parameters.

    ``s_steps`` is ceil(diam_thick / tau) + 1: the number of leading and
    trailing steps exempt from the thin requirement in a concave trajectory.
    ``tag_mode`` picks how a point counts as thin: "threshold" tags height
    above 1/eps_thin on some plane factor, "distance" requires sitting more
    than tau above the thick ceiling (so that the whole step-ball stays
    thin).
    """

    tau: float
    n_steps: int
    eps_thin: float
    diam_thick: float
    seed: int = 0
    n_trajectories: int = 1000
    tag_mode: str = "distance"

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("need at least one step")
        if self.tag_mode not in ("distance", "threshold"):
            raise ValueError("tag_mode must be 'distance' or 'threshold'")

    @property
    def s_steps(self) -> int:
        return math.ceil(self.diam_thick / self.tau) + 1


def thin_tags(points: np.ndarray, n_plane: int, eps_thin: float, tag_mode: str,
              tau: float = 0.0) -> np.ndarray:
    """Thin tags for packed rows.

    A point is thin when some plane factor's curve is shorter than eps_thin
    (height above 1/eps_thin).  In "distance" mode the height must clear the
    threshold by a further factor exp(tau): the vertical distance to the
    thick ceiling then exceeds tau, which for a single plane factor is the
    exact distance to the thick region.
    """
    cut = 1.0 / eps_thin
    if tag_mode == "distance":
        cut *= math.exp(tau)
    heights = points[:, 1 : 2 * n_plane : 2]
    return (heights > cut).any(axis=1)


class NeighborTable:
    """Per-net-point candidate lists for uniform tau-steps.

    A point is always within tau of itself, so candidate lists are never
    empty; the walk-level requirement tau > 2 eps_sep is enforced by
    run_and_count_concave, not here, so that degenerate step radii (where
    the only candidate is the point itself) remain testable.
    """

    def __init__(self, net: Net, tau: float):
        self.net = net
        self.tau = tau
        idx = GridIndex(net.points, net.metric, max(min(tau, 4.0 * net.eps_sep), 1e-9))
        self.lists = [np.sort(idx.query(net.points[i], tau)) for i in range(len(net))]
        if any(l.size == 0 for l in self.lists):
            raise WalkError("net/tau misconfigured: empty step neighbourhood")


def step(table: NeighborTable, current: int, rng) -> int:
    """One uniform step among the net points within tau of the current one."""
    cand = table.lists[current]
    if cand.size == 0:
        raise WalkError("empty step neighbourhood")
    return int(cand[rng.integers(cand.size)])


@dataclass
class Trajectory:
    net_indices: np.ndarray
    points: np.ndarray
    step_dists: np.ndarray
    thin: np.ndarray

    def to_json(self) -> str:
        return json.dumps({"indices": self.net_indices.tolist(),
                           "thin": self.thin.astype(int).tolist()})


@dataclass
class ConcaveWalkResult:
    n_values: np.ndarray
    concave_counts: np.ndarray
    fractions: np.ndarray
    n_trajectories: int
    per_step_exponent: float | None
    s_steps: int
    low_counts: bool

    def summary_rows(self):
        return [(int(n), int(c), float(f)) for n, c, f in
                zip(self.n_values, self.concave_counts, self.fractions)]


def run_and_count_concave(net: Net, start_index: int, cfg: WalkConfig,
                          table: NeighborTable | None = None,
                          min_hits: int = 30) -> ConcaveWalkResult:
    """Simulate trajectories and count the concave ones per prefix length.

    A trajectory of length n is concave when all its points except the first
    and last ``s_steps`` are thin-tagged; prefixes of a single simulated
    n_steps-walk have the correct law for every smaller n, so one batch of
    walks yields the whole count curve.  Lengths n <= 2 * s_steps have an
    empty middle, are vacuously concave (fraction 1), and are excluded from
    the decay fit.
    """
    if cfg.tau <= 2.0 * net.eps_sep:
        raise WalkError("step radius must exceed twice the net separation")
    if table is None:
        table = NeighborTable(net, cfg.tau)
    s = cfg.s_steps
    n_max = cfg.n_steps
    T = cfg.n_trajectories
    thin = thin_tags(net.points, net.metric.n_plane, cfg.eps_thin, cfg.tag_mode,
                     cfg.tau)
    thin_mat = np.empty((T, n_max), dtype=bool)
    for t in range(T):
        rng = np.random.default_rng((cfg.seed, t))
        cur = start_index
        thin_mat[t, 0] = thin[cur]
        for k in range(1, n_max):
            cur = step(table, cur, rng)
            thin_mat[t, k] = thin[cur]
    n_values = np.arange(1, n_max + 1)
    counts = np.empty(n_values.size, dtype=np.int64)
    for j, n in enumerate(n_values):
        mid = thin_mat[:, s : n - s]  # empty slice for n <= 2s: vacuously all-thin
        counts[j] = int(np.count_nonzero(mid.all(axis=1)))
    fractions = counts / float(T)
    fit_mask = n_values > 2 * s
    fit_counts = counts[fit_mask]
    low = bool(fit_counts.size and fit_counts[0] < min_hits)
    if low:
        warnings.warn(f"only {fit_counts[0]} concave hits at the smallest length;"
                      " fit is statistically weak", UserWarning)
    exponent = None
    pos = fit_mask & (counts > 0)
    if np.count_nonzero(pos) >= 2:
        slope = np.polyfit(n_values[pos], np.log(fractions[pos]), 1)[0]
        exponent = float(slope)
    return ConcaveWalkResult(n_values, counts, fractions, T, exponent, s, low)


def discretize_geodesic(segment, net: Net, tau: float, eps_thin: float = 1.0,
                        tag_mode: str = "threshold") -> Trajectory:
    """Turn a geodesic segment into a net trajectory.

    Marks points at spacing tau - 2 eps along the segment and snaps each to
    the nearest net point.  If snapping pushes some consecutive pair beyond
    tau, the spacing is tightened to tau - 4 eps, which restores the bound
    (marks moved by at most the 2 eps covering radius each).  Snapping
    failures beyond the covering radius raise WalkError.
    """
    eps = net.eps_sep
    if tau <= 4.0 * eps:
        raise ValueError("tau too small relative to the net separation")
    idx = net.index()
    for spacing in (tau - 2.0 * eps, tau - 4.0 * eps):
        marks = _marks_along(segment, spacing)
        snapped, dists_ok = [], True
        for q in marks:
            j, d = idx.nearest(np.asarray(q, dtype=float), 2.0 * eps)
            if d > 2.0 * eps + 1e-9:
                raise WalkError(f"net does not cover the segment: snap {d:.3f}"
                                f" > {2*eps:.3f}")
            snapped.append(j)
        pts = net.points[np.asarray(snapped, dtype=np.int64)]
        step_d = np.array([
            float(sup_dist_many(pts[k + 1 : k + 2], pts[k], net.metric.n_plane,
                                net.metric.period)[0])
            for k in range(len(snapped) - 1)])
        if not step_d.size or step_d.max() <= tau + 1e-9:
            break
    indices = np.asarray(snapped, dtype=np.int64)
    return Trajectory(indices, pts, step_d,
                      thin_tags(pts, net.metric.n_plane, eps_thin, tag_mode, tau))


def _marks_along(segment, spacing):
    L = segment.length
    n = max(1, math.ceil(L / spacing))
    return [segment.point_at_arclength(L * k / n).as_tuple() for k in range(n + 1)]
