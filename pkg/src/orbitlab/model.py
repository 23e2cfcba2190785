"""Sup-product model spaces: plane factors for two-sided curves, log-lines
for one-sided curves, an optional abstract base factor carrying only an
entropy exponent.

Coordinate conventions follow the product-region chart: a plane factor holds
(twist, 1/length) as an upper-half-plane point, a line factor holds
u = 1/length with metric |log(u1/u2)|.  The model is the additive-error-zero
limit of the product-region comparison; experiments that need a nonzero
comparison error inject it explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic as hyp
from ._kernels import hyp_dist, sup_dist_many
from .regions import halton

__all__ = [
    "PlaneFactor", "LineFactor", "ThickBaseFactor", "ModelSpace", "ModelPoint",
    "NorburyModelMeasure", "ModelPath", "model_distance", "systole_projection",
    "weak_convexity_homotope", "mc_ball_volume", "is_thick", "is_in_systole_set",
    "active_intervals", "twist_orbit_projection_diameter",
]


@dataclass(frozen=True)
class PlaneFactor:
    """Two-sided curve: (twist, 1/length) upper-half-plane coordinates."""

    exponent: float = 1.0


@dataclass(frozen=True)
class LineFactor:
    """One-sided curve: coordinate u = 1/length, metric |log(u1/u2)|."""

    exponent: float = 0.0


@dataclass(frozen=True)
class ThickBaseFactor:
    """Abstract bounded factor standing in for the rest of the space.

    Modeled as a single point; only its entropy exponent enters counting.
    """

    exponent: float = 0.0

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")


@dataclass(frozen=True)
class ModelSpace:
    factors: tuple
    eps_systole: float = 0.1

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ValueError("need at least one factor")
        if not (0.0 < self.eps_systole < 1.0):
            raise ValueError("systole threshold must lie in (0, 1)")
        for f in self.factors:
            if f.exponent < 0:
                raise ValueError("factor exponents must be non-negative")

    @property
    def plane_indices(self):
        return [i for i, f in enumerate(self.factors) if isinstance(f, PlaneFactor)]

    @property
    def line_indices(self):
        return [i for i, f in enumerate(self.factors) if isinstance(f, LineFactor)]

    @property
    def n_plane(self):
        return len(self.plane_indices)

    @property
    def n_line(self):
        return len(self.line_indices)

    def point(self, *coords) -> "ModelPoint":
        return ModelPoint(self, tuple(coords))

    def pack(self, point: "ModelPoint") -> np.ndarray:
        """Packed chart row: plane (x, y) pairs first, then line s = log u."""
        row = []
        for i in self.plane_indices:
            x, y = point.coords[i]
            row.extend([x, y])
        for i in self.line_indices:
            row.append(math.log(point.coords[i]))
        return np.asarray(row, dtype=float)

    def unpack(self, row) -> "ModelPoint":
        coords = [None] * len(self.factors)
        k = 0
        for i in self.plane_indices:
            coords[i] = (float(row[k]), float(row[k + 1]))
            k += 2
        for i in self.line_indices:
            coords[i] = math.exp(float(row[k]))
            k += 1
        return ModelPoint(self, tuple(coords))


@dataclass(frozen=True)
class ModelPoint:
    """Coordinates per factor: plane -> (x, y), line -> u > 0, base -> None."""

    space: ModelSpace
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != len(self.space.factors):
            raise ValueError("coordinate count must match factor count")
        for f, c in zip(self.space.factors, self.coords):
            if isinstance(f, PlaneFactor):
                if c[1] <= 0:
                    raise ValueError("plane factor height must be positive")
            elif isinstance(f, LineFactor):
                if c <= 0:
                    raise ValueError("line coordinate must be positive")

    def factor_lengths(self):
        """Curve length per factor: plane 1/y, line 1/u, base None."""
        out = []
        for f, c in zip(self.space.factors, self.coords):
            if isinstance(f, PlaneFactor):
                out.append(1.0 / c[1])
            elif isinstance(f, LineFactor):
                out.append(1.0 / c)
            else:
                out.append(None)
        return out


def model_distance(x: ModelPoint, y: ModelPoint) -> float:
    """Sup over factor metrics; base factors are single points (distance 0)."""
    if x.space is not y.space and x.space != y.space:
        raise ValueError("points live in different model spaces")
    best = 0.0
    for f, cx, cy in zip(x.space.factors, x.coords, y.coords):
        if isinstance(f, PlaneFactor):
            best = max(best, hyp_dist(cx[0], cx[1], cy[0], cy[1]))
        elif isinstance(f, LineFactor):
            best = max(best, abs(math.log(cx / cy)))
    return best


def systole_projection(x: ModelPoint) -> ModelPoint:
    """Cap line coordinates at 1/eps_systole; plane and base stay fixed.

    Idempotent, lands in the systole superlevel set, and is non-expansive
    (each coordinate map is 1-Lipschitz and the sup of 1-Lipschitz maps is
    1-Lipschitz).
    """
    cap = 1.0 / x.space.eps_systole
    coords = []
    for f, c in zip(x.space.factors, x.coords):
        if isinstance(f, LineFactor):
            coords.append(min(c, cap))
        else:
            coords.append(c)
    return ModelPoint(x.space, tuple(coords))


def is_in_systole_set(x: ModelPoint, eps=None) -> bool:
    """No one-sided (line) curve shorter than eps: u <= 1/eps on every line."""
    if eps is None:
        eps = x.space.eps_systole
    return all(c <= 1.0 / eps + 1e-12
               for f, c in zip(x.space.factors, x.coords) if isinstance(f, LineFactor))


def is_thick(x: ModelPoint, eps) -> bool:
    """No curve shorter than eps on any factor."""
    for f, c in zip(x.space.factors, x.coords):
        if isinstance(f, PlaneFactor) and c[1] > 1.0 / eps:
            return False
        if isinstance(f, LineFactor) and c > 1.0 / eps:
            return False
    return True


@dataclass(frozen=True)
class NorburyModelMeasure:
    """Model measure: dx dy / y^2 per plane factor, coth(l) dl per line.

    In the u = 1/l chart the line density is coth(1/u)/u^2; in the arclength
    chart s = log u it is coth(exp(-s)) exp(-s).
    """

    space: ModelSpace

    def density(self, point: ModelPoint) -> float:
        d = 1.0
        for f, c in zip(self.space.factors, point.coords):
            if isinstance(f, PlaneFactor):
                d *= 1.0 / (c[1] * c[1])
            elif isinstance(f, LineFactor):
                d *= (1.0 / math.tanh(1.0 / c)) / (c * c)
        return d

    def line_density_arclength(self, s: float) -> float:
        ell = math.exp(-s)
        return ell / math.tanh(ell)

    def coth_weight_bounds(self):
        """On the systole set the coth weight sits in [1, coth(eps)]."""
        return 1.0, 1.0 / math.tanh(self.space.eps_systole)


class ModelPath:
    """Piecewise coordinatewise-geodesic path through model points.

    Each leg interpolates every factor along its own geodesic with
    proportional parameterization; a two-point path therefore has length
    equal to the sup-metric distance of its endpoints.
    """

    def __init__(self, points):
        self.points = list(points)
        if len(self.points) < 2:
            raise ValueError("need at least two points")
        self.space = self.points[0].space
        self.leg_lengths = [model_distance(a, b)
                            for a, b in zip(self.points, self.points[1:])]

    @property
    def length(self) -> float:
        return float(sum(self.leg_lengths))

    def eval(self, t: float) -> ModelPoint:
        """Point at normalized parameter t in [0, 1] (arclength-proportional)."""
        if t <= 0.0:
            return self.points[0]
        if t >= 1.0:
            return self.points[-1]
        target = t * self.length
        acc = 0.0
        last = len(self.leg_lengths) - 1
        for i, leg in enumerate(self.leg_lengths):
            if target <= acc + leg or i == last:
                if leg == 0.0:
                    return self.points[i]
                frac = min(max((target - acc) / leg, 0.0), 1.0)
                return _interpolate(self.points[i], self.points[i + 1], frac)
            acc += leg
        return self.points[-1]


def _interpolate(a: ModelPoint, b: ModelPoint, frac: float) -> ModelPoint:
    if frac <= 0.0:
        return a
    if frac >= 1.0:
        return b
    coords = []
    for f, ca, cb in zip(a.space.factors, a.coords, b.coords):
        if isinstance(f, PlaneFactor):
            seg = hyp.GeodesicSegment(hyp.HalfPlanePoint(*ca), hyp.HalfPlanePoint(*cb))
            q = seg.point_at(frac)
            coords.append((q.x, q.y))
        elif isinstance(f, LineFactor):
            coords.append(math.exp((1 - frac) * math.log(ca) + frac * math.log(cb)))
        else:
            coords.append(ca)
    return ModelPoint(a.space, tuple(coords))


def weak_convexity_homotope(path: ModelPath, delta: float, eps_prime: float,
                            injected_error: float = 0.0):
    """Push a geodesic segment into the systole superlevel set.

    Subdivides at arclength spacing delta, applies the systole projection to
    the interior subdivision points, and rejoins by coordinatewise geodesics.
    The output lies in the systole set at threshold eps_prime (projection
    caps every line coordinate; log-linear interpolation preserves the cap),
    and the reported ratio is length(out)/length(in).  A positive
    ``injected_error`` adds the product-region comparison error 2c per leg,
    mirroring the bound delta + 2c on modified leg lengths.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    x, y = path.points[0], path.points[-1]
    if not (is_in_systole_set(x, eps_prime) and is_in_systole_set(y, eps_prime)):
        raise ValueError("endpoints must lie in the systole set at eps_prime")
    L = path.length
    n = max(1, math.ceil(L / delta))
    params = [k / n for k in range(n + 1)]
    pts = [path.eval(t) for t in params]
    capped = [pts[0]] + [_cap_at(p, eps_prime) for p in pts[1:-1]] + [pts[-1]]
    out = ModelPath(capped)
    out_len = out.length + (2.0 * injected_error * n if injected_error > 0 else 0.0)
    ratio = out_len / L if L > 0 else 1.0
    return out, ratio


def _cap_at(p: ModelPoint, eps: float) -> ModelPoint:
    cap = 1.0 / eps
    coords = []
    for f, c in zip(p.space.factors, p.coords):
        if isinstance(f, LineFactor):
            coords.append(min(c, cap))
        else:
            coords.append(c)
    return ModelPoint(p.space, tuple(coords))


@dataclass
class VolumeEstimate:
    value: float
    std_error: float
    n_samples: int


def mc_ball_volume(measure: NorburyModelMeasure, center: ModelPoint, R: float,
                   n_samples: int, seed: int = 0, workers: int = 1) -> VolumeEstimate:
    """Importance-sampled model measure of the sup-metric ball B_R(center).

    The sup ball is the product of per-factor balls and the measure is a
    product, so each factor is estimated on its own proposal box and the
    estimates multiply.  Deterministic for fixed (seed, workers): worker w
    draws its chunk from seed + w, and chunks are merged in worker order.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if n_samples < workers * 10:
        raise ValueError("too few samples")
    space = measure.space
    chunk = n_samples // workers
    per_factor_means = []
    per_factor_vars = []
    for fi, (f, c) in enumerate(zip(space.factors, center.coords)):
        if isinstance(f, ThickBaseFactor):
            continue
        vals = []
        for w in range(workers):
            rng = np.random.default_rng((seed, fi, w))
            if isinstance(f, PlaneFactor):
                vals.append(_plane_ball_weights(rng, c, R, chunk, fi))
            else:
                vals.append(_line_ball_weights(rng, c, R, chunk, fi))
        v = np.concatenate(vals)
        per_factor_means.append(float(v.mean()))
        per_factor_vars.append(float(v.var(ddof=1) / v.size))
    est = float(np.prod(per_factor_means))
    if est == 0.0:
        raise ValueError("no samples landed in the ball; radius too small for sampler")
    rel_var = sum(var / (m * m) for m, var in zip(per_factor_means, per_factor_vars))
    return VolumeEstimate(est, est * math.sqrt(rel_var), n_samples)


def _plane_ball_weights(rng, c, R, n, stream_tag):
    xc, yc = c
    vc = math.log(yc)
    X = 2.0 * math.sinh(R / 2.0) * math.exp(R / 2.0) * yc
    x = xc + (2.0 * rng.random(n) - 1.0) * X
    v = vc + (2.0 * rng.random(n) - 1.0) * R
    y = np.exp(v)
    arg = np.maximum(1.0, 1.0 + ((x - xc) ** 2 + (y - yc) ** 2) / (2.0 * y * yc))
    inside = np.arccosh(arg) <= R
    # chart measure: dx dy / y^2 = e^{-v} dx dv over the box 2X x 2R
    return np.where(inside, np.exp(-v), 0.0) * (2.0 * X) * (2.0 * R)


def _line_ball_weights(rng, c, R, n, stream_tag):
    sc = math.log(c)
    s = sc + (2.0 * rng.random(n) - 1.0) * R
    ell = np.exp(-s)
    return (ell / np.tanh(ell)) * (2.0 * R)


def plane_ball_volume_exact(R: float) -> float:
    return 2.0 * math.pi * (math.cosh(R) - 1.0)


def line_ball_volume_exact(u_center: float, R: float) -> float:
    """Closed form of the coth-weighted length measure of a line-factor ball:
    integral of coth(l) dl = log(sinh(l))."""
    lo = math.exp(-(math.log(u_center) + R))
    hi = math.exp(-(math.log(u_center) - R))
    return math.log(math.sinh(hi)) - math.log(math.sinh(lo))


def active_intervals(path: ModelPath, eps: float, n_samples: int = 512,
                     refine_iters: int = 40):
    """Per-factor parameter intervals where the factor length drops below eps.

    Sampled on a parameter grid with bisection refinement of the crossing
    points; factors that never get thin report an empty list.  Along a single
    coordinatewise-geodesic leg a plane-factor height is unimodal, so the
    sub-eps locus is connected; multi-leg paths may report several intervals.
    """
    space = path.space
    ts = np.linspace(0.0, 1.0, n_samples)
    lengths = np.array([[l if l is not None else math.inf
                         for l in path.eval(t).factor_lengths()] for t in ts])
    out = []
    for k in range(len(space.factors)):
        thin = lengths[:, k] < eps
        intervals = []
        i = 0
        while i < n_samples:
            if thin[i]:
                j = i
                while j + 1 < n_samples and thin[j + 1]:
                    j += 1
                lo = _refine_crossing(path, k, eps, ts[i - 1], ts[i], refine_iters) if i > 0 else ts[0]
                hi = _refine_crossing(path, k, eps, ts[j + 1], ts[j], refine_iters) if j + 1 < n_samples else ts[-1]
                intervals.append((lo, hi))
                i = j + 1
            i += 1
        out.append(intervals)
    return out


def _factor_length_at(path, k, t):
    val = path.eval(t).factor_lengths()[k]
    return val if val is not None else math.inf


def _refine_crossing(path, k, eps, t_out, t_in, iters):
    # bisect between a parameter outside the thin locus and one inside
    for _ in range(iters):
        mid = 0.5 * (t_out + t_in)
        if _factor_length_at(path, k, mid) < eps:
            t_in = mid
        else:
            t_out = mid
    return 0.5 * (t_out + t_in)


def twist_orbit_projection_diameter(R: float, eps: float, n_boundary: int = 4000):
    """Projection diameter of a deep ball onto a twist orbit, single plane
    factor.

    The orbit is {(n * eps, 1/eps)}: the twist orbit of a curve of fixed
    length eps, consecutive twists advancing the first coordinate by the
    curve length.  The ball has radius R and is centered at
    (eps/2, exp(R)/eps), where the curve is exp(-R) times shorter.  Returns
    (diameter, min_center_distance_to_orbit).
    """
    if R < 0:
        raise ValueError("R must be non-negative")
    y_orbit = 1.0 / eps
    step = eps
    qx, qy = step / 2.0, y_orbit * math.exp(R)
    if R == 0.0:
        return 0.0, _twist_orbit_distance(qx, qy, step, y_orbit)
    theta = np.linspace(0.0, 2.0 * math.pi, n_boundary, endpoint=False)
    rho = math.tanh(R / 2.0)
    w = rho * np.exp(1j * theta)
    z = 1j * (1.0 + w) / (1.0 - w)
    bx = z.real * qy + qx
    by = z.imag * qy
    feet_n = []
    for x, y in zip(bx, by):
        n0 = math.floor(x / step)
        best = min((hyp_dist(x, y, n * step, y_orbit), n) for n in (n0, n0 + 1))
        feet_n.append(best[1])
    lo, hi = min(feet_n), max(feet_n)
    diam = hyp_dist(lo * step, y_orbit, hi * step, y_orbit)
    return diam, _twist_orbit_distance(qx, qy, step, y_orbit)


def _twist_orbit_distance(qx, qy, step, y_orbit):
    n0 = math.floor(qx / step)
    return min(hyp_dist(qx, qy, n * step, y_orbit) for n in (n0 - 1, n0, n0 + 1, n0 + 2))
