"""Sampleable regions used to build nets and run walks.

Each region knows its factor layout (packing convention of the kernels), an
optional x-period (quotient strips), a measure-weighted low-discrepancy
sample stream, and a membership test.  Streams are deterministic per seed:
the seed offsets a Halton sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import sup_dist_many

__all__ = ["Metric", "PlaneBall", "HoroballCap", "PeriodicStrip", "LineInterval",
           "ProductRegion", "halton"]

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def halton(n, dim, seed=0):
    """Halton points in [0,1)^dim, offset deterministically by the seed."""
    start = 1 + (seed % 1_000_003) * 4099
    idx = np.arange(start, start + n, dtype=np.int64)
    out = np.empty((n, dim))
    for d in range(dim):
        b = _PRIMES[d % len(_PRIMES)]
        i = idx.copy()
        f = np.ones(n)
        r = np.zeros(n)
        while i.max() > 0:
            f = f / b
            r = r + f * (i % b)
            i = i // b
        out[:, d] = r
    return out


@dataclass(frozen=True)
class Metric:
    """Factor layout + optional plane-factor x-period; wraps the kernels."""

    n_plane: int
    n_line: int = 0
    period: float = 0.0

    @property
    def dim(self) -> int:
        return 2 * self.n_plane + self.n_line

    def dist_many(self, pts, q):
        return sup_dist_many(pts, q, self.n_plane, self.period)

    def dist(self, a, b) -> float:
        return float(self.dist_many(np.asarray(a, dtype=float)[None, :], b)[0])


def _disc_polar_to_plane(u_r, u_theta, R, xc, yc):
    """Exact hyperbolic-area sampling of a ball via polar coordinates."""
    r = np.arccosh(1.0 + u_r * (math.cosh(R) - 1.0))
    theta = 2.0 * math.pi * u_theta
    rho = np.tanh(r / 2.0)
    w = rho * np.exp(1j * theta)
    z = 1j * (1.0 + w) / (1.0 - w)
    return np.column_stack([z.real * yc + xc, z.imag * yc])


@dataclass(frozen=True)
class PlaneBall:
    """Hyperbolic disc B_R(center) in the upper half plane."""

    center: tuple
    radius: float

    metric = None  # set in __post_init__

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(1, 0, 0.0))

    def sample(self, n, seed=0):
        u = halton(n, 2, seed)
        return _disc_polar_to_plane(u[:, 0], u[:, 1], self.radius, *self.center)

    def contains(self, pts):
        q = np.asarray(self.center, dtype=float)
        return self.metric.dist_many(pts, q) <= self.radius

    def descriptor(self):
        return {"kind": "plane-ball", "center": list(self.center), "radius": self.radius}


def _ball_slice_halfwidth(v, R, xc, yc):
    """Half-width in x of the slice of B_R((xc, yc)) at height exp(v)."""
    y = np.exp(v)
    s = 2.0 * y * yc * (math.cosh(R) - 1.0) - (y - yc) ** 2
    return np.sqrt(np.maximum(s, 0.0))


@dataclass(frozen=True)
class HoroballCap:
    """Region {y > level} intersected with a ball B_R(center).

    Sampling slices by height with a tabulated inverse CDF of the hyperbolic
    measure, so no rejection is paid even when the cap is a thin sliver of
    the ball.
    """

    center: tuple
    radius: float
    level: float = 1.0
    grid_size: int = 4096

    metric = None

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric(1, 0, 0.0))

    def _cdf_table(self):
        xc, yc = self.center
        v_lo = math.log(self.level)
        v_hi = math.log(yc) + self.radius
        v = np.linspace(v_lo, v_hi, self.grid_size)
        dens = 2.0 * _ball_slice_halfwidth(v, self.radius, xc, yc) * np.exp(-v)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(v))])
        return v, cdf / cdf[-1]

    def sample(self, n, seed=0):
        xc, yc = self.center
        u = halton(n, 2, seed)
        v_grid, cdf = self._cdf_table()
        v = np.interp(u[:, 0], cdf, v_grid)
        w = _ball_slice_halfwidth(v, self.radius, xc, yc)
        x = xc + (2.0 * u[:, 1] - 1.0) * w
        return np.column_stack([x, np.exp(v)])

    def contains(self, pts):
        q = np.asarray(self.center, dtype=float)
        return (self.metric.dist_many(pts, q) <= self.radius) & (pts[:, 1] > self.level)

    def descriptor(self):
        return {"kind": "horoball-cap", "center": list(self.center),
                "radius": self.radius, "level": self.level}


@dataclass(frozen=True)
class PeriodicStrip:
    """Cusp-like quotient: x modulo ``period``, heights in [y_min, y_max]."""

    period: float
    y_min: float
    y_max: float

    metric = None

    def __post_init__(self):
        if not (0 < self.y_min < self.y_max):
            raise ValueError("need 0 < y_min < y_max")
        object.__setattr__(self, "metric", Metric(1, 0, self.period))

    def sample(self, n, seed=0):
        u = halton(n, 2, seed)
        x = u[:, 0] * self.period
        a, b = 1.0 / self.y_max, 1.0 / self.y_min
        y = 1.0 / (a + u[:, 1] * (b - a))  # inverse CDF of dy/y^2
        return np.column_stack([x, y])

    def contains(self, pts):
        return (pts[:, 1] >= self.y_min) & (pts[:, 1] <= self.y_max)

    def descriptor(self):
        return {"kind": "periodic-strip", "period": self.period,
                "y_min": self.y_min, "y_max": self.y_max}


@dataclass(frozen=True)
class LineInterval:
    """One line factor, arclength coordinate s = log(u) in [s_min, s_max].

    ``weighted`` applies the one-sided measure coth(l) dl in the s chart;
    otherwise sampling is uniform in arclength.
    """

    s_min: float
    s_max: float
    weighted: bool = True
    grid_size: int = 2048

    def sample_1d(self, n, seed=0, dim_offset=0):
        u = halton(n, 1 + dim_offset, seed)[:, dim_offset]
        if not self.weighted:
            return self.s_min + u * (self.s_max - self.s_min)
        s = np.linspace(self.s_min, self.s_max, self.grid_size)
        dens = 1.0 / np.tanh(np.exp(-s)) * np.exp(-s)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
        return np.interp(u, cdf / cdf[-1], s)


@dataclass(frozen=True)
class ProductRegion:
    """Product of plane-factor balls and line-factor intervals.

    ``plane_balls`` is a list of (center, radius) in upper-half-plane
    coordinates; ``line_intervals`` a list of LineInterval.  The measure is
    the product measure (hyperbolic area on plane factors, optionally
    coth-weighted arclength on line factors), matching the model measure.
    """

    plane_balls: tuple
    line_intervals: tuple

    metric = None

    def __post_init__(self):
        object.__setattr__(self, "metric",
                           Metric(len(self.plane_balls), len(self.line_intervals), 0.0))

    def sample(self, n, seed=0):
        cols = []
        for k, (center, radius) in enumerate(self.plane_balls):
            u = halton(n, 2, seed + 7 * k + 1)
            cols.append(_disc_polar_to_plane(u[:, 0], u[:, 1], radius, *center))
        for k, iv in enumerate(self.line_intervals):
            cols.append(iv.sample_1d(n, seed + 1000 + 13 * k)[:, None])
        return np.hstack(cols)

    def contains(self, pts):
        ok = np.ones(pts.shape[0], dtype=bool)
        for k, (center, radius) in enumerate(self.plane_balls):
            sub = pts[:, 2 * k : 2 * k + 2]
            ok &= sup_dist_many(sub, np.asarray(center, float), 1) <= radius
        off = 2 * len(self.plane_balls)
        for k, iv in enumerate(self.line_intervals):
            ok &= (pts[:, off + k] >= iv.s_min) & (pts[:, off + k] <= iv.s_max)
        return ok

    def descriptor(self):
        return {"kind": "product",
                "plane_balls": [[list(c), r] for c, r in self.plane_balls],
                "line_intervals": [[iv.s_min, iv.s_max, iv.weighted]
                                   for iv in self.line_intervals]}
