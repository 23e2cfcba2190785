"""Drift machinery: the square-root-of-short-length function, spherical and
ball averaging operators, region-split drift verification and decay fits.

The candidate function is f(x) = sqrt(1 / shortest two-sided length) =
max over plane factors of sqrt(y).  Its spherical average in a single plane
factor decays like tau * exp(-tau/2); the proof-form bound carries a tau
prefactor, so the decay fit removes it before reading off the exponent (see
``fit_decay``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (LineFactor, ModelPoint, ModelSpace, NorburyModelMeasure,
                    PlaneFactor)

__all__ = ["MargulisFn", "DriftReport", "spherical_average", "ball_average",
           "verify_drift", "fit_decay", "region_tag", "ball_average_ratio_quadrature"]


@dataclass(frozen=True)
class MargulisFn:
    """max over plane factors of sqrt(y), with the summed comparison f'.

    The pointwise sandwich f'(x)/n_plane <= f(x) <= f'(x) is exact; the
    positive lower bound on the systole set is a configurable constant
    standing in for the shortest-curve bound of the underlying surface.
    """

    space: ModelSpace
    lower_bound: float = 1.0

    def __post_init__(self):
        if self.space.n_plane == 0:
            raise ValueError("need at least one plane factor")

    def __call__(self, x: ModelPoint) -> float:
        return max(math.sqrt(x.coords[i][1]) for i in self.space.plane_indices)

    def comparison(self, x: ModelPoint) -> float:
        """f'(x) = sum of sqrt(y) over plane factors (easier to average)."""
        return sum(math.sqrt(x.coords[i][1]) for i in self.space.plane_indices)

    def on_packed(self, rows: np.ndarray) -> np.ndarray:
        n_plane = self.space.n_plane
        vals = np.sqrt(rows[:, 1 : 2 * n_plane : 2])
        return vals.max(axis=1)


def _circle_ratio(tau: float, n: int) -> float:
    phi = (np.arange(n) + 0.5) * (2.0 * math.pi / n)
    return float(np.mean((math.cosh(tau) + math.sinh(tau) * np.cos(phi)) ** -0.5))


def spherical_average(z, tau: float, rel_tol: float = 1e-6) -> float:
    """Average of sqrt(Im w) over the hyperbolic circle of radius tau at z.

    Scaling covariance makes the ratio to sqrt(Im z) independent of z, so the
    quadrature runs on the normalized circle; the periodic trapezoid rule is
    refined until two successive doublings agree to rel_tol.
    """
    y = z[1] if not hasattr(z, "y") else z.y
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0.0:
        return math.sqrt(y)
    n = 64
    prev = _circle_ratio(tau, n)
    for _ in range(16):
        n *= 2
        cur = _circle_ratio(tau, n)
        if abs(cur - prev) <= rel_tol * abs(cur):
            return math.sqrt(y) * cur
        prev = cur
    raise ArithmeticError("spherical quadrature did not converge")


def ball_average_ratio_quadrature(tau: float, n_gauss: int = 200) -> float:
    """Quadrature value of (A_tau f)/f at a deep single-plane point: the
    sphere averages weighted by sphere area over the ball area."""
    nodes, weights = np.polynomial.legendre.leggauss(n_gauss)
    s = 0.5 * tau * (nodes + 1.0)
    w = 0.5 * tau * weights
    vals = np.array([_circle_ratio(si, 4096) * math.sinh(si) if si > 0 else 0.0
                     for si in s])
    return float(np.sum(vals * w) / (math.cosh(tau) - 1.0))


@dataclass
class BallAverage:
    value: float
    std_error: float


def ball_average(fn, measure: NorburyModelMeasure, x: ModelPoint, tau: float,
                 n_samples: int, seed: int = 0, workers: int = 1,
                 n_batches: int = 10) -> BallAverage:
    """Measure-weighted Monte Carlo average of fn over the sup ball B_tau(x).

    Self-normalizing importance ratio (so averaging a constant returns that
    constant exactly); the standard error comes from batch means.
    Deterministic per (seed, workers).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    space = measure.space
    chunk = n_samples // workers
    rows_parts, w_parts = [], []
    for wk in range(workers):
        rng = np.random.default_rng((seed, wk))
        rows, wts = _sample_ball(rng, space, x, tau, chunk)
        rows_parts.append(rows)
        w_parts.append(wts)
    rows = np.vstack(rows_parts)
    wts = np.concatenate(w_parts)
    if not np.any(wts > 0):
        raise ValueError("no samples landed in the ball")
    fvals = fn.on_packed(rows) if hasattr(fn, "on_packed") else np.array(
        [fn(space.unpack(r)) for r in rows])
    total = float(np.sum(wts))
    est = float(np.sum(wts * fvals) / total)
    bsz = len(wts) // n_batches
    batch_vals = []
    for b in range(n_batches):
        sl = slice(b * bsz, (b + 1) * bsz)
        tw = float(np.sum(wts[sl]))
        if tw > 0:
            batch_vals.append(float(np.sum(wts[sl] * fvals[sl]) / tw))
    se = float(np.std(batch_vals, ddof=1) / math.sqrt(len(batch_vals))) if len(batch_vals) > 1 else math.inf
    return BallAverage(est, se)


def _sample_ball(rng, space, center, tau, n):
    """Joint samples of the product ball, each factor drawn exactly from its
    normalized measure (so all weights are 1): hyperbolic polar coordinates
    on plane factors, closed-form inverse CDF of coth(l) dl on line factors.
    """
    cols = []
    for i in space.plane_indices:
        xc, yc = center.coords[i]
        r = np.arccosh(1.0 + rng.random(n) * (math.cosh(tau) - 1.0))
        theta = 2.0 * math.pi * rng.random(n)
        w = np.tanh(r / 2.0) * np.exp(1j * theta)
        z = 1j * (1.0 + w) / (1.0 - w)
        cols.extend([z.real * yc + xc, z.imag * yc])
    for i in space.line_indices:
        sc = math.log(center.coords[i])
        ell_lo = math.exp(-(sc + tau))
        ell_hi = math.exp(-(sc - tau))
        q_lo, q_hi = math.log(math.sinh(ell_lo)), math.log(math.sinh(ell_hi))
        ell = np.arcsinh(np.exp(q_lo + rng.random(n) * (q_hi - q_lo)))
        cols.append(-np.log(ell))
    return np.column_stack(cols), np.ones(n)


def region_tag(space: ModelSpace, x: ModelPoint, tau: float, eps: float) -> str:
    """R1/R2/R3 split by how many plane factors stay short over the whole
    ball B_tau(x): the minimum height over a factor ball is y * exp(-tau),
    so factor i stays below length eps throughout iff y_i > exp(tau)/eps."""
    thin_throughout = sum(
        1 for i in space.plane_indices if x.coords[i][1] * math.exp(-tau) > 1.0 / eps)
    if thin_throughout == 0:
        return "R3"
    return "R1" if thin_throughout == 1 else "R2"


def depth_above_thick(space: ModelSpace, x: ModelPoint, eps: float) -> float:
    """max over plane factors of log(y * eps): how far the deepest factor
    sits inside its thin region (negative when all factors are thick)."""
    return max(math.log(x.coords[i][1] * eps) for i in space.plane_indices)


@dataclass
class DriftRow:
    point_id: int
    region: str
    tau: float
    f_value: float
    average: float
    std_error: float
    c_used: float
    b_used: float
    ok: bool


@dataclass
class DriftReport:
    rows: list
    tau: float
    eps: float
    bound_b: float

    @property
    def counterexamples(self):
        return [r for r in self.rows if not r.ok]

    def regions_present(self):
        return sorted({r.region for r in self.rows})

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point_id", "region", "tau", "f", "A_tau_f", "std_error",
                        "c", "b", "ok"])
            for r in self.rows:
                w.writerow([r.point_id, r.region, r.tau, r.f_value, r.average,
                            r.std_error, r.c_used, r.b_used, r.ok])


def verify_drift(fn: MargulisFn, measure: NorburyModelMeasure, points, tau: float,
                 eps: float, bound_b: float, n_samples: int = 40_000, seed: int = 0,
                 c_safety: float = 1.10) -> DriftReport:
    """Check (A_tau f)(x) <= c(x) f(x) + b(x) at 3 standard errors per point.

    c(x) is the quadrature ball-average ratio for R1 points, with the
    comparison-function slack (number of plane factors) for R2, and zero on
    R3 where the bump term b alone carries the bound.  b(x) = bound_b times a
    bump supported on a tau-neighborhood of R3 in depth.
    """
    space = fn.space
    c1 = ball_average_ratio_quadrature(tau) * c_safety
    rows = []
    for pid, x in enumerate(points):
        tag = region_tag(space, x, tau, eps)
        avg = ball_average(fn, measure, x, tau, n_samples, seed=seed + pid)
        if tag == "R1":
            c_used = c1
        elif tag == "R2":
            c_used = c1 * space.n_plane
        else:
            c_used = 0.0
        depth = depth_above_thick(space, x, eps)
        bump = min(1.0, max(0.0, 2.0 - depth / tau)) if depth > 0 else 1.0
        b_used = bound_b * bump
        ok = avg.value <= c_used * fn(x) + b_used + 3.0 * avg.std_error
        rows.append(DriftRow(pid, tag, tau, fn(x), avg.value, avg.std_error,
                             c_used, b_used, ok))
    return DriftReport(rows, tau, eps, bound_b)


def fit_decay(taus, ratios, tau_prefactor_degree: float = 1.0):
    """Exponent a of the model c(tau) = C * tau^deg * exp(a * tau).

    The averaging bound for the drift function carries a tau prefactor, so
    the default fit removes one power of tau before the linear fit of the
    log; passing degree 0 yields the plain log-linear slope.
    """
    taus = np.asarray(taus, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    if taus.size < 3:
        raise ValueError("need at least 3 tau values")
    logc = np.log(ratios) - tau_prefactor_degree * np.log(taus)
    coef = np.polyfit(taus, logc, 1)
    return float(coef[0])
