"""Upper-half-plane geometry: points, Mobius isometries, geodesics, horoballs.

All types are immutable values and every operation is pure, so everything in
this module can be shared freely across threads and worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._kernels import hyp_dist

__all__ = [
    "HalfPlanePoint",
    "Isometry",
    "GeodesicSegment",
    "Horoball",
    "distance",
    "apply",
    "project_to_geodesic",
    "set_projection_diameter",
    "horoball_ball_volume",
    "ball_area",
]


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point of the hyperbolic plane in upper-half-plane coordinates."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")
        if self.y <= 0:
            raise ValueError("height must be positive")

    def as_tuple(self):
        return (self.x, self.y)


def _as_point(p) -> HalfPlanePoint:
    if isinstance(p, HalfPlanePoint):
        return p
    return HalfPlanePoint(float(p[0]), float(p[1]))


def distance(p, q) -> float:
    """Hyperbolic distance.  Vertical pairs reduce to |log(y2/y1)|."""
    p = _as_point(p)
    q = _as_point(q)
    return hyp_dist(p.x, p.y, q.x, q.y)


def ball_area(radius: float) -> float:
    """Area of a hyperbolic disc, 2*pi*(cosh R - 1)."""
    return 2.0 * math.pi * (math.cosh(radius) - 1.0)


@dataclass(frozen=True)
class Isometry:
    """Determinant-one real Mobius map, up to global sign.

    Instances are normalized on construction: determinant rescaled to 1
    (checked against tolerance 1e-12 before rescaling) and the sign fixed so
    the first entry larger than 1e-12 in (a, b, c, d) is positive.  Groups
    given by integer matrices keep exact integer entries alongside, so long
    composition chains in orbit enumeration never drift.
    """

    a: float
    b: float
    c: float
    d: float
    int_entries: tuple | None = None

    DET_TOL = 1e-12

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        # floating det error grows with the square of the entry size, so the
        # acceptance gate is relative; normalization below restores det 1
        m = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if not math.isfinite(det) or abs(det - 1.0) > 1e-9 * (1.0 + m * m):
            raise ValueError(f"matrix determinant {det} too far from 1")
        entries = (self.a, self.b, self.c, self.d)
        scale = 1.0 / math.sqrt(abs(det))
        sign = 1.0
        for e in entries:
            if abs(e) > self.DET_TOL:
                sign = 1.0 if e > 0 else -1.0
                break
        factor = sign * scale
        object.__setattr__(self, "a", self.a * factor)
        object.__setattr__(self, "b", self.b * factor)
        object.__setattr__(self, "c", self.c * factor)
        object.__setattr__(self, "d", self.d * factor)
        if self.int_entries is not None:
            ia, ib, ic, id_ = self.int_entries
            if ia * id_ - ib * ic != 1:
                raise ValueError("integer entries must have determinant 1")
            first = next((e for e in (ia, ib, ic, id_) if e != 0), 1)
            if first < 0:
                ia, ib, ic, id_ = -ia, -ib, -ic, -id_
            object.__setattr__(self, "int_entries", (ia, ib, ic, id_))

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0, 0.0, 1.0, int_entries=(1, 0, 0, 1))

    @classmethod
    def from_integers(cls, a: int, b: int, c: int, d: int) -> "Isometry":
        return cls(float(a), float(b), float(c), float(d), int_entries=(a, b, c, d))

    @classmethod
    def translation(cls, t: float) -> "Isometry":
        if t == int(t):
            return cls(1.0, float(t), 0.0, 1.0, int_entries=(1, int(t), 0, 1))
        return cls(1.0, float(t), 0.0, 1.0)

    @classmethod
    def dilation(cls, q: float) -> "Isometry":
        """diag(q, 1/q): the hyperbolic map z -> q^2 z with axis x = 0."""
        if q <= 0:
            raise ValueError("q must be positive")
        return cls(q, 0.0, 0.0, 1.0 / q)

    @classmethod
    def hyperbolic_with_axis(cls, u: float, v: float, length: float) -> "Isometry":
        """Hyperbolic isometry with axis endpoints u, v on the real line and
        translation length ``length`` (conjugate of a dilation)."""
        if u == v:
            raise ValueError("axis endpoints must be distinct")
        if v < u:
            u, v = v, u  # same axis, translation direction is immaterial here
        lam = math.exp(length / 2.0)
        # M maps (0, inf) -> (u, v);  result = M diag(lam, 1/lam) M^{-1}
        s = 1.0 / math.sqrt(v - u)
        ma, mb, mc, md = s * v, s * u, s, s
        ia, ib, ic, id_ = md, -mb, -mc, ma
        da, dd = lam, 1.0 / lam
        return cls(
            ma * da * ia + mb * dd * ic,
            ma * da * ib + mb * dd * id_,
            mc * da * ia + md * dd * ic,
            mc * da * ib + md * dd * id_,
        )

    def compose(self, other: "Isometry") -> "Isometry":
        ints = None
        if self.int_entries is not None and other.int_entries is not None:
            a1, b1, c1, d1 = self.int_entries
            a2, b2, c2, d2 = other.int_entries
            ints = (
                a1 * a2 + b1 * c2,
                a1 * b2 + b1 * d2,
                c1 * a2 + d1 * c2,
                c1 * b2 + d1 * d2,
            )
        return Isometry(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            int_entries=ints,
        )

    def inverse(self) -> "Isometry":
        ints = None
        if self.int_entries is not None:
            ia, ib, ic, id_ = self.int_entries
            ints = (id_, -ib, -ic, ia)
        return Isometry(self.d, -self.b, -self.c, self.a, int_entries=ints)

    def apply_boundary(self, x: float) -> float:
        """Action on a boundary real; raises when the image is infinity."""
        den = self.c * x + self.d
        if abs(den) < 1e-300:
            raise ZeroDivisionError("boundary point maps to infinity")
        return (self.a * x + self.b) / den

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


def apply(g: Isometry, p) -> HalfPlanePoint:
    """Apply a Mobius map to an interior point.

    For det-1 real matrices the denominator |cz+d| cannot vanish on y > 0,
    but we still guard against overflow from extreme compositions.
    """
    p = _as_point(p)
    cx_d = g.c * p.x + g.d
    den = cx_d * cx_d + (g.c * p.y) ** 2
    if den < 1e-300 or not math.isfinite(den):
        raise ValueError("degenerate Mobius image")
    x = ((g.a * p.x + g.b) * cx_d + g.a * g.c * p.y * p.y) / den
    y = p.y / den
    return HalfPlanePoint(x, y)


def _axis_mapper(p: HalfPlanePoint, q: HalfPlanePoint):
    """Isometry g sending the full geodesic through p, q to the imaginary
    axis, plus the axis parameters (log-heights) of g(p) and g(q)."""
    if abs(p.x - q.x) < 1e-14:
        g = Isometry.translation(-p.x)
        return g, math.log(p.y), math.log(q.y)
    c = (q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y) / (2.0 * (q.x - p.x))
    r = math.hypot(p.x - c, p.y)
    a, b = c - r, c + r
    # z -> (z - a)/(b - z), normalized to determinant one
    s = 1.0 / math.sqrt(b - a)
    g = Isometry(s, -s * a, -s, s * b)
    gp = apply(g, p)
    gq = apply(g, q)
    return g, math.log(gp.y), math.log(gq.y)


@dataclass(frozen=True)
class GeodesicSegment:
    """Geodesic segment with proportional-arclength parameterization."""

    start: HalfPlanePoint
    end: HalfPlanePoint

    @property
    def length(self) -> float:
        return distance(self.start, self.end)

    def point_at(self, t: float) -> HalfPlanePoint:
        """Point at parameter t in [0, 1]; t=0 and t=1 hit the endpoints."""
        if t == 0.0:
            return self.start
        if t == 1.0:
            return self.end
        return self.point_at_arclength(t * self.length)

    def point_at_arclength(self, s: float) -> HalfPlanePoint:
        g, hp, hq = _axis_mapper(self.start, self.end)
        sigma = 1.0 if hq >= hp else -1.0
        w = HalfPlanePoint(0.0, math.exp(hp + sigma * s))
        return apply(g.inverse(), w)

    def sample(self, spacing: float) -> list[HalfPlanePoint]:
        """Points along the segment at the given arclength spacing, endpoints
        included."""
        L = self.length
        n = max(1, math.ceil(L / spacing))
        return [self.point_at_arclength(L * k / n) for k in range(n + 1)]


class FullGeodesic:
    """Complete geodesic through two points, for unclamped projections."""

    def __init__(self, p, q):
        self.p = _as_point(p)
        self.q = _as_point(q)
        if distance(self.p, self.q) < 1e-12:
            raise ValueError("degenerate geodesic")
        self._g, self._hp, self._hq = _axis_mapper(self.p, self.q)
        self._ginv = self._g.inverse()

    def foot_parameter(self, p) -> float:
        """Axis parameter (signed arclength) of the projection of p."""
        w = apply(self._g, _as_point(p))
        return math.log(math.hypot(w.x, w.y))

    def point_at_parameter(self, t: float) -> HalfPlanePoint:
        return apply(self._ginv, HalfPlanePoint(0.0, math.exp(t)))


def project_to_geodesic(p, geodesic) -> HalfPlanePoint:
    """Closest-point projection onto a segment or a full geodesic.

    For segments the foot is clamped into the parameter range, so the result
    is the nearest segment point; on full geodesics it is the orthogonal foot.
    """
    p = _as_point(p)
    if isinstance(geodesic, GeodesicSegment):
        full = FullGeodesic(geodesic.start, geodesic.end)
        t = full.foot_parameter(p)
        lo, hi = sorted((full._hp, full._hq))
        t = min(max(t, lo), hi)
        return full.point_at_parameter(t)
    return geodesic.point_at_parameter(geodesic.foot_parameter(p))


def set_projection_diameter(points, geodesic) -> float:
    """Diameter of the closest-point projection of a point set.

    Projections land on a one-dimensional geodesic, so the diameter is the
    spread of their axis parameters.
    """
    pts = list(points)
    if not pts:
        raise ValueError("empty point set")
    if isinstance(geodesic, GeodesicSegment):
        projected = [project_to_geodesic(p, geodesic) for p in pts]
        best = 0.0
        base = projected[0]
        far = base
        for q in projected[1:]:
            d = distance(base, q)
            if d > best:
                best, far = d, q
        best2 = 0.0
        for q in projected:
            best2 = max(best2, distance(far, q))
        return best2
    params = [geodesic.foot_parameter(p) for p in pts]
    return max(params) - min(params)


@dataclass(frozen=True)
class Horoball:
    """Horoball in normal form {Im z > level}, conjugated by an isometry.

    ``contains`` tests membership by mapping back to normal form, so any
    horoball (at a finite boundary point or at infinity) is representable.
    """

    level: float
    conjugator: Isometry

    @classmethod
    def at_infinity(cls, level: float) -> "Horoball":
        return cls(level, Isometry.identity())

    def contains(self, p) -> bool:
        return apply(self.conjugator, _as_point(p)).y > self.level


def horoball_ball_volume(R: float, b: float, C: float = 1.0):
    """Hyperbolic area of the rectangle enclosing a ball-horoball overlap.

    The rectangle is 1 <= y <= exp(b R), |x| <= C exp(b R / 2), and its area
    has the closed form 2 C exp(bR/2) (1 - exp(-bR)).  Returns the closed
    form; the enclosing-constant C is a free parameter.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if not (0.0 < b <= 1.0):
        raise ValueError("b must lie in (0, 1]")
    X = C * math.exp(b * R / 2.0)
    Y = math.exp(b * R)
    return 2.0 * X * (1.0 - 1.0 / Y)


def rectangle_volume_quadrature(X: float, Y: float, n: int = 400) -> float:
    """Gauss-Legendre evaluation of the same rectangle integral, used as the
    independent cross-check of the closed form.

    Integrates in the log-height chart (dy/y^2 = e^{-v} dv), where the
    integrand is a smooth exponential and the rule converges to machine
    precision even for very tall rectangles."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    vmax = math.log(Y)
    v = 0.5 * vmax * (nodes + 1.0)
    wv = 0.5 * vmax * weights
    return float(np.sum(wv * np.exp(-v)) * 2.0 * X)


def parse_entry(text) -> float:
    """Parse a matrix entry given as a decimal or an exact rational string."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if "/" in s:
        return float(Fraction(s))
    return float(s)
