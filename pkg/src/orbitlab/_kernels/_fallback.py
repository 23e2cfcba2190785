"""Pure-numpy implementations of the hot kernels.

Semantics here are the contract: the compiled extension in ``_speedups.pyx``
must produce identical results (same selections, same counts, distances equal
to floating round-off).

Point packing convention, shared by every kernel:

* a batch of points is a C-contiguous float64 array of shape ``(n, C)`` with
  ``C = 2 * n_plane + n_line``,
* plane factor ``i`` occupies columns ``(2i, 2i+1)`` as upper-half-plane
  coordinates ``(x, y)`` with ``y > 0``,
* line factor ``j`` occupies column ``2*n_plane + j`` as the arclength
  coordinate ``s = log u`` (so the factor metric is ``|s1 - s2|``),
* the sup metric is the max over factor metrics; ``period > 0`` makes every
  plane-factor x-coordinate periodic with that period.
"""

import math

import numpy as np

_PACK_OFF = 1 << 15
_PACK_LIMIT = _PACK_OFF - 1


def hyp_dist(x1, y1, x2, y2):
    """Hyperbolic distance between two upper-half-plane points."""
    dx = x1 - x2
    dy = y1 - y2
    arg = 1.0 + (dx * dx + dy * dy) / (2.0 * y1 * y2)
    if arg < 1.0:
        arg = 1.0
    return math.acosh(arg)


def sup_dist_many(pts, q, n_plane, period=0.0):
    """Sup-metric distances from every row of ``pts`` to the point ``q``."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = pts.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    out = np.zeros(n, dtype=np.float64)
    for i in range(n_plane):
        dx = pts[:, 2 * i] - q[2 * i]
        if period > 0.0:
            dx = np.mod(dx + 0.5 * period, period) - 0.5 * period
        y = pts[:, 2 * i + 1]
        dy = y - q[2 * i + 1]
        arg = 1.0 + (dx * dx + dy * dy) / (2.0 * y * q[2 * i + 1])
        np.maximum(arg, 1.0, out=arg)
        np.maximum(out, np.arccosh(arg), out=out)
    for j in range(2 * n_plane, pts.shape[1]):
        np.maximum(out, np.abs(pts[:, j] - q[j]), out=out)
    return out


def max_pairwise_dist(pts, n_plane, period=0.0):
    """Largest pairwise sup-metric distance in the batch (0 for n < 2)."""
    n = pts.shape[0]
    best = 0.0
    for i in range(n - 1):
        d = sup_dist_many(pts[i + 1 :], pts[i], n_plane, period)
        m = float(d.max()) if d.size else 0.0
        if m > best:
            best = m
    return best


class _Grid:
    """Row/column hash over plane-factor-0 (or line-factor-0) coordinates.

    Rows follow log-height so that the metric scale of a cell is uniform;
    column width grows with the row height, which keeps the number of
    neighbour cells per radius bounded.
    """

    def __init__(self, n_plane, cell, period=0.0):
        self.n_plane = n_plane
        self.cell = cell
        self.period = period
        self.cells = {}

    def _row_width(self, row):
        w = self.cell * math.exp(row * self.cell)
        if self.period > 0.0:
            # columns must divide the period exactly, otherwise column
            # arithmetic is inconsistent across the wrap seam
            ncols = max(1, math.floor(self.period / w))
            return self.period / ncols, ncols
        return w, 0

    def _locate(self, row_pt):
        if self.n_plane > 0:
            v = math.log(row_pt[1])
            row = math.floor(v / self.cell)
            w, ncols = self._row_width(row)
            if self.period > 0.0:
                col = math.floor(row_pt[0] / w) % ncols
            else:
                col = math.floor(row_pt[0] / w)
            return row, col
        row = 0
        col = math.floor(row_pt[0] / self.cell)
        return row, col

    def insert(self, idx, row_pt):
        key = self._locate(row_pt)
        self.cells.setdefault(key, []).append(idx)

    def neighbours(self, row_pt, radius):
        """Indices in all cells that could hold points within ``radius``."""
        out = []
        if self.n_plane > 0:
            x, y = row_pt[0], row_pt[1]
            v = math.log(y)
            rlo = math.floor((v - radius) / self.cell)
            rhi = math.floor((v + radius) / self.cell)
            reach = 2.0 * math.sinh(0.5 * radius)
            for row in range(rlo, rhi + 1):
                w, ncols = self._row_width(row)
                ymax_band = math.exp((row + 1) * self.cell)
                hx = reach * math.sqrt(y * ymax_band)
                clo = math.floor((x - hx) / w)
                chi = math.floor((x + hx) / w)
                if self.period > 0.0:
                    if chi - clo + 1 >= ncols:
                        cols = range(ncols)
                    else:
                        cols = [c % ncols for c in range(clo, chi + 1)]
                else:
                    cols = range(clo, chi + 1)
                for col in cols:
                    bucket = self.cells.get((row, col))
                    if bucket:
                        out.extend(bucket)
        else:
            s = row_pt[0]
            clo = math.floor((s - radius) / self.cell)
            chi = math.floor((s + radius) / self.cell)
            for col in range(clo, chi + 1):
                bucket = self.cells.get((0, col))
                if bucket:
                    out.extend(bucket)
        return out


def greedy_select(stream, eps, n_plane, period=0.0):
    """Greedy maximal eps-separated subset of the sample stream, in order.

    Returns the int64 indices of the kept rows.  A row is kept iff its
    sup-metric distance to every previously kept row is >= eps.
    """
    stream = np.ascontiguousarray(stream, dtype=np.float64)
    kept = []
    grid = _Grid(n_plane, max(eps, 1e-9), period)
    for i in range(stream.shape[0]):
        p = stream[i]
        cand = grid.neighbours(p, eps)
        if cand:
            d = sup_dist_many(stream[np.asarray(cand, dtype=np.int64)], p, n_plane, period)
            if float(d.min()) < eps:
                continue
        kept.append(i)
        grid.insert(i, p)
    return np.asarray(kept, dtype=np.int64)


def _canonicalize_int(mats):
    """Flip signs so the first nonzero entry of (a, b, c, d) is positive."""
    sign = np.zeros(mats.shape[0], dtype=np.int64)
    for k in range(4):
        undecided = sign == 0
        sign[undecided] = np.sign(mats[undecided, k])
    sign[sign == 0] = 1
    return mats * sign[:, None]


def _pack_keys(mats):
    if np.abs(mats).max(initial=0) > _PACK_LIMIT:
        raise OverflowError("matrix entries exceed packing range")
    m = (mats + _PACK_OFF).astype(np.uint64)
    return (m[:, 0] << np.uint64(48)) | (m[:, 1] << np.uint64(32)) | (m[:, 2] << np.uint64(16)) | m[:, 3]


def _apply_mobius(mats, px, py):
    a = mats[:, 0].astype(np.float64)
    b = mats[:, 1].astype(np.float64)
    c = mats[:, 2].astype(np.float64)
    d = mats[:, 3].astype(np.float64)
    den = (c * px + d) ** 2 + (c * py) ** 2
    x = ((a * px + b) * (c * px + d) + a * c * py * py) / den
    y = py / den
    return x, y


def expand_round_int(mats, gens, px, py, rmax):
    """One BFS round over integer matrices: frontier times every generator.

    Returns ``(prod_mats, keys, parents, gen_idx, dists)`` for the products
    whose orbit displacement from ``(px, py)`` is <= ``rmax``.  No dedup is
    performed here; the caller owns the seen-set.
    """
    mats = np.ascontiguousarray(mats, dtype=np.int64)
    n = mats.shape[0]
    m = gens.shape[0]
    a, b, c, d = (mats[:, k] for k in range(4))
    prods = np.empty((n * m, 4), dtype=np.int64)
    parents = np.empty(n * m, dtype=np.int64)
    gen_idx = np.empty(n * m, dtype=np.int16)
    base = np.arange(n, dtype=np.int64)
    for g in range(m):
        ga, gb, gc, gd = (int(gens[g, k]) for k in range(4))
        sl = slice(g * n, (g + 1) * n)
        prods[sl, 0] = a * ga + b * gc
        prods[sl, 1] = a * gb + b * gd
        prods[sl, 2] = c * ga + d * gc
        prods[sl, 3] = c * gb + d * gd
        parents[sl] = base
        gen_idx[sl] = g
    prods = _canonicalize_int(prods)
    x, y = _apply_mobius(prods, px, py)
    dx = x - px
    dy = y - py
    arg = 1.0 + (dx * dx + dy * dy) / (2.0 * y * py)
    np.maximum(arg, 1.0, out=arg)
    dists = np.arccosh(arg)
    keep = dists <= rmax
    prods = prods[keep]
    return prods, _pack_keys(prods), parents[keep], gen_idx[keep], dists[keep]


def reduce_modular(x, y, max_iter=200):
    """Reduce points to the standard PSL(2,Z) fundamental domain, vectorized."""
    x = np.array(x, dtype=np.float64, copy=True).ravel()
    y = np.array(y, dtype=np.float64, copy=True).ravel()
    for _ in range(max_iter):
        x -= np.floor(x + 0.5)
        n2 = x * x + y * y
        inside = n2 < 1.0 - 1e-15
        if not inside.any():
            break
        x[inside] = -x[inside] / n2[inside]
        y[inside] = y[inside] / n2[inside]
    x -= np.floor(x + 0.5)
    return x, y


def _geodesic_frames(mats, px, py):
    """Per-element data for arclength parameterization of [p, mat p].

    Returns (vertical, x0, h0, sigma, a, b) where vertical rows use
    ``(px, py * exp(sigma t))`` and the rest use the endpoint chart
    ``z(u) = ((a + u^2 b) + i u (b - a)) / (1 + u^2)`` with ``u = h0 e^{sigma t}``.
    """
    qx, qy = _apply_mobius(mats, px, py)
    dxq = qx - px
    vertical = np.abs(dxq) < 1e-12
    a = np.zeros_like(qx)
    b = np.zeros_like(qx)
    h0 = np.ones_like(qx)
    sigma = np.ones_like(qx)
    nv = ~vertical
    if nv.any():
        cx = (qx[nv] ** 2 + qy[nv] ** 2 - px * px - py * py) / (2.0 * dxq[nv])
        r = np.sqrt((px - cx) ** 2 + py * py)
        a[nv] = cx - r
        b[nv] = cx + r
        hp = py * (b[nv] - a[nv]) / ((b[nv] - px) ** 2 + py * py)
        hq = qy[nv] * (b[nv] - a[nv]) / ((b[nv] - qx[nv]) ** 2 + qy[nv] ** 2)
        h0[nv] = hp
        sigma[nv] = np.where(hq >= hp, 1.0, -1.0)
    if vertical.any():
        sigma[vertical] = np.where(qy[vertical] >= py, 1.0, -1.0)
    return vertical, qx, h0, sigma, a, b


def concave_flags_int(mats, dists, px, py, y_cut, margin, spacing, max_iter=200):
    """Flag elements whose connecting geodesic, minus a prefix and suffix of
    length ``margin``, stays above height ``y_cut`` in the modular fundamental
    domain (sampled at ``spacing``).  Elements with no middle ( d <= 2*margin )
    are never flagged."""
    mats = np.ascontiguousarray(mats, dtype=np.int64)
    n = mats.shape[0]
    flags = np.zeros(n, dtype=np.uint8)
    room = dists > 2.0 * margin + 1e-12
    if not room.any():
        return flags
    idx = np.nonzero(room)[0]
    vertical, _, h0, sigma, a, b = _geodesic_frames(mats[idx], px, py)
    d_mid = dists[idx] - 2.0 * margin
    nsteps = np.floor(d_mid / spacing).astype(np.int64)
    alive = np.ones(idx.size, dtype=bool)
    kmax = int(nsteps.max()) + 1
    for k in range(kmax + 1):
        t = margin + np.minimum(k * spacing, d_mid)
        act = alive & (nsteps + 1 >= k)
        if not act.any():
            break
        u = h0[act] * np.exp(sigma[act] * t[act])
        xs = np.where(
            vertical[act],
            px,
            (a[act] + u * u * b[act]) / (1.0 + u * u),
        )
        ys = np.where(
            vertical[act],
            py * np.exp(sigma[act] * t[act]),
            u * (b[act] - a[act]) / (1.0 + u * u),
        )
        _, yr = reduce_modular(xs, ys, max_iter)
        ok = yr > y_cut
        alive_idx = np.nonzero(act)[0]
        alive[alive_idx[~ok]] = False
    flags[idx[alive]] = 1
    return flags
