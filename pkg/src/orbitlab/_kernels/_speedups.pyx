# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
# distutils: language = c++
"""Compiled twins of the fallback kernels.  Same contracts, same results;
see _fallback.py for the reference semantics and the packing convention."""

import numpy as np

cimport numpy as cnp
from libc.math cimport acosh, ceil, exp, fabs, floor, log, sinh, sqrt
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

cnp.import_array()

cdef long long _PACK_OFF = 1 << 15
cdef long long _PACK_LIMIT = (1 << 15) - 1


cpdef double hyp_dist(double x1, double y1, double x2, double y2):
    cdef double dx = x1 - x2
    cdef double dy = y1 - y2
    cdef double arg = 1.0 + (dx * dx + dy * dy) / (2.0 * y1 * y2)
    if arg < 1.0:
        arg = 1.0
    return acosh(arg)


cdef inline double _plane_dist(double x1, double y1, double x2, double y2,
                               double period) nogil:
    cdef double dx = x1 - x2
    cdef double arg
    if period > 0.0:
        dx = dx - floor(dx / period + 0.5) * period
    arg = 1.0 + (dx * dx + (y1 - y2) * (y1 - y2)) / (2.0 * y1 * y2)
    if arg < 1.0:
        arg = 1.0
    return acosh(arg)


cdef inline double _sup_dist_row(const double* p, const double* q, int n_plane,
                                 int ncols, double period) nogil:
    cdef double best = 0.0
    cdef double d
    cdef int i
    for i in range(n_plane):
        d = _plane_dist(p[2 * i], p[2 * i + 1], q[2 * i], q[2 * i + 1], period)
        if d > best:
            best = d
    for i in range(2 * n_plane, ncols):
        d = fabs(p[i] - q[i])
        if d > best:
            best = d
    return best


def sup_dist_many(object pts_obj, object q_obj, int n_plane, double period=0.0):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pts = np.ascontiguousarray(pts_obj, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] q = np.ascontiguousarray(q_obj, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef int ncols = <int> pts.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _sup_dist_row(&pts[i, 0], &q[0], n_plane, ncols, period)
    return out


def max_pairwise_dist(object pts_obj, int n_plane, double period=0.0):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] pts = np.ascontiguousarray(pts_obj, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef int ncols = <int> pts.shape[1]
    cdef double best = 0.0
    cdef double d
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(i + 1, n):
            d = _sup_dist_row(&pts[i, 0], &pts[j, 0], n_plane, ncols, period)
            if d > best:
                best = d
    return best


cdef inline long long _cell_key(long long row, long long col) nogil:
    return ((row + (1LL << 20)) << 40) | (col + (1LL << 39))


cdef inline double _row_width(double cell, long long row, double period,
                              long long* ncols) nogil:
    # periodic columns divide the period exactly (seam-consistent wrap)
    cdef double w = cell * exp(row * cell)
    cdef long long n
    if period > 0.0:
        n = <long long> floor(period / w)
        if n < 1:
            n = 1
        ncols[0] = n
        return period / n
    ncols[0] = 0
    return w


def greedy_select(object stream_obj, double eps, int n_plane, double period=0.0):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] stream_arr = np.ascontiguousarray(stream_obj, dtype=np.float64)
    cdef double[:, ::1] stream = stream_arr
    cdef Py_ssize_t n = stream.shape[0]
    cdef int ncols = <int> stream.shape[1]
    cdef double cell = eps if eps > 1e-9 else 1e-9
    cdef unordered_map[long long, vector[int]] cells
    cdef vector[long long] kept
    cdef Py_ssize_t i
    cdef long long row, col, r, c, clo, chi, rlo, rhi, ncells
    cdef double v, w, hx, ymax_band, reach, x, y
    cdef bint ok
    cdef size_t bi

    for i in range(n):
        ok = True
        if n_plane > 0:
            x = stream[i, 0]
            y = stream[i, 1]
            v = log(y)
            rlo = <long long> floor((v - eps) / cell)
            rhi = <long long> floor((v + eps) / cell)
            reach = 2.0 * sinh(0.5 * eps)
            r = rlo
            while r <= rhi and ok:
                w = _row_width(cell, r, period, &ncells)
                ymax_band = exp((r + 1) * cell)
                hx = reach * sqrt(y * ymax_band)
                clo = <long long> floor((x - hx) / w)
                chi = <long long> floor((x + hx) / w)
                if period > 0.0:
                    if chi - clo + 1 >= ncells:
                        clo = 0
                        chi = ncells - 1
                        c = clo
                        while c <= chi and ok:
                            ok = _greedy_cell_ok(stream, &cells, _cell_key(r, c), i, n_plane, ncols, period, eps)
                            c += 1
                        r += 1
                        continue
                c = clo
                while c <= chi and ok:
                    if period > 0.0:
                        ok = _greedy_cell_ok(stream, &cells, _cell_key(r, ((c % ncells) + ncells) % ncells), i, n_plane, ncols, period, eps)
                    else:
                        ok = _greedy_cell_ok(stream, &cells, _cell_key(r, c), i, n_plane, ncols, period, eps)
                    c += 1
                r += 1
        else:
            x = stream[i, 0]
            clo = <long long> floor((x - eps) / cell)
            chi = <long long> floor((x + eps) / cell)
            c = clo
            while c <= chi and ok:
                ok = _greedy_cell_ok(stream, &cells, _cell_key(0, c), i, n_plane, ncols, period, eps)
                c += 1
        if ok:
            kept.push_back(i)
            if n_plane > 0:
                v = log(stream[i, 1])
                row = <long long> floor(v / cell)
                w = _row_width(cell, row, period, &ncells)
                if period > 0.0:
                    col = ((<long long> floor(stream[i, 0] / w)) % ncells + ncells) % ncells
                else:
                    col = <long long> floor(stream[i, 0] / w)
            else:
                row = 0
                col = <long long> floor(stream[i, 0] / cell)
            cells[_cell_key(row, col)].push_back(<int> i)

    out = np.empty(kept.size(), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_arr = out
    for bi in range(kept.size()):
        out_arr[bi] = kept[bi]
    return out


cdef bint _greedy_cell_ok(double[:, ::1] stream,
                          unordered_map[long long, vector[int]]* cells,
                          long long key, Py_ssize_t i, int n_plane, int ncols,
                          double period, double eps):
    cdef unordered_map[long long, vector[int]].iterator it = cells.find(key)
    cdef size_t k
    cdef double d
    if it == cells.end():
        return True
    cdef vector[int]* bucket = &(cells[0][key])
    for k in range(bucket.size()):
        d = _sup_dist_row(&stream[bucket[0][k], 0], &stream[i, 0], n_plane, ncols, period)
        if d < eps:
            return False
    return True


def expand_round_int(object mats_obj, object gens_obj, double px, double py, double rmax):
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] mats = np.ascontiguousarray(mats_obj, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] gens = np.ascontiguousarray(gens_obj, dtype=np.int64)
    cdef Py_ssize_t n = mats.shape[0]
    cdef Py_ssize_t m = gens.shape[0]
    cdef Py_ssize_t cap = n * m
    cdef cnp.ndarray[cnp.int64_t, ndim=2] prods = np.empty((cap, 4), dtype=np.int64)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] keys = np.empty(cap, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parents = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.int16_t, ndim=1] gen_idx = np.empty(cap, dtype=np.int16)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dists = np.empty(cap, dtype=np.float64)
    cdef Py_ssize_t out = 0
    cdef Py_ssize_t i, g, k
    cdef long long a, b, c, d, ga, gb, gc, gd, pa, pb, pc, pd, s
    cdef double den, xq, yq, dist
    # match the fallback's layout: generator-major candidate order
    for g in range(m):
        ga = gens[g, 0]; gb = gens[g, 1]; gc = gens[g, 2]; gd = gens[g, 3]
        for i in range(n):
            a = mats[i, 0]; b = mats[i, 1]; c = mats[i, 2]; d = mats[i, 3]
            pa = a * ga + b * gc
            pb = a * gb + b * gd
            pc = c * ga + d * gc
            pd = c * gb + d * gd
            s = 0
            if pa != 0:
                s = 1 if pa > 0 else -1
            elif pb != 0:
                s = 1 if pb > 0 else -1
            elif pc != 0:
                s = 1 if pc > 0 else -1
            elif pd != 0:
                s = 1 if pd > 0 else -1
            else:
                s = 1
            pa *= s; pb *= s; pc *= s; pd *= s
            den = (pc * px + pd) * (pc * px + pd) + (pc * py) * (pc * py)
            xq = ((pa * px + pb) * (pc * px + pd) + pa * pc * py * py) / den
            yq = py / den
            dist = hyp_dist(px, py, xq, yq)
            if dist <= rmax:
                if (pa > _PACK_LIMIT or pa < -_PACK_LIMIT or pb > _PACK_LIMIT or pb < -_PACK_LIMIT
                        or pc > _PACK_LIMIT or pc < -_PACK_LIMIT or pd > _PACK_LIMIT or pd < -_PACK_LIMIT):
                    raise OverflowError("matrix entries exceed packing range")
                prods[out, 0] = pa; prods[out, 1] = pb; prods[out, 2] = pc; prods[out, 3] = pd
                keys[out] = ((<unsigned long long> (pa + _PACK_OFF)) << 48) | \
                            ((<unsigned long long> (pb + _PACK_OFF)) << 32) | \
                            ((<unsigned long long> (pc + _PACK_OFF)) << 16) | \
                            (<unsigned long long> (pd + _PACK_OFF))
                parents[out] = i
                gen_idx[out] = <short> g
                dists[out] = dist
                out += 1
    return (prods[:out].copy(), keys[:out].copy(), parents[:out].copy(),
            gen_idx[:out].copy(), dists[:out].copy())


cdef inline double _reduce_height(double x, double y, int max_iter) nogil:
    cdef int it
    cdef double n2
    for it in range(max_iter):
        x = x - floor(x + 0.5)
        n2 = x * x + y * y
        if n2 < 1.0 - 1e-15:
            x = -x / n2
            y = y / n2
        else:
            break
    return y


def reduce_modular(object x_obj, object y_obj, int max_iter=200):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(x_obj, dtype=np.float64, copy=True).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.array(y_obj, dtype=np.float64, copy=True).ravel()
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef int it
    cdef double xi, yi, n2
    for i in range(n):
        xi = x[i]; yi = y[i]
        for it in range(max_iter):
            xi = xi - floor(xi + 0.5)
            n2 = xi * xi + yi * yi
            if n2 < 1.0 - 1e-15:
                xi = -xi / n2
                yi = yi / n2
            else:
                break
        xi = xi - floor(xi + 0.5)
        x[i] = xi; y[i] = yi
    return x, y


def concave_flags_int(object mats_obj, object dists_obj, double px, double py,
                      double y_cut, double margin, double spacing, int max_iter=200):
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] mats = np.ascontiguousarray(mats_obj, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dists = np.ascontiguousarray(dists_obj, dtype=np.float64)
    cdef Py_ssize_t n = mats.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] flags = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i
    cdef long long a, b, c, d, k, nsteps
    cdef double den, qx, qy, dist, d_mid, cx, r, ga, gb, hp, hq, sigma, h0
    cdef double t, u, xs, ys, yr
    cdef bint vertical, ok
    for i in range(n):
        dist = dists[i]
        if dist <= 2.0 * margin + 1e-12:
            continue
        a = mats[i, 0]; b = mats[i, 1]; c = mats[i, 2]; d = mats[i, 3]
        den = (c * px + d) * (c * px + d) + (c * py) * (c * py)
        qx = ((a * px + b) * (c * px + d) + a * c * py * py) / den
        qy = py / den
        vertical = fabs(qx - px) < 1e-12
        if vertical:
            sigma = 1.0 if qy >= py else -1.0
            h0 = 1.0
            ga = 0.0; gb = 0.0
        else:
            cx = (qx * qx + qy * qy - px * px - py * py) / (2.0 * (qx - px))
            r = sqrt((px - cx) * (px - cx) + py * py)
            ga = cx - r
            gb = cx + r
            hp = py * (gb - ga) / ((gb - px) * (gb - px) + py * py)
            hq = qy * (gb - ga) / ((gb - qx) * (gb - qx) + qy * qy)
            h0 = hp
            sigma = 1.0 if hq >= hp else -1.0
        d_mid = dist - 2.0 * margin
        nsteps = <long long> floor(d_mid / spacing)
        ok = True
        for k in range(nsteps + 2):
            t = k * spacing
            if t > d_mid:
                t = d_mid
            t = margin + t
            if vertical:
                xs = px
                ys = py * exp(sigma * t)
            else:
                u = h0 * exp(sigma * t)
                xs = (ga + u * u * gb) / (1.0 + u * u)
                ys = u * (gb - ga) / (1.0 + u * u)
            yr = _reduce_height(xs, ys, max_iter)
            if yr <= y_cut:
                ok = False
                break
        if ok:
            flags[i] = 1
    return flags
