"""Compiled half-plane clipping for bounded 2D Voronoi cells.

Each cell starts as the domain rectangle and is clipped by the bisector
half-plane of other sites, nearer sites first.  A site at distance ``d``
can only cut the cell if ``d < 2 * r``, where ``r`` is the largest
site-to-vertex distance of the current polygon, so sites beyond that
radius are skipped without changing the result.
"""

import numpy as np
from numba import njit

# facet mask: bit 2*axis + side, side 0 = low, 1 = high


@njit(cache=True)
def _clip_halfplane(px, py, nv, qx, qy, mx, my, dx, dy):
    # keep points with (p - m) . d <= 0; polygon in px/py[:nv], result in qx/qy
    out = 0
    ax = px[nv - 1]
    ay = py[nv - 1]
    sa = (ax - mx) * dx + (ay - my) * dy
    for k in range(nv):
        bx = px[k]
        by = py[k]
        sb = (bx - mx) * dx + (by - my) * dy
        if (sa < 0.0 and sb > 0.0) or (sa > 0.0 and sb < 0.0):
            t = sa / (sa - sb)
            qx[out] = ax + t * (bx - ax)
            qy[out] = ay + t * (by - ay)
            out += 1
        if sb <= 0.0:
            qx[out] = bx
            qy[out] = by
            out += 1
        ax = bx
        ay = by
        sa = sb
    return out


@njit(cache=True)
def _max_radius2(px, py, nv, sx, sy):
    r2 = 0.0
    for k in range(nv):
        d = (px[k] - sx) ** 2 + (py[k] - sy) ** 2
        if d > r2:
            r2 = d
    return r2


@njit(cache=True)
def _finish(px, py, nv, qx, qy):
    # drop exact consecutive duplicates, rotate to lexicographic minimum
    m = 0
    for k in range(nv):
        if m > 0 and px[k] == qx[m - 1] and py[k] == qy[m - 1]:
            continue
        qx[m] = px[k]
        qy[m] = py[k]
        m += 1
    while m > 1 and qx[m - 1] == qx[0] and qy[m - 1] == qy[0]:
        m -= 1
    start = 0
    for k in range(1, m):
        if qx[k] < qx[start] or (qx[k] == qx[start] and qy[k] < qy[start]):
            start = k
    for k in range(m):
        px[k] = qx[(start + k) % m]
        py[k] = qy[(start + k) % m]
    return m


@njit(cache=True)
def shoelace(px, py, nv):
    if nv < 3:
        return 0.0
    x0 = px[0]
    y0 = py[0]
    acc = 0.0
    for k in range(1, nv - 1):
        acc += (px[k] - x0) * (py[k + 1] - y0) - (px[k + 1] - x0) * (py[k] - y0)
    return abs(acc) * 0.5


@njit(cache=True)
def _facets(px, py, nv, lo0, lo1, hi0, hi1, eps):
    mask = 0
    for k in range(nv):
        ax = px[k]
        ay = py[k]
        bx = px[(k + 1) % nv]
        by = py[(k + 1) % nv]
        if abs(by - ay) > eps:
            if abs(ax - lo0) <= eps and abs(bx - lo0) <= eps:
                mask |= 1
            if abs(ax - hi0) <= eps and abs(bx - hi0) <= eps:
                mask |= 2
        if abs(bx - ax) > eps:
            if abs(ay - lo1) <= eps and abs(by - lo1) <= eps:
                mask |= 4
            if abs(ay - hi1) <= eps and abs(by - hi1) <= eps:
                mask |= 8
    return mask


@njit(cache=True)
def _insertion_sort(keys, vals, m):
    # ring candidate lists are short; ties keep bucket order
    for a in range(1, m):
        k = keys[a]
        v = vals[a]
        b = a - 1
        while b >= 0 and keys[b] > k:
            keys[b + 1] = keys[b]
            vals[b + 1] = vals[b]
            b -= 1
        keys[b + 1] = k
        vals[b + 1] = v


@njit(cache=True)
def _clip_by(px, py, nv, qx, qy, sx, sy, ox, oy):
    nv = _clip_halfplane(px, py, nv, qx, qy, 0.5 * (sx + ox), 0.5 * (sy + oy), ox - sx, oy - sy)
    for k in range(nv):
        px[k] = qx[k]
        py[k] = qy[k]
    return nv


@njit(cache=True)
def voronoi_cells(pts, lo0, lo1, hi0, hi1, eps, want_vertices):
    """Clip the cell of every (distinct) site in ``pts`` against the box.

    Sites are bucketed on a uniform grid; each cell is clipped ring by ring
    around its bucket, nearest first within a ring, until the ring distance
    rules out further cuts.  Returns areas, facet masks and, when requested,
    the flat canonical vertex list with per-cell offsets.
    """
    n = pts.shape[0]
    g = max(1, int(np.sqrt(n / 2.0)))
    wx = (hi0 - lo0) / g
    wy = (hi1 - lo1) / g
    bucket = np.empty(n, dtype=np.int64)
    bxs = np.empty(n, dtype=np.int64)
    bys = np.empty(n, dtype=np.int64)
    for i in range(n):
        bx = min(max(int((pts[i, 0] - lo0) / wx), 0), g - 1)
        by = min(max(int((pts[i, 1] - lo1) / wy), 0), g - 1)
        bxs[i] = bx
        bys[i] = by
        bucket[i] = by * g + bx
    start = np.zeros(g * g + 1, dtype=np.int64)
    for i in range(n):
        start[bucket[i] + 1] += 1
    for b in range(g * g):
        start[b + 1] += start[b]
    fill = start[:-1].copy()
    items = np.empty(n, dtype=np.int64)
    for i in range(n):
        items[fill[bucket[i]]] = i
        fill[bucket[i]] += 1

    cap = n + 8
    px = np.empty(cap)
    py = np.empty(cap)
    qx = np.empty(cap)
    qy = np.empty(cap)
    cand = np.empty(n, dtype=np.int64)
    cand_d = np.empty(n)
    areas = np.empty(n)
    masks = np.empty(n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    vcap = 8 * n if want_vertices else 1
    verts = np.empty((vcap, 2))
    for i in range(n):
        sx = pts[i, 0]
        sy = pts[i, 1]
        px[0] = lo0
        py[0] = lo1
        px[1] = hi0
        py[1] = lo1
        px[2] = hi0
        py[2] = hi1
        px[3] = lo0
        py[3] = hi1
        nv = 4
        r2 = _max_radius2(px, py, nv, sx, sy)
        ring = 0
        while True:
            m = 0
            for cy in range(bys[i] - ring, bys[i] + ring + 1):
                if cy < 0 or cy >= g:
                    continue
                edge_row = cy == bys[i] - ring or cy == bys[i] + ring
                step = 1 if edge_row else 2 * ring
                cx = bxs[i] - ring
                while cx <= bxs[i] + ring:
                    if 0 <= cx < g:
                        b = cy * g + cx
                        for t in range(start[b], start[b + 1]):
                            j = items[t]
                            if j != i:
                                cand[m] = j
                                cand_d[m] = (pts[j, 0] - sx) ** 2 + (pts[j, 1] - sy) ** 2
                                m += 1
                    if step == 0:
                        break
                    cx += step
            if m > 0:
                _insertion_sort(cand_d, cand, m)
                for t in range(m):
                    j = cand[t]
                    if cand_d[t] >= 4.0 * r2:
                        break
                    nv = _clip_by(px, py, nv, qx, qy, sx, sy, pts[j, 0], pts[j, 1])
                    r2 = _max_radius2(px, py, nv, sx, sy)
            if ring >= g:
                break
            # distance from the site to the nearest unscanned bucket
            reach = min(
                sx - (lo0 + (bxs[i] - ring) * wx),
                lo0 + (bxs[i] + ring + 1) * wx - sx,
                sy - (lo1 + (bys[i] - ring) * wy),
                lo1 + (bys[i] + ring + 1) * wy - sy,
            )
            if reach > 0.0 and reach * reach >= 4.0 * r2:
                break
            ring += 1
        nv = _finish(px, py, nv, qx, qy)
        areas[i] = shoelace(px, py, nv)
        masks[i] = _facets(px, py, nv, lo0, lo1, hi0, hi1, eps)
        if want_vertices:
            s0 = offsets[i]
            if s0 + nv > vcap:
                vcap = max(2 * vcap, s0 + nv)
                grown = np.empty((vcap, 2))
                grown[:s0] = verts[:s0]
                verts = grown
            for k in range(nv):
                verts[s0 + k, 0] = px[k]
                verts[s0 + k, 1] = py[k]
            offsets[i + 1] = s0 + nv
    return areas, masks, verts[: offsets[n]], offsets
