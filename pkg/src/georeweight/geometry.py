"""Voronoi partitions of sample sets restricted to the unit interval, the
unit square, or per-stratum sub-boxes.

Cells are reported in the original sample order.  Each cell records which
domain facets it touches; a facet is ``(axis, "low" | "high")`` and the
number of touched facets is the cell's boundary order.

The public functions build immutable :class:`Partition` objects.  The
``*_cells`` array functions underneath return plain ``(volumes, masks)``
arrays and are what the trial loops call; both routes share the same
arithmetic, so volumes agree bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _clip
from .sampling import Box, SampleSet, Stratification

EPS_BOUNDARY = 1e-12

_SIDES = ("low", "high")


def facets_from_mask(mask: int, dim: int) -> frozenset:
    return frozenset((bit // 2, _SIDES[bit % 2]) for bit in range(2 * dim) if mask >> bit & 1)


def popcount(masks) -> np.ndarray:
    m = np.asarray(masks, dtype=np.int64)
    return ((m & 1) + (m >> 1 & 1) + (m >> 2 & 1) + (m >> 3 & 1)).astype(np.int64)


@dataclass(frozen=True)
class VoronoiCell:
    site_index: int
    volume: float
    boundary_facets: frozenset
    vertices: tuple = ()

    @property
    def boundary_order(self) -> int:
        return len(self.boundary_facets)


@dataclass(frozen=True)
class Partition:
    domain: Box
    cells: tuple[VoronoiCell, ...]

    def __len__(self):
        return len(self.cells)

    @cached_property
    def volumes(self) -> np.ndarray:
        v = np.array([c.volume for c in self.cells])
        v.flags.writeable = False
        return v

    @cached_property
    def boundary_orders(self) -> np.ndarray:
        b = np.array([c.boundary_order for c in self.cells], dtype=np.int64)
        b.flags.writeable = False
        return b


# ---------------------------------------------------------------------------
# array kernels


def _check_inside(points: np.ndarray, box: Box) -> None:
    if points.size == 0:
        raise ValueError("cannot partition an empty point set")
    if not np.all(box.contains(points)):
        raise ValueError(f"points outside the domain [{box.low}, {box.high}]")


def _unique_interval(x: np.ndarray, low: float, high: float):
    u, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    vol, mask = _sorted_interval(u[None, :], low, high)
    return vol[0][inv] / counts[inv], mask[0][inv]


def _sorted_interval(xs: np.ndarray, low: float, high: float):
    r, n = xs.shape
    edges = np.empty((r, n + 1))
    edges[:, 0] = low
    edges[:, -1] = high
    edges[:, 1:-1] = (xs[:, :-1] + xs[:, 1:]) / 2
    vol = edges[:, 1:] - edges[:, :-1]
    mask = np.zeros((r, n), dtype=np.int64)
    mask[:, 0] |= 1
    mask[:, -1] |= 2
    return vol, mask


def interval_cells(x, low: float = 0.0, high: float = 1.0):
    """Midpoint cells of each row of ``x`` (shape ``(R, N)``) on [low, high].

    Returns ``(volumes, facet_masks)`` in the original column order.
    """
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, axis=-1, kind="stable")
    xs = np.take_along_axis(x, order, axis=-1)
    vol_s, mask_s = _sorted_interval(xs, low, high)
    vol = np.empty_like(vol_s)
    mask = np.empty_like(mask_s)
    np.put_along_axis(vol, order, vol_s, axis=-1)
    np.put_along_axis(mask, order, mask_s, axis=-1)
    if x.shape[1] > 1:
        for r in np.flatnonzero(np.any(xs[:, 1:] == xs[:, :-1], axis=-1)):
            vol[r], mask[r] = _unique_interval(x[r], low, high)
    return vol, mask


def square_cells(points, box: Box, want_vertices: bool = False):
    """Clipped Voronoi cells of ``points`` (shape ``(N, 2)``) inside ``box``.

    Returns ``(areas, facet_masks, vertices)`` where ``vertices`` is a list
    of ``(k, 2)`` arrays (or ``None`` when not requested).
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    srt = pts[order]
    if np.any(np.all(srt[1:] == srt[:-1], axis=1)):
        uniq, inv, counts = np.unique(pts, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
    else:
        uniq, inv, counts = pts, None, None
    (lo0, lo1), (hi0, hi1) = box.low, box.high
    areas, masks, verts, offsets = _clip.voronoi_cells(uniq, lo0, lo1, hi0, hi1, EPS_BOUNDARY, want_vertices)
    polys = None
    if want_vertices:
        polys = [verts[offsets[i] : offsets[i + 1]] for i in range(uniq.shape[0])]
    if inv is None:
        return areas, masks, polys
    # duplicates share their position's cell, volume split evenly
    if polys is not None:
        polys = [polys[j] for j in inv]
    return areas[inv] / counts[inv], masks[inv], polys


def cell_arrays(points, box: Box):
    """``(volumes, masks)`` of one point set (``(N, D)``) inside ``box``."""
    pts = np.asarray(points, dtype=np.float64)
    _check_inside(pts, box)
    if pts.shape[1] == 1:
        v, m = interval_cells(pts[None, :, 0], box.low[0], box.high[0])
        return v[0], m[0]
    if pts.shape[1] == 2:
        v, m, _ = square_cells(pts, box)
        return v, m
    raise ValueError(f"Voronoi volumes are only supported for D <= 2, got D={pts.shape[1]}")


def stratified_cell_arrays(points, strat: Stratification):
    """Per-stratum cells for a batch: ``points`` has shape ``(R, N, D)``."""
    pts = np.asarray(points, dtype=np.float64)
    r, n, d = pts.shape
    vol = np.empty((r, n))
    mask = np.empty((r, n), dtype=np.int64)
    for k, box in enumerate(strat.boxes):
        sel = np.flatnonzero(strat.stratum_of == k)
        if sel.size == 0:
            raise ValueError(f"stratum {k} holds no samples")
        sub = pts[:, sel, :]
        _check_inside(sub.reshape(-1, d), box)
        if d == 1:
            vol[:, sel], mask[:, sel] = interval_cells(sub[:, :, 0], box.low[0], box.high[0])
        else:
            for row in range(r):
                vol[row, sel], mask[row, sel], _ = square_cells(sub[row], box)
    return vol, mask


def batch_cell_arrays(points, strat: Stratification | None = None):
    """Cells for every row of a ``(R, N, D)`` batch; global partition when
    ``strat`` is None, per-stratum partitions otherwise."""
    pts = np.asarray(points, dtype=np.float64)
    if strat is not None:
        return stratified_cell_arrays(pts, strat)
    r, n, d = pts.shape
    box = Box.unit(d)
    if d == 1:
        _check_inside(pts.reshape(-1, 1), box)
        return interval_cells(pts[:, :, 0])
    if d != 2:
        raise ValueError(f"Voronoi volumes are only supported for D <= 2, got D={d}")
    vol = np.empty((r, n))
    mask = np.empty((r, n), dtype=np.int64)
    for row in range(r):
        vol[row], mask[row] = cell_arrays(pts[row], box)
    return vol, mask


# ---------------------------------------------------------------------------
# public partitions


def _as_points(points, dim: int) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64)
    if dim == 1 and p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or p.shape[1] != dim:
        raise ValueError(f"expected an (N, {dim}) array of points, got shape {p.shape}")
    return p


def partition_unit_interval(points, domain: Box | None = None) -> Partition:
    """Midpoint partition of 1D points on ``domain`` (default (0, 1))."""
    p = _as_points(points, 1)
    domain = domain or Box.unit(1)
    vol, mask = cell_arrays(p, domain)
    x = p[:, 0]
    order = np.argsort(x, kind="stable")
    edges = np.concatenate([[domain.low[0]], (x[order][:-1] + x[order][1:]) / 2, [domain.high[0]]])
    bounds = np.empty((len(x), 2))
    bounds[order, 0] = edges[:-1]
    bounds[order, 1] = edges[1:]
    cells = tuple(
        VoronoiCell(i, float(vol[i]), facets_from_mask(int(mask[i]), 1), ((float(bounds[i, 0]),), (float(bounds[i, 1]),)))
        for i in range(len(x))
    )
    return Partition(domain, cells)


def partition_unit_square(points, domain: Box | None = None) -> Partition:
    """Bounded Voronoi partition of 2D points inside ``domain``.

    Cell vertices are counter-clockwise, starting at the lexicographically
    smallest vertex.
    """
    p = _as_points(points, 2)
    domain = domain or Box.unit(2)
    _check_inside(p, domain)
    vol, mask, polys = square_cells(p, domain, want_vertices=True)
    cells = tuple(
        VoronoiCell(i, float(vol[i]), facets_from_mask(int(mask[i]), 2), tuple(map(tuple, polys[i].tolist())))
        for i in range(len(p))
    )
    return Partition(domain, cells)


def partition(points, domain: Box | None = None) -> Partition:
    p = np.asarray(points, dtype=np.float64)
    dim = 1 if p.ndim == 1 else p.shape[1]
    if dim == 1:
        return partition_unit_interval(p, domain)
    if dim == 2:
        return partition_unit_square(p, domain)
    raise ValueError(f"Voronoi volumes are only supported for D <= 2, got D={dim}")


def partition_stratified(samples: SampleSet) -> Partition:
    """Independent partition of every stratum; facets refer to stratum boxes."""
    st = samples.stratification
    if st is None:
        raise ValueError("sample set carries no stratification")
    cells: list[VoronoiCell | None] = [None] * len(samples)
    for k, box in enumerate(st.boxes):
        sel = np.flatnonzero(st.stratum_of == k)
        if sel.size == 0:
            raise ValueError(f"stratum {k} holds no samples")
        sub = partition(samples.points[sel], box)
        for local, i in enumerate(sel):
            c = sub.cells[local]
            cells[i] = VoronoiCell(int(i), c.volume, c.boundary_facets, c.vertices)
    return Partition(Box.unit(samples.dimension), tuple(cells))


def polygon_area(vertices) -> float:
    """Absolute shoelace area of a simple polygon."""
    v = np.asarray(vertices, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
        raise ValueError("a polygon needs at least three 2D vertices")
    return float(_clip.shoelace(np.ascontiguousarray(v[:, 0]), np.ascontiguousarray(v[:, 1]), v.shape[0]))


def boundary_cardinality(part: Partition, dim: int) -> dict[int, int]:
    """Number of cells of each boundary order ``0 .. 2*dim``."""
    counts = np.bincount(part.boundary_orders, minlength=2 * dim + 1)
    return {d: int(c) for d, c in enumerate(counts)}


def write_partition_csv(part: Partition, fh) -> None:
    """Debug dump: ``site_index,volume,boundary_order,vertex_list``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["site_index", "volume", "boundary_order", "vertex_list"])
    for c in part.cells:
        verts = ";".join(":".join(f"{x:.17g}" for x in v) for v in c.vertices)
        w.writerow([c.site_index, f"{c.volume:.17g}", c.boundary_order, verts])
