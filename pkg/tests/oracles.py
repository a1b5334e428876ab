"""Independent reference computations used by the tests.

``exact_mean_1d`` gives the exact expectation of the 1D Voronoi-weighted
estimators for a polynomial integrand.  Uniform spacings ``g_0..g_N`` of N
sorted uniforms are Dirichlet(1, ..., 1), so any product of order
statistics ``x_(j) = g_0 + ... + g_{j-1}`` has a rational expectation:
``E[g_a g_b g_c] = prod(multiplicity!) / ((N+1)(N+2)...(N+deg))``.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def order_moment(n: int, idx: tuple[int, ...]) -> Fraction:
    """E[x_(i1) * x_(i2) * ...] for sorted indices in 1..n (0 means 0, n+1 means 1)."""
    idx = tuple(i for i in idx if i != n + 1)
    if any(i == 0 for i in idx):
        return Fraction(0)
    deg = len(idx)
    if deg == 0:
        return Fraction(1)
    total = 0
    for combo in itertools.product(*(range(i) for i in idx)):
        mult = 1
        for c in set(combo):
            mult *= math.factorial(combo.count(c))
        total += mult
    denom = 1
    for k in range(1, deg + 1):
        denom *= n + k
    return Fraction(total, denom)


def cell_length_terms(k: int, m: int) -> dict:
    """Length of the k-th cell as ``{order index: coefficient}``; index m+1 is the constant 1."""
    if m == 1:
        return {2: Fraction(1)}
    if k == 1:
        return {1: Fraction(1, 2), 2: Fraction(1, 2)}
    if k == m:
        return {m + 1: Fraction(1), m - 1: Fraction(-1, 2), m: Fraction(-1, 2)}
    return {k + 1: Fraction(1, 2), k - 1: Fraction(-1, 2)}


def exact_mean_1d(poly, n: int, strata: int = 1, corrected: bool = True) -> Fraction:
    """Exact E of sum_i w_i f(x_i) on (0,1) for ``f(x) = sum_q poly[q] x**q``.

    ``strata`` equal strata of ``n / strata`` points each; ``corrected``
    divides the weights by ``1.5**b * n / (n + strata)`` (``n + 1`` when
    unstratified), otherwise uses the raw cell lengths.
    """
    m = n // strata
    width = Fraction(1, strata)
    total = Fraction(0)
    for s in range(strata):
        lo = s * width
        # f(lo + width*u) as a polynomial in u
        coeffs = [Fraction(0)] * len(poly)
        for q, a in enumerate(poly):
            for r in range(q + 1):
                coeffs[r] += Fraction(a) * math.comb(q, r) * lo ** (q - r) * width**r
        for k in range(1, m + 1):
            b = (k == 1) + (k == m)
            c = Fraction(3, 2) ** b * Fraction(n, n + strata) if corrected else Fraction(1)
            acc = Fraction(0)
            for j, cv in cell_length_terms(k, m).items():
                for r, a in enumerate(coeffs):
                    if a:
                        acc += cv * a * order_moment(m, tuple(sorted((j,) + (k,) * r)))
            total += width * acc / c
    return total


def mirrored_voronoi_areas(points: np.ndarray) -> np.ndarray:
    """Clipped cell areas in the unit square via scipy: reflect the sites
    across all four edges, so every original cell is bounded and equals
    its clipped cell."""
    from scipy.spatial import ConvexHull, Voronoi

    p = np.asarray(points, dtype=np.float64)
    mirrors = [p]
    for axis in (0, 1):
        for edge in (0.0, 1.0):
            q = p.copy()
            q[:, axis] = 2 * edge - q[:, axis]
            mirrors.append(q)
    vor = Voronoi(np.concatenate(mirrors))
    areas = np.empty(len(p))
    for i in range(len(p)):
        region = vor.regions[vor.point_region[i]]
        areas[i] = ConvexHull(vor.vertices[region]).volume
    return areas


def simpson(f, a: float, b: float, n: int) -> float:
    """Composite Simpson rule with ``n`` (even) subintervals."""
    if n % 2:
        raise ValueError("n must be even")
    x = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.dot(w, f(x)) * (b - a) / (3 * n))


def brute_force_cell(points: np.ndarray, i: int, low=(0.0, 0.0), high=(1.0, 1.0)):
    """Cell ``i`` clipped by the bisector of every other site, no pruning."""
    poly = [(low[0], low[1]), (high[0], low[1]), (high[0], high[1]), (low[0], high[1])]
    s = points[i]
    for j, o in enumerate(points):
        if j == i:
            continue
        m = (s + o) / 2
        d = o - s
        out = []
        for k in range(len(poly)):
            a, b = np.array(poly[k - 1]), np.array(poly[k])
            sa, sb = np.dot(a - m, d), np.dot(b - m, d)
            if (sa < 0) != (sb < 0) and sa != 0 and sb != 0:
                t = sa / (sa - sb)
                out.append(tuple(a + t * (b - a)))
            if sb <= 0:
                out.append(tuple(b))
        poly = out
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return poly, area
