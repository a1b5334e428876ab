"""Seedable i.i.d. uniform and stratified sample sets on the unit hypercube.

The generator is xoshiro256** seeded through splitmix64, implemented here so
that every sample set is bit-reproducible across platforms and numpy
versions.  Doubles are produced from the top 53 bits of each output word;
coordinates that land on a domain or stratum boundary are redrawn.

Two code paths exist, both producing identical streams:

* ``Xoshiro256StarStar`` -- a plain-integer generator for one stream, used
  as the reference implementation;
* ``uniform_batch`` / ``stratified_batch`` -- compiled versions filling
  one row per seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO_M53 = 2.0**-53


# ---------------------------------------------------------------------------
# scalar reference implementation


def mix64(z: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit words."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state. Returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, mix64(state)


def derive_trial_seed(base: int, trial_index: int) -> int:
    """Decorrelated seed for trial ``trial_index`` of an experiment seeded
    with ``base``.  Injective in ``trial_index`` for a fixed base."""
    return mix64((int(base) ^ int(trial_index)) & MASK64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """Single-stream xoshiro256** generator on Python integers."""

    def __init__(self, seed: int):
        sm = int(seed) & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _TWO_M53

    def uniform_open(self, low: float, high: float) -> float:
        """Double strictly inside (low, high); boundary hits are redrawn."""
        while True:
            c = low + self.random() * (high - low)
            if low < c < high:
                return c


# ---------------------------------------------------------------------------
# seed derivation and compiled streams


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def derive_trial_seeds(base: int, trial_indices) -> np.ndarray:
    """Vectorized ``derive_trial_seed`` over an array of indices (or of
    bases, when ``base`` is an array)."""
    base = np.asarray(base, dtype=np.uint64)
    idx = np.asarray(trial_indices, dtype=np.uint64)
    return mix64_array(base ^ idx)


def nested_seeds(base: int, n_trials: int, n_batches: int, first_trial: int = 0) -> np.ndarray:
    """Seeds for batch ``b`` of trial ``t``: ``derive(derive(base, t), b)``.

    Returned flat in (trial, batch) row-major order.
    """
    trials = derive_trial_seeds(base, np.arange(first_trial, first_trial + n_trials, dtype=np.uint64))
    batches = np.arange(n_batches, dtype=np.uint64)
    return derive_trial_seeds(trials[:, None], batches[None, :]).ravel()


_U = np.uint64


@njit(cache=True)
def _rotl_u64(x, k):
    return (x << _U(k)) | (x >> _U(64 - k))


@njit(cache=True)
def _fill_boxes(seeds, lows, highs, out):
    # one xoshiro256** stream per seed; point-major, axis-minor draw order
    gamma = _U(GOLDEN_GAMMA)
    m1 = _U(_MIX1)
    m2 = _U(_MIX2)
    scale = 2.0**-53
    rows, n, d = out.shape
    for r in range(rows):
        sm = seeds[r]
        st = np.empty(4, dtype=np.uint64)
        for k in range(4):
            sm = sm + gamma
            z = sm
            z = (z ^ (z >> _U(30))) * m1
            z = (z ^ (z >> _U(27))) * m2
            st[k] = z ^ (z >> _U(31))
        s0, s1, s2, s3 = st[0], st[1], st[2], st[3]
        for i in range(n):
            for k in range(d):
                lo = lows[i, k]
                hi = highs[i, k]
                while True:
                    word = _rotl_u64(s1 * _U(5), 7) * _U(9)
                    t = s1 << _U(17)
                    s2 ^= s0
                    s3 ^= s1
                    s1 ^= s2
                    s0 ^= s3
                    s2 ^= t
                    s3 = _rotl_u64(s3, 45)
                    c = lo + float(word >> _U(11)) * scale * (hi - lo)
                    if lo < c < hi:
                        break
                out[r, i, k] = c


def _draw(seeds, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    out = np.empty((seeds.size,) + lows.shape)
    _fill_boxes(seeds, np.ascontiguousarray(lows, dtype=np.float64), np.ascontiguousarray(highs, dtype=np.float64), out)
    return out


def _check_dim(dim: int) -> None:
    if dim not in (1, 2):
        raise ValueError(f"unsupported dimension {dim}; expected 1 or 2")


def uniform_batch(n: int, dim: int, seeds) -> np.ndarray:
    """i.i.d. uniform points for each seed. Shape ``(len(seeds), n, dim)``."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    _check_dim(dim)
    return _draw(seeds, np.zeros((n, dim)), np.ones((n, dim)))


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Box:
    """Axis-aligned sub-box of the unit hypercube."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        if len(low) != len(high) or not low:
            raise ValueError("box corners must have the same, positive dimension")
        for lo, hi in zip(low, high):
            if not (0.0 <= lo < hi <= 1.0):
                raise ValueError(f"invalid box extent [{lo}, {hi}]")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dimension(self) -> int:
        return len(self.low)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in zip(self.low, self.high))

    def contains(self, points) -> np.ndarray:
        """Closed-box membership test for an ``(N, D)`` array."""
        p = np.asarray(points, dtype=float)
        return np.all((p >= self.low) & (p <= self.high), axis=-1)


def grid_boxes(s: int, dim: int) -> tuple[Box, ...]:
    """The ``s**dim`` equal strata of the unit hypercube.

    Stratum ``k`` has grid index ``(k % s, k // s)`` in 2D, x fastest.
    """
    if s < 1:
        raise ValueError(f"strata per axis must be >= 1, got {s}")
    _check_dim(dim)
    boxes = []
    for k in range(s**dim):
        idx = [(k // s**a) % s for a in range(dim)]
        boxes.append(Box(tuple(i / s for i in idx), tuple((i + 1) / s for i in idx)))
    return tuple(boxes)


@dataclass(frozen=True)
class Stratification:
    strata_per_axis: int
    stratum_of: np.ndarray
    boxes: tuple[Box, ...]

    @property
    def n_strata(self) -> int:
        return len(self.boxes)


@dataclass(frozen=True)
class SampleSet:
    """Points in the open unit hypercube, shape ``(N, D)``."""

    points: np.ndarray
    stratification: Stratification | None = None
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] < 1:
            raise ValueError("points must be a non-empty (N, D) array")
        if not np.all((p > 0.0) & (p < 1.0)):
            raise ValueError("all coordinates must lie strictly inside (0, 1)")
        p.flags.writeable = False
        object.__setattr__(self, "points", p)
        st = self.stratification
        if st is not None:
            of = np.array(st.stratum_of, dtype=np.int64)
            if of.shape != (p.shape[0],):
                raise ValueError("stratum_of must assign every point")
            if of.min() < 0 or of.max() >= st.n_strata:
                raise ValueError("stratum index out of range")
            for k, box in enumerate(st.boxes):
                if box.dimension != p.shape[1]:
                    raise ValueError("stratum box dimension mismatch")
                if not np.all(box.contains(p[of == k])):
                    raise ValueError(f"a sample assigned to stratum {k} lies outside its box")
            of.flags.writeable = False
            object.__setattr__(
                self, "stratification", Stratification(st.strata_per_axis, of, tuple(st.boxes))
            )

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def sample_uniform_iid(n: int, dim: int, seed: int) -> SampleSet:
    """``n`` i.i.d. uniform points in (0,1)^dim."""
    pts = uniform_batch(n, dim, [seed])[0]
    return SampleSet(pts, seed=int(seed))


def _strata_layout(n: int, s: int, dim: int) -> tuple[int, tuple[Box, ...]]:
    _check_dim(dim)
    if s < 1:
        raise ValueError(f"strata per axis must be >= 1, got {s}")
    n_strata = s**dim
    if n < n_strata or n % n_strata:
        raise ValueError(f"N={n} is not a positive multiple of the {n_strata} strata")
    return n // n_strata, grid_boxes(s, dim)


def stratified_batch(n: int, s: int, dim: int, seeds) -> tuple[np.ndarray, Stratification]:
    """Stratified points for each seed, ``n / s**dim`` per stratum.

    Points are grouped by stratum in stratum-index order, so the returned
    stratification is shared by every row.
    """
    per, boxes = _strata_layout(n, s, dim)
    lows = np.repeat(np.array([b.low for b in boxes]), per, axis=0)
    highs = np.repeat(np.array([b.high for b in boxes]), per, axis=0)
    stratum_of = np.repeat(np.arange(len(boxes)), per)
    return _draw(seeds, lows, highs), Stratification(s, stratum_of, boxes)


def sample_stratified(n: int, s: int, dim: int, seed: int) -> SampleSet:
    """``n`` points, ``n / s**dim`` i.i.d. uniform in each of the ``s**dim``
    equal strata."""
    pts, strat = stratified_batch(n, s, dim, [seed])
    return SampleSet(pts[0], strat, seed=int(seed))


# ---------------------------------------------------------------------------
# CSV exchange


def write_samples_csv(samples: SampleSet, path) -> None:
    """One row per point: coordinates (17 significant digits) and the
    stratum index, ``-1`` when unstratified."""
    d = samples.dimension
    st = samples.stratification
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k}" for k in range(d)] + ["stratum"])
        for i, p in enumerate(samples.points):
            w.writerow([f"{c:.17g}" for c in p] + [int(st.stratum_of[i]) if st else -1])


def read_samples_csv(path) -> SampleSet:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-1] != "stratum" or len(rows[0]) < 2:
        raise ValueError(f"{path}: expected header x0,..,stratum")
    d = len(rows[0]) - 1
    body = [r for r in rows[1:] if r]
    pts = np.array([[float(v) for v in r[:d]] for r in body])
    strata = np.array([int(r[d]) for r in body])
    if np.all(strata < 0):
        return SampleSet(pts)
    n_strata = int(strata.max()) + 1
    s = round(n_strata ** (1.0 / d))
    if s**d != n_strata:
        raise ValueError(f"{path}: {n_strata} strata do not form a {d}-D grid")
    return SampleSet(pts, Stratification(s, strata, grid_boxes(s, d)))
