"""Integral estimators over the unit hypercube.

Baselines are plain Monte Carlo and stratified Monte Carlo.  The reweighted
estimators weight every sample by the volume of its (domain-clipped)
Voronoi cell; the bias-corrected variants further divide each weight by a
coefficient that depends on how many domain facets the cell touches.

Everything here is backed by row-wise array kernels (``*_values``) taking
``(R, N)`` arrays of function values and cell data.  The ``estimate_*``
functions call them with a single row, and the experiment loops call them
with many rows, so both produce bit-identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from . import geometry
from .sampling import SampleSet, Stratification, derive_trial_seed, sample_stratified, sample_uniform_iid


class CoefficientMode(str, Enum):
    """Denominator of the correction coefficient in D > 1.

    ``GRID`` divides by ``(n + 1)**D`` (resp. ``(n + s)**D``) so that the
    expected weights of the lattice model sum to one; ``PAPER`` divides by
    ``n + 1`` (resp. ``n + s``) without the power.  Identical for D = 1.
    """

    GRID = "grid"
    PAPER = "paper"


class EstimatorKind(str, Enum):
    STANDARD_MC = "mc"
    CONSISTENT = "con"
    UNBIASED_UNIFORM = "gr"
    STRATIFIED_MC = "strat"
    UNBIASED_STRATIFIED = "gr-strat"
    BATCHED = "batched"

    @property
    def stratified(self) -> bool:
        return self in (EstimatorKind.STRATIFIED_MC, EstimatorKind.UNBIASED_STRATIFIED)

    @property
    def needs_partition(self) -> bool:
        return self in (
            EstimatorKind.CONSISTENT,
            EstimatorKind.UNBIASED_UNIFORM,
            EstimatorKind.UNBIASED_STRATIFIED,
        )


@dataclass(frozen=True)
class Estimate:
    value: float
    n_samples: int
    kind: EstimatorKind
    seed: int | None = None
    mode: CoefficientMode | None = None
    small_sample: bool = False  # below the 3**D (per stratum) the correction assumes

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("an estimate needs at least one sample")


# ---------------------------------------------------------------------------
# weights and row kernels


def correction_coefficient(b, n_samples: int, dim: int, mode=CoefficientMode.GRID, strata_per_axis: int = 0):
    """Per-sample divisor ``(3/2)**b * N / denom``.

    ``denom`` is ``n + 1`` without stratification and ``n + s`` with ``s``
    strata per axis, where ``n = N**(1/D)`` is kept real; GRID mode raises
    it to the power D.  Accepts scalar or array ``b``.
    """
    mode = CoefficientMode(mode)
    n = n_samples ** (1.0 / dim) if dim > 1 else float(n_samples)
    denom = n + (strata_per_axis if strata_per_axis else 1)
    if mode is CoefficientMode.GRID:
        denom = denom**dim
    if np.ndim(b):
        b = np.asarray(b, dtype=np.float64)
    return 1.5**b * n_samples / denom


def consistent_weights(volumes):
    """Cell volume over domain volume (the unit hypercube)."""
    return np.asarray(volumes, dtype=np.float64)


def unbiased_weights(volumes, orders, dim: int, mode=CoefficientMode.GRID, strata_per_axis: int = 0):
    v = np.asarray(volumes, dtype=np.float64)
    c = correction_coefficient(np.asarray(orders), v.shape[-1], dim, mode, strata_per_axis)
    return v / c


@njit(cache=True)
def _row_sums(a):
    # Neumaier-compensated, strictly left to right: the result of a row never
    # depends on how many rows are reduced together
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        s = 0.0
        c = 0.0
        for j in range(a.shape[1]):
            x = a[i, j]
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
        out[i] = s + c
    return out


def row_sums(a) -> np.ndarray:
    """Sum over the last axis, bit-identical for any leading shape."""
    a = np.asarray(a, dtype=np.float64)
    flat = np.ascontiguousarray(a.reshape(-1, a.shape[-1]))
    return _row_sums(flat).reshape(a.shape[:-1])


def weighted_values(weights, fvals) -> np.ndarray:
    return row_sums(np.asarray(weights) * np.asarray(fvals))


def mc_values(fvals) -> np.ndarray:
    f = np.asarray(fvals, dtype=np.float64)
    return row_sums(f) / f.shape[-1]


def stratified_mc_values(fvals, strat: Stratification) -> np.ndarray:
    """Sum over strata of stratum volume times the stratum's sample mean."""
    f = np.asarray(fvals, dtype=np.float64)
    total = np.zeros(f.shape[:-1])
    for k, box in enumerate(strat.boxes):
        sel = np.flatnonzero(strat.stratum_of == k)
        if sel.size == 0:
            raise ValueError(f"stratum {k} holds no samples")
        total = total + box.volume * (row_sums(f[..., sel]) / sel.size)
    return total


def small_sample(n_samples: int, dim: int, n_strata: int = 1) -> bool:
    return n_samples < n_strata * 3**dim


# ---------------------------------------------------------------------------
# single sample-set estimators


def _fvals(f, samples: SampleSet) -> np.ndarray:
    if f.dimension != samples.dimension:
        raise ValueError(f"integrand is {f.dimension}-D but samples are {samples.dimension}-D")
    return np.asarray(f.evaluate(samples.points), dtype=np.float64)[None, :]


def _cells(samples: SampleSet, part, stratified: bool):
    if part is None:
        pts = samples.points[None]
        strat = samples.stratification if stratified else None
        vol, mask = geometry.batch_cell_arrays(pts, strat)
        return vol, geometry.popcount(mask)
    if len(part) != len(samples):
        raise ValueError("partition does not match the sample set")
    return part.volumes[None, :], part.boundary_orders[None, :]


def estimate_standard_mc(f, samples: SampleSet) -> Estimate:
    value = mc_values(_fvals(f, samples))[0]
    return Estimate(float(value), len(samples), EstimatorKind.STANDARD_MC, samples.seed)


def estimate_consistent(f, samples: SampleSet, partition=None) -> Estimate:
    """Voronoi-volume weighted sum over a global (non-stratified) partition;
    ``partition`` may be passed in to reuse precomputed cells."""
    fv = _fvals(f, samples)
    vol, _ = _cells(samples, partition, stratified=False)
    value = weighted_values(consistent_weights(vol), fv)[0]
    return Estimate(float(value), len(samples), EstimatorKind.CONSISTENT, samples.seed)


def estimate_unbiased_uniform(f, samples: SampleSet, mode=CoefficientMode.GRID, partition=None) -> Estimate:
    mode = CoefficientMode(mode)
    fv = _fvals(f, samples)
    vol, orders = _cells(samples, partition, stratified=False)
    value = weighted_values(unbiased_weights(vol, orders, samples.dimension, mode), fv)[0]
    return Estimate(
        float(value),
        len(samples),
        EstimatorKind.UNBIASED_UNIFORM,
        samples.seed,
        mode,
        small_sample(len(samples), samples.dimension),
    )


def estimate_stratified_mc(f, samples: SampleSet) -> Estimate:
    if samples.stratification is None:
        raise ValueError("stratified estimator needs a stratified sample set")
    value = stratified_mc_values(_fvals(f, samples), samples.stratification)[0]
    return Estimate(float(value), len(samples), EstimatorKind.STRATIFIED_MC, samples.seed)


def estimate_unbiased_stratified(
    f, samples: SampleSet, mode=CoefficientMode.GRID, partition=None, strict: bool = False
) -> Estimate:
    """Bias-corrected weights over per-stratum partitions.

    Strata with fewer than ``3**D`` samples are flagged on the estimate;
    with ``strict=True`` they raise instead.
    """
    mode = CoefficientMode(mode)
    st = samples.stratification
    if st is None:
        raise ValueError("stratified estimator needs a stratified sample set")
    sparse = small_sample(len(samples), samples.dimension, st.n_strata)
    if sparse and strict:
        raise ValueError(f"fewer than {3 ** samples.dimension} samples per stratum")
    fv = _fvals(f, samples)
    vol, orders = _cells(samples, partition, stratified=True)
    w = unbiased_weights(vol, orders, samples.dimension, mode, st.strata_per_axis)
    value = weighted_values(w, fv)[0]
    return Estimate(float(value), len(samples), EstimatorKind.UNBIASED_STRATIFIED, samples.seed, mode, sparse)


_SINGLE = {
    EstimatorKind.STANDARD_MC: lambda f, s, mode: estimate_standard_mc(f, s),
    EstimatorKind.CONSISTENT: lambda f, s, mode: estimate_consistent(f, s),
    EstimatorKind.UNBIASED_UNIFORM: lambda f, s, mode: estimate_unbiased_uniform(f, s, mode),
    EstimatorKind.STRATIFIED_MC: lambda f, s, mode: estimate_stratified_mc(f, s),
    EstimatorKind.UNBIASED_STRATIFIED: lambda f, s, mode: estimate_unbiased_stratified(f, s, mode),
}


def estimate(kind, f, samples: SampleSet, mode=CoefficientMode.GRID) -> Estimate:
    kind = EstimatorKind(kind)
    if kind not in _SINGLE:
        raise ValueError(f"{kind.value} is not a single-set estimator")
    return _SINGLE[kind](f, samples, CoefficientMode(mode))


def estimate_batched(
    kind,
    f,
    batch_size: int,
    n_batches: int,
    base_seed: int,
    mode=CoefficientMode.GRID,
    strata_per_axis: int | None = None,
) -> Estimate:
    """Mean of ``n_batches`` independent estimates on fresh sample sets.

    Batch ``b`` is seeded with ``derive_trial_seed(base_seed, b)``; the
    mean is accumulated in batch order.
    """
    kind = EstimatorKind(kind)
    if batch_size < 1 or n_batches < 1:
        raise ValueError("batch_size and n_batches must be >= 1")
    if kind.stratified and not strata_per_axis:
        raise ValueError(f"{kind.value} needs strata_per_axis")
    total = 0.0
    small = False
    for b in range(n_batches):
        seed = derive_trial_seed(base_seed, b)
        if kind.stratified:
            samples = sample_stratified(batch_size, strata_per_axis, f.dimension, seed)
        else:
            samples = sample_uniform_iid(batch_size, f.dimension, seed)
        est = estimate(kind, f, samples, mode)
        total += est.value
        small = small or est.small_sample
    return Estimate(
        total / n_batches,
        batch_size * n_batches,
        EstimatorKind.BATCHED,
        base_seed,
        CoefficientMode(mode) if kind in (EstimatorKind.UNBIASED_UNIFORM, EstimatorKind.UNBIASED_STRATIFIED) else None,
        small,
    )
