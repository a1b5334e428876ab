import math
from fractions import Fraction

import numpy as np
import pytest

from georeweight import estimators as est
from georeweight.estimators import CoefficientMode, EstimatorKind, correction_coefficient
from georeweight.experiments import batch_values, summarize, trial_values
from georeweight.geometry import partition, partition_stratified
from georeweight.sampling import SampleSet, Stratification, derive_trial_seed, grid_boxes, sample_stratified, sample_uniform_iid
from georeweight.testbed import Integrand, benchmark_1d, constant, product_2d, reference_integral_test1d, square_1d
from oracles import exact_mean_1d

GRID, PAPER = CoefficientMode.GRID, CoefficientMode.PAPER
identity = Integrand("x", 1, lambda p: p[..., 0])


def test_coefficient_examples():
    assert correction_coefficient(0, 4, 1) == pytest.approx(0.8, abs=1e-15)
    assert correction_coefficient(1, 4, 1) == pytest.approx(1.2, abs=1e-15)
    assert correction_coefficient(0, 16, 1, strata_per_axis=4) == pytest.approx(0.8, abs=1e-15)
    assert correction_coefficient(1, 16, 1, strata_per_axis=4) == pytest.approx(1.2, abs=1e-15)
    assert correction_coefficient(0, 16, 2, GRID) == pytest.approx(0.64, abs=1e-15)
    assert correction_coefficient(0, 16, 2, PAPER) == pytest.approx(3.2, abs=1e-15)


@pytest.mark.parametrize("n", [1, 3, 16, 1000])
@pytest.mark.parametrize("b", [0, 1, 2])
@pytest.mark.parametrize("s", [0, 2])
def test_modes_agree_in_1d(n, b, s):
    assert correction_coefficient(b, n, 1, GRID, s) == correction_coefficient(b, n, 1, PAPER, s)


def test_coefficient_accepts_arrays():
    c = correction_coefficient(np.array([0, 1, 2]), 9, 2)
    np.testing.assert_allclose(c, [9 / 16 * 1.5**k for k in range(3)])


@pytest.mark.parametrize("dim", [1, 2])
def test_closure_identity(dim):
    for n in range(3, 101):
        total = sum(math.comb(dim, d) * 2**d * (n - 2) ** (dim - d) * Fraction(3, 2) ** d for d in range(dim + 1))
        assert total == (n + 1) ** dim


def test_mc_examples():
    x = SampleSet(np.array([0.2, 0.4, 0.9]))
    assert est.estimate_standard_mc(constant(1.0), x).value == 1.0
    assert est.estimate_standard_mc(identity, x).value == pytest.approx(0.5, abs=1e-15)


def test_mc_large_n_on_benchmark():
    s = sample_uniform_iid(10**6, 1, 1)
    fv = benchmark_1d().evaluate(s.points)
    se = fv.std() / math.sqrt(len(fv))
    e = est.estimate_standard_mc(benchmark_1d(), s)
    assert abs(e.value - reference_integral_test1d()) < 4 * se
    assert e.n_samples == 10**6 and e.kind is EstimatorKind.STANDARD_MC


def test_consistent_example():
    e = est.estimate_consistent(identity, SampleSet(np.array([0.2, 0.5, 0.9])))
    assert e.value == pytest.approx(0.515, abs=1e-15)


def test_unbiased_uniform_example():
    e = est.estimate_unbiased_uniform(constant(1.0), SampleSet(np.array([0.2, 0.5, 0.9])))
    assert e.value == pytest.approx(0.35 / 1.125 + 0.35 / 0.75 + 0.30 / 1.125, abs=1e-15)
    assert e.value == pytest.approx(1.0444444444444444, abs=1e-15)
    assert not e.small_sample


def test_small_sample_flags():
    assert est.estimate_unbiased_uniform(constant(1.0), SampleSet(np.array([0.2, 0.5]))).small_sample
    assert est.estimate_unbiased_uniform(product_2d(), sample_uniform_iid(8, 2, 1)).small_sample
    assert not est.estimate_unbiased_uniform(product_2d(), sample_uniform_iid(9, 2, 1)).small_sample
    sparse = sample_stratified(8, 4, 1, 1)
    assert est.estimate_unbiased_stratified(square_1d(), sparse).small_sample
    with pytest.raises(ValueError):
        est.estimate_unbiased_stratified(square_1d(), sparse, strict=True)


def test_stratified_mc_examples():
    strat = Stratification(2, np.array([0, 0, 1, 1]), grid_boxes(2, 1))
    s = SampleSet(np.array([0.1, 0.2, 0.6, 0.7]), strat)
    assert est.estimate_stratified_mc(identity, s).value == pytest.approx(0.4, abs=1e-15)
    assert est.estimate_stratified_mc(constant(1.0), s).value == 1.0
    with pytest.raises(ValueError):
        est.estimate_stratified_mc(identity, SampleSet(np.array([0.3])))


def test_stratified_mc_variance_not_above_mc():
    v = trial_values(["mc"], "test1d", 64, trials=10_000, seed=2)
    w = trial_values(["strat"], "test1d", 64, trials=10_000, seed=2, s=4)
    assert np.var(w[EstimatorKind.STRATIFIED_MC]) <= np.var(v[EstimatorKind.STANDARD_MC])


def test_one_stratum_reduces_to_uniform():
    s = sample_stratified(30, 1, 1, 5)
    a = est.estimate_unbiased_stratified(square_1d(), s)
    b = est.estimate_unbiased_uniform(square_1d(), SampleSet(s.points))
    assert a.value == b.value


def test_stratified_expected_grid_positions_sum_to_one():
    m, s = 4, 4
    pts = np.array([(k + j / (m + 1)) / s for k in range(s) for j in range(1, m + 1)])
    strat = Stratification(s, np.repeat(np.arange(s), m), grid_boxes(s, 1))
    e = est.estimate_unbiased_stratified(constant(1.0), SampleSet(pts, strat))
    assert e.value == pytest.approx(1.0, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        est.estimate_standard_mc(product_2d(), sample_uniform_iid(4, 1, 1))


def test_partition_reuse():
    s = sample_uniform_iid(50, 2, 3)
    part = partition(s.points)
    for f in (product_2d(), constant(2.0, 2)):
        assert est.estimate_consistent(f, s, partition=part).value == est.estimate_consistent(f, s).value
        assert est.estimate_unbiased_uniform(f, s, partition=part).value == est.estimate_unbiased_uniform(f, s).value
    st = sample_stratified(32, 2, 2, 3)
    p2 = partition_stratified(st)
    assert est.estimate_unbiased_stratified(product_2d(), st, partition=p2).value == est.estimate_unbiased_stratified(product_2d(), st).value


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("strata", [None, 2])
def test_consistent_weights_sum_to_one(dim, strata):
    s = sample_uniform_iid(256, dim, 4) if strata is None else sample_stratified(256, strata, dim, 4)
    assert abs(est.estimate_consistent(constant(1.0, dim), s).value - 1.0) < 1e-9


@pytest.mark.parametrize("kind", ["mc", "con", "gr", "strat", "gr-strat"])
@pytest.mark.parametrize("dim", [1, 2])
def test_scale_covariance(kind, dim):
    s = sample_stratified(64, 2, dim, 9) if EstimatorKind(kind).stratified else sample_uniform_iid(64, dim, 9)
    f = square_1d() if dim == 1 else product_2d()
    g = Integrand("scaled", dim, lambda p: 8.0 * f.evaluate(p))
    assert est.estimate(kind, g, s).value == 8.0 * est.estimate(kind, f, s).value


def test_single_and_batch_paths_are_bitwise_equal():
    for dim, func in ((1, "test1d"), (2, "product2d")):
        f = benchmark_1d() if dim == 1 else product_2d()
        base = 31
        vals = batch_values(["mc", "con", "gr"], func, 100, trials=3, seed=base)
        svals = batch_values(["strat", "gr-strat"], func, 100 if dim == 1 else 64, trials=3, seed=base, s=2)
        for t in range(3):
            seed = derive_trial_seed(derive_trial_seed(base, t), 0)
            u = sample_uniform_iid(100, dim, seed)
            for k in ("mc", "con", "gr"):
                assert vals[EstimatorKind(k)][t, 0] == est.estimate(k, f, u).value
            st = sample_stratified(100 if dim == 1 else 64, 2, dim, seed)
            for k in ("strat", "gr-strat"):
                assert svals[EstimatorKind(k)][t, 0] == est.estimate(k, f, st).value


def test_batched_identities():
    f = square_1d()
    one = est.estimate_batched("gr", f, 50, 1, 77)
    assert one.value == est.estimate_unbiased_uniform(f, sample_uniform_iid(50, 1, derive_trial_seed(77, 0))).value
    many = est.estimate_batched("gr", f, 50, 5, 77)
    parts = [est.estimate_unbiased_uniform(f, sample_uniform_iid(50, 1, derive_trial_seed(77, b))).value for b in range(5)]
    acc = 0.0
    for p in parts:
        acc += p
    assert many.value == acc / 5
    assert many.kind is EstimatorKind.BATCHED and many.n_samples == 250
    strat = est.estimate_batched("gr-strat", f, 16, 3, 5, strata_per_axis=4)
    assert strat.n_samples == 48
    with pytest.raises(ValueError):
        est.estimate_batched("strat", f, 16, 3, 5)
    with pytest.raises(ValueError):
        est.estimate_batched("mc", f, 0, 3, 5)


def test_batched_mc_distribution_matches_single_batch():
    a = trial_values(["mc"], "test1d", 100, trials=10_000, seed=8, n_batches=10)[EstimatorKind.STANDARD_MC]
    b = trial_values(["mc"], "test1d", 1000, trials=10_000, seed=9)[EstimatorKind.STANDARD_MC]
    se = math.sqrt(a.var() / len(a) + b.var() / len(b))
    assert abs(a.mean() - b.mean()) < 4 * se
    assert abs(a.var() - b.var()) < 0.1 * b.var()


def test_consistent_beats_mc_on_benchmark():
    v = trial_values(["mc", "con"], "test1d", 4096, trials=1000, seed=1)
    ref = reference_integral_test1d()
    assert summarize(v[EstimatorKind.CONSISTENT], ref)["mse"] < summarize(v[EstimatorKind.STANDARD_MC], ref)["mse"]


# --- expectation of the 1D reweighted estimators, exact vs simulated ---

@pytest.mark.parametrize("kind,strata,corrected", [("con", 1, False), ("gr", 1, True), ("gr-strat", 4, True)])
def test_simulated_mean_matches_exact_expectation(kind, strata, corrected):
    exact = float(exact_mean_1d([0, 0, 1], 16, strata, corrected))
    v = trial_values([kind], "square1d", 16, trials=200_000, seed=12, s=None if strata == 1 else 4)[EstimatorKind(kind)]
    st = summarize(v, exact)
    assert abs(st["bias"]) < 4 * st["se"]


@pytest.mark.parametrize("n,strata", [(3, 1), (5, 1), (16, 1), (40, 1), (16, 2), (40, 2), (16, 4)])
def test_corrected_weights_have_unit_expected_sum(n, strata):
    assert exact_mean_1d([1], n, strata, corrected=True) == 1
    assert exact_mean_1d([1], n, strata, corrected=False) == 1


def test_exact_expectation_of_corrected_estimator_is_not_the_integral():
    # the correction equalizes E[w_i] but w_i and f(x_i) are correlated
    assert exact_mean_1d([0, 0, 1], 16, 1, True) == Fraction(1, 3) - Fraction(5, 608)
    assert exact_mean_1d([0, 1], 16, 1, True) == Fraction(1, 2)
