"""Convergence, batching and bias studies over many seeded trials.

Every trial ``t`` draws its sample sets from ``derive(derive(seed, t), b)``
for batch ``b``.  Trials are processed in fixed-size chunks (optionally on a
process pool); chunking never depends on the worker count and every
reduction runs in trial/batch index order, so the CSV output is
byte-identical for any ``workers`` setting.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import estimators as est
from . import geometry
from .estimators import CoefficientMode, EstimatorKind
from .sampling import nested_seeds, stratified_batch, uniform_batch
from .testbed import make_integrand

EXPERIMENTS = (
    "convergence",
    "strata_sweep",
    "batch_fixed_total",
    "batch_growth",
    "bias_check",
    "orderstats",
    "boundary_cardinality",
)

_CHUNK_VALUES = 1 << 20  # samples generated per chunk


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


_DEFAULTS = {
    "convergence": dict(n=[16, 64, 256, 1024, 4096], estimators=["mc", "con", "gr", "strat", "gr-strat"]),
    "strata_sweep": dict(n=[1024], strata=[1, 2, 4, 8, 16, 32], estimators=["strat", "gr-strat"]),
    "batch_fixed_total": dict(batch_size=[100, 1000, 10000], trials=200, estimators=["mc", "gr", "strat", "gr-strat"]),
    "batch_growth": dict(batch_size=[1000], trials=200, estimators=["mc", "gr", "strat", "gr-strat"]),
    "bias_check": dict(function="square1d", n=[16], trials=1_000_000, estimators=["con", "gr", "gr-strat"]),
    "orderstats": dict(n=[10], trials=100_000, estimators=[]),
    "boundary_cardinality": dict(n=[100], trials=10_000, estimators=[]),
}


@dataclass
class ExperimentConfig:
    experiment: str
    function: str = "test1d"
    estimators: list[str] = field(default_factory=lambda: ["mc", "con", "gr", "strat", "gr-strat"])
    n: list[int] = field(default_factory=lambda: [16, 64, 256, 1024, 4096])
    strata: list[int] = field(default_factory=lambda: [4])
    batch_size: list[int] = field(default_factory=lambda: [1000])
    n_batches: list[int] | None = None
    total: int = 100_000
    trials: int = 1000
    seed: int = 1
    mode: str = "grid"
    out: str | None = None
    workers: int = 1
    dimension: int | None = None

    @classmethod
    def for_experiment(cls, experiment: str, **overrides) -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        values = dict(_DEFAULTS[experiment])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(dict(values, experiment=experiment))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' field")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name in ("n", "strata", "batch_size"):
            values = getattr(self, name)
            if not values or any(int(v) < 1 for v in values):
                raise ConfigError(f"'{name}' must be a non-empty list of positive integers")
        if self.n_batches is not None and (not self.n_batches or min(self.n_batches) < 1):
            raise ConfigError("'n_batches' must be a non-empty list of positive integers")
        if self.experiment not in ("orderstats", "boundary_cardinality") and not self.estimators:
            raise ConfigError("'estimators' must not be empty")
        try:
            for e in self.estimators:
                EstimatorKind(e)
            CoefficientMode(self.mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if EstimatorKind.BATCHED.value in self.estimators:
            raise ConfigError("'batched' is not a selectable estimator")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.total < 1 or self.workers < 1:
            raise ConfigError("total and workers must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.dimension is not None and self.dimension not in (1, 2):
            raise ConfigError("dimension must be 1 or 2")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    estimator: str
    mode: str
    N: int
    S: int
    batch_size: int
    n_batches: int
    trials: int
    mean: float
    mse: float
    variance: float
    bias: float
    se: float
    seed: int

    @property
    def z(self) -> float:
        return self.bias / self.se if self.se > 0 else math.nan


FIELDS = tuple(f.name for f in dataclasses.fields(ResultRow))


def summarize(values, reference: float) -> dict:
    """Mean, MSE against ``reference``, population variance, bias and the
    standard error of the mean."""
    v = np.asarray(values, dtype=np.float64)
    t = v.size
    mean = float(np.mean(v))
    variance = float(np.mean((v - mean) ** 2))
    mse = float(np.mean((v - reference) ** 2))
    se = math.sqrt(variance / (t - 1)) if t > 1 else math.nan
    return dict(mean=mean, mse=mse, variance=variance, bias=mean - reference, se=se, trials=t)


# ---------------------------------------------------------------------------
# trial engine


def _chunks(trials: int, per_trial: int) -> list[tuple[int, int]]:
    step = max(1, _CHUNK_VALUES // max(per_trial, 1))
    return [(t, min(t + step, trials)) for t in range(0, trials, step)]


def _row_values(kinds, f, pts, strat, mode) -> dict:
    fv = np.asarray(f.evaluate(pts), dtype=np.float64)
    dim = pts.shape[-1]
    out = {}
    cells = None
    for kind in kinds:
        if kind in (EstimatorKind.STANDARD_MC,):
            out[kind] = est.mc_values(fv)
        elif kind is EstimatorKind.STRATIFIED_MC:
            out[kind] = est.stratified_mc_values(fv, strat)
        else:
            if cells is None:
                vol, mask = geometry.batch_cell_arrays(pts, strat)
                cells = vol, geometry.popcount(mask)
            vol, orders = cells
            if kind is EstimatorKind.CONSISTENT:
                out[kind] = est.weighted_values(est.consistent_weights(vol), fv)
            else:
                s = strat.strata_per_axis if strat is not None else 0
                out[kind] = est.weighted_values(est.unbiased_weights(vol, orders, dim, mode, s), fv)
    return out


def _chunk_values(span, kinds, function, dimension, n, s, n_batches, seed, mode):
    f = make_integrand(function, dimension)
    t0, t1 = span
    seeds = nested_seeds(seed, t1 - t0, n_batches, first_trial=t0)
    if s is None:
        pts, strat = uniform_batch(n, f.dimension, seeds), None
    else:
        pts, strat = stratified_batch(n, s, f.dimension, seeds)
    vals = _row_values(kinds, f, pts, strat, mode)
    return {k: v.reshape(t1 - t0, n_batches) for k, v in vals.items()}


def batch_values(
    kinds, function: str, n: int, *, trials: int, seed: int, mode="grid", s: int | None = None,
    n_batches: int = 1, dimension: int | None = None, workers: int = 1,
) -> dict:
    """Per-batch estimates, shape ``(trials, n_batches)`` for each kind.

    All ``kinds`` share the same sample sets; they must be either all
    stratified (pass ``s``) or all unstratified.
    """
    kinds = [EstimatorKind(k) for k in kinds]
    if any(k.stratified != (s is not None) for k in kinds):
        raise ConfigError("mixing stratified and unstratified estimators in one batch")
    spans = _chunks(trials, n * n_batches)
    job = partial(
        _chunk_values, kinds=kinds, function=function, dimension=dimension, n=n, s=s,
        n_batches=n_batches, seed=int(seed), mode=CoefficientMode(mode),
    )
    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(job, spans))
    else:
        parts = [job(sp) for sp in spans]
    return {k: np.concatenate([p[k] for p in parts]) for k in kinds}


def batch_means(per_batch: np.ndarray, n_batches: int | None = None) -> np.ndarray:
    """Mean of the first ``n_batches`` columns, accumulated in column order."""
    nb = per_batch.shape[1] if n_batches is None else n_batches
    acc = per_batch[:, 0].copy()
    for b in range(1, nb):
        acc = acc + per_batch[:, b]
    return acc / nb


def trial_values(kinds, function: str, n: int, **kw) -> dict:
    """Batched estimates per trial, shape ``(trials,)`` for each kind."""
    nb = kw.get("n_batches", 1)
    return {k: batch_means(v, nb) for k, v in batch_values(kinds, function, n, **kw).items()}


# ---------------------------------------------------------------------------
# runners


def _setup(cfg: ExperimentConfig):
    try:
        f = make_integrand(cfg.function, cfg.dimension)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.dimension is not None and f.dimension != cfg.dimension:
        raise ConfigError(f"{cfg.function} is {f.dimension}-D, config asks for {cfg.dimension}-D")
    if f.dimension not in (1, 2):
        raise ConfigError("only 1-D and 2-D integrands are supported")
    if f.reference_integral is None:
        raise ConfigError(f"{cfg.function} has no known reference integral")
    return f


def _groups(cfg: ExperimentConfig, n: int, dim: int, strata=None):
    """(s, kinds) groups sharing sample sets; s is None for unstratified."""
    kinds = [EstimatorKind(k) for k in cfg.estimators]
    plain = [k for k in kinds if not k.stratified]
    strat = [k for k in kinds if k.stratified]
    groups = [(None, plain)] if plain else []
    for s in strata if strata is not None else cfg.strata:
        if strat:
            if n % s**dim:
                raise ConfigError(f"N={n} is not divisible by {s}^{dim} strata")
            groups.append((int(s), strat))
    return groups


def _mode_label(kind: EstimatorKind, mode: str) -> str:
    return mode if kind in (EstimatorKind.UNBIASED_UNIFORM, EstimatorKind.UNBIASED_STRATIFIED) else ""


def _rows_for(cfg, f, n, groups, n_batches=1, batch_size=None, total_n=None):
    rows = []
    for s, kinds in groups:
        vals = trial_values(
            kinds, cfg.function, n, trials=cfg.trials, seed=cfg.seed, mode=cfg.mode, s=s,
            n_batches=n_batches, dimension=cfg.dimension, workers=cfg.workers,
        )
        for k in kinds:
            st = summarize(vals[k], f.reference_integral)
            rows.append(ResultRow(
                cfg.experiment, k.value, _mode_label(k, cfg.mode), total_n or n,
                s**f.dimension if s else 0, batch_size or n, n_batches, st["trials"],
                st["mean"], st["mse"], st["variance"], st["bias"], st["se"], int(cfg.seed),
            ))
    return rows


def run_convergence(cfg: ExperimentConfig) -> list[ResultRow]:
    """MSE against the reference integral for every estimator and N."""
    f = _setup(cfg)
    plan = [(n, _groups(cfg, n, f.dimension)) for n in cfg.n]
    rows = []
    for n, groups in plan:
        rows += _rows_for(cfg, f, n, groups)
    return rows


run_bias_check = run_convergence


def run_strata_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """MSE versus strata count at fixed N (stratified estimators only)."""
    f = _setup(cfg)
    if any(not EstimatorKind(k).stratified for k in cfg.estimators):
        raise ConfigError("strata_sweep accepts only stratified estimators (strat, gr-strat)")
    plan = [(n, _groups(cfg, n, f.dimension)) for n in cfg.n]
    rows = []
    for n, groups in plan:
        rows += _rows_for(cfg, f, n, groups)
    return rows


def run_batch_fixed_total(cfg: ExperimentConfig) -> list[ResultRow]:
    """Fixed sample budget split into batches of each configured size."""
    f = _setup(cfg)
    plan = []
    for bs in cfg.batch_size:
        if cfg.total % bs:
            raise ConfigError(f"total {cfg.total} is not divisible by batch size {bs}")
        plan.append((bs, cfg.total // bs, _groups(cfg, bs, f.dimension)))
    rows = []
    for bs, nb, groups in plan:
        rows += _rows_for(cfg, f, bs, groups, n_batches=nb, batch_size=bs, total_n=cfg.total)
    return rows


def growth_schedule(batch_size: int, total: int) -> list[int]:
    """Doubling batch counts up to the budget cap, cap included."""
    cap = max(1, total // batch_size)
    out, nb = [], 1
    while nb < cap:
        out.append(nb)
        nb *= 2
    return out + [cap]


def run_batch_growth(cfg: ExperimentConfig) -> list[ResultRow]:
    """MSE as batches of a fixed size are added, nested across counts."""
    f = _setup(cfg)
    rows = []
    plan = []
    for bs in cfg.batch_size:
        schedule = sorted(set(cfg.n_batches)) if cfg.n_batches else growth_schedule(bs, cfg.total)
        plan.append((bs, schedule, _groups(cfg, bs, f.dimension)))
    for bs, schedule, groups in plan:
        for s, kinds in groups:
            per = batch_values(
                kinds, cfg.function, bs, trials=cfg.trials, seed=cfg.seed, mode=cfg.mode, s=s,
                n_batches=schedule[-1], dimension=cfg.dimension, workers=cfg.workers,
            )
            for nb in schedule:
                for k in kinds:
                    st = summarize(batch_means(per[k], nb), f.reference_integral)
                    rows.append(ResultRow(
                        cfg.experiment, k.value, _mode_label(k, cfg.mode), bs * nb,
                        s**f.dimension if s else 0, bs, nb, st["trials"], st["mean"], st["mse"],
                        st["variance"], st["bias"], st["se"], int(cfg.seed),
                    ))
    return rows


def _uniform_trials(n: int, dim: int, trials: int, seed: int) -> np.ndarray:
    parts = [uniform_batch(n, dim, nested_seeds(seed, t1 - t0, 1, first_trial=t0)) for t0, t1 in _chunks(trials, n)]
    return np.concatenate(parts)


def _stat_row(cfg, label, values, reference, n):
    st = summarize(values, reference)
    return ResultRow(
        cfg.experiment, label, "", n, 0, n, 1, st["trials"], st["mean"], st["mse"],
        st["variance"], st["bias"], st["se"], int(cfg.seed),
    )


def run_orderstats(cfg: ExperimentConfig) -> list[ResultRow]:
    """Empirical means of the sorted samples ``x(i)`` against ``i/(N+1)``,
    and of the gaps ``gap(i) = x(i+1) - x(i)`` (with ``x(0) = 0``,
    ``x(N+1) = 1``) against ``1/(N+1)``."""
    if cfg.dimension not in (None, 1):
        raise ConfigError("orderstats is one-dimensional")
    rows = []
    for n in cfg.n:
        xs = np.sort(_uniform_trials(n, 1, cfg.trials, cfg.seed)[:, :, 0], axis=1)
        for i in range(1, n + 1):
            rows.append(_stat_row(cfg, f"x({i})", xs[:, i - 1], i / (n + 1), n))
        padded = np.concatenate([np.zeros((xs.shape[0], 1)), xs, np.ones((xs.shape[0], 1))], axis=1)
        gaps = np.diff(padded, axis=1)
        for i in range(n + 1):
            rows.append(_stat_row(cfg, f"gap({i})", gaps[:, i], 1 / (n + 1), n))
    return rows


def expected_cardinality(d: int, n_samples: int, dim: int) -> float:
    """Lattice-model count of cells with boundary order ``d``:
    ``C(D, d) * 2**d * (n - 2)**(D - d)`` with ``n = N**(1/D)``."""
    if d > dim:
        return 0.0
    n = n_samples ** (1.0 / dim)
    return math.comb(dim, d) * 2.0**d * (n - 2.0) ** (dim - d)


def run_boundary_cardinality(cfg: ExperimentConfig) -> list[ResultRow]:
    """Mean number of cells per boundary order.  In 1D the counts are exact
    (two boundary cells) and any deviation aborts the run."""
    dim = cfg.dimension or 1
    rows = []
    for n in cfg.n:
        counts = []
        for t0, t1 in _chunks(cfg.trials, n):
            pts = uniform_batch(n, dim, nested_seeds(cfg.seed, t1 - t0, 1, first_trial=t0))
            _, mask = geometry.batch_cell_arrays(pts)
            orders = geometry.popcount(mask)
            counts.append(np.stack([(orders == d).sum(axis=1) for d in range(2 * dim + 1)], axis=1))
        counts = np.concatenate(counts)
        if dim == 1:
            want = np.array([n - 2, 2, 0]) if n >= 2 else np.array([0, 0, 1])
            bad = np.flatnonzero(np.any(counts != want, axis=1))
            if bad.size:
                raise ExperimentError(f"trial {bad[0]} at N={n}: boundary counts {counts[bad[0]].tolist()}")
        for d in range(2 * dim + 1):
            ref = expected_cardinality(d, n, dim) if n >= 2 else float(d == 2 * dim)
            rows.append(_stat_row(cfg, f"order_{d}", counts[:, d].astype(np.float64), ref, n))
    return rows


RUNNERS = {
    "convergence": run_convergence,
    "strata_sweep": run_strata_sweep,
    "batch_fixed_total": run_batch_fixed_total,
    "batch_growth": run_batch_growth,
    "bias_check": run_bias_check,
    "orderstats": run_orderstats,
    "boundary_cardinality": run_boundary_cardinality,
}


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    cfg.validate()
    return RUNNERS[cfg.experiment](cfg)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_rows_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, name)) for name in FIELDS])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    write_rows_csv(rows, buf)
    return buf.getvalue()


def read_rows_csv(fh) -> list[ResultRow]:
    types = {f.name: f.type for f in dataclasses.fields(ResultRow)}
    conv = {"str": str, "int": int, "float": float}
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != FIELDS:
        raise ValueError("unexpected CSV header")
    return [ResultRow(**{k: conv[types[k]](v) for k, v in rec.items()}) for rec in reader]
