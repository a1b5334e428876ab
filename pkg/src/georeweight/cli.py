"""``georeweight`` command line entry point.

Exit status: 0 on success, 1 on a configuration error, 2 on an I/O error,
3 when a run's built-in consistency check fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import geometry
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, ExperimentError, run_experiment, write_rows_csv
from .sampling import derive_trial_seed, sample_uniform_iid
from .testbed import make_integrand


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse would exit with 2, which is reserved for I/O errors here
        raise ConfigError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="georeweight", description="Run Voronoi-reweighted Monte Carlo studies and write CSV results.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON file with config fields; flags override it")
    p.add_argument("--function", help="test1d, square1d, product2d, constant:C or image:PATH")
    p.add_argument("--estimators", type=lambda s: [v for v in s.split(",") if v], help="comma list of mc,con,gr,strat,gr-strat")
    p.add_argument("--n", type=_int_list, help="sample counts")
    p.add_argument("--strata", type=_int_list, help="strata per axis")
    p.add_argument("--batch-size", type=_int_list, dest="batch_size")
    p.add_argument("--n-batches", type=_int_list, dest="n_batches", help="batch counts for batch_growth")
    p.add_argument("--total", type=int, help="sample budget per trial for the batch studies")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("grid", "paper"))
    p.add_argument("--dimension", type=int, choices=(1, 2))
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV destination (default: stdout)")
    p.add_argument("--dump-partition", dest="dump_partition", metavar="FILE",
                   help="also write the partition of the first trial's sample set")
    return p


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        if data.setdefault("experiment", args.experiment) != args.experiment:
            raise ConfigError(f"config is for {data['experiment']!r}, command line asks for {args.experiment!r}")
    fields = ("function", "estimators", "n", "strata", "batch_size", "n_batches", "total",
              "trials", "seed", "mode", "dimension", "workers", "out")
    overrides = {k: getattr(args, k) for k in fields if getattr(args, k) is not None}
    data.pop("experiment", None)
    return ExperimentConfig.for_experiment(args.experiment, **{**data, **overrides})


def dump_partition(cfg: ExperimentConfig, path: str) -> None:
    """Partition of the uniform sample set used by trial 0, batch 0."""
    f = make_integrand(cfg.function, cfg.dimension)
    dim = cfg.dimension or getattr(f, "dimension", 1)
    n = cfg.batch_size[0] if cfg.experiment.startswith("batch") else cfg.n[0]
    seed = derive_trial_seed(derive_trial_seed(cfg.seed, 0), 0)
    part = geometry.partition(sample_uniform_iid(n, dim, seed).points)
    with open(path, "w", newline="") as fh:
        geometry.write_partition_csv(part, fh)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        rows = run_experiment(cfg)
        if args.dump_partition:
            dump_partition(cfg, args.dump_partition)
        if cfg.out:
            with open(cfg.out, "w", newline="") as fh:
                write_rows_csv(rows, fh)
        else:
            write_rows_csv(rows, sys.stdout)
    except ConfigError as exc:
        print(f"georeweight: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"georeweight: I/O error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"georeweight: check failed: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"georeweight: config error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
