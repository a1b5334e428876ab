"""
MSE against sample count on the piecewise benchmark
===================================================

Runs a reduced version of the convergence study and prints a table.  The
full study is ``georeweight convergence``.
"""

from georeweight import ExperimentConfig, run_experiment

cfg = ExperimentConfig.for_experiment("convergence", n=[16, 64, 256, 1024], trials=200)
rows = run_experiment(cfg)

kinds = cfg.estimators
print("N".rjust(6) + "".join(k.rjust(12) for k in kinds))
for n in cfg.n:
    mse = {r.estimator: r.mse for r in rows if r.N == n}
    print(f"{n:6d}" + "".join(f"{mse[k]:12.3e}" for k in kinds))

# the reweighted columns fall much faster than plain Monte Carlo
