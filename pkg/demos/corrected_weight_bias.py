"""
How unbiased is the corrected estimator?
========================================

The correction makes every weight have expectation 1/N, so the weights sum
to one on average.  A weight and its sample's position are correlated,
though, and for f(x) = x**2 the mean estimate misses 1/3.
"""

from georeweight.experiments import summarize, trial_values

n, trials = 16, 200_000
for function, ref in (("constant:1", 1.0), ("square1d", 1 / 3)):
    vals = trial_values(["con", "gr"], function, n, trials=trials, seed=3)
    for kind, v in vals.items():
        st = summarize(v, ref)
        z = st["bias"] / st["se"] if st["se"] > 0 else float("nan")
        print(f"{function:>10} {kind.value:>4}: mean {st['mean']:.6f}  bias {st['bias']:+.2e}  z {z:+.1f}")

# constant:1 shows the expected weight sum of one (con is exact, gr is
# unbiased); square1d shows a bias of about -5/608 for gr at N = 16
