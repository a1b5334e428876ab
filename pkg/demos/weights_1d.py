"""
Voronoi weights on the unit interval
====================================

A three-point sample set, its midpoint cells, and what each estimator
makes of f(x) = x.
"""

import numpy as np

from georeweight import SampleSet, estimate, partition_unit_interval
from georeweight.testbed import Integrand

samples = SampleSet(np.array([0.2, 0.5, 0.9]))
cells = partition_unit_interval(samples.points)

for c in cells.cells:
    print(f"site {c.site_index}: cell {c.vertices[0][0]:.2f}..{c.vertices[1][0]:.2f}"
          f"  volume {c.volume:.2f}  boundary order {c.boundary_order}")

# the boundary cells reach the ends of the interval, so they are larger on
# average; the corrected estimator divides them by 3/2 more than the inner one
identity = Integrand("x", 1, lambda p: p[..., 0])
for kind in ("mc", "con", "gr"):
    e = estimate(kind, identity, samples)
    print(f"{kind:>4}: {e.value:.6f}")
