"""
A Beta-tree histogram of a two-component mixture
================================================

Draw a sample from a bivariate Gaussian mixture, build the k-d tree,
attach simultaneous confidence bounds and keep the coarsest rectangles
that pass the goodness-of-fit check.
"""

import numpy as np

from betatree import FULL_SPACE, Config, fit
from betatree.harness import SCENARIO_2D, sample_mixture

x = sample_mixture(SCENARIO_2D, 2000, seed=0)

# the root is all of R^2, so the outermost cells are unbounded and never bins
bt = fit(x, Config(alpha=0.1, root_mode=FULL_SPACE))
print(f"{len(bt)} bins from {len(x)} points")

# densest bins first: empirical density and its simultaneous interval
order = np.argsort(-bt.h)
for i in order[:5]:
    b = bt.bins[i]
    print(f"node {b.index:4d}  h={b.h:.4f}  [{b.lower:.4f}, {b.upper:.4f}]  "
          f"box {np.round(b.rect.lower, 2)} .. {np.round(b.rect.upper, 2)}")

# the histogram is a piecewise constant function
grid = np.array([[-1.5, 0.6], [2.0, -1.5], [0.0, 0.0], [9.0, 9.0]])
print(bt.density(grid))

# a bounding box instead trims one order statistic per tail and coordinate
boxed = fit(x, Config(alpha=0.1, trim_fraction=0.005))
print(f"with a 0.5% bounding box: {len(boxed)} bins")
