"""
The mass of a k-d tree cell is Beta distributed
===============================================

Because the splits are order statistics, the probability content of the
cell with n_k interior points follows Beta(n_k + 1, n - n_k) whatever the
sampling distribution. Uniform data make the mass easy to read off: it is
the clipped volume.
"""

import numpy as np
from scipy import stats

from betatree import FULL_SPACE, Config, beta_cdf, beta_quantile, build_kdtree
from betatree.harness import pivot_check, replication_rng, sample_uniform

n = 100
cfg = Config(root_mode=FULL_SPACE)
masses = []
for r in range(2000):
    tree = build_kdtree(sample_uniform(2, n, replication_rng(1, r)), cfg)
    i = tree.position(1)
    lo, hi = np.clip(tree.lower[i], 0, 1), np.clip(tree.upper[i], 0, 1)
    masses.append(np.prod(hi - lo))
n_k = int(tree.count[tree.position(1)])
print("n_1 =", n_k)

a, b = n_k + 1, n - n_k
print(stats.kstest(masses, lambda t: beta_cdf(t, a, b)))

# the harness wraps exactly this experiment
res = pivot_check(n, 2, 7, 2000, seed=1)
print(res.params["n_k"], round(res.ks_pvalue, 3))

# inverting the pivot gives an exact interval for the mass
alpha = 0.05
print(beta_quantile([alpha / 2, 1 - alpha / 2], a, b))
