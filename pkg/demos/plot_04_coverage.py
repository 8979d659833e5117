"""
Checking simultaneous coverage by simulation
============================================

Every bounded cell gets its own Beta interval at a depth-dependent level.
Over repeated samples, all intervals hold at once in at least 1 - alpha of
them.
"""

from betatree import Config
from betatree.harness import SCENARIO_2D, UniformCube, coverage_check

res = coverage_check(UniformCube(2), n=1000, alpha=0.1, reps=300, seed=0)
print(f"uniform: {res.coverage_rate:.3f} +- {res.coverage_se:.3f}, bins {res.bin_count_stats}")

# correlated Gaussian masses come from quasi-Monte Carlo; a replication whose
# mass error is not negligible against the interval width is set aside
res = coverage_check(SCENARIO_2D, n=1000, alpha=0.1, reps=20, seed=0, config=Config(),
                     n_points=2 ** 14)
print(f"mixture: {res.coverage_rate:.3f} over {res.replications} reps, {res.discarded} discarded")
