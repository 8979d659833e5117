"""
Hunting for modes
=================

Bins are visited from densest to sparsest. A bin starts a new mode unless
it can reach an existing mode through neighbours none of which is
confidently less dense than both ends.
"""

import numpy as np

from betatree import FULL_SPACE, Config, build_adjacency, find_modes, fit, shortest_path_report
from betatree.harness import SCENARIO_3D, sample_mixture

x = sample_mixture(SCENARIO_3D, 20_000, seed=4)
bt = fit(x, Config(root_mode=FULL_SPACE))
graph = build_adjacency(bt)
print(len(bt), "bins,", len(graph.edges()), "adjacent pairs")

report = find_modes(bt, graph, max_len=6)
for pos, ctr in zip(report.modes, report.centers):
    print(f"mode bin {pos}: center {np.round(ctr, 2)}, h={bt.h[pos]:.4f}")

# why the first two modes are kept apart
p = shortest_path_report(bt, graph, report.modes[0], report.modes[1])
print("separated:", p.separated, "threshold", round(p.threshold, 5))
for row in p.rows():
    print(row)

# longer admissible paths can only merge modes
for L in (1, 2, 6, None):
    print(L, len(find_modes(bt, graph, max_len=L)))
