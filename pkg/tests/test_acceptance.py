"""Acceptance criteria, one test each. Every test records a PASS/FAIL line
that is repeated in the terminal summary."""
import math
import time

import numpy as np
import pytest

from betatree import (
    BOUNDING_BOX,
    FULL_SPACE,
    Config,
    beta_cdf,
    beta_quantile,
    build_adjacency,
    build_kdtree,
    extract_betatree,
    extract_betatree_iterative,
    find_modes,
    plan_alphas,
    propagate_gof,
    tree_ci,
)
from betatree.harness import (
    SCENARIO_2D,
    SCENARIO_3D,
    UniformCube,
    bin_count_study,
    coverage_check,
    mode_recovery_study,
    pivot_check,
    replication_rng,
    sample_uniform,
    theorem1_check,
)
from betatree.partition import child_counts
from oracles import brute_force_modes, quad_beta_cdf
from test_modes import make_tree, random_bins

pytestmark = pytest.mark.slow

MODES_2D = [[-1.5, 0.6], [2.0, -1.5]]
MODES_3D = [[-1.5, 0.6, 1.0], [2.0, -1.5, 0.0], [-2.6, -3.0, -2.0]]


def test_01_pivot(criterion):
    cases = [(2, 1, "d=2 k=1"), (2, 7, "d=2 k=7 (depth 3)"), (3, 1, "d=3 k=1")]
    parts = []
    ok = True
    t0 = time.perf_counter()
    for d, k, label in cases:
        res = pivot_check(100, d, k, 2000, seed=101)
        p = res.params
        ok &= res.ks_pvalue >= 0.01
        parts.append(f"{label} Beta({p['beta_a']},{p['beta_b']}) p={res.ks_pvalue:.3f}")
    if cases[0][1] == 1:
        ok &= "Beta(50,51)" in parts[0]
    elapsed = time.perf_counter() - t0
    criterion("1 pivot exactness", ok, "; ".join(parts) + f"; {elapsed:.1f}s")


def test_02_coverage(criterion):
    t0 = time.perf_counter()
    res = coverage_check(UniformCube(2), 1000, 0.1, 1000, seed=202)
    elapsed = time.perf_counter() - t0
    bar = 0.90 - 2 * math.sqrt(0.9 * 0.1 / res.replications)
    criterion("2 simultaneous coverage", res.coverage_rate >= bar,
              f"rate={res.coverage_rate:.3f} over {res.replications} reps, threshold {bar:.3f}; {elapsed:.0f}s")


def test_03_theorem1(criterion):
    tot = {0.5: [0, 0, 0], 0.6: [0, 0, 0]}
    for s in range(20):
        tree = build_kdtree(sample_uniform(2, 10_000, replication_rng(303, s)), Config())
        inf = tree_ci(tree, plan_alphas(tree, 0.1))
        for q in tot:
            r = theorem1_check(tree, q=q, inference=inf)
            tot[q][0] += r.eligible
            tot[q][1] += r.violations
            tot[q][2] += r.grid_violations
    e, v, _ = tot[0.5]
    e6, v6, g6 = tot[0.6]
    # at n=1e4 no node count falls in [log(n)^2, sqrt(n)] = [84.8, 100]; the
    # q=0.6 window is reported alongside so the check is not vacuous
    criterion("3 optimal-width bound", v == 0 and v6 == 0,
              f"q=0.5: {v} violations over {e} eligible nodes; "
              f"q=0.6: {v6} endpoint / {g6} interior violations over {e6} eligible nodes")


def test_04_uniform_parsimony(criterion):
    res = bin_count_study(UniformCube(2), 1000, range(200), Config(alpha=0.1, trim_fraction=0.005))
    counts = np.array(res.bin_count_stats["counts"])
    share = np.mean(counts == 1)
    med = np.median(counts)
    criterion("4 uniform parsimony", share >= 0.8 and med == 1,
              f"single bin in {share:.1%} of 200, median {med:g}, max {counts.max()}")


def test_05_mixture_bin_counts(criterion):
    cfg = Config(root_mode=FULL_SPACE)
    r2 = bin_count_study(SCENARIO_2D, 2000, range(50), cfg)
    r3 = bin_count_study(SCENARIO_3D, 20_000, range(10), cfg)
    med2 = r2.bin_count_stats["median"]
    lo3, hi3 = r3.bin_count_stats["min"], r3.bin_count_stats["max"]
    criterion("5 mixture bin counts", 15 <= med2 <= 45 and lo3 >= 60 and hi3 <= 250,
              f"2-d median {med2:g} (range {r2.bin_count_stats['min']}-{r2.bin_count_stats['max']}); "
              f"3-d range {lo3}-{hi3} over 10 seeds")


def test_06_mode_recovery(criterion):
    cfg = Config(alpha=0.1, root_mode=FULL_SPACE, max_path_length=6)
    r2 = mode_recovery_study(SCENARIO_2D, 2000, range(50), MODES_2D, 1.0, cfg)
    r3 = mode_recovery_study(SCENARIO_3D, 20_000, range(20), MODES_3D, 1.0, cfg)
    criterion("6 mode recovery", r2.success_rate >= 0.8 and r3.success_rate >= 0.7,
              f"2-d {r2.success_rate:.0%} of 50, 3-d {r3.success_rate:.0%} of 20")


def test_07_algorithm_oracle(criterion):
    rng = np.random.default_rng(707)
    mismatches = 0
    for _ in range(500):
        boxes, h, lo, hi = random_bins(rng, int(rng.integers(1, 9)), d=int(rng.integers(1, 4)))
        bt = make_tree(boxes, h, lo, hi)
        g = build_adjacency(bt)
        expect = brute_force_modes(h.tolist(), list(range(len(h))), lo.tolist(), hi.tolist(),
                                   g.matrix.tolist(), None)
        mismatches += find_modes(bt, g, max_len=None).modes != expect
    criterion("7 mode hunting vs brute force", mismatches == 0, f"{mismatches} mismatches in 500 trees")


def test_08_beta_kernel(criterion):
    rng = np.random.default_rng(808)
    m = 1000
    q = rng.uniform(1e-6, 1 - 1e-6, m)
    a = 10 ** rng.uniform(-0.3, 5, m)
    b = 10 ** rng.uniform(-0.3, 5, m)
    x = beta_quantile(q, a, b)
    rt = np.max(np.abs(beta_cdf(x, a, b) - q))
    ref = np.array([quad_beta_cdf(xi, ai, bi) for xi, ai, bi in zip(x, a, b)])
    rel = np.max(np.abs(beta_cdf(x, a, b) - ref) / ref)
    criterion("8 beta kernel accuracy", rt <= 1e-9 and rel <= 1e-8,
              f"max round-trip error {rt:.1e}, max relative error vs quadrature {rel:.1e}")


def test_09_structural_invariants(criterion):
    rng = np.random.default_rng(909)
    bad_counts = bad_extract = bad_budget = 0
    for _ in range(100):
        n = int(rng.integers(50, 5000))
        d = int(rng.integers(1, 5))
        mode = BOUNDING_BOX if rng.random() < 0.5 else FULL_SPACE
        x = rng.standard_normal((n, d)) + (rng.random((n, 1)) < 0.4) * 4
        cfg = Config(root_mode=mode, alpha=float(rng.uniform(0.01, 0.3)))
        tree = build_kdtree(x, cfg)
        internal = np.flatnonzero(~tree.is_leaf)
        for r in internal:
            expect = child_counts(int(tree.count[r]))
            got = (int(tree.count[tree.left[r]]), int(tree.count[tree.right[r]]))
            bad_counts += got != expect or expect[0] != math.ceil(tree.count[r] / 2) - 1
        plan = plan_alphas(tree, cfg.alpha)
        inf = propagate_gof(tree_ci(tree, plan))
        a = [bn.as_tuple() for bn in extract_betatree(inf).bins]
        b = [bn.as_tuple() for bn in extract_betatree_iterative(inf).bins]
        bad_extract += a != b
        if plan.total > cfg.alpha * (1 + 1e-12):
            bad_budget += 1
        if mode == BOUNDING_BOX and np.all(plan.n_bounded[1:] > 0):
            bad_budget += not math.isclose(plan.total, cfg.alpha, rel_tol=1e-12)
    ok = bad_counts == bad_extract == bad_budget == 0
    criterion("9 structural invariants", ok,
              f"child-count failures {bad_counts}, extraction mismatches {bad_extract}, "
              f"budget failures {bad_budget} over 100 datasets")


def _build_with_ci(x, cfg):
    t0 = time.perf_counter()
    tree = build_kdtree(x, cfg)
    tree_ci(tree, plan_alphas(tree, cfg.alpha))
    return time.perf_counter() - t0


def test_10_performance(criterion):
    cfg = Config()
    x = np.random.default_rng(1010).random((1_000_000, 4))
    _build_with_ci(x[:10_000], cfg)
    sizes = [125_000, 250_000, 500_000, 1_000_000]
    times = [min(_build_with_ci(x[:n], cfg) for _ in range(2)) for n in sizes]
    slope = np.polyfit(np.log(sizes), np.log(times), 1)[0]
    big = times[-1]
    criterion("10 performance", big < 10.0 and 0.7 <= slope <= 1.35,
              f"n=1e6 d=4 in {big:.2f}s; log-log slope {slope:.2f} over n={sizes[0]}..{sizes[-1]}")
