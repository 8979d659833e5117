import numpy as np
import pytest

from betatree import (
    FULL_SPACE,
    Config,
    Disconnected,
    EmptyResult,
    build_adjacency,
    find_modes,
    fit,
    shortest_path_report,
)
from betatree.harness import SCENARIO_2D, sample_mixture
from betatree.inference import BetaTree, Bin
from betatree.partition import Rect
from oracles import brute_force_modes, closed_boxes_touch


def make_tree(boxes, h, lower=None, upper=None):
    h = np.asarray(h, float)
    lower = h * 0.9 if lower is None else np.asarray(lower, float)
    upper = h * 1.1 if upper is None else np.asarray(upper, float)
    bins = [Bin(index=i, rect=Rect(np.asarray(lo, float), np.asarray(hi, float)), h=float(h[i]),
                lower=float(lower[i]), upper=float(upper[i]), depth=1, count=10)
            for i, (lo, hi) in enumerate(boxes)]
    return BetaTree(bins=bins, alpha=0.1)


def random_bins(rng, k, d=2):
    """Guillotine partition of the unit cube into k boxes, some dropped."""
    boxes = [(np.zeros(d), np.ones(d))]
    while len(boxes) < k:
        lo, hi = boxes.pop(int(rng.integers(len(boxes))))
        ax = int(rng.integers(d))
        cut = rng.uniform(lo[ax], hi[ax])
        a_hi, b_lo = hi.copy(), lo.copy()
        a_hi[ax] = cut
        b_lo[ax] = cut
        boxes += [(lo, a_hi), (b_lo, hi)]
    keep = rng.random(len(boxes)) < 0.85
    keep[0] = True
    boxes = [b for b, kp in zip(boxes, keep) if kp]
    h = rng.choice([1.0, 2.0, 3.0, 5.0], len(boxes)) + rng.random(len(boxes)) * rng.integers(0, 2)
    width = rng.uniform(0.0, 0.8, len(boxes)) * h
    return boxes, h, h - width, h + width


class TestAdjacency:
    def test_shared_face(self):
        g = build_adjacency(make_tree([([0, 0], [1, 1]), ([1, 0], [2, 1])], [1, 2]))
        assert g.matrix[0, 1] and g.matrix[1, 0]

    def test_gap(self):
        g = build_adjacency(make_tree([([0, 0], [1, 1]), ([1.5, 0], [2, 1])], [1, 2]))
        assert not g.matrix.any()

    def test_corner(self):
        g = build_adjacency(make_tree([([0, 0], [1, 1]), ([1, 1], [2, 2])], [1, 2]))
        assert g.edges() == [(0, 1)]

    def test_matches_oracle(self, rng):
        for _ in range(30):
            boxes, h, lo, hi = random_bins(rng, 8, d=3)
            g = build_adjacency(make_tree(boxes, h, lo, hi))
            for i in range(len(boxes)):
                for j in range(len(boxes)):
                    expect = i != j and closed_boxes_touch(*boxes[i], *boxes[j])
                    assert g.matrix[i, j] == expect

    def test_order(self):
        g = build_adjacency(make_tree([([0], [1]), ([1], [2]), ([2], [3])], [2, 5, 2]))
        assert g.order.tolist() == [1, 0, 2]

    def test_empty(self):
        with pytest.raises(EmptyResult):
            build_adjacency(BetaTree(bins=[], alpha=0.1))


class TestFindModes:
    def test_single_bin(self):
        rep = find_modes(make_tree([([0, 0], [1, 1])], [1.0]))
        assert rep.modes == [0]
        assert rep.witness == {}

    def test_valley_separates(self):
        boxes = [([0], [1]), ([1], [2]), ([2], [3])]
        rep = find_modes(make_tree(boxes, [5, 1, 4], [4.5, 0.5, 3.5], [5.5, 1.5, 4.5]))
        assert rep.modes == [0, 2]

    def test_overlapping_valley_merges(self):
        boxes = [([0], [1]), ([1], [2]), ([2], [3])]
        rep = find_modes(make_tree(boxes, [5, 3, 4], [4.5, 2, 3.5], [5.5, 3.6, 4.5]))
        assert rep.modes == [0]
        assert rep.witness[2] == {"mode": 0, "path": [2, 1, 0]}

    def test_disconnected_bins_are_modes(self):
        boxes = [([0], [1]), ([2], [3])]
        assert find_modes(make_tree(boxes, [2, 1])).modes == [0, 1]

    def test_path_cap(self):
        boxes = [([float(i)], [float(i + 1)]) for i in range(5)]
        h = [5, 3, 3, 3, 4]
        lo = [4.5, 2, 2, 2, 3.5]
        hi = [5.5, 4, 4, 4, 4.5]
        bt = make_tree(boxes, h, lo, hi)
        assert find_modes(bt, max_len=None).modes == [0]
        assert find_modes(bt, max_len=4).modes == [0]
        assert find_modes(bt, max_len=3).modes == [0, 4]

    def test_brute_force_equivalence(self, rng):
        for _ in range(200):
            boxes, h, lo, hi = random_bins(rng, int(rng.integers(1, 9)))
            bt = make_tree(boxes, h, lo, hi)
            g = build_adjacency(bt)
            adj = g.matrix.tolist()
            for cap in (None, 1, 2, 4):
                expect = brute_force_modes(h.tolist(), list(range(len(h))), lo.tolist(), hi.tolist(), adj, cap)
                assert find_modes(bt, g, max_len=cap).modes == expect

    def test_witness_paths_valid(self, rng):
        for _ in range(50):
            boxes, h, lo, hi = random_bins(rng, 8)
            bt = make_tree(boxes, h, lo, hi)
            g = build_adjacency(bt)
            rep = find_modes(bt, g, max_len=None)
            for i, w in rep.witness.items():
                path = w["path"]
                assert path[0] == i and path[-1] == w["mode"]
                assert all(g.matrix[a, b] for a, b in zip(path, path[1:]))
                thr = min(lo[w["mode"]], lo[i])
                assert all(hi[r] >= thr for r in path[1:-1])

    def test_monotone_in_cap(self, rng):
        for _ in range(50):
            boxes, h, lo, hi = random_bins(rng, 8)
            bt = make_tree(boxes, h, lo, hi)
            counts = [len(find_modes(bt, max_len=L)) for L in (1, 2, 3, 6, None)]
            assert counts == sorted(counts, reverse=True)

    def test_scale_invariance(self):
        x = sample_mixture(SCENARIO_2D, 3000, 11)
        cfg = Config(root_mode=FULL_SPACE)
        a = find_modes(fit(x, cfg))
        b = find_modes(fit(x * 1000.0, cfg))
        assert a.modes == b.modes
        assert a.node_index == b.node_index

    def test_deterministic(self):
        x = sample_mixture(SCENARIO_2D, 2000, 3)
        cfg = Config(root_mode=FULL_SPACE)
        a, b = find_modes(fit(x, cfg)), find_modes(fit(x, cfg))
        assert a.modes == b.modes and a.witness == b.witness

    def test_invalid_cap(self):
        with pytest.raises(ValueError):
            find_modes(make_tree([([0], [1])], [1.0]), max_len=0)


class TestPathReport:
    def test_neighbors(self):
        bt = make_tree([([0], [1]), ([1], [2])], [2, 1])
        rep = shortest_path_report(bt, build_adjacency(bt), 0, 1)
        assert rep.path == [0, 1]
        assert not rep.separated
        assert len(rep.rows()) == 2

    def test_separated_flag(self):
        boxes = [([0], [1]), ([1], [2]), ([2], [3])]
        bt = make_tree(boxes, [5, 1, 4], [4.5, 0.5, 3.5], [5.5, 1.5, 4.5])
        rep = shortest_path_report(bt, build_adjacency(bt), 0, 2)
        assert rep.path == [0, 1, 2]
        assert rep.threshold == 3.5
        assert rep.separated

    def test_disconnected(self):
        bt = make_tree([([0], [1]), ([2], [3])], [2, 1])
        with pytest.raises(Disconnected):
            shortest_path_report(bt, build_adjacency(bt), 0, 1)
