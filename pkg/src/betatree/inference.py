"""Simultaneous confidence bounds, goodness-of-fit pruning and extraction.

Every node of a :class:`~betatree.partition.KdTree` has a deterministic
count ``n_k``, and the probability content ``F(R_k)`` is Beta(n_k+1, n-n_k)
distributed. Splitting ``alpha`` over depths with harmonic weights makes the
per-node intervals simultaneous; a bounded node passes the goodness-of-fit
test when its empirical density lies inside every interval of its subtree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .beta_math import beta_quantile
from .errors import UnboundedRect
from .partition import BOUNDING_BOX, Config, KdNode, KdTree, Rect, build_kdtree, validate_and_prepare

__all__ = [
    "DepthPlan",
    "NodeInference",
    "TreeInference",
    "Bin",
    "BetaTree",
    "plan_alphas",
    "prob_interval",
    "node_ci",
    "tree_ci",
    "propagate_gof",
    "extract_betatree",
    "extract_betatree_iterative",
    "fit",
]


@dataclass(frozen=True)
class DepthPlan:
    """Per-depth significance levels.

    ``n_bounded[D]`` counts bounded nodes at depth ``D``; each of them is
    tested at level ``alpha_per_depth[D]``.
    """

    d_max: int
    n_bounded: np.ndarray
    alpha_per_depth: np.ndarray
    alpha: float

    @property
    def total(self) -> float:
        """Bonferroni budget actually spent, ``sum_D N_D * alpha_D``."""
        return float(np.sum(self.n_bounded * self.alpha_per_depth))


def plan_alphas(tree: KdTree, alpha: float) -> DepthPlan:
    """Harmonically weighted multiscale Bonferroni levels.

    With a bounding box, depth ``D >= 1`` gets
    ``alpha / (N_D (D_max - D + 2) sum_{B=2}^{D_max+1} 1/B)`` and the root
    gets 0. Without one, bounded rectangles first appear at depth ``2d``;
    depths below get 0 and the harmonic sum runs to ``D_max - 2d + 2``.
    ``N_D`` is counted on the realized tree, so depths where every node
    stopped early simply receive nothing.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    d_max = tree.depth_max
    n_bounded = np.bincount(tree.depth[tree.bounded], minlength=d_max + 1)[: d_max + 1]
    alphas = np.zeros(d_max + 1)
    if tree.root_mode == BOUNDING_BOX:
        first, top = 1, d_max + 1
    else:
        first, top = 2 * tree.d, d_max - 2 * tree.d + 2
    if top >= 2:
        harmonic = sum(1.0 / B for B in range(2, top + 1))
        for D in range(first, d_max + 1):
            if n_bounded[D] > 0:
                alphas[D] = alpha / (n_bounded[D] * (d_max - D + 2) * harmonic)
    return DepthPlan(d_max=d_max, n_bounded=n_bounded, alpha_per_depth=alphas, alpha=alpha)


_QCACHE: dict = {}


def prob_interval(n_k, n, alpha_d):
    """Exact interval for ``F(R_k)``: Beta(n_k+1, n-n_k) quantiles at
    ``alpha_d/2`` and ``1 - alpha_d/2``. Vectorized; ``alpha_d = 0`` gives
    ``(0, 1)``."""
    n_k = np.atleast_1d(np.asarray(n_k, dtype=np.int64))
    alpha_d = np.broadcast_to(np.asarray(alpha_d, dtype=float), n_k.shape)
    keys = np.stack([n_k.astype(float), alpha_d], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    lo = np.empty(len(uniq))
    hi = np.empty(len(uniq))
    todo = []
    for j, (c, a) in enumerate(uniq):
        key = (int(n), int(c), float(a))
        if key in _QCACHE:
            lo[j], hi[j] = _QCACHE[key]
        else:
            todo.append(j)
    for j in list(todo):
        if uniq[j, 1] == 0.0:
            lo[j], hi[j] = 0.0, 1.0
            todo.remove(j)
    if todo:
        t = np.asarray(todo)
        c = uniq[t, 0]
        a = uniq[t, 1]
        shape_a = c + 1.0
        shape_b = n - c
        qlo = beta_quantile(a / 2.0, shape_a, shape_b)
        qhi = beta_quantile(1.0 - a / 2.0, shape_a, shape_b)
        lo[t], hi[t] = qlo, qhi
        if len(_QCACHE) > 200_000:
            _QCACHE.clear()
        for j, l, h in zip(t, qlo, qhi):
            _QCACHE[(int(n), int(uniq[j, 0]), float(uniq[j, 1]))] = (float(l), float(h))
    return lo[inv], hi[inv]


@dataclass(frozen=True)
class NodeInference:
    """Confidence quantities attached to one node.

    ``lower``/``upper`` bound the average density ``f(R_k)``; the ``tilde``
    pair is their intersection over the subtree. ``fn`` is ``(n_k+1)/n`` and
    ``h`` is ``fn / |R_k|``.
    """

    prob_ci: tuple
    lower: float
    upper: float
    h: float
    fn: float
    tilde_lower: float = float("nan")
    tilde_upper: float = float("nan")

    @property
    def passes(self) -> bool:
        return self.tilde_lower <= self.h <= self.tilde_upper


def node_ci(node: KdNode, alpha_d: float, n: int) -> NodeInference:
    """Interval for ``F(R_k)`` and the implied density bounds for one node.

    Raises
    ------
    UnboundedRect
        If the node's rectangle is unbounded.
    """
    vol = node.rect.volume()
    if vol is None:
        raise UnboundedRect(f"node {node.index} is unbounded; no density bound exists")
    if not 0.0 <= alpha_d < 1.0:
        raise ValueError("alpha_d must lie in [0, 1)")
    lo, hi = prob_interval(node.count, n, alpha_d)
    fn = (node.count + 1) / n
    return NodeInference(
        prob_ci=(float(lo[0]), float(hi[0])),
        lower=float(lo[0]) / vol,
        upper=float(hi[0]) / vol,
        h=fn / vol,
        fn=fn,
    )


class TreeInference:
    """Per-node confidence arrays aligned with the rows of a KdTree.

    Unbounded nodes carry the vacuous density interval ``(-inf, inf)`` and
    ``h = nan``; their ``prob_lo``/``prob_hi`` are still valid for
    ``F(R_k)``.
    """

    def __init__(self, tree: KdTree, plan: DepthPlan, alpha_node, prob_lo, prob_hi,
                 lower, upper, h, fn):
        self.tree = tree
        self.plan = plan
        self.alpha_node = alpha_node
        self.prob_lo = prob_lo
        self.prob_hi = prob_hi
        self.lower = lower
        self.upper = upper
        self.h = h
        self.fn = fn
        self.tilde_lower = None
        self.tilde_upper = None

    @property
    def passes(self) -> np.ndarray:
        """Bounded nodes whose ``h`` lies in their tilde interval."""
        if self.tilde_lower is None:
            raise RuntimeError("call propagate_gof first")
        with np.errstate(invalid="ignore"):
            return self.tree.bounded & (self.tilde_lower <= self.h) & (self.h <= self.tilde_upper)

    def node(self, k: int) -> NodeInference:
        i = self.tree.position(k)
        tl = np.nan if self.tilde_lower is None else float(self.tilde_lower[i])
        tu = np.nan if self.tilde_upper is None else float(self.tilde_upper[i])
        return NodeInference(
            prob_ci=(float(self.prob_lo[i]), float(self.prob_hi[i])),
            lower=float(self.lower[i]),
            upper=float(self.upper[i]),
            h=float(self.h[i]),
            fn=float(self.fn[i]),
            tilde_lower=tl,
            tilde_upper=tu,
        )


def tree_ci(tree: KdTree, plan: DepthPlan) -> TreeInference:
    """Apply :func:`node_ci` to every node at its depth's level."""
    alpha_node = plan.alpha_per_depth[tree.depth]
    prob_lo, prob_hi = prob_interval(tree.count, tree.n, alpha_node)
    vol = tree.volumes()
    bounded = tree.bounded
    fn = (tree.count + 1.0) / tree.n
    with np.errstate(invalid="ignore"):
        lower = np.where(bounded, prob_lo / vol, -np.inf)
        upper = np.where(bounded, prob_hi / vol, np.inf)
        h = np.where(bounded, fn / vol, np.nan)
    return TreeInference(tree, plan, alpha_node, prob_lo, prob_hi, lower, upper, h, fn)


def propagate_gof(inf: TreeInference) -> TreeInference:
    """Fill the tilde bounds bottom-up.

    ``tilde_lower`` of a node is the max of its own lower bound and its
    children's tilde lowers (min for the upper side). An empty result
    (``tilde_lower > tilde_upper``) is kept as is: the test fails there.
    """
    tree = inf.tree
    tl = inf.lower.copy()
    tu = inf.upper.copy()
    internal = ~tree.is_leaf
    for D in range(tree.depth_max - 1, -1, -1):
        rows = np.flatnonzero((tree.depth == D) & internal)
        if rows.size == 0:
            continue
        lc = tree.left[rows]
        rc = tree.right[rows]
        tl[rows] = np.maximum(tl[rows], np.maximum(tl[lc], tl[rc]))
        tu[rows] = np.minimum(tu[rows], np.minimum(tu[lc], tu[rc]))
    inf.tilde_lower = tl
    inf.tilde_upper = tu
    return inf


@dataclass(frozen=True)
class Bin:
    """One rectangle of the Beta-tree histogram."""

    index: int
    rect: Rect
    h: float
    lower: float
    upper: float
    depth: int
    count: int

    def as_tuple(self):
        return (self.index, tuple(self.rect.lower), tuple(self.rect.upper), self.h,
                self.lower, self.upper, self.depth, self.count)


@dataclass
class BetaTree:
    """Maximal bounded k-d tree rectangles passing the goodness-of-fit test.

    ``bins`` is sorted by heap index. An empty ``bins`` list means no
    bounded node passed.
    """

    bins: list
    alpha: float
    source: Optional[KdTree] = None
    inference: Optional[TreeInference] = field(default=None, repr=False)

    def __len__(self):
        return len(self.bins)

    @property
    def empty(self) -> bool:
        return not self.bins

    @property
    def d(self) -> int:
        return self.bins[0].rect.d if self.bins else (self.source.d if self.source else 0)

    @property
    def lowers(self) -> np.ndarray:
        return np.array([b.rect.lower for b in self.bins]).reshape(len(self.bins), -1)

    @property
    def uppers(self) -> np.ndarray:
        return np.array([b.rect.upper for b in self.bins]).reshape(len(self.bins), -1)

    @property
    def h(self) -> np.ndarray:
        return np.array([b.h for b in self.bins], dtype=float)

    @property
    def f_lower(self) -> np.ndarray:
        return np.array([b.lower for b in self.bins], dtype=float)

    @property
    def f_upper(self) -> np.ndarray:
        return np.array([b.upper for b in self.bins], dtype=float)

    def density(self, points) -> np.ndarray:
        """Histogram height at each point; 0 outside all bins and on edges."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(x.shape[0])
        for b in self.bins:
            out[b.rect.contains(x)] = b.h
        return out


def _make_bin(inf: TreeInference, row: int) -> Bin:
    tree = inf.tree
    return Bin(
        index=int(tree.index[row]),
        rect=Rect(tree.lower[row].copy(), tree.upper[row].copy()),
        h=float(inf.h[row]),
        lower=float(inf.lower[row]),
        upper=float(inf.upper[row]),
        depth=int(tree.depth[row]),
        count=int(tree.count[row]),
    )


def extract_betatree(inf: TreeInference) -> BetaTree:
    """Maximal passing rectangles, found by recursive descent from the root."""
    tree = inf.tree
    passes = inf.passes
    rows = []

    def visit(row):
        if passes[row]:
            rows.append(row)
        elif tree.left[row] >= 0:
            visit(tree.left[row])
            visit(tree.right[row])

    visit(0)
    rows.sort(key=lambda r: tree.index[r])
    return BetaTree([_make_bin(inf, r) for r in rows], inf.plan.alpha, tree, inf)


def extract_betatree_iterative(inf: TreeInference) -> BetaTree:
    """Same result as :func:`extract_betatree`, level by level.

    Each accepted node deletes its subtree from the remaining levels.
    """
    tree = inf.tree
    passes = inf.passes
    deleted = np.zeros(len(tree), dtype=bool)
    rows = []
    for D in range(tree.depth_max + 1):
        for row in np.flatnonzero(tree.depth == D):
            if deleted[row]:
                if tree.left[row] >= 0:
                    deleted[tree.left[row]] = deleted[tree.right[row]] = True
                continue
            if passes[row]:
                rows.append(int(row))
                if tree.left[row] >= 0:
                    deleted[tree.left[row]] = deleted[tree.right[row]] = True
    rows.sort(key=lambda r: tree.index[r])
    return BetaTree([_make_bin(inf, r) for r in rows], inf.plan.alpha, tree, inf)


def fit(data, config: Optional[Config] = None) -> BetaTree:
    """Prepare data, grow the k-d tree, attach intervals and prune."""
    cfg = config or Config()
    x = validate_and_prepare(data, cfg)
    tree = build_kdtree(x, cfg)
    plan = plan_alphas(tree, cfg.alpha)
    inf = propagate_gof(tree_ci(tree, plan))
    return extract_betatree(inf)
