"""Median-split k-d tree used as the scaffold for Beta-tree histograms.

Node ``k`` is the rectangle ``R_k``; its children are ``2k+1`` (points
strictly below the split value) and ``2k+2`` (strictly above). The point that
defines the split lies on the hyperplane and belongs to neither child, so a
node holding ``n_k`` points has children with ``ceil(n_k/2) - 1`` and
``n_k - ceil(n_k/2)`` points whatever the data look like.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import NonFiniteValue, TiesDetected, TooFewPoints

__all__ = [
    "BOUNDING_BOX",
    "FULL_SPACE",
    "Config",
    "Rect",
    "KdNode",
    "KdTree",
    "validate_and_prepare",
    "bounding_box",
    "build_kdtree",
    "node_volume",
    "child_counts",
]

BOUNDING_BOX = "bounding_box"
FULL_SPACE = "full_space"
_ROOT_MODES = (BOUNDING_BOX, FULL_SPACE)
_JITTER_SCALE = 1e-9


@dataclass
class Config:
    """Construction and inference settings.

    ``trim_fraction``, when given, overrides ``trim_count`` with
    ``ceil(trim_fraction * n)`` observations per tail and coordinate.
    """

    alpha: float = 0.1
    stop_threshold_factor: float = 4.0
    trim_count: int = 1
    trim_fraction: Optional[float] = None
    root_mode: str = BOUNDING_BOX
    max_path_length: int = 6
    jitter: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.stop_threshold_factor > 0:
            raise ValueError("stop_threshold_factor must be positive")
        if int(self.trim_count) != self.trim_count or self.trim_count < 1:
            raise ValueError("trim_count must be an integer >= 1")
        if self.trim_fraction is not None and not 0.0 < self.trim_fraction < 0.5:
            raise ValueError("trim_fraction must lie in (0, 0.5)")
        if self.root_mode not in _ROOT_MODES:
            raise ValueError(f"root_mode must be one of {_ROOT_MODES}")
        if int(self.max_path_length) != self.max_path_length or self.max_path_length < 1:
            raise ValueError("max_path_length must be an integer >= 1")

    def effective_trim_count(self, n: int) -> int:
        if self.trim_fraction is not None:
            return max(1, math.ceil(self.trim_fraction * n))
        return int(self.trim_count)

    def stop_threshold(self, n: int) -> float:
        """Nodes with fewer points than this are leaves (natural log)."""
        return self.stop_threshold_factor * math.log(n) if n > 1 else 0.0


@dataclass(frozen=True)
class Rect:
    """Axis-aligned open rectangle; bounds may be infinite."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if np.any(~(lo < hi)):
            raise ValueError("each lower bound must be below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def volume(self) -> Optional[float]:
        """Product of side lengths, or ``None`` when any side is infinite."""
        if not self.bounded:
            return None
        return float(np.prod(self.upper - self.lower))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, points) -> np.ndarray:
        """Mask of points strictly inside the rectangle."""
        x = np.atleast_2d(points)
        return np.all((x > self.lower) & (x < self.upper), axis=1)

    def __eq__(self, other):
        if not isinstance(other, Rect):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


@dataclass(frozen=True)
class KdNode:
    """Read-only view of one node of a :class:`KdTree`."""

    index: int
    rect: Rect
    depth: int
    count: int
    split_axis: Optional[int]
    split_value: Optional[float]
    is_leaf: bool

    @property
    def left(self) -> int:
        return 2 * self.index + 1

    @property
    def right(self) -> int:
        return 2 * self.index + 2


def child_counts(n_k: int) -> tuple[int, int]:
    """Counts of the two children of a node holding ``n_k`` points."""
    half = -(-n_k // 2)
    return half - 1, n_k - half


def node_volume(node) -> Optional[float]:
    """Volume of a node's (or rectangle's) box; ``None`` if unbounded."""
    rect = node.rect if isinstance(node, KdNode) else node
    return rect.volume()


def _as_matrix(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("data must be a nonempty n x d matrix")
    return x


def _tied_columns(x: np.ndarray) -> np.ndarray:
    s = np.sort(x, axis=0)
    return np.any(np.diff(s, axis=0) == 0, axis=0)


def validate_and_prepare(data, cfg: Optional[Config] = None) -> np.ndarray:
    """Check finiteness and per-coordinate distinctness.

    With ``cfg.jitter`` set, coordinates that contain ties receive seeded
    uniform noise of half-width ``1e-9`` times the coordinate range (or the
    largest absolute value when the range is zero).

    Raises
    ------
    NonFiniteValue
        If any entry is NaN or infinite.
    TiesDetected
        If a coordinate has duplicates and jitter is off.
    """
    cfg = cfg or Config()
    x = _as_matrix(data)
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))[0]
        raise NonFiniteValue(f"non-finite value at row {bad[0]}, column {bad[1]}")
    tied = _tied_columns(x)
    if not tied.any():
        return x
    if not cfg.jitter:
        cols = ", ".join(str(p) for p in np.flatnonzero(tied))
        raise TiesDetected(f"duplicate values in coordinate(s) {cols}; enable jitter to break ties")
    x = x.copy()
    rng = np.random.default_rng(cfg.seed)
    for _ in range(8):
        for p in np.flatnonzero(tied):
            col = x[:, p]
            scale = np.ptp(col)
            if scale == 0:
                scale = max(np.max(np.abs(col)), 1.0)
            x[:, p] = col + rng.uniform(-1.0, 1.0, size=col.size) * _JITTER_SCALE * scale
        tied = _tied_columns(x)
        if not tied.any():
            return x
    raise TiesDetected("jitter failed to separate tied values; the noise is below float resolution")


def _trim_bounds(x: np.ndarray, trim_count: int):
    n, d = x.shape
    keep = np.arange(n)
    lower = np.empty(d)
    upper = np.empty(d)
    t = int(trim_count)
    for p in range(d):
        v = x[keep, p]
        m = v.size
        if m - 2 * t < 1:
            raise TooFewPoints(
                f"trimming {t} points per tail in coordinate {p} leaves no observations"
            )
        part = np.partition(v, [t - 1, m - t])
        lower[p] = part[t - 1]
        upper[p] = part[m - t]
        keep = keep[(v > lower[p]) & (v < upper[p])]
        if keep.size == 0:
            raise TooFewPoints(f"no observations left after trimming coordinate {p}")
    return Rect(lower, upper), keep


def bounding_box(data, trim_count: int = 1) -> tuple[Rect, np.ndarray]:
    """Bounding box from sequential order-statistic trimming.

    Coordinates are processed in order; in each, the ``trim_count`` smallest
    and largest values among the survivors so far are discarded and the
    innermost discarded values become the box bounds. Points lying on a bound
    are excluded.

    Returns
    -------
    rect : Rect
    inside : ndarray
        Observations strictly inside ``rect``, in input order.
    """
    x = _as_matrix(data)
    rect, keep = _trim_bounds(x, trim_count)
    return rect, x[keep]


class KdTree:
    """Flat node store for a median-split k-d tree.

    Nodes are kept in breadth-first order, with nodes at equal depth sorted
    by heap index. ``position(k)`` maps a heap index to its row in the
    per-node arrays (``index``, ``depth``, ``count``, ``lower``, ``upper``,
    ``split_axis``, ``split_value``, ``left``, ``right``). Child rows are
    ``-1`` for leaves; ``split_axis`` is 0-based and ``-1`` for leaves.
    """

    def __init__(self, *, n, d, root_mode, points, trimmed, index, depth, count,
                 lower, upper, split_axis, split_value, left, right, config):
        self.n = int(n)
        self.d = int(d)
        self.root_mode = root_mode
        self.points = points
        self.trimmed = trimmed
        self.index = index
        self.depth = depth
        self.count = count
        self.lower = lower
        self.upper = upper
        self.split_axis = split_axis
        self.split_value = split_value
        self.left = left
        self.right = right
        self.config = config
        self._pos = {int(k): i for i, k in enumerate(index)}
        for arr in (index, depth, count, lower, upper, split_axis, split_value, left, right):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.index.size

    def __repr__(self):
        return (f"KdTree(n={self.n}, d={self.d}, root_mode={self.root_mode!r}, "
                f"nodes={len(self)}, depth_max={self.depth_max})")

    @property
    def n0(self) -> int:
        return int(self.count[0])

    @property
    def depth_max(self) -> int:
        return int(self.depth.max())

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left < 0

    @property
    def bounded(self) -> np.ndarray:
        return np.all(np.isfinite(self.lower) & np.isfinite(self.upper), axis=1)

    def volumes(self) -> np.ndarray:
        """Per-node volume; ``nan`` for unbounded nodes."""
        with np.errstate(invalid="ignore"):
            v = np.prod(self.upper - self.lower, axis=1)
        return np.where(self.bounded, v, np.nan)

    def position(self, k: int) -> int:
        return self._pos[int(k)]

    def __contains__(self, k) -> bool:
        return int(k) in self._pos

    def node(self, k: int) -> KdNode:
        i = self._pos[int(k)]
        leaf = self.left[i] < 0
        return KdNode(
            index=int(self.index[i]),
            rect=Rect(self.lower[i].copy(), self.upper[i].copy()),
            depth=int(self.depth[i]),
            count=int(self.count[i]),
            split_axis=None if leaf else int(self.split_axis[i]),
            split_value=None if leaf else float(self.split_value[i]),
            is_leaf=bool(leaf),
        )

    def nodes(self) -> Iterator[KdNode]:
        for k in self.index:
            yield self.node(k)

    def postorder(self) -> np.ndarray:
        """Row positions with every child before its parent."""
        return np.arange(len(self))[::-1]


def build_kdtree(data, cfg: Optional[Config] = None) -> KdTree:
    """Grow the k-d tree on prepared data.

    The split of a node at depth ``D`` uses coordinate ``D mod d`` (0-based)
    and the ``ceil(n_k/2)``-th order statistic of that coordinate among the
    node's points, found by selection rather than sorting. A node with fewer
    than ``cfg.stop_threshold(n)`` points, or with none, is a leaf.
    """
    cfg = cfg or Config()
    x = _as_matrix(data)
    n, d = x.shape
    if cfg.root_mode == BOUNDING_BOX:
        root, keep = _trim_bounds(x, cfg.effective_trim_count(n))
        mask = np.zeros(n, dtype=bool)
        mask[keep] = True
        points, trimmed = x[keep], x[~mask]
        lo0, hi0 = root.lower, root.upper
    else:
        points, trimmed = x, x[:0]
        lo0, hi0 = np.full(d, -np.inf), np.full(d, np.inf)
    threshold = max(cfg.stop_threshold(n), 1.0)
    cols = [np.ascontiguousarray(points[:, p]) for p in range(d)]
    perm = np.arange(points.shape[0])

    index, depth, count = [0], [0], [points.shape[0]]
    lowers, uppers = [lo0.copy()], [hi0.copy()]
    axes, values, lefts, rights = [], [], [], []
    # (row, start, end) segments of perm for the nodes of the current level
    level = [(0, 0, points.shape[0])]
    D = 0
    while level:
        nxt = []
        p = D % d
        col = cols[p]
        for row, s, e in level:
            n_k = e - s
            if n_k < threshold:
                axes.append(-1)
                values.append(np.nan)
                lefts.append(-1)
                rights.append(-1)
                continue
            m = -(-n_k // 2) - 1
            seg = perm[s:e]
            order = np.argpartition(col[seg], m)
            seg = seg[order]
            perm[s:e] = seg
            split = col[seg[m]]
            k = index[row]
            axes.append(p)
            values.append(split)
            for child, cs, ce, side in ((2 * k + 1, s, s + m, 0), (2 * k + 2, s + m + 1, e, 1)):
                lo = lowers[row].copy()
                hi = uppers[row].copy()
                if side == 0:
                    hi[p] = split
                else:
                    lo[p] = split
                pos = len(index)
                index.append(child)
                depth.append(D + 1)
                count.append(ce - cs)
                lowers.append(lo)
                uppers.append(hi)
                nxt.append((pos, cs, ce))
                (lefts if side == 0 else rights).append(pos)
        level = nxt
        D += 1

    return KdTree(
        n=n,
        d=d,
        root_mode=cfg.root_mode,
        points=points,
        trimmed=trimmed,
        index=np.asarray(index, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
        count=np.asarray(count, dtype=np.int64),
        lower=np.asarray(lowers, dtype=float).reshape(-1, d),
        upper=np.asarray(uppers, dtype=float).reshape(-1, d),
        split_axis=np.asarray(axes, dtype=np.int64),
        split_value=np.asarray(values, dtype=float),
        left=np.asarray(lefts, dtype=np.int64),
        right=np.asarray(rights, dtype=np.int64),
        config=cfg,
    )
