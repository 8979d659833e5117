"""Mode hunting over the adjacency graph of a Beta-tree.

Bins are visited in descending empirical density. A bin becomes a new mode
unless some already-tagged mode ``m`` is reachable by a path on which no
interior bin ``R`` has ``f_U(R) < min(f_L(m), f_L(bin))``, i.e. no bin is
confidently below both endpoints.

Such a path exists exactly when ``m`` is reachable from the candidate through
the subgraph of non-blocking bins, and the shortest one is simple. A
breadth-first search therefore answers the "every path" question exactly,
including the cap on path length, without enumerating paths.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import Disconnected, EmptyResult
from .inference import BetaTree

__all__ = [
    "AdjacencyGraph",
    "ModeReport",
    "PathReport",
    "build_adjacency",
    "find_modes",
    "shortest_path_report",
]

DEFAULT_MAX_PATH_LENGTH = 6


@dataclass(frozen=True)
class AdjacencyGraph:
    """Closed-box adjacency between bins.

    ``matrix[i, j]`` refers to positions in ``BetaTree.bins``. ``order`` lists
    bin positions by descending ``h``, ties broken by ascending node index.
    """

    matrix: np.ndarray
    order: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.matrix.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.matrix[i])

    def edges(self) -> list:
        i, j = np.nonzero(np.triu(self.matrix, 1))
        return list(zip(i.tolist(), j.tolist()))


@dataclass
class ModeReport:
    """Output of :func:`find_modes`.

    ``modes`` holds bin positions in the order they were tagged (descending
    ``h``). ``witness`` maps every rejected bin to the mode it was merged
    with and the connecting path that has no separating bin.
    """

    modes: list
    witness: dict
    max_path_length: Optional[int]
    node_index: list = field(default_factory=list)
    centers: list = field(default_factory=list)

    def __len__(self):
        return len(self.modes)


def _density_order(h, index):
    return np.lexsort((np.asarray(index), -np.asarray(h)))


def build_adjacency(bt: BetaTree) -> AdjacencyGraph:
    """Two bins are adjacent when their closed intervals meet in every
    coordinate; shared faces, edges and corners all count."""
    if bt.empty:
        raise EmptyResult("Beta-tree has no bins")
    lo, hi = bt.lowers, bt.uppers
    touch = np.all(
        (lo[:, None, :] <= hi[None, :, :]) & (lo[None, :, :] <= hi[:, None, :]), axis=2
    )
    np.fill_diagonal(touch, False)
    order = _density_order(bt.h, [b.index for b in bt.bins])
    return AdjacencyGraph(matrix=touch, order=order)


def _unblocked_path(graph, start, target, allowed, max_len):
    """Shortest path start -> target whose interior vertices are all allowed."""
    if max_len is not None and max_len < 1:
        return None
    prev = {start: None}
    frontier = deque([(start, 0)])
    while frontier:
        v, dist = frontier.popleft()
        if max_len is not None and dist >= max_len:
            continue
        for w in graph.neighbors(v):
            w = int(w)
            if w in prev:
                continue
            if w == target:
                path = [w, v]
                while prev[v] is not None:
                    v = prev[v]
                    path.append(v)
                return path[::-1]
            if allowed[w]:
                prev[w] = v
                frontier.append((w, dist + 1))
    return None


def find_modes(bt: BetaTree, graph: Optional[AdjacencyGraph] = None,
               max_len: Optional[int] = DEFAULT_MAX_PATH_LENGTH) -> ModeReport:
    """Tag modal bins.

    Parameters
    ----------
    bt : BetaTree
    graph : AdjacencyGraph, optional
        Built from ``bt`` when omitted.
    max_len : int or None
        Longest path considered, counted in edges. ``None`` considers paths
        of any length.
    """
    if graph is None:
        graph = build_adjacency(bt)
    if max_len is not None and max_len < 1:
        raise ValueError("max_len must be >= 1 or None")
    f_lo = bt.f_lower
    f_hi = bt.f_upper
    order = [int(i) for i in graph.order]
    modes = [order[0]]
    witness = {}
    for i in order[1:]:
        for m in modes:
            threshold = min(f_lo[m], f_lo[i])
            allowed = f_hi >= threshold
            path = _unblocked_path(graph, i, m, allowed, max_len)
            if path is not None:
                witness[i] = {"mode": m, "path": path}
                break
        else:
            modes.append(i)
    return ModeReport(
        modes=modes,
        witness=witness,
        max_path_length=max_len,
        node_index=[bt.bins[m].index for m in modes],
        centers=[bt.bins[m].rect.center() for m in modes],
    )


@dataclass
class PathReport:
    """Confidence intervals along a shortest path between two bins.

    ``separated`` is true when an interior bin's upper bound falls below
    ``threshold = min(f_L(start), f_L(end))``.
    """

    path: list
    h: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    threshold: float
    separated: bool

    def rows(self):
        return [
            {"bin": b, "h": float(h), "lower": float(lo), "upper": float(up)}
            for b, h, lo, up in zip(self.path, self.h, self.lower, self.upper)
        ]


def shortest_path_report(bt: BetaTree, graph: AdjacencyGraph, i: int, j: int) -> PathReport:
    """BFS shortest path (in edges) from bin ``i`` to bin ``j`` with the
    per-bin intervals along it."""
    n = graph.n_bins
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("bin position out of range")
    if i == j:
        path = [i]
    else:
        path = _unblocked_path(graph, i, j, np.ones(n, dtype=bool), None)
        if path is None:
            raise Disconnected(f"bins {i} and {j} are not connected")
    h = bt.h[path]
    lo = bt.f_lower[path]
    up = bt.f_upper[path]
    threshold = float(min(lo[0], lo[-1]))
    separated = bool(np.any(up[1:-1] < threshold))
    return PathReport(path=path, h=h, lower=lo, upper=up, threshold=threshold, separated=separated)
