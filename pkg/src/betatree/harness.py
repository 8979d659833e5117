"""Simulation harness: data generators, exact-mass oracles and Monte Carlo
checks of the Beta-tree guarantees.

Replication ``r`` of a study seeded with ``seed`` draws from a Philox
generator keyed by ``(seed, r)``, so any single replication can be replayed
on its own with :func:`replication_rng`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr, ndtri

from .beta_math import beta_cdf
from .errors import NotPositiveDefinite
from .inference import DepthPlan, TreeInference, extract_betatree, plan_alphas, propagate_gof, tree_ci
from .modes import find_modes
from .partition import FULL_SPACE, Config, KdTree, Rect, build_kdtree, validate_and_prepare

__all__ = [
    "MixtureSpec",
    "UniformCube",
    "SCENARIO_2D",
    "SCENARIO_3D",
    "SimulationResult",
    "Theorem1Result",
    "replication_rng",
    "sample_mixture",
    "sample_uniform",
    "true_mass",
    "true_mass_with_error",
    "node_masses",
    "pivot_check",
    "coverage_check",
    "theorem1_check",
    "theorem1_endpoint_violations",
    "bin_count_study",
    "mode_recovery_study",
]


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Counter-based generator for replication ``rep`` of study ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep)])))


@dataclass(frozen=True)
class UniformCube:
    """Uniform distribution on ``[0, 1]^d``."""

    d: int


class MixtureSpec:
    """Gaussian mixture with Cholesky-factored component covariances."""

    def __init__(self, weights, means, covariances):
        w = np.asarray(weights, dtype=float)
        mu = np.atleast_2d(np.asarray(means, dtype=float))
        cov = np.asarray(covariances, dtype=float)
        if cov.ndim == 2:
            cov = cov[None]
        if w.ndim != 1 or np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("weights must be a probability vector")
        if mu.shape[0] != w.size or cov.shape != (w.size, mu.shape[1], mu.shape[1]):
            raise ValueError("means/covariances do not match the number of weights")
        if not np.allclose(cov, np.swapaxes(cov, 1, 2)):
            raise NotPositiveDefinite("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None
        self.weights = w
        self.means = mu
        self.covariances = cov
        self.cholesky = chol

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def __repr__(self):
        return f"MixtureSpec(components={self.weights.size}, d={self.d})"


SCENARIO_2D = MixtureSpec(
    weights=[2 / 5, 3 / 5],
    means=[[-1.5, 0.6], [2.0, -1.5]],
    covariances=[[[1.0, 0.5], [0.5, 1.0]], np.eye(2)],
)

SCENARIO_3D = MixtureSpec(
    weights=[2 / 5, 2 / 5, 1 / 5],
    means=[[-1.5, 0.6, 1.0], [2.0, -1.5, 0.0], [-2.6, -3.0, -2.0]],
    covariances=[
        [[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]],
        np.eye(3),
        [[1.0, -0.4, 0.6], [-0.4, 1.0, 0.0], [0.6, 0.0, 1.0]],
    ],
)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_mixture(spec: MixtureSpec, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. points: a component by weight, then ``mu + L z``."""
    rng = _as_rng(seed)
    comp = rng.choice(spec.weights.size, size=n, p=spec.weights)
    z = rng.standard_normal((n, spec.d))
    out = np.einsum("nij,nj->ni", spec.cholesky[comp], z)
    return out + spec.means[comp]


def sample_uniform(d: int, n: int, seed=None) -> np.ndarray:
    return _as_rng(seed).random((n, d))


def _uniform_mass(lower, upper):
    lo = np.clip(lower, 0.0, 1.0)
    hi = np.clip(upper, 0.0, 1.0)
    return np.prod(np.maximum(hi - lo, 0.0), axis=-1)


def _genz_mass(a, b, chol, n_points, n_shifts, rng):
    """Gaussian mass of ``[a, b]`` for ``N(0, L L^T)`` by Genz's sequential
    conditioning with scrambled Sobol points; returns (estimate, std error)."""
    d = a.size
    if d == 1:
        s = chol[0, 0]
        return float(ndtr(b[0] / s) - ndtr(a[0] / s)), 0.0
    m = int(2 ** math.ceil(math.log2(max(n_points // n_shifts, 2))))
    estimates = []
    for _ in range(n_shifts):
        w = stats.qmc.Sobol(d - 1, scramble=True, seed=rng).random(m)
        y = np.zeros((m, d))
        lo = np.full(m, ndtr(a[0] / chol[0, 0]))
        hi = np.full(m, ndtr(b[0] / chol[0, 0]))
        f = hi - lo
        for i in range(1, d):
            u = np.clip(lo + w[:, i - 1] * (hi - lo), 1e-300, 1 - 1e-16)
            y[:, i - 1] = ndtri(u)
            shift = y[:, :i] @ chol[i, :i]
            lo = ndtr((a[i] - shift) / chol[i, i])
            hi = ndtr((b[i] - shift) / chol[i, i])
            f = f * (hi - lo)
        estimates.append(f.mean())
    est = np.asarray(estimates)
    return float(est.mean()), float(est.std(ddof=1) / math.sqrt(n_shifts))


def true_mass_with_error(dist, rect: Rect, n_points: int = 2 ** 20, n_shifts: int = 8, seed=0):
    """Probability of ``rect`` under ``dist`` with an error estimate.

    Uniform cubes and diagonal-covariance components are exact up to
    rounding. Correlated components use randomized quasi-Monte Carlo with
    ``n_points`` nodes in total; the reported error is the standard error
    across ``n_shifts`` independent scramblings. Infinite bounds are allowed.
    """
    lower = np.asarray(rect.lower, dtype=float)
    upper = np.asarray(rect.upper, dtype=float)
    if isinstance(dist, UniformCube):
        return float(_uniform_mass(lower, upper)), 0.0
    rng = _as_rng(seed)
    total = 0.0
    var = 0.0
    for w, mu, cov, chol in zip(dist.weights, dist.means, dist.covariances, dist.cholesky):
        if w == 0:
            continue
        a = lower - mu
        b = upper - mu
        if np.count_nonzero(cov - np.diag(np.diag(cov))) == 0:
            sd = np.sqrt(np.diag(cov))
            p = float(np.prod(ndtr(b / sd) - ndtr(a / sd)))
            err = 0.0
        else:
            p, err = _genz_mass(a, b, chol, n_points, n_shifts, rng)
        total += w * p
        var += (w * err) ** 2
    return total, math.sqrt(var)


def true_mass(dist, rect: Rect, **kwargs) -> float:
    """Probability content of ``rect`` under ``dist``."""
    return true_mass_with_error(dist, rect, **kwargs)[0]


def node_masses(dist, tree: KdTree, rows=None, **kwargs):
    """True masses (and errors) of tree nodes; vectorized for uniform cubes."""
    rows = np.arange(len(tree)) if rows is None else np.asarray(rows)
    if isinstance(dist, UniformCube):
        return _uniform_mass(tree.lower[rows], tree.upper[rows]), np.zeros(rows.size)
    out = np.empty(rows.size)
    err = np.empty(rows.size)
    for j, r in enumerate(rows):
        out[j], err[j] = true_mass_with_error(dist, Rect(tree.lower[r], tree.upper[r]), **kwargs)
    return out, err


@dataclass
class SimulationResult:
    """Summary of a Monte Carlo study; unused fields stay ``None``."""

    kind: str
    replications: int
    coverage_rate: Optional[float] = None
    coverage_se: Optional[float] = None
    bin_count_stats: Optional[dict] = None
    ks_stat: Optional[float] = None
    ks_pvalue: Optional[float] = None
    theorem1_violations: Optional[int] = None
    success_rate: Optional[float] = None
    discarded: int = 0
    params: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return asdict(self)


def pivot_check(n: int, d: int, k: int, reps: int, seed: int = 0,
                root_mode: str = FULL_SPACE, stop_threshold_factor: float = 4.0) -> SimulationResult:
    """KS test of the observed ``F(R_k)`` against Beta(n_k+1, n-n_k).

    Data are uniform on the unit cube, where ``F(R_k)`` is the volume of
    ``R_k`` clipped to the cube.
    """
    cfg = Config(root_mode=root_mode, stop_threshold_factor=stop_threshold_factor)
    if root_mode == FULL_SPACE and k == 0:
        raise ValueError("the full-space root always has mass 1")
    masses = np.empty(reps)
    n_k = None
    for r in range(reps):
        tree = build_kdtree(sample_uniform(d, n, replication_rng(seed, r)), cfg)
        if k not in tree:
            raise ValueError(f"node {k} does not exist for n={n}, d={d}")
        i = tree.position(k)
        n_k = int(tree.count[i])
        masses[r] = _uniform_mass(tree.lower[i], tree.upper[i])
    a, b = n_k + 1, n - n_k
    ks = stats.kstest(masses, lambda x: beta_cdf(x, a, b))
    return SimulationResult(
        kind="pivot",
        replications=reps,
        ks_stat=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        params={"n": n, "d": d, "k": k, "n_k": n_k, "beta_a": a, "beta_b": b,
                "root_mode": root_mode, "seed": seed},
    )


def _summary(counts) -> dict:
    c = np.asarray(counts)
    return {"min": int(c.min()), "median": float(np.median(c)), "max": int(c.max())}


def coverage_check(dist, n: int, alpha: float, reps: int, seed: int = 0,
                   config: Optional[Config] = None, **mass_kwargs) -> SimulationResult:
    """Fraction of replications in which every bounded node's density
    interval contains the true average density.

    For correlated Gaussian components the true mass is estimated; a
    replication whose largest mass error exceeds 1% of the smallest interval
    half-width is discarded and counted in ``discarded``.
    """
    cfg = config or Config(alpha=alpha)
    if cfg.alpha != alpha:
        cfg = Config(**{**asdict(cfg), "alpha": alpha})
    covered = 0
    used = 0
    discarded = 0
    bins = []
    for r in range(reps):
        rng = replication_rng(seed, r)
        x = sample_uniform(dist.d, n, rng) if isinstance(dist, UniformCube) else sample_mixture(dist, n, rng)
        tree = build_kdtree(x, cfg)
        plan = plan_alphas(tree, alpha)
        inf = propagate_gof(tree_ci(tree, plan))
        bins.append(len(extract_betatree(inf)))
        rows = np.flatnonzero(tree.bounded)
        mass, err = node_masses(dist, tree, rows, **mass_kwargs)
        half = 0.5 * (inf.prob_hi[rows] - inf.prob_lo[rows])
        if np.any(err > 0.01 * half):
            discarded += 1
            continue
        used += 1
        ok = (mass >= inf.prob_lo[rows]) & (mass <= inf.prob_hi[rows])
        covered += bool(ok.all())
    rate = covered / used if used else float("nan")
    se = math.sqrt(rate * (1 - rate) / used) if used else float("nan")
    return SimulationResult(
        kind="coverage",
        replications=used,
        coverage_rate=rate,
        coverage_se=se,
        bin_count_stats=_summary(bins),
        discarded=discarded,
        params={"n": n, "alpha": alpha, "root_mode": cfg.root_mode, "seed": seed},
    )


def _theorem1_bound(n, g):
    with np.errstate(divide="ignore"):
        return (math.sqrt(2.0) + 4.0 / math.sqrt(math.log(n))) * np.sqrt(np.log(math.e / g))


def _theorem1_ratio(n, fn, g):
    with np.errstate(divide="ignore", invalid="ignore"):
        return math.sqrt(n) * np.abs(g - fn) / np.sqrt(g * (1.0 - g))


def theorem1_endpoint_violations(n: int, n_k, prob_lo, prob_hi, grid: int = 100) -> tuple:
    """Count nodes whose interval breaks the optimal-width inequality.

    Returns ``(endpoint_violations, grid_violations)``: the first checks the
    two interval endpoints, the second any of ``grid`` equispaced points of
    the interval.
    """
    n_k = np.atleast_1d(np.asarray(n_k, dtype=float))
    lo = np.atleast_1d(np.asarray(prob_lo, dtype=float))
    hi = np.atleast_1d(np.asarray(prob_hi, dtype=float))
    fn = (n_k + 1.0) / n
    end = np.zeros(n_k.size, dtype=bool)
    for g in (lo, hi):
        end |= _theorem1_ratio(n, fn, g) > _theorem1_bound(n, g)
    t = np.linspace(0.0, 1.0, grid)[None, :]
    g = lo[:, None] + t * (hi - lo)[:, None]
    grid_bad = np.any(_theorem1_ratio(n, fn[:, None], g) > _theorem1_bound(n, g), axis=1)
    return int(end.sum()), int(grid_bad.sum())


@dataclass
class Theorem1Result:
    eligible: int
    violations: int
    grid_violations: int
    n_range: tuple


def theorem1_check(tree: KdTree, plan: Optional[DepthPlan] = None, q: float = 0.5,
                   inference: Optional[TreeInference] = None) -> Theorem1Result:
    """Check the optimal-width inequality on every bounded node with
    ``log(n)^2 <= n_k <= n^q``."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if inference is None:
        inference = tree_ci(tree, plan or plan_alphas(tree, tree.config.alpha))
    n = tree.n
    lo_n, hi_n = math.log(n) ** 2, n ** q
    rows = np.flatnonzero(
        tree.bounded & (inference.alpha_node > 0) & (tree.count >= lo_n) & (tree.count <= hi_n)
    )
    v, gv = (0, 0) if rows.size == 0 else theorem1_endpoint_violations(
        n, tree.count[rows], inference.prob_lo[rows], inference.prob_hi[rows]
    )
    return Theorem1Result(eligible=int(rows.size), violations=v, grid_violations=gv,
                          n_range=(lo_n, hi_n))


def _draw(dist, n, rng):
    if isinstance(dist, UniformCube):
        return sample_uniform(dist.d, n, rng)
    return sample_mixture(dist, n, rng)


def _fit(x, cfg):
    tree = build_kdtree(validate_and_prepare(x, cfg), cfg)
    inf = propagate_gof(tree_ci(tree, plan_alphas(tree, cfg.alpha)))
    return extract_betatree(inf)


def bin_count_study(dist, n: int, seeds: Sequence[int], config: Optional[Config] = None) -> SimulationResult:
    """Beta-tree bin counts over independent samples."""
    cfg = config or Config()
    counts = [len(_fit(_draw(dist, n, replication_rng(s, 0)), cfg)) for s in seeds]
    return SimulationResult(
        kind="bin_count",
        replications=len(counts),
        bin_count_stats={**_summary(counts), "counts": counts},
        params={"n": n, "alpha": cfg.alpha, "root_mode": cfg.root_mode},
    )


def _match_within(centers, targets, tol):
    """True when centers and targets pair up one-to-one within L-inf ``tol``."""
    if len(centers) != len(targets):
        return False
    c = np.asarray(centers)
    t = np.asarray(targets)
    for perm in itertools.permutations(range(len(t))):
        if np.all(np.max(np.abs(c - t[list(perm)]), axis=1) <= tol):
            return True
    return False


def mode_recovery_study(dist: MixtureSpec, n: int, seeds: Sequence[int], targets,
                        tol: float = 1.0, config: Optional[Config] = None) -> SimulationResult:
    """Share of samples whose modal rectangles match ``targets`` exactly in
    number and within ``tol`` (L-inf) in location."""
    cfg = config or Config(root_mode=FULL_SPACE)
    hits = 0
    n_modes = []
    for s in seeds:
        bt = _fit(_draw(dist, n, replication_rng(s, 0)), cfg)
        report = find_modes(bt, max_len=cfg.max_path_length)
        n_modes.append(len(report))
        hits += _match_within(report.centers, targets, tol)
    return SimulationResult(
        kind="mode_recovery",
        replications=len(seeds),
        success_rate=hits / len(seeds),
        params={"n": n, "tol": tol, "n_modes": n_modes, "root_mode": cfg.root_mode,
                "max_path_length": cfg.max_path_length},
    )
