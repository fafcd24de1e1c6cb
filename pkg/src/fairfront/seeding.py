"""Vanilla clustering: k-means++ seeding with optional Lloyd refinement.

The centers produced here are the fixed centers consumed by the front
algorithms. Any externally supplied (k, d) center array works just as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fairfront.core import (
    Assignment,
    CostSpec,
    Dataset,
    cost_matrix,
    nearest_assignment,
    raw_assignment_cost,
)

DEFAULT_LLOYD_ITERS = 20


@dataclass(frozen=True)
class SeedConfig:
    k: int
    rng_seed: int = 0
    lloyd_iters: int = DEFAULT_LLOYD_ITERS

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.lloyd_iters < 0:
            raise ValueError("lloyd_iters must be non-negative")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; streams are identical across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2**64 - 1))))


def kmeanspp_seed(dataset: Dataset, cfg: SeedConfig) -> np.ndarray:
    """Pick k distinct data points as centers, D^2-weighted after the first.

    When every remaining point coincides with a chosen center (all weights
    zero) the next center is drawn uniformly from the unchosen points.
    """
    n, k = dataset.n, cfg.k
    if n < k:
        raise ValueError(f"cannot seed {k} centers from {n} points")
    rng = make_rng(cfg.rng_seed)
    pts = dataset.points
    chosen = [int(rng.integers(n))]
    closest = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    available = np.ones(n, dtype=bool)
    available[chosen[0]] = False
    while len(chosen) < k:
        weights = np.where(available, closest, 0.0)
        total = weights.sum()
        if total > 0:
            probs = weights / total
        else:
            probs = available / available.sum()
        idx = int(rng.choice(n, p=probs))
        chosen.append(idx)
        available[idx] = False
        closest = np.minimum(closest, ((pts - pts[idx]) ** 2).sum(axis=1))
    return pts[chosen].copy()


@dataclass(frozen=True)
class VanillaResult:
    centers: np.ndarray
    assignment: Assignment
    cost: float
    # Sum-of-powers cost of the nearest-center assignment, before any Lloyd
    # round and after each one.
    trace: tuple[float, ...] = field(default=())


def vanilla_cluster(dataset: Dataset, cfg: SeedConfig, spec: CostSpec) -> VanillaResult:
    """k-means++ seeding followed by ``cfg.lloyd_iters`` Lloyd rounds.

    Lloyd rounds use centroid updates and therefore require p = 2. An empty
    cluster is re-seeded at the point farthest from its assigned center.
    The returned cost is reported under ``spec.mode``.
    """
    if cfg.lloyd_iters > 0 and spec.p != 2.0:
        raise ValueError("Lloyd refinement is only defined for p = 2; use lloyd_iters=0")
    centers = kmeanspp_seed(dataset, cfg)
    assignment = nearest_assignment(dataset, centers, spec)
    trace = [raw_assignment_cost(assignment, dataset, spec)]
    for _ in range(cfg.lloyd_iters):
        labels = assignment.labels
        new_centers = centers.copy()
        dist = cost_matrix(dataset.points, centers, spec)[np.arange(dataset.n), labels]
        for i in range(cfg.k):
            members = dataset.points[labels == i]
            if members.shape[0]:
                new_centers[i] = members.mean(axis=0)
            else:
                far = int(np.argmax(dist))
                new_centers[i] = dataset.points[far]
                dist[far] = 0.0
        assignment = nearest_assignment(dataset, new_centers, spec)
        trace.append(raw_assignment_cost(assignment, dataset, spec))
        converged = np.array_equal(new_centers, centers)
        centers = new_centers
        if converged:
            break
    return VanillaResult(centers, assignment, spec.report(trace[-1]), tuple(trace))
