"""Verification engines and fixture generators.

Everything here is deliberately naive: exhaustive enumeration, per-pattern
assignment problems and exact checks, used to validate the fast algorithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from fairfront.core import Assignment, CostSpec, Dataset, cost_matrix
from fairfront.fairness import FairnessSpec, PatternEvaluator, Rational
from fairfront.pattern_dp import FrontEntry, ParetoFront, pareto_filter
from fairfront.seeding import make_rng

DEFAULT_BUDGET = 10**6


class OracleBudgetExceeded(RuntimeError):
    pass


def _all_labelings(n: int, k: int, budget: int) -> np.ndarray:
    total = k**n
    if total > budget:
        raise OracleBudgetExceeded(f"{k}^{n} = {total:,} assignments exceed the budget of {budget:,}")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    # Row r is r written in base k, most significant digit first.
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (np.arange(total, dtype=np.int64)[:, None] // powers[None, :]) % k


def _sequential_costs(labels: np.ndarray, costs: np.ndarray, spec: CostSpec) -> np.ndarray:
    # Same accumulation order as the dynamic program: point 0 first.
    total = np.zeros(labels.shape[0])
    for j in range(labels.shape[1]):
        step = costs[j, labels[:, j]]
        total = total + step if spec.additive else np.maximum(total, step)
    return total


def _patterns(labels: np.ndarray, attrs: np.ndarray, k: int, l: int) -> np.ndarray:
    flat = labels * l + attrs[None, :]
    out = np.zeros((labels.shape[0], k * l), dtype=np.int64)
    for j in range(labels.shape[1]):
        np.add.at(out, (np.arange(labels.shape[0]), flat[:, j]), 1)
    return out.reshape(-1, k, l)


def brute_force_pattern_costs(
    dataset: Dataset, centers: np.ndarray, spec: CostSpec, budget: int = DEFAULT_BUDGET
) -> dict[tuple[int, ...], tuple[float, np.ndarray]]:
    """Cheapest assignment for every reachable pattern, keyed by the flattened pattern."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k = centers.shape[0]
    labels = _all_labelings(dataset.n, k, budget)
    costs = cost_matrix(dataset.points, centers, spec) if dataset.n else np.zeros((0, k))
    totals = _sequential_costs(labels, costs, spec)
    pats = _patterns(labels, dataset.attrs, k, dataset.l).reshape(labels.shape[0], -1)
    _, inverse = np.unique(pats, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    # cheapest labeling per pattern; lexsort keeps enumeration order on ties
    order = np.lexsort((totals, inverse))
    first = order[np.r_[True, inverse[order][1:] != inverse[order][:-1]]]
    return {tuple(pats[r].tolist()): (float(totals[r]), labels[r]) for r in first.tolist()}


def brute_force_pareto(
    dataset: Dataset,
    centers: np.ndarray,
    cost_spec: CostSpec,
    fairness: FairnessSpec,
    budget: int = DEFAULT_BUDGET,
) -> ParetoFront:
    """Exact assignment front by enumerating all k^n assignments."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k, l = centers.shape[0], dataset.l
    score = PatternEvaluator(fairness)
    best = brute_force_pattern_costs(dataset, centers, cost_spec, budget)
    cands = []
    for key, (cost, labels) in best.items():
        pattern = np.array(key, dtype=np.int64).reshape(k, l)
        cands.append((cost, score(pattern), (pattern, labels)))
    entries = [
        FrontEntry(c, f, h[0], Assignment(h[1], centers)) for c, f, h in pareto_filter(cands)
    ]
    return ParetoFront(entries, cost_spec, fairness, {"algorithm": "brute"})


def candidate_center_sets(
    candidates: np.ndarray, k: int
) -> Iterator[np.ndarray]:
    """k-multisets of candidate locations (distinct rows only)."""
    locs = np.unique(np.atleast_2d(candidates), axis=0)
    for combo in combinations_with_replacement(range(locs.shape[0]), k):
        yield locs[list(combo)]


def brute_force_clustering_pareto(
    dataset: Dataset,
    k: int,
    cost_spec: CostSpec,
    fairness: FairnessSpec,
    candidates: np.ndarray | None = None,
    budget: int = DEFAULT_BUDGET,
) -> ParetoFront:
    """Clustering front with centers restricted to k-multisets of ``candidates``.

    ``candidates`` defaults to the data points. The restriction makes the
    reference weaker than the true (continuous-center) front, which keeps
    approximation checks against it sound in one direction only.
    """
    candidates = dataset.points if candidates is None else np.atleast_2d(candidates)
    labels = _all_labelings(dataset.n, k, budget)
    pats = _patterns(labels, dataset.attrs, k, dataset.l)
    score = PatternEvaluator(fairness)
    fair = [score(p) for p in pats]
    cands = []
    for centers in candidate_center_sets(candidates, k):
        totals = _sequential_costs(labels, cost_matrix(dataset.points, centers, cost_spec), cost_spec)
        for c, f, h in pareto_filter(zip(totals.tolist(), fair, range(len(fair)))):
            cands.append((c, f, (pats[h], Assignment(labels[h], centers))))
    entries = [FrontEntry(c, f, h[0], h[1]) for c, f, h in pareto_filter(cands)]
    return ParetoFront(entries, cost_spec, fairness, {"algorithm": "brute-clustering"})


def exact_vanilla(
    dataset: Dataset, k: int, cost_spec: CostSpec, candidates: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """Cheapest k-multiset of candidate centers (data points by default), raw cost."""
    candidates = dataset.points if candidates is None else np.atleast_2d(candidates)
    best_centers, best_cost = None, math.inf
    for centers in candidate_center_sets(candidates, k):
        costs = cost_matrix(dataset.points, centers, cost_spec).min(axis=1)
        total = float(costs.sum()) if cost_spec.additive else float(costs.max())
        if total < best_cost:
            best_centers, best_cost = centers, total
    return best_centers, best_cost


def transportation_optimum(
    pattern: np.ndarray, dataset: Dataset, centers: np.ndarray, spec: CostSpec
) -> float:
    """Minimum cost over assignments realizing ``pattern``.

    Constraints only couple points of the same attribute, so each attribute
    is an independent transportation problem; expanding cluster i into
    P[i, a] unit slots turns it into a square assignment problem.
    """
    if not spec.additive:
        raise ValueError("transportation_optimum needs an additive cost")
    pattern = np.asarray(pattern, dtype=np.int64)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if pattern.shape != (centers.shape[0], dataset.l):
        raise ValueError(f"pattern must have shape ({centers.shape[0]}, {dataset.l})")
    if (pattern < 0).any() or not np.array_equal(pattern.sum(axis=0), dataset.totals):
        raise ValueError("infeasible pattern: column sums must equal the attribute totals")
    total = 0.0
    for a in range(dataset.l):
        pts = dataset.points[dataset.attrs == a]
        if pts.shape[0] == 0:
            continue
        slots = np.repeat(np.arange(centers.shape[0]), pattern[:, a])
        costs = cost_matrix(pts, centers, spec)[:, slots]
        rows, cols = linear_sum_assignment(costs)
        total += float(costs[rows, cols].sum())
    return total


def _group_allocations(sizes: Sequence[int], quotas: Sequence[int]) -> Iterator[list[list[int]]]:
    """Tables t[g][i] >= 0 with row sums ``sizes`` and column sums ``quotas``."""
    k = len(quotas)

    def rec(g: int, room: list[int]) -> Iterator[list[list[int]]]:
        if g == len(sizes):
            if not any(room):
                yield []
            return
        for split in _compositions(sizes[g], room):
            rest = [r - s for r, s in zip(room, split)]
            for tail in rec(g + 1, rest):
                yield [split] + tail

    def _compositions(total: int, caps: list[int]) -> Iterator[list[int]]:
        if len(caps) == 1:
            if total <= caps[0]:
                yield [total]
            return
        for first in range(min(total, caps[0]) + 1):
            for rest in _compositions(total - first, caps[1:]):
                yield [first] + rest

    yield from rec(0, list(quotas)) if k else iter(())


def optimal_kmeans_for_pattern(dataset: Dataset, pattern: np.ndarray) -> tuple[float, np.ndarray]:
    """Exact minimum k-means cost (sum of squares, free centers) over clusterings with ``pattern``.

    Identical (point, attribute) pairs are grouped and every way of
    splitting the groups across clusters is enumerated; each cluster's
    optimal center is its centroid. Only practical for a handful of
    distinct locations.
    """
    pattern = np.asarray(pattern, dtype=np.int64)
    k = pattern.shape[0]
    if not np.array_equal(pattern.sum(axis=0), dataset.totals):
        raise ValueError("infeasible pattern: column sums must equal the attribute totals")
    per_attr = []
    for a in range(dataset.l):
        pts = dataset.points[dataset.attrs == a]
        locs, counts = np.unique(pts, axis=0, return_counts=True) if pts.size else (pts, np.zeros(0, int))
        tables = [np.array(t, dtype=np.int64).reshape(len(counts), k) for t in
                  _group_allocations(counts.tolist(), pattern[:, a].tolist())]
        per_attr.append((locs, tables))
    best, best_centers = math.inf, None
    for choice in product(*(tables for _, tables in per_attr)):
        weight = np.zeros(k)
        first = np.zeros((k, dataset.d))
        second = np.zeros(k)
        for (locs, _), table in zip(per_attr, choice):
            if table.size == 0:
                continue
            weight += table.sum(axis=0)
            first += table.T @ locs
            second += table.T @ (locs**2).sum(axis=1)
        nz = weight > 0
        centers = np.zeros((k, dataset.d))
        centers[nz] = first[nz] / weight[nz, None]
        sse = float((second[nz] - (first[nz] ** 2).sum(axis=1) / weight[nz]).sum())
        if sse < best:
            best, best_centers = sse, centers
    return max(best, 0.0), best_centers


@dataclass(frozen=True)
class WApprox:
    w_c: float
    w_f: float

    def __post_init__(self) -> None:
        if self.w_c < 1 or self.w_f < 1:
            raise ValueError("approximation factors must be at least 1")


def _covers(ref: tuple[float, Rational], cand: tuple[float, Rational], w: WApprox) -> bool:
    cost_ok = cand[0] <= w.w_c * ref[0] * (1 + 1e-12) + 1e-12
    f_ref, f_cand = Fraction(ref[1]), Fraction(cand[1])
    if f_ref <= 0:
        return cost_ok and f_cand <= f_ref
    return cost_ok and f_cand <= _factor(w.w_f) * f_ref


def _factor(w: float) -> Fraction:
    return Fraction(repr(float(w))) if isinstance(w, float) else Fraction(w)


def check_w_approx(reference: ParetoFront, candidate: ParetoFront, w: WApprox) -> bool:
    """True iff every reference point is covered within (w_c, w_f) by some candidate point.

    Costs are compared as reported by each front's cost spec, with a 1e-12
    relative slack for float noise. A non-positive reference fairness is
    covered only by a candidate that is at least as fair.
    """
    if reference.fairness.kind is not candidate.fairness.kind:
        raise ValueError("fronts are over different fairness objectives")
    if reference.cost_spec != candidate.cost_spec:
        raise ValueError("fronts are over different cost specifications")
    cand_points = candidate.points()
    return all(any(_covers(r, c, w) for c in cand_points) for r in reference.points())


# --- fixtures --------------------------------------------------------------

BLUE, RED = 0, 1


def gen_bad_example(m: int, eps: float) -> tuple[Dataset, np.ndarray]:
    """Eight point groups where raw assignment fronts fail for the tau-ratio objective.

    Returns the dataset (blue = 0, red = 1) and the unfair-optimal centers
    (0,1), (1,0), (0,-1), (-1,0).
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    if not (0 < eps < 1 / (8 * m)):
        raise ValueError(f"eps must lie in (0, 1/(8m)) = (0, {1 / (8 * m)})")
    big = 2 * m - 1
    groups = [
        ((-eps, 1.0), BLUE, big),
        ((eps, 1.0), RED, big),
        ((1.0, 0.0), BLUE, 1),
        ((1.0, 0.0), RED, 1),
        ((eps, -1.0), BLUE, big),
        ((-eps, -1.0), RED, big),
        ((-1.0, 0.0), BLUE, 1),
        ((-1.0, 0.0), RED, 1),
    ]
    points = [xy for xy, _, count in groups for _ in range(count)]
    attrs = [a for _, a, count in groups for _ in range(count)]
    centers = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])
    return Dataset(np.array(points), np.array(attrs), 2, ("blue", "red")), centers


def gen_gaussian(
    n: int,
    k_blobs: int,
    proportions: Sequence[float],
    rng_seed: int = 0,
    *,
    d: int = 2,
    spread: float = 10.0,
    sigma: float = 1.0,
) -> Dataset:
    """Isotropic Gaussian blobs; attributes drawn independently of position."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if k_blobs < 1:
        raise ValueError("k_blobs must be at least 1")
    props = np.asarray(proportions, dtype=float)
    if props.ndim != 1 or props.size < 1 or (props < 0).any() or not math.isclose(props.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("proportions must be non-negative and sum to 1")
    rng = make_rng(rng_seed)
    means = rng.uniform(-spread, spread, size=(k_blobs, d))
    blob = rng.integers(k_blobs, size=n)
    points = means[blob] + rng.normal(scale=sigma, size=(n, d))
    attrs = rng.choice(props.size, size=n, p=props / props.sum())
    return Dataset(points, attrs, props.size)
