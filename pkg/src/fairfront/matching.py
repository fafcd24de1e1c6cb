"""Polynomial-time fronts for Sum / Max of Imbalances via perfect matching.

For each fairness level F a graph is built whose minimum-weight perfect
matchings correspond to the cheapest assignments with imbalance at most F:
a matched cross-attribute pair shares a cluster, and a point matched to a
dummy node is an unpaired (imbalance-contributing) point.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from fairfront.core import Assignment, CostSpec, Dataset, cost_matrix, raw_assignment_cost
from fairfront.fairness import FairnessSpec, Kind, evaluate, pattern_of
from fairfront.pattern_dp import FrontEntry, ParetoFront, pareto_filter

Edge = tuple[int, int, float, "int | None"]


@dataclass
class MatchGraph:
    """Nodes 0..n-1 are data points; the rest are dummies."""

    n_data: int
    n_nodes: int
    F: int
    variant: str
    centers: np.ndarray
    edges: list[Edge] = field(default_factory=list)

    def edge_types(self) -> dict[tuple[int, int], int | None]:
        return {(min(u, v), max(u, v)): t for u, v, _, t in self.edges}

    def weight_of(self, matching: list[tuple[int, int]]) -> float:
        weights = {(min(u, v), max(u, v)): w for u, v, w, _ in self.edges}
        return sum(weights[(min(u, v), max(u, v))] for u, v in matching)


def _require_two_groups(dataset: Dataset) -> None:
    if dataset.l != 2:
        raise ValueError(f"imbalance objectives need exactly two attribute values, got l={dataset.l}")


def _cross_edges(dataset: Dataset, costs: np.ndarray) -> list[Edge]:
    edges: list[Edge] = []
    attrs = dataset.attrs.tolist()
    for x in range(dataset.n):
        for y in range(x + 1, dataset.n):
            if attrs[x] == attrs[y]:
                continue
            pair = costs[x] + costs[y]
            t = int(np.argmin(pair))
            edges.append((x, y, float(pair[t]), t))
    return edges


def build_graph_sum(
    dataset: Dataset, centers: np.ndarray, spec: CostSpec, F: int, costs: np.ndarray | None = None
) -> MatchGraph:
    """Level-F graph for Sum of Imbalances: n data nodes plus F dummies."""
    _require_two_groups(dataset)
    n = dataset.n
    if F < 0:
        raise ValueError("F must be non-negative")
    if (n + F) % 2:
        raise ValueError(f"F={F} has the wrong parity for n={n} (n + F must be even)")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if costs is None:
        costs = cost_matrix(dataset.points, centers, spec)
    g = MatchGraph(n, n + F, F, "sum", centers, _cross_edges(dataset, costs))
    nearest = np.argmin(costs, axis=1)
    for x in range(n):
        t = int(nearest[x])
        for z in range(n, n + F):
            g.edges.append((x, z, float(costs[x, t]), t))
    return g


def build_graph_max(
    dataset: Dataset, centers: np.ndarray, spec: CostSpec, F: int, costs: np.ndarray | None = None
) -> MatchGraph:
    """Level-F graph for Max Imbalance: F typed dummies per cluster, free dummy pairs."""
    _require_two_groups(dataset)
    n = dataset.n
    if F < 0:
        raise ValueError("F must be non-negative")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k = centers.shape[0]
    if costs is None:
        costs = cost_matrix(dataset.points, centers, spec)
    n_dummy = k * F + (n + k * F) % 2
    g = MatchGraph(n, n + n_dummy, F, "max", centers, _cross_edges(dataset, costs))
    for i in range(k):
        for z in range(n + i * F, n + (i + 1) * F):
            for x in range(n):
                g.edges.append((x, z, float(costs[x, i]), i))
    for z in range(n, n + n_dummy):
        for w in range(z + 1, n + n_dummy):
            g.edges.append((z, w, 0.0, None))
    return g


def _exact_integer_weights(weights: list[float]) -> list[int]:
    """Scale float weights to integers exactly (floats are dyadic rationals)."""
    ratios = [Fraction(w) for w in weights]
    denom = max((r.denominator for r in ratios), default=1)
    return [int(r * denom) for r in ratios]


def min_weight_perfect_matching(g: MatchGraph) -> list[tuple[int, int]] | None:
    """Exact minimum-weight perfect matching (Edmonds' blossom), or None if none exists.

    Weights are turned into exact integers and maximized as (big - w) under
    maximum cardinality, so the optimum is exact for the given float weights.
    """
    if g.n_nodes % 2:
        raise ValueError(f"perfect matching needs an even node count, got {g.n_nodes}")
    if g.n_nodes == 0:
        return []
    ints = _exact_integer_weights([w for _, _, w, _ in g.edges])
    big = 1 + max(ints, default=0)
    graph = nx.Graph()
    graph.add_nodes_from(range(g.n_nodes))
    graph.add_weighted_edges_from((u, v, big - w) for (u, v, _, _), w in zip(g.edges, ints))
    matching = nx.max_weight_matching(graph, maxcardinality=True)
    if 2 * len(matching) != g.n_nodes:
        return None
    return sorted((min(u, v), max(u, v)) for u, v in matching)


def clustering_from_matching(m: list[tuple[int, int]], g: MatchGraph) -> Assignment:
    """Place every matched data point in the cluster given by its edge type."""
    types = g.edge_types()
    labels = np.full(g.n_data, -1, dtype=np.int64)
    for u, v in m:
        t = types[(min(u, v), max(u, v))]
        for node in (u, v):
            if node < g.n_data:
                labels[node] = t
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise ValueError(f"data nodes left unmatched: {missing.tolist()}")
    return Assignment(labels, g.centers)


def _solve_level(args) -> Assignment | None:
    build, dataset, centers, spec, F, costs = args
    g = build(dataset, centers, spec, F, costs)
    m = min_weight_perfect_matching(g)
    return None if m is None else clustering_from_matching(m, g)


def imbalance_pareto(
    dataset: Dataset,
    centers: np.ndarray,
    spec: CostSpec,
    kind: str = "sum",
    *,
    threads: int = 1,
) -> ParetoFront:
    """Front for Sum ("sum") or Max ("max") of Imbalances by sweeping the level F.

    The sum sweep starts at |n_0 - n_1|, the smallest reachable value, and
    steps by 2 (every sum of imbalances has the parity of n).
    """
    _require_two_groups(dataset)
    if kind not in ("sum", "max"):
        raise ValueError("kind must be 'sum' or 'max'")
    if not spec.additive:
        raise ValueError("matching fronts need an additive cost (p = 1 or 2)")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n0, n1 = (int(t) for t in dataset.totals)
    if min(n0, n1) == 0:
        warnings.warn("one attribute group is empty; the front collapses to a single point", stacklevel=2)
    costs = cost_matrix(dataset.points, centers, spec)
    if kind == "sum":
        objective = FairnessSpec(Kind.SUM_IMBALANCE)
        levels = range(abs(n0 - n1), dataset.n + 1, 2)
        build = build_graph_sum
    else:
        objective = FairnessSpec(Kind.MAX_IMBALANCE)
        levels = range(0, max(n0, n1) + 1)
        build = build_graph_max

    jobs = [(build, dataset, centers, spec, F, costs) for F in levels]
    # The blossom matcher is pure Python; only separate processes run levels in parallel.
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            solutions = list(pool.map(_solve_level, jobs))
    else:
        solutions = [_solve_level(job) for job in jobs]

    candidates = []
    for a in solutions:
        if a is None:
            continue
        pattern = pattern_of(a, dataset)
        candidates.append((raw_assignment_cost(a, dataset, spec), evaluate(objective, pattern), (pattern, a)))
    entries = [FrontEntry(c, f, h[0], h[1]) for c, f, h in pareto_filter(candidates)]
    return ParetoFront(entries, spec, objective, {"algorithm": "matching", "levels": len(levels)})
