"""Exact assignment Pareto front via dynamic programming over patterns.

Level j of the table maps every pattern of the first j points (in
processing order) to the cheapest assignment of those points realizing it.
A pattern is keyed by its first k-1 rows; the last row is implied by the
per-attribute totals seen so far. Each level is stored densely as an array
with one axis per explicit (cluster, attribute) entry, so axis (i, a) has
length t_a + 1 where t_a is the number of attribute-a points processed.
Cells whose implied last row would be negative hold +inf.

The forward pass is a single compiled kernel holding two cost levels at a
time; per-level backpointers (one int8 cluster index per cell) live in one
arena and are kept to rebuild assignments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np
from numba import njit

from fairfront.core import Assignment, CostSpec, Dataset, cost_matrix
from fairfront.fairness import FairnessSpec, PatternEvaluator, Rational

DEFAULT_MAX_CELLS = 10**7


class BudgetExceeded(RuntimeError):
    """The pattern table would be too large to build."""

    def __init__(self, estimate: int, limit: int) -> None:
        super().__init__(
            f"pattern table needs about {estimate:,} cells per level (limit {limit:,}); "
            "reduce n, k or the number of attribute values"
        )
        self.estimate = estimate
        self.limit = limit


def pattern_count_estimate(totals: Sequence[int], k: int) -> int:
    """Dense cell count of the final level, prod_a (n_a + 1)^(k-1)."""
    out = 1
    for t in totals:
        out *= (int(t) + 1) ** (k - 1)
    return out


@dataclass
class DpTable:
    k: int
    l: int
    totals: np.ndarray
    order: np.ndarray
    attrs: np.ndarray  # attribute of each point in processing order
    backpointers: list[np.ndarray]  # entry j-1 holds level j
    final: np.ndarray
    key_counts: list[int]  # number of patterns at each level 0..n
    levels: list[np.ndarray] | None = None  # every cost level, when requested

    @property
    def n(self) -> int:
        return len(self.backpointers)

    def _key(self, pattern: np.ndarray) -> tuple[int, ...]:
        p = np.asarray(pattern, dtype=np.int64)
        if p.shape != (self.k, self.l):
            raise ValueError(f"pattern must have shape ({self.k}, {self.l}), got {p.shape}")
        if (p < 0).any() or not np.array_equal(p.sum(axis=0), self.totals):
            raise KeyError("not a pattern of this dataset (column sums or signs differ)")
        return tuple(p[: self.k - 1].reshape(-1).tolist())

    def cost(self, pattern: np.ndarray) -> float:
        """Minimum sum of d^p over assignments realizing ``pattern``."""
        return float(self.final[self._key(pattern)])

    def level_cost(self, j: int, pattern: np.ndarray) -> float:
        """Stored cost for a pattern of the first j points (needs keep_levels)."""
        if self.levels is None:
            raise RuntimeError("table was built without keep_levels=True")
        p = np.asarray(pattern, dtype=np.int64)
        idx = tuple(p[: self.k - 1].reshape(-1).tolist())
        arr = self.levels[j]
        if any(v >= s for v, s in zip(idx, arr.shape)):
            return math.inf
        return float(arr[idx])

    def patterns(self) -> tuple[np.ndarray, np.ndarray]:
        """All patterns of the full dataset as an (N, k, l) array, with their costs."""
        return self._expand(self.final, self.totals)

    def level_patterns(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        if self.levels is None:
            raise RuntimeError("table was built without keep_levels=True")
        seen = np.bincount(self.attrs[:j], minlength=self.l)
        return self._expand(self.levels[j], seen)

    def _expand(self, arr: np.ndarray, totals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k, l = self.k, self.l
        if arr.ndim == 0:
            pats = np.asarray(totals, dtype=np.int64).reshape(1, 1, l)
            return pats, np.array([float(arr)])
        idx = np.argwhere(np.isfinite(arr))
        costs = arr[tuple(idx.T)]
        explicit = idx.reshape(-1, k - 1, l).astype(np.int64)
        last = np.asarray(totals, dtype=np.int64)[None, :] - explicit.sum(axis=1)
        pats = np.concatenate([explicit, last[:, None, :]], axis=1)
        return pats, costs


@njit(cache=True)
def _forward(costs, attrs, k, l, shapes, offsets, bp_buf, keep, level_buf, key_counts):
    """Compiled forward pass over all levels; returns the final cost level (flat)."""
    n = attrs.shape[0]
    ndim = shapes.shape[1]
    size = 1
    for d in range(ndim):
        size *= shapes[n, d]
    cur = np.empty(size)
    nxt = np.empty(size)
    cur[0] = 0.0
    idx = np.zeros(ndim, dtype=np.int64)
    ostride = np.zeros(ndim, dtype=np.int64)
    for j in range(n):
        a = attrs[j]
        s = 1
        for d in range(ndim - 1, -1, -1):
            ostride[d] = s
            s *= shapes[j, d]
        cells = 1
        for d in range(ndim):
            cells *= shapes[j + 1, d]
            idx[d] = 0
        base = offsets[j]
        found = 0
        for c in range(cells):
            off = 0
            oob = 0
            for d in range(ndim):
                if idx[d] >= shapes[j, d]:
                    oob += 1
                else:
                    off += idx[d] * ostride[d]
            best = np.inf
            choice = -1
            for i in range(k):
                if i < k - 1:
                    d = i * l + a
                    if idx[d] == 0:
                        continue
                    if idx[d] >= shapes[j, d]:
                        if oob != 1:
                            continue
                        prev = off + (idx[d] - 1) * ostride[d]
                    else:
                        if oob != 0:
                            continue
                        prev = off - ostride[d]
                else:
                    if oob != 0:
                        continue
                    prev = off
                cand = cur[prev] + costs[j, i]
                if cand < best:
                    best = cand
                    choice = i
            nxt[c] = best
            bp_buf[base + c] = choice
            if choice >= 0:
                found += 1
            if keep:
                level_buf[base + c] = best
            for d in range(ndim - 1, -1, -1):
                idx[d] += 1
                if idx[d] < shapes[j + 1, d]:
                    break
                idx[d] = 0
        key_counts[j + 1] = found
        tmp = cur
        cur = nxt
        nxt = tmp
    return cur


def _level_shapes(attrs: np.ndarray, k: int, l: int) -> np.ndarray:
    n = attrs.shape[0]
    ndim = (k - 1) * l
    shapes = np.ones((n + 1, ndim), dtype=np.int64)
    seen = np.zeros(l, dtype=np.int64)
    for j in range(n):
        seen[attrs[j]] += 1
        shapes[j + 1] = np.tile(seen + 1, k - 1)
    return shapes


def dp_build(
    dataset: Dataset,
    centers: np.ndarray,
    spec: CostSpec,
    order: Sequence[int] | None = None,
    *,
    max_cells: int = DEFAULT_MAX_CELLS,
    keep_levels: bool = False,
) -> DpTable:
    """Fill the pattern table for fixed ``centers``.

    T_j(P) = min over clusters i with P[i, a_j] > 0 of T_{j-1}(P - e_{i,a_j}) + d^p(x_j, s_i),
    with the lowest cluster index winning ties.
    """
    if not spec.additive:
        raise ValueError("the pattern dynamic program needs an additive cost (p = 1 or 2), not p = inf")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k, l, n = centers.shape[0], dataset.l, dataset.n
    if k < 1:
        raise ValueError("at least one center is required")
    if k > 127:
        raise ValueError("at most 127 clusters are supported")
    order = np.arange(n) if order is None else np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("order must be a permutation of the point indices")
    totals = dataset.totals
    estimate = pattern_count_estimate(totals, k)
    if estimate > max_cells:
        raise BudgetExceeded(estimate, max_cells)

    attrs = np.ascontiguousarray(dataset.attrs[order])
    costs = cost_matrix(dataset.points[order], centers, spec) if n else np.zeros((0, k))
    shapes = _level_shapes(attrs, k, l)
    sizes = shapes[1:].prod(axis=1) if n else np.zeros(0, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    bp_buf = np.empty(int(offsets[-1]), dtype=np.int8)
    key_counts = np.ones(n + 1, dtype=np.int64)
    level_buf = np.empty(int(offsets[-1]) + 1 if keep_levels else 0)
    final = _forward(
        np.ascontiguousarray(costs), attrs, k, l, shapes, offsets, bp_buf,
        keep_levels, level_buf[1:] if keep_levels else level_buf, key_counts,
    )
    final = final[: int(shapes[n].prod())].reshape(tuple(shapes[n]))
    backpointers = [
        bp_buf[offsets[j] : offsets[j + 1]].reshape(tuple(shapes[j + 1])) for j in range(n)
    ]
    levels = None
    if keep_levels:
        levels = [np.zeros(tuple(shapes[0]))]
        levels += [
            level_buf[1 + offsets[j] : 1 + offsets[j + 1]].reshape(tuple(shapes[j + 1])) for j in range(n)
        ]
    return DpTable(
        k=k,
        l=l,
        totals=np.asarray(totals, dtype=np.int64),
        order=order,
        attrs=attrs,
        backpointers=backpointers,
        final=final,
        key_counts=key_counts.tolist(),
        levels=levels,
    )


def reconstruct(table: DpTable, pattern: np.ndarray, centers: np.ndarray) -> Assignment:
    """Walk the backpointers from level n down to 0 to recover the assignment."""
    key = list(table._key(pattern))
    if not math.isfinite(table.final[tuple(key)] if key else float(table.final)):
        raise KeyError("pattern is not present in the table")
    labels = np.empty(table.n, dtype=np.int64)
    k, l = table.k, table.l
    for j in range(table.n, 0, -1):
        bp = table.backpointers[j - 1]
        i = int(bp[tuple(key)]) if key else int(bp)
        if i < 0:
            raise RuntimeError(f"broken backpointer chain at level {j}")
        labels[table.order[j - 1]] = i
        if i < k - 1:
            key[i * l + int(table.attrs[j - 1])] -= 1
    return Assignment(labels, centers)


# --- Pareto fronts ---------------------------------------------------------


def pareto_filter(candidates: Iterable[tuple[float, Any, Any]]) -> list[tuple[float, Any, Any]]:
    """Undominated (cost, fairness, handle) triples, sorted by increasing cost.

    Candidates are sorted by (cost, fairness) and kept only when their
    fairness beats every cheaper candidate's; among exact duplicates the
    first in sorted order survives.
    """
    ordered = sorted(candidates, key=lambda c: (c[0], c[1]))
    front: list[tuple[float, Any, Any]] = []
    for cand in ordered:
        if not front or cand[1] < front[-1][1]:
            front.append(cand)
    return front


@dataclass
class FrontEntry:
    cost: float  # sum of d^p (max distance for p = inf)
    fairness: Rational
    pattern: np.ndarray | None = None
    assignment: Assignment | None = None


@dataclass
class ParetoFront:
    entries: list[FrontEntry]
    cost_spec: CostSpec
    fairness: FairnessSpec
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[FrontEntry]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> FrontEntry:
        return self.entries[i]

    def points(self) -> list[tuple[float, Rational]]:
        """(reported cost, fairness) pairs, in front order."""
        return [(self.cost_spec.report(e.cost), e.fairness) for e in self.entries]

    def raw_points(self) -> list[tuple[float, Rational]]:
        return [(e.cost, e.fairness) for e in self.entries]

    def with_mode(self, mode: str) -> ParetoFront:
        return ParetoFront(self.entries, self.cost_spec.with_mode(mode), self.fairness, dict(self.meta))


def front_from_table(
    table: DpTable,
    centers: np.ndarray,
    cost_spec: CostSpec,
    fairness: FairnessSpec,
    score: Callable[[np.ndarray], Rational] | None = None,
) -> tuple[list[tuple[float, Rational, int]], np.ndarray]:
    """Filter the table's patterns by (cost, score); returns survivors and all patterns."""
    pats, costs = table.patterns()
    score = score or PatternEvaluator(fairness)
    cands = [(float(c), score(p), idx) for idx, (p, c) in enumerate(zip(pats, costs))]
    return pareto_filter(cands), pats


def assignment_pareto(
    dataset: Dataset,
    centers: np.ndarray,
    cost_spec: CostSpec,
    fairness: FairnessSpec,
    *,
    order: Sequence[int] | None = None,
    allow_nonmergeable: bool = False,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> ParetoFront:
    """Exact Pareto front of the assignment problem for fixed ``centers``.

    Non-mergeable objectives are refused unless ``allow_nonmergeable`` is set:
    the result is still the exact assignment front, but it carries no
    guarantee for the clustering problem (use ``nonmergeable_pareto``).
    """
    if not fairness.mergeable and not allow_nonmergeable:
        raise ValueError(
            f"{fairness.kind.value} is not mergeable; use nonmergeable_pareto or pass allow_nonmergeable=True"
        )
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    table = dp_build(dataset, centers, cost_spec, order, max_cells=max_cells)
    survivors, pats = front_from_table(table, centers, cost_spec, fairness)
    entries = [
        FrontEntry(cost, fair, pats[idx], reconstruct(table, pats[idx], centers))
        for cost, fair, idx in survivors
    ]
    return ParetoFront(entries, cost_spec, fairness, {"algorithm": "dp", "patterns": len(pats)})
