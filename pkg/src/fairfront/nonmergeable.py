"""Fronts for objectives that can get worse when clusters merge.

The modified objective of a pattern P is the best fairness over all of
P's refinements (patterns that merge back into P). Pareto filtering on the
modified value, then splitting each surviving clustering into the
minimizing refinement while duplicating centers, restores the clustering
approximation guarantee without changing any cost.

Refinement edges go from a pattern to the ones obtained by splitting one
non-empty row into two non-empty parts, the second part moved into an
empty row. A pattern has no refinement (it is a sink) exactly when it has
no empty row, or when every non-empty row holds a single point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from fairfront.core import Assignment, CostSpec, Dataset
from fairfront.fairness import FairnessSpec, PatternEvaluator, Rational, merge_rows, pattern_of
from fairfront.pattern_dp import (
    DEFAULT_MAX_CELLS,
    FrontEntry,
    ParetoFront,
    dp_build,
    pareto_filter,
    reconstruct,
)


def _key(p: np.ndarray) -> tuple[int, ...]:
    return tuple(np.asarray(p, dtype=np.int64).reshape(-1).tolist())


def parents(p: np.ndarray) -> Iterator[np.ndarray]:
    """Patterns obtained by merging two non-empty rows (ordered: j folded into i)."""
    nonempty = [i for i, row in enumerate(np.asarray(p)) if row.any()]
    for i in nonempty:
        for j in nonempty:
            if i != j:
                yield merge_rows(p, i, j)


def children(p: np.ndarray) -> Iterator[np.ndarray]:
    """One-step refinements: split a non-empty row, moving one part to an empty row."""
    p = np.asarray(p, dtype=np.int64)
    empty = [j for j, row in enumerate(p) if not row.any()]
    if not empty:
        return
    for i, row in enumerate(p):
        if row.sum() < 2:
            continue
        for part in product(*(range(c + 1) for c in row.tolist())):
            part = np.array(part, dtype=np.int64)
            if not part.any() or np.array_equal(part, row):
                continue
            for j in empty:
                child = p.copy()
                child[i] -= part
                child[j] = part
                yield child


@dataclass
class RefinementDag:
    patterns: np.ndarray  # (N, k, l)
    index: dict[tuple[int, ...], int]
    f: list[Rational]
    fhat: list[Rational]
    pointer: list[int]  # node index of the minimizing refinement

    def node(self, p: np.ndarray) -> int:
        try:
            return self.index[_key(p)]
        except KeyError:
            raise KeyError("pattern is not a node of this DAG") from None

    def modified(self, p: np.ndarray) -> Rational:
        return self.fhat[self.node(p)]

    def refinement(self, p: np.ndarray) -> np.ndarray:
        return self.patterns[self.pointer[self.node(p)]]


def compute_modified_fairness(patterns: np.ndarray, spec: FairnessSpec) -> RefinementDag:
    """Modified fairness and minimizing refinement for every pattern.

    Nodes are visited in decreasing number of non-empty rows; every
    refinement of a node has strictly more non-empty rows, so a node's
    value is final before it is pushed to its (at most k^2) parents.
    Ties go to the lexicographically smallest refinement.
    """
    patterns = np.asarray(patterns, dtype=np.int64)
    if patterns.ndim != 3:
        raise ValueError("patterns must be an (N, k, l) array")
    if patterns.shape[0]:
        totals = patterns[0].sum(axis=0)
        if not (patterns.sum(axis=1) == totals).all():
            raise ValueError("patterns do not share the same column sums")
    if spec.totals is not None and len(spec.totals) != patterns.shape[2]:
        raise ValueError("objective and patterns disagree on the number of attribute values")
    score = PatternEvaluator(spec)
    n_pat, k, l = patterns.shape
    f = [score(p) for p in patterns]
    if n_pat == 0 or math.prod(int(t) + 1 for t in totals) ** k >= 2**62:
        return _propagate_loop(patterns, f)
    radix = (totals + 1).astype(np.int64)
    # Mixed-radix code of the flattened pattern; code order is lexicographic order.
    weights = np.cumprod(np.tile(radix, k)[::-1])[::-1]
    weights = np.append(weights[1:], 1).reshape(k, l)
    codes = (patterns * weights).sum(axis=(1, 2))
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    if (sorted_codes[1:] == sorted_codes[:-1]).any():
        raise ValueError("duplicate patterns")
    # Rank by (f, code): equal f values are tied and broken lexicographically.
    rank = {v: r for r, v in enumerate(sorted(set(f)))}
    f_rank = np.array([rank[v] for v in f], dtype=np.int64)
    by_score = np.lexsort((codes, f_rank))
    best = np.empty(n_pat, dtype=np.int64)
    best[by_score] = np.arange(n_pat)
    rows_nonempty = patterns.sum(axis=2) > 0
    nonempty = rows_nonempty.sum(axis=1)
    for level in range(k, 1, -1):
        nodes = np.flatnonzero(nonempty == level)
        if nodes.size == 0:
            continue
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                sel = nodes[rows_nonempty[nodes, i] & rows_nonempty[nodes, j]]
                if sel.size == 0:
                    continue
                moved = patterns[sel, j]
                parent = codes[sel] + (moved * (weights[i] - weights[j])).sum(axis=1)
                pos = np.searchsorted(sorted_codes, parent)
                pos = np.minimum(pos, n_pat - 1)
                if (sorted_codes[pos] != parent).any():
                    raise ValueError("pattern set is not closed under merging")
                np.minimum.at(best, order[pos], best[sel])
    pointer = by_score[best]
    index = {_key(p): n for n, p in enumerate(patterns)}
    return RefinementDag(patterns, index, f, [f[p] for p in pointer.tolist()], pointer.tolist())


def _propagate_loop(patterns: np.ndarray, f: list[Rational]) -> RefinementDag:
    # Fallback when pattern codes would not fit in 64 bits.
    keys = [_key(p) for p in patterns]
    index = {key: n for n, key in enumerate(keys)}
    if len(index) != len(keys):
        raise ValueError("duplicate patterns")
    best = [(value, key) for value, key in zip(f, keys)]
    pointer = list(range(len(keys)))
    nonempty = (patterns.sum(axis=2) > 0).sum(axis=1)
    for node in np.argsort(-nonempty, kind="stable").tolist():
        value = best[node]
        for parent in parents(patterns[node]):
            target = index.get(_key(parent))
            if target is None:
                raise ValueError("pattern set is not closed under merging")
            if value < best[target]:
                best[target] = value
                pointer[target] = pointer[node]
    return RefinementDag(patterns, index, f, [b[0] for b in best], pointer)


def _row_groups(coarse: np.ndarray, refined: np.ndarray) -> dict[int, list[int]] | None:
    """Rows of ``refined`` that merge into each non-empty row of ``coarse``.

    A non-empty coarse row i always keeps its own slot, so refined row i
    belongs to group i; the extra parts come from rows empty in ``coarse``.
    """
    k = coarse.shape[0]
    groups = {i: [i] for i in range(k) if coarse[i].any()}
    remaining = {i: coarse[i] - refined[i] for i in groups}
    if any((r < 0).any() for r in remaining.values()):
        return None
    loose = [r for r in range(k) if r not in groups and refined[r].any()]

    def place(t: int) -> bool:
        if t == len(loose):
            return all(not r.any() for r in remaining.values())
        row = refined[loose[t]]
        for i in groups:
            if (remaining[i] >= row).all():
                remaining[i] -= row
                groups[i].append(loose[t])
                if place(t + 1):
                    return True
                groups[i].pop()
                remaining[i] += row
        return False

    return groups if place(0) else None


def center_reassign(
    a: Assignment, dataset: Dataset, refined: np.ndarray
) -> tuple[Assignment, np.ndarray]:
    """Split clusters of ``a`` so its pattern becomes ``refined``, at equal cost.

    Every split-off part takes a slot that is empty in ``a`` and inherits
    the center of the cluster it came from, so the new center array is a
    multiset of the old centers.
    """
    refined = np.asarray(refined, dtype=np.int64)
    coarse = pattern_of(a, dataset)
    if refined.shape != coarse.shape:
        raise ValueError(f"refined pattern must have shape {coarse.shape}")
    groups = _row_groups(coarse, refined)
    if groups is None:
        raise ValueError("target pattern is not a refinement of the assignment's pattern")
    labels = a.labels.copy()
    centers = np.array(a.centers, copy=True)
    for i, rows in groups.items():
        for attr in range(dataset.l):
            members = np.flatnonzero((a.labels == i) & (dataset.attrs == attr))
            start = 0
            for r in rows:
                take = int(refined[r, attr])
                labels[members[start : start + take]] = r
                start += take
        for r in rows:
            centers[r] = a.centers[i]
    return Assignment(labels, centers), centers


def nonmergeable_pareto(
    dataset: Dataset,
    centers: np.ndarray,
    cost_spec: CostSpec,
    fairness: FairnessSpec,
    *,
    order: Sequence[int] | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> ParetoFront:
    """Front filtered on the modified objective, emitted as center-reassigned clusterings.

    Each entry's fairness is the true objective of the emitted clustering
    (equal to the modified value of the DP pattern) and its cost is the DP
    cost, which center reassignment preserves.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    table = dp_build(dataset, centers, cost_spec, order, max_cells=max_cells)
    pats, costs = table.patterns()
    dag = compute_modified_fairness(pats, fairness)
    survivors = pareto_filter((float(c), dag.fhat[n], n) for n, c in enumerate(costs))
    entries = []
    for cost, fhat, node in survivors:
        base = reconstruct(table, pats[node], centers)
        target = dag.patterns[dag.pointer[node]]
        split, _ = center_reassign(base, dataset, target)
        entries.append(FrontEntry(cost, fhat, target, split))
    return ParetoFront(
        entries, cost_spec, fairness, {"algorithm": "dp-modified", "patterns": len(pats)}
    )
