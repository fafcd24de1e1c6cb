"""Patterns and pattern-based fairness objectives.

Every objective is expressed as a value to *minimize*; Balance is negated.
Values are exact (``Fraction`` or ``int``) so that dominance comparisons
never depend on float rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from fairfront.core import Assignment, Dataset

Rational = Union[Fraction, int]


def as_fraction(value: float | str | Fraction | int) -> Fraction:
    """Exact rational for a user-supplied parameter.

    Floats go through their shortest repr, so ``0.05`` becomes ``1/20``
    rather than the nearest binary fraction.
    """
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


class Kind(enum.Enum):
    BALANCE = "balance"
    GROUP_UTIL = "group-util"
    GROUP_UTIL_SUM = "group-util-sum"
    GROUP_EGAL = "group-egal"
    GROUP_EGAL_SUM = "group-egal-sum"
    SUM_IMBALANCE = "sum-imbalance"
    MAX_IMBALANCE = "max-imbalance"
    TAU_RATIO = "tau-ratio"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Kind.BALANCE: "Balance",
    Kind.GROUP_UTIL: "Group Utilitarian",
    Kind.GROUP_UTIL_SUM: "Group Utilitarian-Sum",
    Kind.GROUP_EGAL: "Group Egalitarian",
    Kind.GROUP_EGAL_SUM: "Group Egalitarian-Sum",
    Kind.SUM_IMBALANCE: "Sum of Imbalances",
    Kind.MAX_IMBALANCE: "Max Imbalance",
    Kind.TAU_RATIO: "tau-ratio shortfall",
}

MERGEABLE_KINDS = frozenset(
    {
        Kind.BALANCE,
        Kind.GROUP_UTIL,
        Kind.GROUP_UTIL_SUM,
        Kind.GROUP_EGAL,
        Kind.GROUP_EGAL_SUM,
        Kind.SUM_IMBALANCE,
    }
)
VIOLATION_KINDS = frozenset({Kind.GROUP_UTIL, Kind.GROUP_UTIL_SUM, Kind.GROUP_EGAL, Kind.GROUP_EGAL_SUM})
TWO_GROUP_KINDS = frozenset({Kind.BALANCE, Kind.SUM_IMBALANCE, Kind.MAX_IMBALANCE})


@dataclass(frozen=True)
class ProportionalBounds:
    """Per-attribute upper (alpha) and lower (beta) group-fraction bounds."""

    alpha: tuple[Fraction, ...]
    beta: tuple[Fraction, ...]
    delta: Fraction | None = None

    def __post_init__(self) -> None:
        alpha = tuple(as_fraction(v) for v in self.alpha)
        beta = tuple(as_fraction(v) for v in self.beta)
        if len(alpha) != len(beta):
            raise ValueError("alpha and beta must have the same length")
        for a, b in zip(alpha, beta):
            if not (0 <= b <= a <= 1):
                raise ValueError(f"bounds must satisfy 0 <= beta <= alpha <= 1, got beta={b}, alpha={a}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def l(self) -> int:
        return len(self.alpha)

    @classmethod
    def from_delta(cls, delta: float | str | Fraction, totals: Sequence[int]) -> ProportionalBounds:
        """Bounds (1 +/- delta) * p_a around the population proportions, clamped to [0, 1]."""
        delta = as_fraction(delta)
        if delta < 0:
            raise ValueError("delta must be non-negative")
        n = int(sum(int(t) for t in totals))
        if n == 0:
            raise ValueError("cannot derive proportions from an empty dataset")
        props = [Fraction(int(t), n) for t in totals]
        alpha = tuple(min(Fraction(1), (1 + delta) * p) for p in props)
        beta = tuple(max(Fraction(0), (1 - delta) * p) for p in props)
        return cls(alpha, beta, delta)


@dataclass(frozen=True)
class FairnessSpec:
    kind: Kind
    bounds: ProportionalBounds | None = None
    tau: Fraction | None = None
    # Population totals n_a; used by the tau-ratio quota.
    totals: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in VIOLATION_KINDS and self.bounds is None:
            raise ValueError(f"{kind.value} requires proportional bounds")
        if kind is Kind.TAU_RATIO:
            if self.tau is None or self.totals is None:
                raise ValueError("tau-ratio requires tau and the per-attribute totals")
            tau = as_fraction(self.tau)
            if not (0 < tau <= 1):
                raise ValueError("tau must lie in (0, 1]")
            object.__setattr__(self, "tau", tau)
            object.__setattr__(self, "totals", tuple(int(t) for t in self.totals))

    @property
    def mergeable(self) -> bool:
        return self.kind in MERGEABLE_KINDS

    @property
    def label(self) -> str:
        return self.kind.label

    def display(self, value: Rational) -> Fraction:
        """Value as users read it (Balance re-negated, larger is fairer)."""
        return -Fraction(value) if self.kind is Kind.BALANCE else Fraction(value)

    @classmethod
    def build(
        cls,
        name: str | Kind,
        dataset: Dataset | None = None,
        *,
        delta: float | str | Fraction | None = None,
        tau: float | str | Fraction | None = None,
    ) -> FairnessSpec:
        """Spec from a CLI-style objective name, deriving bounds from ``dataset``."""
        kind = Kind(name)
        totals = tuple(int(t) for t in dataset.totals) if dataset is not None else None
        if kind in VIOLATION_KINDS:
            if delta is None or totals is None:
                raise ValueError(f"{kind.value} needs --delta and a dataset")
            return cls(kind, bounds=ProportionalBounds.from_delta(delta, totals))
        if kind is Kind.TAU_RATIO:
            if tau is None or totals is None:
                raise ValueError("tau-ratio needs --tau and a dataset")
            return cls(kind, tau=as_fraction(tau), totals=totals)
        return cls(kind)


def pattern_of(a: Assignment | np.ndarray, dataset: Dataset, k: int | None = None) -> np.ndarray:
    """k x l matrix of counts: entry [i, a] is the number of attribute-a points in cluster i."""
    labels = a.labels if isinstance(a, Assignment) else np.asarray(a, dtype=np.int64)
    if k is None:
        if not isinstance(a, Assignment):
            raise ValueError("k is required when passing raw labels")
        k = a.k
    flat = labels * dataset.l + dataset.attrs
    return np.bincount(flat, minlength=k * dataset.l).reshape(k, dataset.l).astype(np.int64)


def delta_violation(count: int, size: int, alpha: Fraction, beta: Fraction) -> Fraction:
    """Smallest non-negative slack that puts count/size within [beta, alpha]."""
    if size == 0:
        return Fraction(0)
    frac = Fraction(int(count), int(size))
    return max(Fraction(0), beta - frac, frac - alpha)


def merge_rows(p: np.ndarray, i: int, j: int) -> np.ndarray:
    """Add row j into row i and zero row j."""
    p = np.array(p, dtype=np.int64, copy=True)
    k = p.shape[0]
    if not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"row index out of range for k={k}: ({i}, {j})")
    if i == j:
        raise ValueError("cannot merge a row with itself")
    p[i] += p[j]
    p[j] = 0
    return p


def _row_term(spec: FairnessSpec, row: tuple[int, ...]):
    """Per-cluster quantity the objective aggregates over clusters."""
    kind = spec.kind
    if kind is Kind.BALANCE:
        r, b = row
        if r == 0 and b == 0:
            return None
        if r == 0 or b == 0:
            return Fraction(0)
        return Fraction(min(r, b), max(r, b))
    if kind in (Kind.SUM_IMBALANCE, Kind.MAX_IMBALANCE):
        return abs(row[0] - row[1])
    if kind is Kind.TAU_RATIO:
        return max(spec.tau * t - c for t, c in zip(spec.totals, row))
    size = sum(row)
    bounds = spec.bounds
    return tuple(delta_violation(c, size, bounds.alpha[a], bounds.beta[a]) for a, c in enumerate(row))


def _aggregate(spec: FairnessSpec, terms: list, l: int) -> Rational:
    kind = spec.kind
    if kind is Kind.BALANCE:
        present = [t for t in terms if t is not None]
        # No non-empty cluster at all (n = 0): treated as perfectly balanced.
        return -min(present) if present else Fraction(-1)
    if kind is Kind.SUM_IMBALANCE:
        return sum(terms)
    if kind is Kind.MAX_IMBALANCE:
        return max(terms, default=0)
    if kind is Kind.TAU_RATIO:
        return max(Fraction(0), *terms)
    per_attr = list(zip(*terms)) if terms else [() for _ in range(l)]
    if kind is Kind.GROUP_UTIL:
        return sum((max(col, default=Fraction(0)) for col in per_attr), Fraction(0))
    if kind is Kind.GROUP_UTIL_SUM:
        return sum((sum(col, Fraction(0)) for col in per_attr), Fraction(0))
    if kind is Kind.GROUP_EGAL:
        return max((max(col, default=Fraction(0)) for col in per_attr), default=Fraction(0))
    if kind is Kind.GROUP_EGAL_SUM:
        return max((sum(col, Fraction(0)) for col in per_attr), default=Fraction(0))
    raise AssertionError(f"unhandled objective {kind}")


def _check_width(spec: FairnessSpec, l: int) -> None:
    kind = spec.kind
    if kind in TWO_GROUP_KINDS and l != 2:
        raise ValueError(f"{kind.value} is defined for exactly two attribute values, got l={l}")
    if kind is Kind.TAU_RATIO and len(spec.totals) != l:
        raise ValueError("pattern width does not match the tau-ratio totals")
    if kind in VIOLATION_KINDS and spec.bounds.l != l:
        raise ValueError(f"bounds cover l={spec.bounds.l} attributes, pattern has l={l}")


def evaluate(spec: FairnessSpec, p: np.ndarray) -> Rational:
    """Unfairness of a pattern under ``spec`` (lower is fairer)."""
    p = np.asarray(p, dtype=np.int64)
    if p.ndim != 2:
        raise ValueError("pattern must be a k x l matrix")
    _check_width(spec, p.shape[1])
    return _aggregate(spec, [_row_term(spec, row) for row in map(tuple, p.tolist())], p.shape[1])


class PatternEvaluator:
    """Memoizing wrapper around :func:`evaluate`.

    Per-cluster terms are cached by row, and whole values by the sorted
    rows (objectives are invariant under row permutations).
    """

    def __init__(self, spec: FairnessSpec) -> None:
        self.spec = spec
        self._rows: dict[tuple[int, ...], object] = {}
        self._cache: dict[tuple, Rational] = {}
        self._width: int | None = None

    def __call__(self, p: np.ndarray) -> Rational:
        rows = list(map(tuple, np.asarray(p).tolist()))
        key = tuple(sorted(rows))
        try:
            return self._cache[key]
        except KeyError:
            pass
        l = len(rows[0]) if rows else 0
        if self._width != l:
            _check_width(self.spec, l)
            self._width = l
        terms = []
        for row in key:
            try:
                terms.append(self._rows[row])
            except KeyError:
                term = self._rows[row] = _row_term(self.spec, row)
                terms.append(term)
        value = self._cache[key] = _aggregate(self.spec, terms, l)
        return value
