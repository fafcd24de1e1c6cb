"""Datasets, Euclidean clustering costs and center recomputation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

# Exponents with a defined cost; p = inf is the k-center objective.
SUPPORTED_P = (1.0, 2.0, math.inf)


class InputError(ValueError):
    """Malformed input data, reported with its location when known."""


@dataclass(frozen=True)
class Dataset:
    """Points in R^d with one sensitive attribute index per point.

    ``points`` has shape (n, d) and ``attrs`` shape (n,), values in [0, l).
    """

    points: np.ndarray
    attrs: np.ndarray
    l: int
    attr_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"points must have shape (n, d) with d >= 1, got {pts.shape}")
        attrs = np.asarray(self.attrs, dtype=np.int64).reshape(-1)
        if attrs.shape[0] != pts.shape[0]:
            raise ValueError("points and attrs differ in length")
        if self.l < 1:
            raise ValueError("l must be at least 1")
        if attrs.size and (attrs.min() < 0 or attrs.max() >= self.l):
            raise ValueError(f"attribute indices must lie in [0, {self.l})")
        pts.flags.writeable = False
        attrs.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "attrs", attrs)
        if self.attr_names and len(self.attr_names) != self.l:
            raise ValueError("attr_names must have one entry per attribute value")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def totals(self) -> np.ndarray:
        """Per-attribute counts n_a."""
        return np.bincount(self.attrs, minlength=self.l)

    def subset(self, idx: Sequence[int]) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.points[idx], self.attrs[idx], self.l, self.attr_names)


@dataclass(frozen=True)
class CostSpec:
    """Metric-based cost: Euclidean distance raised to ``p``.

    ``mode`` selects how totals are reported: ``"sum"`` is the plain sum of
    d^p, ``"norm"`` takes its 1/p-th root. For p = inf both are the maximum.
    """

    p: float = 2.0
    mode: str = "sum"

    def __post_init__(self) -> None:
        p = float(self.p)
        if p not in SUPPORTED_P:
            raise ValueError(f"p must be one of 1, 2, inf; got {self.p}")
        if self.mode not in ("sum", "norm"):
            raise ValueError(f"mode must be 'sum' or 'norm'; got {self.mode!r}")
        object.__setattr__(self, "p", p)

    @property
    def additive(self) -> bool:
        return math.isfinite(self.p)

    def report(self, total: float) -> float:
        """Convert an internal sum-of-powers total to the reported value."""
        if self.mode == "norm" and math.isfinite(self.p) and self.p != 1.0:
            return total ** (1.0 / self.p)
        return total

    def with_mode(self, mode: str) -> CostSpec:
        return CostSpec(self.p, mode)


def _check_dims(points: np.ndarray, centers: np.ndarray) -> None:
    if points.shape[-1] != centers.shape[-1]:
        raise ValueError(
            f"dimension mismatch: points have d={points.shape[-1]}, centers d={centers.shape[-1]}"
        )


def cost_matrix(points: np.ndarray, centers: np.ndarray, spec: CostSpec) -> np.ndarray:
    """Matrix of d^p(x_j, s_i), shape (n, k); plain distances for p = inf.

    Every cost in the package is read from this matrix so that the dynamic
    program, the brute-force oracle and assignment_cost see identical floats.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    _check_dims(points, centers)
    diff = points[:, None, :] - centers[None, :, :]
    sq = np.einsum("nkd,nkd->nk", diff, diff)
    if spec.p == 2.0:
        return sq
    return np.sqrt(sq)


def point_cost(x: Sequence[float], s: Sequence[float], spec: CostSpec) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    s = np.asarray(s, dtype=float).reshape(1, -1)
    return float(cost_matrix(x, s, spec)[0, 0])


@dataclass(frozen=True)
class Assignment:
    """Cluster index per point, together with the centers it refers to."""

    labels: np.ndarray
    centers: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if labels.size and (labels.min() < 0 or labels.max() >= centers.shape[0]):
            raise ValueError(f"cluster indices must lie in [0, {centers.shape[0]})")
        labels.flags.writeable = False
        centers.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "centers", centers)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def __len__(self) -> int:
        return self.labels.shape[0]


def aggregate_costs(per_point: np.ndarray, spec: CostSpec) -> float:
    """Sequential left-to-right sum (or max for p = inf) of per-point costs.

    The order matches the dynamic program's accumulation, which makes
    reconstructed costs bit-identical to table entries.
    """
    if not spec.additive:
        return float(per_point.max()) if per_point.size else 0.0
    total = 0.0
    for value in per_point.tolist():
        total += value
    return total


def assignment_cost(a: Assignment, dataset: Dataset, spec: CostSpec) -> float:
    """Cost of ``a`` on ``dataset`` as reported under ``spec.mode``."""
    return spec.report(raw_assignment_cost(a, dataset, spec))


def raw_assignment_cost(a: Assignment, dataset: Dataset, spec: CostSpec) -> float:
    """Un-rooted cost (sum of d^p, or max distance for p = inf)."""
    if len(a) != dataset.n:
        raise ValueError("assignment length does not match dataset")
    if dataset.n == 0:
        return 0.0
    costs = cost_matrix(dataset.points, a.centers, spec)
    return aggregate_costs(costs[np.arange(dataset.n), a.labels], spec)


def nearest_assignment(dataset: Dataset, centers: np.ndarray, spec: CostSpec) -> Assignment:
    """Assign every point to its closest center, lowest index on ties."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if dataset.n == 0:
        return Assignment(np.zeros(0, dtype=np.int64), centers)
    labels = np.argmin(cost_matrix(dataset.points, centers, spec), axis=1)
    return Assignment(labels, centers)


def recompute_centers(a: Assignment, dataset: Dataset, spec: CostSpec) -> np.ndarray:
    """Optimal per-cluster centers: centroid for p=2, coordinate median for p=1.

    Empty clusters keep their previous center.
    """
    if not spec.additive:
        raise ValueError("center recomputation is not defined for p = inf")
    centers = np.array(a.centers, dtype=float, copy=True)
    for i in range(a.k):
        members = dataset.points[a.labels == i]
        if members.shape[0] == 0:
            continue
        if spec.p == 2.0:
            centers[i] = members.mean(axis=0)
        else:
            centers[i] = np.median(members, axis=0)
    return centers


def load_csv(
    path: str | Path, feature_columns: Sequence[str], attr_column: str
) -> tuple[Dataset, dict[str, int]]:
    """Read a comma-separated file with a header row into a Dataset.

    Attribute values are indexed in order of first appearance; the mapping
    from raw value to index is returned alongside the dataset.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot open ({exc.strerror})") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file (no header row)") from None
        header = [h.strip() for h in header]
        wanted = list(feature_columns) + [attr_column]
        for name in wanted:
            if name not in header:
                raise InputError(f"{path}: missing column {name!r} (header: {', '.join(header)})")
        feat_idx = [header.index(c) for c in feature_columns]
        attr_idx = header.index(attr_column)

        rows: list[list[float]] = []
        attrs: list[int] = []
        mapping: dict[str, int] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}: row {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            coords = []
            for col, j in zip(feature_columns, feat_idx):
                cell = row[j].strip()
                try:
                    coords.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: row {line_no}, column {col!r}: non-numeric value {cell!r}"
                    ) from None
            value = row[attr_idx].strip()
            if value not in mapping:
                if len(mapping) == 255:
                    raise InputError(
                        f"{path}: row {line_no}, column {attr_column!r}: more than 255 distinct values"
                    )
                mapping[value] = len(mapping)
            rows.append(coords)
            attrs.append(mapping[value])
    if not rows:
        raise InputError(f"{path}: no data rows")
    dataset = Dataset(
        np.array(rows, dtype=float),
        np.array(attrs, dtype=np.int64),
        len(mapping),
        tuple(mapping),
    )
    return dataset, mapping
