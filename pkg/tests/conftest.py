from __future__ import annotations

import numpy as np
import pytest

from fairfront.core import CostSpec, Dataset
from fairfront.fairness import FairnessSpec, Kind

ALL_KINDS = list(Kind)


def line_instance() -> tuple[Dataset, np.ndarray]:
    """Points 0 (attr 0) and 10 (attr 1) on a line with centers 0 and 10."""
    ds = Dataset(np.array([[0.0], [10.0]]), np.array([0, 1]), 2)
    return ds, np.array([[0.0], [10.0]])


def random_instance(rng: np.random.Generator, n: int, k: int, l: int = 2, d: int = 2):
    # Integer grid coordinates keep ties common, which stresses tie handling.
    if rng.random() < 0.5:
        points = rng.integers(-3, 4, size=(n, d)).astype(float)
        centers = rng.integers(-3, 4, size=(k, d)).astype(float)
    else:
        points = rng.normal(size=(n, d))
        centers = rng.normal(size=(k, d))
    attrs = rng.integers(0, l, size=n)
    return Dataset(points, attrs, l), centers


def make_spec(kind: Kind, dataset: Dataset, rng: np.random.Generator | None = None) -> FairnessSpec:
    delta = "1/5" if rng is None else str(rng.choice(["0", "1/10", "1/5", "1/2"]))
    tau = "1/4" if rng is None else str(rng.choice(["1/4", "1/3", "1/2"]))
    return FairnessSpec.build(kind, dataset, delta=delta, tau=tau)


def front_points(front, mode: str = "sum"):
    return [(c, f) for c, f in front.with_mode(mode).points()]


def fronts_equal(a, b, rel: float = 1e-9) -> bool:
    pa, pb = a.raw_points(), b.raw_points()
    if len(pa) != len(pb):
        return False
    for (ca, fa), (cb, fb) in zip(pa, pb):
        if fa != fb:
            return False
        if abs(ca - cb) > rel * max(abs(ca), abs(cb)) + 1e-12:
            return False
    return True


@pytest.fixture
def line():
    return line_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sq():
    return CostSpec(2.0)


_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
