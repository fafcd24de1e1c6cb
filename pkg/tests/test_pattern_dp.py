import itertools
import math

import numpy as np
import pytest
from conftest import fronts_equal, random_instance

from fairfront.core import CostSpec, Dataset, raw_assignment_cost
from fairfront.fairness import FairnessSpec, Kind, pattern_of
from fairfront.oracle import brute_force_pattern_costs
from fairfront.pattern_dp import (
    BudgetExceeded,
    assignment_pareto,
    dp_build,
    pareto_filter,
    pattern_count_estimate,
    reconstruct,
)

P1 = CostSpec(1)


def test_line_instance_table(line):
    ds, centers = line
    t = dp_build(ds, centers, P1)
    expected = {((1, 0), (0, 1)): 0, ((1, 1), (0, 0)): 10, ((0, 1), (1, 0)): 20, ((0, 0), (1, 1)): 10}
    pats, costs = t.patterns()
    assert len(pats) == 4
    for p, c in zip(pats, costs):
        assert expected[tuple(map(tuple, p.tolist()))] == c
    assert t.key_counts == [1, 2, 4]


def test_reconstruct_line(line):
    ds, centers = line
    t = dp_build(ds, centers, P1)
    a = reconstruct(t, np.array([[1, 0], [0, 1]]), centers)
    assert a.labels.tolist() == [0, 1]


def test_empty_dataset():
    ds = Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int), 2)
    centers = np.zeros((2, 2))
    t = dp_build(ds, centers, P1)
    pats, costs = t.patterns()
    assert pats.tolist() == [[[0, 0], [0, 0]]] and costs.tolist() == [0.0]
    assert len(reconstruct(t, pats[0], centers)) == 0


def test_single_cluster(rng):
    ds, _ = random_instance(rng, 6, 1)
    centers = np.array([[0.5, 0.5]])
    t = dp_build(ds, centers, CostSpec(2))
    pats, costs = t.patterns()
    assert len(pats) == 1
    assert costs[0] == raw_assignment_cost(reconstruct(t, pats[0], centers), ds, CostSpec(2))


@pytest.mark.parametrize("seed", range(8))
def test_level_key_counts(seed):
    rng = np.random.default_rng(seed)
    ds, centers = random_instance(rng, 12, 2)
    t = dp_build(ds, centers, CostSpec(2), keep_levels=True)
    seen = [0, 0]
    for j in range(ds.n + 1):
        assert t.key_counts[j] == (seen[0] + 1) * (seen[1] + 1)
        assert len(t.level_patterns(j)[0]) == t.key_counts[j]
        if j < ds.n:
            seen[ds.attrs[j]] += 1


@pytest.mark.parametrize("seed", range(15))
def test_every_pattern_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    k = int(rng.integers(2, 4))
    l = int(rng.integers(1, 4))
    ds, centers = random_instance(rng, int(rng.integers(1, 8)), k, l)
    spec = CostSpec(float(rng.choice([1, 2])))
    t = dp_build(ds, centers, spec)
    brute = brute_force_pattern_costs(ds, centers, spec)
    pats, costs = t.patterns()
    assert len(pats) == len(brute)
    for p, c in zip(pats, costs):
        assert brute[tuple(p.reshape(-1).tolist())][0] == c
        a = reconstruct(t, p, centers)
        assert np.array_equal(pattern_of(a, ds), p)
        assert raw_assignment_cost(a, ds, spec) == c


def test_processing_order_does_not_change_costs(rng):
    ds, centers = random_instance(rng, 9, 3)
    spec = CostSpec(2)
    base = dict(zip(map(lambda p: p.tobytes(), dp_build(ds, centers, spec).patterns()[0]),
                    dp_build(ds, centers, spec).patterns()[1]))
    order = rng.permutation(ds.n)
    t = dp_build(ds, centers, spec, order)
    for p, c in zip(*t.patterns()):
        assert math.isclose(base[p.tobytes()], c, rel_tol=1e-12, abs_tol=1e-12)
        assert np.array_equal(pattern_of(reconstruct(t, p, centers), ds), p)


def test_errors(line):
    ds, centers = line
    with pytest.raises(ValueError, match="additive"):
        dp_build(ds, centers, CostSpec(math.inf))
    with pytest.raises(ValueError, match="permutation"):
        dp_build(ds, centers, P1, order=[0, 0])
    t = dp_build(ds, centers, P1)
    with pytest.raises(KeyError):
        t.cost(np.array([[2, 0], [0, 1]]))
    with pytest.raises(ValueError):
        t.cost(np.array([[1, 1]]))


def test_budget(rng):
    ds, centers = random_instance(rng, 20, 3)
    est = pattern_count_estimate(ds.totals, 3)
    with pytest.raises(BudgetExceeded) as info:
        dp_build(ds, centers, P1, max_cells=est - 1)
    assert info.value.estimate == est
    dp_build(ds, centers, P1, max_cells=est)


def test_pareto_filter_examples():
    pts = lambda xs: [(c, f) for c, f, _ in pareto_filter([(c, f, None) for c, f in xs])]
    assert pts([(1, 5), (2, 3), (3, 4)]) == [(1, 5), (2, 3)]
    assert pts([(1, 5), (1, 4)]) == [(1, 4)]
    assert pts([(1, 5), (2, 5)]) == [(1, 5)]
    assert pts([]) == []


def test_pareto_filter_properties(rng):
    for _ in range(100):
        cands = [(float(rng.integers(0, 10)), int(rng.integers(0, 10)), i) for i in range(15)]
        front = pareto_filter(cands)
        for a, b in itertools.pairwise(front):
            assert a[0] < b[0] and a[1] > b[1]
        for c in cands:
            assert any(f[0] <= c[0] and f[1] <= c[1] for f in front)


def test_line_front_sum_imbalance(line):
    ds, centers = line
    front = assignment_pareto(ds, centers, P1, FairnessSpec(Kind.SUM_IMBALANCE))
    assert front.raw_points() == [(0.0, 2), (10.0, 0)]
    assert front[0].assignment.labels.tolist() == [0, 1]


def test_single_group_collapses_front(rng):
    ds = Dataset(rng.normal(size=(7, 2)), [0] * 7, 1)
    spec = FairnessSpec.build("group-egal", ds, delta="1/10")
    front = assignment_pareto(ds, rng.normal(size=(3, 2)), CostSpec(2), spec)
    assert len(front) == 1


def test_nonmergeable_needs_opt_in(line):
    ds, centers = line
    with pytest.raises(ValueError, match="mergeable"):
        assignment_pareto(ds, centers, P1, FairnessSpec(Kind.MAX_IMBALANCE))
    assert len(assignment_pareto(ds, centers, P1, FairnessSpec(Kind.MAX_IMBALANCE), allow_nonmergeable=True))


def test_entries_reconstruct_exactly(rng):
    ds, centers = random_instance(rng, 10, 3)
    spec = CostSpec(2)
    front = assignment_pareto(ds, centers, spec, FairnessSpec(Kind.BALANCE))
    for e in front:
        assert raw_assignment_cost(e.assignment, ds, spec) == e.cost
        assert np.array_equal(pattern_of(e.assignment, ds), e.pattern)


def test_norm_mode_only_changes_reporting(rng):
    ds, centers = random_instance(rng, 8, 2)
    f = FairnessSpec(Kind.SUM_IMBALANCE)
    a = assignment_pareto(ds, centers, CostSpec(2), f)
    b = assignment_pareto(ds, centers, CostSpec(2, "norm"), f)
    assert fronts_equal(a, b)
    assert [c for c, _ in b.points()] == [c**0.5 for c, _ in a.points()]
