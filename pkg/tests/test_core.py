import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairfront.core import (
    Assignment,
    CostSpec,
    Dataset,
    InputError,
    assignment_cost,
    cost_matrix,
    load_csv,
    nearest_assignment,
    point_cost,
    raw_assignment_cost,
    recompute_centers,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_first_appearance_mapping(self, tmp_path):
        path = write(tmp_path, "x,y,g\n0,1,M\n2,3,F\n4,5,M\n6,7,F\n")
        ds, mapping = load_csv(path, ["x", "y"], "g")
        assert ds.n == 4 and ds.l == 2 and ds.d == 2
        assert mapping == {"M": 0, "F": 1}
        assert ds.attrs.tolist() == [0, 1, 0, 1]
        assert ds.points[3].tolist() == [6.0, 7.0]

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "x,y,g\n0,1,M\n2,oops,F\n")
        with pytest.raises(InputError, match=r"row 3, column 'y'"):
            load_csv(path, ["x", "y"], "g")

    def test_constant_attribute_gives_single_group(self, tmp_path):
        path = write(tmp_path, "x,g\n0,a\n1,a\n")
        ds, mapping = load_csv(path, ["x"], "g")
        assert ds.l == 1 and mapping == {"a": 0}

    def test_missing_column(self, tmp_path):
        path = write(tmp_path, "x,g\n0,a\n")
        with pytest.raises(InputError, match="missing column 'y'"):
            load_csv(path, ["x", "y"], "g")

    def test_empty_file(self, tmp_path):
        with pytest.raises(InputError, match="empty"):
            load_csv(write(tmp_path, ""), ["x"], "g")

    def test_header_only(self, tmp_path):
        with pytest.raises(InputError, match="no data rows"):
            load_csv(write(tmp_path, "x,g\n"), ["x"], "g")

    def test_ragged_row(self, tmp_path):
        with pytest.raises(InputError, match="row 2"):
            load_csv(write(tmp_path, "x,g\n0\n"), ["x"], "g")

    def test_too_many_groups(self, tmp_path):
        rows = "".join(f"{i},v{i}\n" for i in range(256))
        with pytest.raises(InputError, match="255"):
            load_csv(write(tmp_path, "x,g\n" + rows), ["x"], "g")

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot open"):
            load_csv(tmp_path / "nope.csv", ["x"], "g")

    def test_blank_lines_skipped(self, tmp_path):
        ds, _ = load_csv(write(tmp_path, "x,g\n1,a\n\n2,b\n"), ["x"], "g")
        assert ds.n == 2


class TestCosts:
    def test_point_cost_examples(self):
        assert point_cost((0, 0), (3, 4), CostSpec(1)) == 5
        assert point_cost((0, 0), (3, 4), CostSpec(2)) == 25
        assert point_cost((1.5, -2), (1.5, -2), CostSpec(2)) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            point_cost((0, 0), (1, 2, 3), CostSpec(2))

    def test_unsupported_p(self):
        with pytest.raises(ValueError):
            CostSpec(3)
        with pytest.raises(ValueError):
            CostSpec(2, "median")

    def test_assignment_cost_examples(self, line):
        ds, centers = line
        own = Assignment([0, 1], centers)
        both = Assignment([0, 0], centers)
        assert assignment_cost(own, ds, CostSpec(1)) == 0
        assert assignment_cost(both, ds, CostSpec(1)) == 10
        assert assignment_cost(both, ds, CostSpec(2, "norm")) == 10
        assert raw_assignment_cost(both, ds, CostSpec(2, "norm")) == 100

    def test_inf_is_max_distance(self, line):
        ds, centers = line
        assert assignment_cost(Assignment([0, 0], centers), ds, CostSpec(math.inf)) == 10
        assert assignment_cost(Assignment([0, 1], centers), ds, CostSpec(math.inf)) == 0

    def test_assignment_length_checked(self, line):
        ds, centers = line
        with pytest.raises(ValueError):
            assignment_cost(Assignment([0], centers), ds, CostSpec(2))

    def test_labels_in_range(self):
        with pytest.raises(ValueError):
            Assignment([0, 2], np.zeros((2, 1)))

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=1, max_size=12),
        st.sampled_from([1.0, 2.0]),
    )
    def test_additive_over_points(self, pts, p):
        pts = np.array(pts)
        centers = np.array([[0.0, 0.0], [1.0, -1.0]])
        ds = Dataset(pts, np.zeros(len(pts), dtype=int), 1)
        spec = CostSpec(p)
        a = nearest_assignment(ds, centers, spec)
        per_point = cost_matrix(pts, centers, spec)[np.arange(len(pts)), a.labels]
        assert (per_point >= 0).all()
        assert math.isclose(raw_assignment_cost(a, ds, spec), per_point.sum(), rel_tol=1e-12, abs_tol=1e-12)


class TestRecompute:
    def test_centroid(self):
        ds = Dataset(np.array([[0.0, 0.0], [2.0, 0.0]]), [0, 0], 1)
        a = Assignment([0, 0], np.array([[9.0, 9.0]]))
        assert recompute_centers(a, ds, CostSpec(2)).tolist() == [[1.0, 0.0]]

    def test_median(self):
        ds = Dataset(np.array([[0.0, 0.0], [0.0, 0.0], [9.0, 0.0]]), [0, 0, 0], 1)
        a = Assignment([0, 0, 0], np.array([[5.0, 5.0]]))
        assert recompute_centers(a, ds, CostSpec(1)).tolist() == [[0.0, 0.0]]

    def test_empty_cluster_keeps_center(self):
        ds = Dataset(np.array([[0.0, 0.0]]), [0], 1)
        a = Assignment([0], np.array([[1.0, 1.0], [5.0, 5.0]]))
        assert recompute_centers(a, ds, CostSpec(2))[1].tolist() == [5.0, 5.0]

    def test_inf_rejected(self):
        ds = Dataset(np.array([[0.0]]), [0], 1)
        with pytest.raises(ValueError):
            recompute_centers(Assignment([0], [[0.0]]), ds, CostSpec(math.inf))


class TestDataset:
    def test_attr_range(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), [0, 2], 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), [0], 1)

    def test_totals_sum_to_n(self, rng):
        ds = Dataset(rng.normal(size=(30, 3)), rng.integers(0, 4, 30), 4)
        assert ds.totals.sum() == ds.n

    def test_immutable(self, line):
        ds, _ = line
        with pytest.raises(ValueError):
            ds.points[0, 0] = 1.0

    def test_subset(self, line):
        ds, _ = line
        assert ds.subset([1]).points.tolist() == [[10.0]]
