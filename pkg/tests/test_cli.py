import csv
import json
import re
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from fairfront.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_INPUT, main
from fairfront.core import CostSpec
from fairfront.fairness import FairnessSpec, Kind
from fairfront.pattern_dp import FrontEntry, ParetoFront
from fairfront.svg import emit_svg, render_svg


@pytest.fixture
def two_points(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text("x,g\n0,a\n10,b\n")
    return path


@pytest.fixture
def gaussian(tmp_path):
    path = tmp_path / "g.csv"
    assert main(["gen", "gaussian", "--n", "30", "--blobs", "3", "--seed", "2", "--out", str(path)]) == 0
    return path


def run(args, tmp_path, name="out"):
    front = tmp_path / f"{name}.csv"
    js = tmp_path / f"{name}.json"
    code = main(["run", *args, "--out-front", str(front), "--out-json", str(js)])
    return code, front, js


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_two_point_front(two_points, tmp_path):
    code, front, js = run(
        ["--input", str(two_points), "--features", "x", "--attr", "g", "--k", "2", "--p", "1",
         "--objective", "sum-imbalance", "--lloyd-iters", "0"], tmp_path)
    assert code == 0
    rows = read_rows(front)
    assert [(float(r["cost_sum_of_powers"]), Fraction(r["fairness_raw"])) for r in rows] == [(0, 2), (10, 0)]
    assert list(rows[0]) == ["index", "cost_sum_of_powers", "cost_p_norm", "fairness_raw",
                             "fairness_display", "pattern", "assignment_ref"]
    meta = json.loads(js.read_text())
    assert meta["attribute_mapping"] == {"a": 0, "b": 1}
    assert "wall_time_seconds" not in meta
    side = read_rows(tmp_path / "out.assignments.csv")
    assert [r["point"] for r in side] == ["0", "1"]


@pytest.mark.parametrize("alg", ["dp", "dp-modified", "matching", "brute"])
def test_algorithms_agree_on_small_input(alg, tmp_path):
    path = tmp_path / "small.csv"
    main(["gen", "gaussian", "--n", "10", "--blobs", "2", "--seed", "5", "--out", str(path)])
    base = ["--input", str(path), "--features", "x0,x1", "--attr", "group", "--k", "2",
            "--objective", "sum-imbalance", "--seed", "1"]
    _, ref, _ = run(base, tmp_path, "ref")
    code, out, _ = run(base + ["--algorithm", alg], tmp_path, alg)
    assert code == 0
    pick = lambda p: [(r["cost_sum_of_powers"], r["fairness_raw"]) for r in read_rows(p)]
    assert pick(out) == pick(ref)


def test_byte_identical_reruns(gaussian, tmp_path):
    args = ["--input", str(gaussian), "--features", "x0,x1", "--attr", "group", "--k", "3",
            "--objective", "group-util", "--delta", "0.1", "--seed", "4"]
    run(args, tmp_path, "a")
    first = [(tmp_path / f).read_bytes() for f in ("a.csv", "a.json", "a.assignments.csv")]
    run(args, tmp_path, "a")
    second = [(tmp_path / f).read_bytes() for f in ("a.csv", "a.json", "a.assignments.csv")]
    assert first == second


def test_config_errors(gaussian, tmp_path, capsys):
    base = ["--input", str(gaussian), "--features", "x0,x1", "--attr", "group", "--k", "2"]
    assert run(base + ["--objective", "balance", "--algorithm", "matching"], tmp_path)[0] == EXIT_CONFIG
    assert "matching" in capsys.readouterr().err
    assert run(base + ["--objective", "max-imbalance"], tmp_path)[0] == EXIT_CONFIG
    assert run(base + ["--objective", "balance", "--p", "inf"], tmp_path)[0] == EXIT_CONFIG
    assert run(base + ["--objective", "group-util"], tmp_path)[0] == EXIT_CONFIG
    assert run(base + ["--objective", "nope"], tmp_path)[0] == EXIT_CONFIG
    assert run(base + ["--objective", "balance", "--p", "1", "--lloyd-iters", "3"], tmp_path)[0] == EXIT_CONFIG
    assert main(["run", "--input", str(gaussian)]) == EXIT_CONFIG


def test_budget_refusal(gaussian, tmp_path, capsys):
    base = ["--input", str(gaussian), "--features", "x0,x1", "--attr", "group", "--k", "3", "--objective", "balance"]
    assert run(base + ["--budget", "10"], tmp_path)[0] == EXIT_BUDGET
    assert re.search(r"needs about [\d,]+ cells", capsys.readouterr().err)
    assert run(base + ["--algorithm", "brute"], tmp_path)[0] == EXIT_BUDGET


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,g\n1,a\nzz,b\n")
    code, _, _ = run(["--input", str(bad), "--features", "x", "--attr", "g", "--k", "1",
                      "--objective", "balance"], tmp_path)
    assert code == EXIT_INPUT
    assert run(["--input", str(tmp_path / "missing.csv"), "--features", "x", "--attr", "g", "--k", "1",
                "--objective", "balance"], tmp_path)[0] == EXIT_INPUT


def test_argparse_rejects_bad_choice(two_points):
    with pytest.raises(SystemExit) as info:
        main(["run", "--input", str(two_points), "--p", "3"])
    assert info.value.code == 2


def test_environment_overrides(gaussian, tmp_path, monkeypatch):
    monkeypatch.setenv("FAIRFRONT_K", "2")
    monkeypatch.setenv("FAIRFRONT_OBJECTIVE", "sum-imbalance")
    monkeypatch.setenv("FAIRFRONT_FEATURES", "x0,x1")
    monkeypatch.setenv("FAIRFRONT_ATTR", "group")
    code, front, js = run(["--input", str(gaussian)], tmp_path)
    assert code == 0
    assert json.loads(js.read_text())["config"]["k"] == 2


def test_recenters_column(gaussian, tmp_path):
    code, front, _ = run(["--input", str(gaussian), "--features", "x0,x1", "--attr", "group", "--k", "2",
                          "--objective", "balance", "--recenters"], tmp_path)
    assert code == 0
    for r in read_rows(front):
        assert float(r["cost_recentered"]) <= float(r["cost_sum_of_powers"]) + 1e-9


def test_timing_is_opt_in(gaussian, tmp_path):
    run(["--input", str(gaussian), "--features", "x0,x1", "--attr", "group", "--k", "2",
         "--objective", "balance", "--timing"], tmp_path)
    assert "wall_time_seconds" in json.loads((tmp_path / "out.json").read_text())


def test_svg_output(two_points, tmp_path):
    svg = tmp_path / "f.svg"
    code = main(["run", "--input", str(two_points), "--features", "x", "--attr", "g", "--k", "2", "--p", "1",
                 "--objective", "sum-imbalance", "--lloyd-iters", "0", "--out-svg", str(svg)])
    assert code == 0
    assert svg.read_text().count('class="front-point"') == 2


def test_gen_bad_example_csv(tmp_path, capsys):
    assert main(["gen", "bad-example", "--m", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "x0,x1,group" and len(lines) == 17


def test_module_entry_point(two_points):
    out = subprocess.run([sys.executable, "-m", "fairfront.cli", "run", "--input", str(two_points),
                          "--features", "x", "--attr", "g", "--k", "2", "--objective", "balance"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "Balance front" in out.stdout


def _front(points, kind=Kind.SUM_IMBALANCE):
    return ParetoFront([FrontEntry(c, f) for c, f in points], CostSpec(2), FairnessSpec(kind))


def test_svg_markers_and_step(tmp_path):
    path = emit_svg(_front([(0.0, 2), (10.0, 0)]), tmp_path / "p.svg")
    text = path.read_text()
    assert text.startswith("<svg") and text.count("<circle") == 2
    assert 'class="front-step"' in text and "Sum of Imbalances" in text


def test_svg_balance_renegated():
    text = render_svg(_front([(1.0, Fraction(-1, 2)), (4.0, Fraction(-1))], Kind.BALANCE))
    labels = re.findall(r'text-anchor="end">([-\d.e]+)</text>', text)
    assert all(float(v) >= 0 for v in labels)


def test_svg_empty_front():
    with pytest.raises(ValueError):
        render_svg(_front([]))


def test_svg_single_point():
    assert render_svg(_front([(3.0, 1)])).count("<circle") == 1


def test_svg_unwritable(tmp_path):
    with pytest.raises(OSError):
        emit_svg(_front([(1.0, 0)]), tmp_path / "missing" / "x.svg")
