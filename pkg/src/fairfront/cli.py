"""Command-line frontend: ``fairfront run`` and ``fairfront gen {gaussian,bad-example}``.

Every ``run`` flag can also come from an environment variable named
``FAIRFRONT_<FLAG>`` (upper case, dashes as underscores); flags win.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from fairfront import __version__
from fairfront.core import (
    Assignment,
    CostSpec,
    Dataset,
    InputError,
    load_csv,
    raw_assignment_cost,
    recompute_centers,
)
from fairfront.fairness import MERGEABLE_KINDS, FairnessSpec, Kind, pattern_of
from fairfront.matching import imbalance_pareto
from fairfront.nonmergeable import nonmergeable_pareto
from fairfront.oracle import OracleBudgetExceeded, brute_force_pareto, gen_bad_example, gen_gaussian
from fairfront.pattern_dp import DEFAULT_MAX_CELLS, BudgetExceeded, ParetoFront, assignment_pareto
from fairfront.seeding import DEFAULT_LLOYD_ITERS, SeedConfig, vanilla_cluster
from fairfront.svg import emit_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_INPUT = 4
EXIT_INVARIANT = 5

ENV_PREFIX = "FAIRFRONT_"
ALGORITHMS = ("dp", "dp-modified", "matching", "brute")
DEFAULT_BRUTE_BUDGET = 10**6


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass
class RunConfig:
    input: str
    features: list[str]
    attr: str
    k: int
    objective: str
    p: str = "2"
    delta: str | None = None
    tau: str | None = None
    algorithm: str = "dp"
    seed: int = 0
    lloyd_iters: int | None = None
    recenters: bool = False
    out_front: str | None = None
    out_json: str | None = None
    out_svg: str | None = None
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    budget: int | None = None
    timing: bool = False

    @property
    def p_value(self) -> float:
        return math.inf if self.p == "inf" else float(self.p)

    def validate(self) -> None:
        if self.p not in ("1", "2", "inf"):
            raise ConfigError(f"--p must be 1, 2 or inf, got {self.p!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"--algorithm must be one of {', '.join(ALGORITHMS)}")
        try:
            kind = Kind(self.objective)
        except ValueError:
            raise ConfigError(
                f"unknown objective {self.objective!r}; choose from {', '.join(k.value for k in Kind)}"
            ) from None
        if self.k < 1:
            raise ConfigError("--k must be at least 1")
        if self.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("--budget must be positive")
        if self.algorithm == "matching" and kind not in (Kind.SUM_IMBALANCE, Kind.MAX_IMBALANCE):
            raise ConfigError("--algorithm matching supports only sum-imbalance and max-imbalance")
        if self.algorithm == "dp" and kind not in MERGEABLE_KINDS:
            raise ConfigError(f"{kind.value} is not mergeable; use --algorithm dp-modified")
        if self.algorithm != "brute" and self.p == "inf":
            raise ConfigError("p = inf is only supported by --algorithm brute")
        if self.lloyd_iters is not None and self.lloyd_iters > 0 and self.p != "2":
            raise ConfigError("Lloyd iterations need p = 2; pass --lloyd-iters 0")
        if self.recenters and self.p == "inf":
            raise ConfigError("--recenters is not defined for p = inf")


def _fmt(x: float) -> str:
    return repr(float(x))


def _fraction(x) -> str:
    return str(Fraction(x))


def _pattern_str(p: np.ndarray) -> str:
    return ";".join(str(v) for v in np.asarray(p).reshape(-1).tolist())


def _check_front(front: ParetoFront, dataset: Dataset) -> None:
    prev = None
    for e in front:
        if prev is not None and not (e.cost >= prev.cost and e.fairness < prev.fairness):
            raise InvariantViolation("front is not sorted by cost with strictly improving fairness")
        if e.assignment is not None:
            if not np.array_equal(pattern_of(e.assignment, dataset), e.pattern):
                raise InvariantViolation("front entry's assignment does not realize its pattern")
            actual = raw_assignment_cost(e.assignment, dataset, front.cost_spec)
            if not math.isclose(actual, e.cost, rel_tol=1e-9, abs_tol=1e-12):
                raise InvariantViolation(f"front entry cost {e.cost} differs from its assignment's {actual}")
        prev = e


def compute_front(cfg: RunConfig, dataset: Dataset, centers: np.ndarray) -> ParetoFront:
    cost_spec = CostSpec(cfg.p_value, "sum")
    try:
        fairness = FairnessSpec.build(cfg.objective, dataset, delta=cfg.delta, tau=cfg.tau)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kind = fairness.kind
    if kind in (Kind.BALANCE, Kind.SUM_IMBALANCE, Kind.MAX_IMBALANCE) and dataset.l != 2:
        raise ConfigError(f"{kind.value} needs exactly two attribute values, the input has {dataset.l}")
    cells = cfg.budget or DEFAULT_MAX_CELLS
    if cfg.algorithm == "dp":
        return assignment_pareto(dataset, centers, cost_spec, fairness, max_cells=cells)
    if cfg.algorithm == "dp-modified":
        return nonmergeable_pareto(dataset, centers, cost_spec, fairness, max_cells=cells)
    if cfg.algorithm == "matching":
        variant = "sum" if kind is Kind.SUM_IMBALANCE else "max"
        return imbalance_pareto(dataset, centers, cost_spec, variant, threads=cfg.threads)
    return brute_force_pareto(dataset, centers, cost_spec, fairness, budget=cfg.budget or DEFAULT_BRUTE_BUDGET)


def _assignments_path(front_path: Path) -> Path:
    return front_path.with_name(front_path.stem + ".assignments.csv")


def front_rows(front: ParetoFront, dataset: Dataset, cfg: RunConfig, ref_name: str) -> list[dict]:
    norm = front.cost_spec.with_mode("norm")
    rows = []
    for idx, e in enumerate(front):
        row = {
            "index": idx,
            "cost_sum_of_powers": _fmt(e.cost),
            "cost_p_norm": _fmt(norm.report(e.cost)),
            "fairness_raw": _fraction(e.fairness),
            "fairness_display": _fraction(front.fairness.display(e.fairness)),
            "pattern": _pattern_str(e.pattern),
            "assignment_ref": f"{ref_name}:e{idx}",
        }
        if cfg.recenters:
            moved = recompute_centers(e.assignment, dataset, front.cost_spec)
            row["cost_recentered"] = _fmt(raw_assignment_cost(Assignment(e.assignment.labels, moved), dataset, front.cost_spec))
        rows.append(row)
    return rows


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    """Execute one configuration; returns the process exit code."""
    started = time.perf_counter()
    cfg.validate()
    dataset, mapping = load_csv(cfg.input, cfg.features, cfg.attr)
    if cfg.k > dataset.n:
        raise ConfigError(f"--k {cfg.k} exceeds the number of points ({dataset.n})")
    p = cfg.p_value
    iters = cfg.lloyd_iters if cfg.lloyd_iters is not None else (DEFAULT_LLOYD_ITERS if p == 2.0 else 0)
    vanilla = vanilla_cluster(dataset, SeedConfig(cfg.k, cfg.seed, iters), CostSpec(p, "sum"))
    centers = vanilla.centers
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        front = compute_front(cfg, dataset, centers)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _check_front(front, dataset)

    front_path = Path(cfg.out_front) if cfg.out_front else None
    ref_name = _assignments_path(front_path).name if front_path else "assignments"
    rows = front_rows(front, dataset, cfg, ref_name)
    header = list(rows[0]) if rows else ["index"]

    if front_path:
        front_path.write_text(_csv_text(header, [list(r.values()) for r in rows]), encoding="utf-8")
        labels = [e.assignment.labels.tolist() for e in front]
        sidecar = _csv_text(
            ["point"] + [f"e{i}" for i in range(len(front))],
            [[j] + [lab[j] for lab in labels] for j in range(dataset.n)],
        )
        _assignments_path(front_path).write_text(sidecar, encoding="utf-8")

    if cfg.out_json:
        meta = {
            "version": __version__,
            # threads and timing do not affect the result
            "config": {k: v for k, v in asdict(cfg).items() if k not in ("threads", "timing")},
            "input_sha256": hashlib.sha256(Path(cfg.input).read_bytes()).hexdigest(),
            "n": dataset.n,
            "d": dataset.d,
            "attribute_mapping": mapping,
            "attribute_totals": dataset.totals.tolist(),
            "seed": cfg.seed,
            "lloyd_iters": iters,
            "centers": [[float(v) for v in c] for c in centers.tolist()],
            "vanilla_cost_sum_of_powers": vanilla.trace[-1],
            "objective": front.fairness.kind.value,
            "objective_label": front.fairness.label,
            "algorithm": cfg.algorithm,
            "p": cfg.p,
            "front": [
                r | {
                    "fairness_float": float(Fraction(r["fairness_display"])),
                    # dp-modified entries carry duplicated centers
                    "centers": e.assignment.centers.tolist(),
                }
                for r, e in zip(rows, front)
            ],
        }
        if cfg.timing:
            meta["wall_time_seconds"] = time.perf_counter() - started
        Path(cfg.out_json).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    if cfg.out_svg:
        if len(front) == 0:
            raise InvariantViolation("empty front")
        emit_svg(front, cfg.out_svg)

    print(f"{front.fairness.label} front ({cfg.algorithm}, k={cfg.k}, p={cfg.p}): {len(front)} points")
    for r in rows:
        print(f"  cost={r['cost_sum_of_powers']}  fairness={r['fairness_display']}  pattern={r['pattern']}")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _env_bool(name: str) -> bool:
    return str(_env(name, "")).strip().lower() in ("1", "true", "yes", "on")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairfront", description="Quality/fairness Pareto fronts for clustering.")
    parser.add_argument("--version", action="version", version=f"fairfront {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="compute a front for a CSV dataset")
    r.add_argument("--input", default=_env("input"), help="CSV file with a header row")
    r.add_argument("--features", default=_env("features"), help="comma-separated feature columns")
    r.add_argument("--attr", default=_env("attr"), help="sensitive attribute column")
    r.add_argument("--k", type=int, default=_env("k"))
    r.add_argument("--p", choices=("1", "2", "inf"), default=_env("p", "2"))
    r.add_argument("--objective", default=_env("objective"), help=", ".join(k.value for k in Kind))
    r.add_argument("--delta", default=_env("delta"), help="proportional slack for group-* objectives")
    r.add_argument("--tau", default=_env("tau"), help="minimum share for tau-ratio")
    r.add_argument("--algorithm", choices=ALGORITHMS, default=_env("algorithm", "dp"))
    r.add_argument("--seed", type=int, default=int(_env("seed", 0)))
    r.add_argument("--lloyd-iters", type=int, default=_env("lloyd_iters"))
    r.add_argument("--recenters", action="store_true", default=_env_bool("recenters"),
                   help="also report each entry's cost after moving centers to their optimum")
    r.add_argument("--out-front", default=_env("out_front"))
    r.add_argument("--out-json", default=_env("out_json"))
    r.add_argument("--out-svg", default=_env("out_svg"))
    r.add_argument("--threads", type=int, default=int(_env("threads", os.cpu_count() or 1)))
    r.add_argument("--budget", type=int, default=_env("budget"),
                   help="dp: cell cap (default 1e7); brute: k^n cap (default 1e6)")
    r.add_argument("--timing", action="store_true", default=_env_bool("timing"),
                   help="record wall time in the JSON sidecar (breaks byte-identical reruns)")

    g = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    gsub = g.add_subparsers(dest="generator", required=True)
    ga = gsub.add_parser("gaussian")
    ga.add_argument("--n", type=int, required=True)
    ga.add_argument("--blobs", type=int, default=2)
    ga.add_argument("--proportions", default="0.5,0.5")
    ga.add_argument("--seed", type=int, default=0)
    ga.add_argument("--dim", type=int, default=2)
    ga.add_argument("--out", default=None, help="output path (stdout if omitted)")
    gb = gsub.add_parser("bad-example")
    gb.add_argument("--m", type=int, required=True)
    gb.add_argument("--eps", type=float, default=None, help="defaults to 1/(16m)")
    gb.add_argument("--out", default=None)
    gb.add_argument("--out-centers", default=None)
    return parser


def _dataset_csv(dataset: Dataset) -> str:
    names = dataset.attr_names or tuple(str(a) for a in range(dataset.l))
    header = [f"x{i}" for i in range(dataset.d)] + ["group"]
    rows = [[_fmt(v) for v in pt] + [names[a]] for pt, a in zip(dataset.points.tolist(), dataset.attrs.tolist())]
    return _csv_text(header, rows)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _gen(args: argparse.Namespace) -> int:
    if args.generator == "gaussian":
        try:
            props = [float(v) for v in args.proportions.split(",")]
        except ValueError:
            raise ConfigError(f"--proportions must be comma-separated numbers, got {args.proportions!r}") from None
        ds = gen_gaussian(args.n, args.blobs, props, args.seed, d=args.dim)
        _emit(_dataset_csv(ds), args.out)
    else:
        eps = args.eps if args.eps is not None else 1 / (16 * args.m)
        ds, centers = gen_bad_example(args.m, eps)
        _emit(_dataset_csv(ds), args.out)
        if args.out_centers:
            _emit(_csv_text(["x0", "x1"], [[_fmt(v) for v in c] for c in centers.tolist()]), args.out_centers)
    return EXIT_OK


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    missing = [flag for flag in ("input", "features", "attr", "k", "objective") if getattr(args, flag) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + m for m in missing))
    try:
        return RunConfig(
            input=args.input,
            features=[f.strip() for f in str(args.features).split(",") if f.strip()],
            attr=args.attr,
            k=int(args.k),
            objective=args.objective,
            p=str(args.p),
            delta=args.delta,
            tau=args.tau,
            algorithm=args.algorithm,
            seed=args.seed,
            lloyd_iters=None if args.lloyd_iters is None else int(args.lloyd_iters),
            recenters=args.recenters,
            out_front=args.out_front,
            out_json=args.out_json,
            out_svg=args.out_svg,
            threads=args.threads,
            budget=None if args.budget is None else int(args.budget),
            timing=args.timing,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _gen(args)
        return run(_config_from_args(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetExceeded, OracleBudgetExceeded) as exc:
        print(f"budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"config error: cannot write output ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
