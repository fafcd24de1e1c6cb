"""Quality/fairness Pareto fronts for clustering with fixed centers."""

__version__ = "0.1.0"

from fairfront.core import Assignment, CostSpec, Dataset, InputError, assignment_cost, load_csv
from fairfront.fairness import FairnessSpec, Kind, ProportionalBounds, evaluate, merge_rows, pattern_of
from fairfront.matching import imbalance_pareto
from fairfront.nonmergeable import center_reassign, compute_modified_fairness, nonmergeable_pareto
from fairfront.pattern_dp import BudgetExceeded, ParetoFront, assignment_pareto, dp_build, pareto_filter
from fairfront.seeding import SeedConfig, kmeanspp_seed, vanilla_cluster

__all__ = [
    "Assignment",
    "BudgetExceeded",
    "CostSpec",
    "Dataset",
    "FairnessSpec",
    "InputError",
    "Kind",
    "ParetoFront",
    "ProportionalBounds",
    "SeedConfig",
    "assignment_cost",
    "assignment_pareto",
    "center_reassign",
    "compute_modified_fairness",
    "dp_build",
    "evaluate",
    "imbalance_pareto",
    "kmeanspp_seed",
    "load_csv",
    "merge_rows",
    "nonmergeable_pareto",
    "pareto_filter",
    "pattern_of",
    "vanilla_cluster",
]
