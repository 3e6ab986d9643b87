"""Data partitioning for heterogeneous clusters with non-linear processing cost."""

from .adaptive import LearnedCostModel, UpdateStrategy, plan_batch, run_batches
from .cost_model import CostFunction, asymptotic_w, evaluate, inverse, lambert_w
from .errors import (
    AsymptoticRegimeError,
    ContractError,
    DomainError,
    HetpartError,
    ModelUndefinedError,
    RecordCapExceeded,
    TheoremInapplicableError,
)
from .partition import (
    SCHEMES,
    ClusterSpec,
    Partition,
    asymptotic_nlogn,
    compute,
    dp_optimal,
    exact_analytic,
    greedy_round,
    multiplicative_closed_form,
    proportional,
    taylor_nlogn,
)

__all__ = [
    "AsymptoticRegimeError",
    "ClusterSpec",
    "ContractError",
    "CostFunction",
    "DomainError",
    "HetpartError",
    "LearnedCostModel",
    "ModelUndefinedError",
    "Partition",
    "RecordCapExceeded",
    "SCHEMES",
    "TheoremInapplicableError",
    "UpdateStrategy",
    "asymptotic_nlogn",
    "asymptotic_w",
    "compute",
    "dp_optimal",
    "evaluate",
    "exact_analytic",
    "greedy_round",
    "inverse",
    "lambert_w",
    "multiplicative_closed_form",
    "plan_batch",
    "proportional",
    "run_batches",
    "taylor_nlogn",
]
