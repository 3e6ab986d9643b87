"""Sample-sort timeline model and an in-process real sort harness."""

from .realsort import RealSortResult, run_paired_sort, run_real_sort, sequential_sort
from .records import (
    KeyDistribution,
    RecordBatch,
    digest_hex,
    generate_records,
    is_sorted,
    multiset_digest,
    read_records,
    write_records,
)
from .timeline import PHASES, PhaseDurations, SimParams, SortTimeline, simulate

__all__ = [
    "KeyDistribution",
    "PHASES",
    "PhaseDurations",
    "RealSortResult",
    "RecordBatch",
    "SimParams",
    "SortTimeline",
    "digest_hex",
    "generate_records",
    "is_sorted",
    "multiset_digest",
    "read_records",
    "run_paired_sort",
    "run_real_sort",
    "sequential_sort",
    "simulate",
    "write_records",
]
