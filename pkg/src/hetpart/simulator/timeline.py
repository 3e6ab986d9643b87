"""
Analytic per-node timeline of a four-phase sample sort.

Phases, per node ``i`` with speed ``k_i`` and chunk ``n_i``:

* ``local_sort``       f_i(n_i) / k_i
* ``pivot_exchange``   samples to the coordinator and pivots back (comm model)
* ``partition_split``  split_cost * n_i / k_i
* ``redistribution``   bytes leaving node i over the link (comm model)
* ``final_merge``      merge_cost * received_i * log2(p) / k_i

Communication is off unless ``bandwidth`` is given.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from ..cost_model import CostFunction, evaluate
from ..errors import ContractError
from ..partition import ClusterSpec, Partition
from .records import KEY_BYTES, RECORD_BYTES

PHASES = ("local_sort", "pivot_exchange", "partition_split", "redistribution", "final_merge")


@dataclass
class PhaseDurations:
    local_sort: float = 0.0
    pivot_exchange: float = 0.0
    partition_split: float = 0.0
    redistribution: float = 0.0
    final_merge: float = 0.0

    @property
    def total(self) -> float:
        return sum(getattr(self, ph) for ph in PHASES)

    def validate(self) -> None:
        if any(getattr(self, ph) < 0 for ph in PHASES):
            raise ContractError("phase durations must be nonnegative")


@dataclass
class SortTimeline:
    per_node: list[PhaseDurations]
    scheme: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def totals(self) -> list[float]:
        return [ph.total for ph in self.per_node]

    @property
    def makespan(self) -> float:
        return max(self.totals, default=0.0)

    def phase_max(self) -> dict[str, float]:
        return {ph: max((getattr(n, ph) for n in self.per_node), default=0.0) for ph in PHASES}

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "makespan": self.makespan,
            "nodes": [{"node": i, **asdict(ph), "total": ph.total}
                      for i, ph in enumerate(self.per_node)],
            **({"meta": self.meta} if self.meta else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SortTimeline":
        nodes = [PhaseDurations(**{ph: float(n[ph]) for ph in PHASES}) for n in data["nodes"]]
        return cls(nodes, data.get("scheme", ""), data.get("meta", {}))


@dataclass
class SimParams:
    """Knobs of the timeline model.

    ``received``: ``"partition"`` means pivots are weighted so node i ends up
    with about n_i records; ``"uniform"`` gives every node N/p. ``skew``
    optionally multiplies the received estimate per node.
    """

    split_cost: float = 1.0
    merge_cost: float = 1.0
    received: str = "partition"
    skew: Sequence[float] | None = None
    bandwidth: float | None = None
    latency: float = 0.0
    oversample: int = 32
    record_bytes: int = RECORD_BYTES
    key_bytes: int = KEY_BYTES

    def __post_init__(self):
        if self.received not in ("partition", "uniform"):
            raise ValueError("received must be 'partition' or 'uniform'")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def simulate(spec: ClusterSpec, partition: Partition | Sequence[int],
             params: SimParams | None = None) -> SortTimeline:
    params = params or SimParams()
    sizes = list(partition.sizes if isinstance(partition, Partition) else partition)
    if len(sizes) != spec.p:
        raise ContractError(f"partition has {len(sizes)} entries for {spec.p} nodes")
    if params.skew is not None and len(params.skew) != spec.p:
        raise ContractError("skew needs one factor per node")
    p = spec.p
    N = sum(sizes)
    log_p = math.log2(p) if p > 1 else 0.0
    comm = params.bandwidth is not None and p > 1

    nodes = []
    for i, (n, k) in enumerate(zip(sizes, spec.speeds)):
        f = spec.cost_of(i) or CostFunction.linear()
        received = n if params.received == "partition" else N / p
        if params.skew is not None:
            received *= params.skew[i]
        ph = PhaseDurations(local_sort=evaluate(f, n) / k)
        if p > 1:
            ph.partition_split = params.split_cost * n / k
            ph.final_merge = params.merge_cost * received * log_p / k
        if comm:
            sample_bytes = 2 * params.oversample * params.key_bytes + (p - 1) * params.key_bytes
            ph.pivot_exchange = params.latency + sample_bytes / params.bandwidth
            ph.redistribution = params.latency + n * (p - 1) / p * params.record_bytes / params.bandwidth
        ph.validate()
        nodes.append(ph)
    scheme = partition.scheme if isinstance(partition, Partition) else ""
    return SortTimeline(nodes, scheme, {"N": N, "model": "analytic"})
