"""
Learning an unknown cost function from observed batch durations.

A :class:`LearnedCostModel` keeps known ``(size, cost)`` points, where the
cost of a chunk is its measured duration multiplied by the speed of the node
that ran it. Between points the model is piecewise linear. Each new batch is
planned by bisecting on the common deadline with the learned table in place
of f, exactly as for a known cost.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .cost_model import CostFunction, evaluate
from .errors import ContractError
from .partition import ClusterSpec, Partition, exact_analytic, proportional

MAX_POINTS = 4096


class UpdateStrategy(str, Enum):
    REPLACE = "replace"
    OCCURRENCE_WEIGHTED_MEAN = "mean"
    MAX = "max"


@dataclass
class KnownPoint:
    size: int
    cost: float
    observations: int = 1


@dataclass
class LearnedCostModel:
    """Incrementally learned monotone cost model.

    Not thread-safe for writers: serialize calls to :meth:`observe` per
    instance. Planning from a model nobody is updating is read-only.
    """

    points: list[KnownPoint] = field(default_factory=list)
    update_strategy: UpdateStrategy = UpdateStrategy.OCCURRENCE_WEIGHTED_MEAN
    initial_guess_ratio: float = 1.0
    capacity: int = MAX_POINTS

    def __post_init__(self):
        self.update_strategy = UpdateStrategy(self.update_strategy)
        if not self.initial_guess_ratio > 0:
            raise ValueError("initial_guess_ratio must be positive")

    @property
    def known_points(self) -> list[tuple[int, float, int]]:
        return [(p.size, p.cost, p.observations) for p in self.points]

    def __len__(self):
        return len(self.points)

    def is_monotone(self) -> bool:
        return all(a.size < b.size and a.cost <= b.cost for a, b in zip(self.points, self.points[1:]))

    # -- updates ----------------------------------------------------------
    def observe(self, size: int, duration: float, speed: float) -> "LearnedCostModel":
        """Record that a chunk of ``size`` items took ``duration`` on a node of ``speed``."""
        size = int(size)
        if size <= 0:
            raise ContractError("observed size must be positive")
        if not duration > 0 or not speed > 0:
            raise ContractError("duration and speed must be positive")
        cost = float(duration) * float(speed)
        sizes = [p.size for p in self.points]
        idx = int(np.searchsorted(sizes, size))
        if idx < len(sizes) and sizes[idx] == size:
            pt = self.points[idx]
            if self.update_strategy is UpdateStrategy.REPLACE:
                pt.cost = cost
            elif self.update_strategy is UpdateStrategy.MAX:
                pt.cost = max(pt.cost, cost)
            else:
                pt.cost = (pt.cost * pt.observations + cost) / (pt.observations + 1)
            pt.observations += 1
        else:
            self.points.insert(idx, KnownPoint(size, cost))
        self._repair()
        if len(self.points) > self.capacity:
            self._evict(len(self.points) - self.capacity)
        return self

    def _repair(self) -> None:
        # pool adjacent violators: decreasing runs collapse to their observation-weighted mean
        blocks: list[list] = []  # [mean, weight, count]
        for p in self.points:
            blocks.append([p.cost, p.observations, 1])
            while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
                c, w, n = blocks.pop()
                prev = blocks[-1]
                prev[0] = (prev[0] * prev[1] + c * w) / (prev[1] + w)
                prev[1] += w
                prev[2] += n
        i = 0
        for mean, _, n in blocks:
            for p in self.points[i:i + n]:
                p.cost = mean
            i += n

    def _evict(self, count: int) -> None:
        # drop interior points whose removal changes the curve least (triangle area)
        for _ in range(count):
            pts = self.points
            best, best_area = None, math.inf
            for j in range(1, len(pts) - 1):
                a, b, c = pts[j - 1], pts[j], pts[j + 1]
                area = abs((b.size - a.size) * (c.cost - a.cost) - (c.size - a.size) * (b.cost - a.cost))
                if area < best_area:
                    best, best_area = j, area
            if best is None:
                return
            del pts[best]

    # -- queries ----------------------------------------------------------
    def tail_slope(self) -> float:
        last = self.points[-1]
        secant = last.cost / last.size
        if len(self.points) >= 2:
            prev = self.points[-2]
            seg = (last.cost - prev.cost) / (last.size - prev.size)
            return max(seg, secant)
        return secant

    def as_cost_function(self) -> CostFunction:
        """The learned curve as a table cost; the linear guess when empty."""
        if not self.points:
            return CostFunction.linear(self.initial_guess_ratio)
        pts = []
        prev = 0.0
        for p in self.points:
            # flat stretches left by repair get a relative 1e-9 rise so the table stays invertible
            c = max(p.cost, prev * (1 + 1e-9), np.nextafter(prev, np.inf))
            pts.append((float(p.size), c))
            prev = c
        slope = max(self.tail_slope(), pts[-1][1] / pts[-1][0])
        return CostFunction.table(pts, tail_slope=slope)

    def predict(self, n):
        return evaluate(self.as_cost_function(), n)

    # -- persistence ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "update_strategy": self.update_strategy.value,
            "initial_guess_ratio": self.initial_guess_ratio,
            "known_points": [[p.size, p.cost, p.observations] for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LearnedCostModel":
        pts = [KnownPoint(int(s), float(c), int(o)) for s, c, o in data.get("known_points", [])]
        model = cls(pts, UpdateStrategy(data.get("update_strategy", "mean")),
                    float(data.get("initial_guess_ratio", 1.0)))
        model.points.sort(key=lambda p: p.size)
        model._repair()
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "LearnedCostModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def observe(model: LearnedCostModel, size: int, duration: float, speed: float) -> LearnedCostModel:
    return model.observe(size, duration, speed)


def plan_batch(model: LearnedCostModel, speeds: Sequence[float], N: int) -> Partition:
    """Chunk sizes for the next batch under the current model.

    An empty model means the linear guess, i.e. a split proportional to speed.
    """
    if not model.points:
        return proportional(ClusterSpec(tuple(speeds)), N)
    spec = ClusterSpec(tuple(speeds), cost=model.as_cost_function())
    return exact_analytic(spec, N)


def _per_node(true_costs, p: int) -> list[CostFunction]:
    if isinstance(true_costs, CostFunction):
        return [true_costs] * p
    costs = list(true_costs)
    if len(costs) != p:
        raise ContractError("need one true cost function per node")
    return costs


def run_batches(model: LearnedCostModel, speeds: Sequence[float], batch_sizes: Sequence[int],
                true_costs) -> tuple[LearnedCostModel, list[float]]:
    """Plan, run (synthetically, from ``true_costs``), observe; once per batch.

    Returns the updated model and the measured makespan of each batch.
    """
    speeds = [float(k) for k in speeds]
    truth = _per_node(true_costs, len(speeds))
    makespans = []
    for N in batch_sizes:
        plan = plan_batch(model, speeds, int(N))
        durations = [evaluate(f, n) / k for f, n, k in zip(truth, plan.sizes, speeds)]
        makespans.append(max(durations))
        for n, d, k in zip(plan.sizes, durations, speeds):
            if n > 0 and d > 0:
                model.observe(n, d, k)
    return model, makespans


def read_observations(path) -> list[tuple[int, float, float]]:
    """Parse a ``size,duration,speed`` CSV; errors name the offending line."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        cols = [h.strip().lower() for h in header]
        if cols != ["size", "duration", "speed"]:
            raise ValueError(f"line 1: expected header size,duration,speed, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != 3:
                    raise ValueError(f"expected 3 fields, got {len(row)}")
                size, dur, speed = int(row[0]), float(row[1]), float(row[2])
                if size <= 0 or not dur > 0 or not speed > 0:
                    raise ValueError("size, duration and speed must be positive")
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            rows.append((size, dur, speed))
    return rows
