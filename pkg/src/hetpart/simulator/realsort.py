"""
In-process sample sort over worker threads with emulated node speeds.

Each worker runs the four phases on its chunk: local sort and regular
sampling, pivot reception, split by pivots and exchange, merge of the
received runs. Workers only talk through queues. Speed is emulated by
charging: a phase that burns ``t`` seconds of thread CPU time on a node of
speed ``k`` is billed ``t * k_ref / k`` where ``k_ref = max(1, max k)``.
With ``throttle="sleep"`` the worker additionally sleeps for the surcharge,
so wall-clock time shows the slowdown too.

Per-phase CPU time (not wall time) is what gets billed. When there are
fewer cores than workers, compute sections are serialized by a lock
(``exclusive``) so that one emulated node's cache traffic is not billed to
another; message passing and waiting stay concurrent.
"""

from __future__ import annotations

import os
import queue
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractError
from ..partition import ClusterSpec, Partition
from .records import (
    RecordBatch,
    check_cap,
    digest_hex,
    is_sorted,
    key_view,
    multiset_digest,
)
from .timeline import PhaseDurations, SortTimeline

DEFAULT_OVERSAMPLE = 32


class _Clock:
    def __init__(self, factor: float, throttle: str, cpu: threading.Lock | None):
        self.factor = factor
        self.throttle = throttle
        self.cpu = cpu
        self.phases = PhaseDurations()

    @contextmanager
    def phase(self, name: str):
        if self.cpu is not None:
            self.cpu.acquire()
        try:
            t0 = time.thread_time()
            yield
            spent = time.thread_time() - t0
        finally:
            if self.cpu is not None:
                self.cpu.release()
        if self.throttle == "sleep" and self.factor > 1:
            time.sleep(spent * (self.factor - 1))
        setattr(self.phases, name, getattr(self.phases, name) + spent * self.factor)


def regular_sample(sorted_keys: np.ndarray, count: int) -> np.ndarray:
    """``count`` evenly spaced keys from a sorted run (midpoints of equal slices)."""
    n = sorted_keys.shape[0]
    s = min(count, n)
    if s == 0:
        return sorted_keys[:0]
    idx = ((np.arange(s) + 0.5) * n / s).astype(np.int64)
    return sorted_keys[idx]


def choose_pivots(samples: Sequence[np.ndarray], chunk_sizes: Sequence[int],
                  targets: Sequence[float]) -> np.ndarray:
    """``p - 1`` pivots so that node j receives about ``targets[j]`` records.

    Each sample from node i stands for ``n_i / len(samples_i)`` records.
    """
    parts, weights = [], []
    for s, n in zip(samples, chunk_sizes):
        if len(s):
            parts.append(s)
            weights.append(np.full(len(s), n / len(s)))
    p = len(targets)
    if not parts:
        return np.array([b""] * (p - 1), dtype="S10")
    keys = np.concatenate(parts)
    w = np.concatenate(weights)
    order = np.argsort(keys, kind="stable")
    keys, cw = keys[order], np.cumsum(w[order])
    bounds = np.cumsum(targets)[:-1]
    pos = np.minimum(np.searchsorted(cw, bounds, side="left"), len(keys) - 1)
    return keys[pos]


@dataclass
class RealSortResult:
    timeline: SortTimeline
    digest: int
    input_digest: int | None
    sorted_ok: bool
    received: list[int]
    wall_time: float
    output: np.ndarray | None = None

    @property
    def makespan(self) -> float:
        return self.timeline.makespan

    @property
    def digest_hex(self) -> str:
        return digest_hex(self.digest)

    @property
    def permutation_ok(self) -> bool | None:
        return None if self.input_digest is None else self.input_digest == self.digest


def speed_factors(speeds: Sequence[float]) -> list[float]:
    ref = max(1.0, max(speeds))
    return [ref / k for k in speeds]


def _worker(i, chunk, factor, throttle, cpu, oversample, coord_q, pivot_q, data_qs, results,
            errors):
    try:
        p = len(data_qs)
        clock = _Clock(factor, throttle, cpu)
        with clock.phase("local_sort"):
            keys = key_view(chunk)
            order = np.argsort(keys, kind="stable")
            run = chunk[order]
            run_keys = keys[order]
        with clock.phase("pivot_exchange"):
            samples = regular_sample(run_keys, oversample).copy()
        coord_q.put((i, samples, run.shape[0]))
        pivots = pivot_q.get()
        with clock.phase("partition_split"):
            cuts = np.searchsorted(run_keys, pivots, side="right")
            pieces = np.split(run, cuts)
        for j in range(p):
            data_qs[j].put((i, pieces[j]))
        received: list = [None] * p
        for _ in range(p):
            src, piece = data_qs[i].get()
            received[src] = piece
        with clock.phase("redistribution"):
            buf = np.concatenate(received) if received else chunk[:0]
        with clock.phase("final_merge"):
            merged = buf[np.argsort(key_view(buf), kind="stable")]
        results[i] = (merged, clock.phases)
    except BaseException as exc:  # surfaced by the coordinator
        errors.append(exc)
        coord_q.put((i, None, 0))


def run_real_sort(spec: ClusterSpec, partition: Partition | Sequence[int], batch: RecordBatch,
                  oversample: int = DEFAULT_OVERSAMPLE, throttle: str = "account",
                  pivot_targets: str = "partition", verify: bool = True,
                  keep_output: bool = False, exclusive=None) -> RealSortResult:
    """Sort ``batch`` with ``spec.p`` emulated nodes holding ``partition`` chunks.

    ``pivot_targets="partition"`` sizes the output ranges like the input
    chunks; ``"uniform"`` aims for N/p records per node. ``exclusive`` may be
    a bool, ``None`` (serialize when cores < workers) or a lock shared with
    other sorts running at the same time.
    """
    sizes = list(partition.sizes if isinstance(partition, Partition) else partition)
    scheme = partition.scheme if isinstance(partition, Partition) else ""
    p = spec.p
    if len(sizes) != p:
        raise ContractError(f"partition has {len(sizes)} entries for {p} nodes")
    if sum(sizes) != batch.count:
        raise ContractError(f"partition covers {sum(sizes)} records, batch has {batch.count}")
    if oversample < 1:
        raise ContractError("oversample must be positive")
    if throttle not in ("account", "sleep"):
        raise ContractError("throttle must be 'account' or 'sleep'")
    if pivot_targets not in ("partition", "uniform"):
        raise ContractError("pivot_targets must be 'partition' or 'uniform'")
    check_cap(batch.count)
    data = batch.data
    in_digest = multiset_digest(data) if verify else None

    if batch.count == 0:
        tl = SortTimeline([PhaseDurations() for _ in range(p)], scheme,
                          {"N": 0, "model": "measured"})
        return RealSortResult(tl, 0, in_digest, True, [0] * p, 0.0,
                              data[:0] if keep_output else None)

    factors = speed_factors(spec.speeds)
    if exclusive is None:
        exclusive = (os.cpu_count() or 1) < p
    if isinstance(exclusive, bool):
        cpu = threading.Lock() if exclusive else None
    else:
        cpu = exclusive  # a lock shared with concurrently running sorts
    coord_q: queue.Queue = queue.Queue()
    pivot_qs = [queue.Queue() for _ in range(p)]
    data_qs = [queue.Queue() for _ in range(p)]
    results: list = [None] * p
    errors: list = []
    offsets = np.concatenate(([0], np.cumsum(sizes)))

    wall0 = time.perf_counter()
    threads = [
        threading.Thread(
            target=_worker,
            args=(i, data[offsets[i]:offsets[i + 1]], factors[i], throttle, cpu, oversample,
                  coord_q, pivot_qs[i], data_qs, results, errors),
            daemon=True,
        )
        for i in range(p)
    ]
    for t in threads:
        t.start()

    gathered: list = [None] * p
    for _ in range(p):
        i, samples, n = coord_q.get()
        if samples is None:
            break
        gathered[i] = samples
    if errors:
        for q in pivot_qs:
            q.put(np.array([], dtype="S10"))
        raise errors[0]
    c0 = time.thread_time()
    N = batch.count
    targets = sizes if pivot_targets == "partition" else [N / p] * p
    pivots = choose_pivots(gathered, sizes, targets)
    coord_cost = time.thread_time() - c0
    for q in pivot_qs:
        q.put(pivots)
    for t in threads:
        t.join()
    wall = time.perf_counter() - wall0
    if errors:
        raise errors[0]

    outs = [r[0] for r in results]
    phases = [r[1] for r in results]
    for ph in phases:
        ph.pivot_exchange += coord_cost
    output = np.concatenate(outs)
    tl = SortTimeline(phases, scheme, {
        "N": N,
        "model": "measured",
        "throttle": throttle,
        "speed_factors": factors,
        "received": [int(o.shape[0]) for o in outs],
    })
    return RealSortResult(
        timeline=tl,
        digest=multiset_digest(output) if verify else 0,
        input_digest=in_digest,
        sorted_ok=is_sorted(output),
        received=[int(o.shape[0]) for o in outs],
        wall_time=wall,
        output=output if keep_output else None,
    )


def sequential_sort(data: np.ndarray) -> np.ndarray:
    """Single-threaded reference sort by key."""
    return data[np.argsort(key_view(data), kind="stable")]


def run_paired_sort(spec: ClusterSpec, first: Partition, second: Partition, batch: RecordBatch,
                    concurrent: bool = True, **kwargs) -> tuple[RealSortResult, RealSortResult]:
    """Sort the same batch under two partitions.

    With ``concurrent=True`` both sorts run at once without the exclusive
    lock, so host-level slowdowns hit both arms alike and largely cancel in
    their makespan ratio.
    """
    if not concurrent:
        return (run_real_sort(spec, first, batch, **kwargs),
                run_real_sort(spec, second, batch, **kwargs))
    kwargs["exclusive"] = False
    out: list = [None, None]
    errors: list = []

    def arm(slot, part):
        try:
            out[slot] = run_real_sort(spec, part, batch, **kwargs)
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=arm, args=(0, first)),
               threading.Thread(target=arm, args=(1, second))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return out[0], out[1]
