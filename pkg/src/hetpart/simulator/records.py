"""
Sort-benchmark style records: 100 bytes each, the first 10 bytes a key of
printable characters. Bytes 10..29 carry the record index in ASCII decimal
so that a shuffled output can be audited against its input.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ..errors import RecordCapExceeded

RECORD_BYTES = 100
KEY_BYTES = 10
DEFAULT_MAX_RECORDS = 20_000_000

# '!'..'~': the 94 printable characters other than space
_KEY_LO, _KEY_HI = 33, 127


class KeyDistribution(str, Enum):
    UNIFORM = "uniform"
    SORTED = "sorted"
    REVERSE_SORTED = "reverse"
    FEW_DISTINCT = "few"


@dataclass
class RecordBatch:
    data: np.ndarray  # (count, 100) uint8
    key_distribution: KeyDistribution = KeyDistribution.UNIFORM
    seed: int | None = None

    @property
    def count(self) -> int:
        return int(self.data.shape[0])

    def keys(self) -> np.ndarray:
        return key_view(self.data)


def max_records() -> int:
    raw = os.environ.get("HETPART_MAX_RECORDS")
    return int(float(raw)) if raw else DEFAULT_MAX_RECORDS


def check_cap(count: int) -> None:
    cap = max_records()
    if count > cap:
        raise RecordCapExceeded(f"{count} records exceeds the cap of {cap} (HETPART_MAX_RECORDS)")


def key_view(records: np.ndarray) -> np.ndarray:
    """Keys as a contiguous ``S10`` array (bytewise lexicographic order)."""
    keys = np.ascontiguousarray(records[:, :KEY_BYTES])
    return keys.view(f"S{KEY_BYTES}").ravel()


def _random_keys(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.integers(_KEY_LO, _KEY_HI, size=(count, KEY_BYTES), dtype=np.uint8)


def generate_records(count: int, key_distribution="uniform", rng_seed: int = 0) -> RecordBatch:
    """Deterministic batch of ``count`` records for a given seed."""
    count = int(count)
    if count < 0:
        raise ValueError("count must be nonnegative")
    check_cap(count)
    dist = KeyDistribution(key_distribution)
    rng = np.random.default_rng(rng_seed)
    data = np.empty((count, RECORD_BYTES), dtype=np.uint8)

    if dist is KeyDistribution.FEW_DISTINCT:
        distinct = min(count, 10)
        pool = _random_keys(rng, 10)
        while len({bytes(r) for r in pool}) < 10:
            pool = _random_keys(rng, 10)
        which = rng.permutation(np.arange(count) % max(distinct, 1))
        keys = pool[which] if count else pool[:0]
    else:
        keys = _random_keys(rng, count)
        if dist is not KeyDistribution.UNIFORM and count:
            order = np.argsort(key_view(keys), kind="stable")
            if dist is KeyDistribution.REVERSE_SORTED:
                order = order[::-1]
            keys = keys[order]
    data[:, :KEY_BYTES] = keys

    idx = np.arange(count, dtype=np.uint64)
    digits = np.empty((count, 20), dtype=np.uint8)
    rest = idx.copy()
    for j in range(19, -1, -1):
        digits[:, j] = (rest % 10).astype(np.uint8) + ord("0")
        rest //= 10
    data[:, 10:30] = digits
    data[:, 30:98] = (ord("A") + (idx % 26)).astype(np.uint8)[:, None]
    data[:, 98] = ord("\r")
    data[:, 99] = ord("\n")
    return RecordBatch(data, dist, rng_seed)


def record_index(records: np.ndarray) -> np.ndarray:
    """Decode the audit index stored in bytes 10..29."""
    digits = records[:, 10:30].astype(np.uint64) - ord("0")
    out = np.zeros(records.shape[0], dtype=np.uint64)
    for j in range(20):
        out = out * np.uint64(10) + digits[:, j]
    return out


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def multiset_digest(records: np.ndarray) -> int:
    """Order-independent 64-bit hash of a set of records (with multiplicity)."""
    if records.shape[0] == 0:
        return 0
    recs = np.ascontiguousarray(records)
    wide = np.ascontiguousarray(recs[:, :96]).view("<u8")
    tail = np.ascontiguousarray(recs[:, 96:]).view("<u4").astype(np.uint64)
    words = [wide[:, j] for j in range(wide.shape[1])] + [tail[:, 0]]
    h = np.zeros(records.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j, w in enumerate(words):
            h = _mix(h * _GOLDEN + w + np.uint64(j + 1))
        return int(_mix(h + _GOLDEN).sum(dtype=np.uint64))


def digest_hex(value: int) -> str:
    return f"{value:016x}"


def is_sorted(records: np.ndarray) -> bool:
    if records.shape[0] < 2:
        return True
    keys = key_view(records)
    return bool(np.all(keys[:-1] <= keys[1:]))


def write_records(path, batch: RecordBatch | np.ndarray) -> None:
    data = batch.data if isinstance(batch, RecordBatch) else batch
    Path(path).write_bytes(np.ascontiguousarray(data).tobytes())


def read_records(path) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % RECORD_BYTES:
        raise ValueError(f"{path}: size {raw.size} is not a multiple of {RECORD_BYTES}")
    check_cap(raw.size // RECORD_BYTES)
    return raw.reshape(-1, RECORD_BYTES)
