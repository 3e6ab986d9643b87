"""
Chunk-size computation for processors of heterogeneous speed.

Every scheme returns a :class:`Partition` of ``N`` items over ``p`` nodes.
The uniformly related schemes (``proportional``, ``taylor_nlogn``,
``exact_analytic``, ``multiplicative_closed_form``, ``asymptotic_nlogn``)
first produce a real-valued solution and then settle the at most ``p``
leftover items with :func:`greedy_round`. ``dp_optimal`` handles arbitrary
per-node cost functions.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cost_model import CostFunction, evaluate, inverse
from .errors import (
    AsymptoticRegimeError,
    ContractError,
    TheoremInapplicableError,
)

__all__ = [
    "ClusterSpec",
    "Partition",
    "proportional",
    "taylor_nlogn",
    "exact_analytic",
    "multiplicative_closed_form",
    "asymptotic_nlogn",
    "greedy_round",
    "dp_optimal",
    "SCHEMES",
    "compute",
    "check_scheme",
]


def parse_speeds(value) -> tuple[float, ...]:
    """Accept a list of speeds or the compact ``{"pattern": [...], "repeat": n}`` form."""
    if isinstance(value, dict):
        pattern = list(value["pattern"])
        speeds = pattern * int(value.get("repeat", 1))
    else:
        speeds = list(value)
    return tuple(float(k) for k in speeds)


@dataclass(frozen=True)
class ClusterSpec:
    """Relative speeds plus either one shared cost function or one per node.

    With neither, costs are treated as linear.
    """

    speeds: tuple[float, ...]
    cost: CostFunction | None = None
    costs: tuple[CostFunction, ...] | None = None

    def __post_init__(self):
        speeds = tuple(float(k) for k in self.speeds)
        object.__setattr__(self, "speeds", speeds)
        if len(speeds) < 1:
            raise ValueError("a cluster needs at least one node")
        if not all(k > 0 and math.isfinite(k) for k in speeds):
            raise ValueError("speeds must be positive and finite")
        if self.cost is not None and self.costs is not None:
            raise ValueError("give either a shared cost or per-node costs, not both")
        if self.costs is not None:
            object.__setattr__(self, "costs", tuple(self.costs))
            if len(self.costs) != len(speeds):
                raise ValueError("per-node costs must match the number of speeds")

    @property
    def p(self) -> int:
        return len(self.speeds)

    @property
    def k(self) -> np.ndarray:
        return np.asarray(self.speeds)

    @property
    def uniformly_related(self) -> bool:
        return self.costs is None

    @property
    def shared_cost(self) -> CostFunction:
        if self.costs is not None:
            raise ContractError("scheme needs one shared cost function (uniformly related nodes)")
        return self.cost if self.cost is not None else CostFunction.linear()

    def cost_of(self, i: int) -> CostFunction | None:
        if self.costs is not None:
            return self.costs[i]
        return self.cost

    def node_time(self, i: int, n: float) -> float:
        f = self.cost_of(i)
        work = float(n) if f is None else evaluate(f, n)
        return work / self.speeds[i]

    def node_times(self, i: int, n) -> np.ndarray:
        f = self.cost_of(i)
        n = np.asarray(n, dtype=float)
        work = n if f is None else evaluate(f, n)
        return work / self.speeds[i]

    @classmethod
    def from_config(cls, cfg: dict) -> "ClusterSpec":
        speeds = parse_speeds(cfg["speeds"])
        cost = costs = None
        if "costs" in cfg and cfg["costs"] is not None:
            costs = tuple(CostFunction.from_config(c) for c in cfg["costs"])
        elif "cost" in cfg and cfg["cost"] is not None:
            cost = CostFunction.from_config(cfg["cost"])
        return cls(speeds, cost=cost, costs=costs)

    def to_config(self) -> dict:
        out: dict = {"speeds": list(self.speeds)}
        if self.cost is not None:
            out["cost"] = self.cost.to_config()
        if self.costs is not None:
            out["costs"] = [c.to_config() for c in self.costs]
        return out


@dataclass(frozen=True)
class Partition:
    sizes: tuple[int, ...]
    projected_times: tuple[float, ...]
    makespan: float
    scheme: str = ""
    real_sizes: tuple[float, ...] | None = field(default=None, compare=False)
    deadline: float | None = field(default=None, compare=False)

    @classmethod
    def from_sizes(cls, spec: ClusterSpec, sizes: Sequence[int], scheme: str = "",
                   real_sizes=None, deadline: float | None = None) -> "Partition":
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) != spec.p:
            raise ContractError(f"partition has {len(sizes)} entries for {spec.p} nodes")
        if any(s < 0 for s in sizes):
            raise ContractError("chunk sizes must be nonnegative")
        times = tuple(spec.node_time(i, s) for i, s in enumerate(sizes))
        reals = None if real_sizes is None else tuple(float(r) for r in real_sizes)
        return cls(sizes, times, max(times), scheme, reals, deadline)

    @property
    def N(self) -> int:
        return sum(self.sizes)

    @property
    def p(self) -> int:
        return len(self.sizes)

    def rows(self, spec: ClusterSpec):
        for i, (s, t) in enumerate(zip(self.sizes, self.projected_times)):
            yield {"node": i, "speed": spec.speeds[i], "size": s, "projected_time": t}

    def to_csv(self, spec: ClusterSpec) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["node", "speed", "size", "projected_time"],
                           lineterminator="\n")
        w.writeheader()
        for row in self.rows(spec):
            w.writerow({**row, "projected_time": repr(row["projected_time"])})
        buf.write(f"# makespan={self.makespan!r}\n")
        return buf.getvalue()

    def to_dict(self, spec: ClusterSpec) -> dict:
        out = {
            "scheme": self.scheme,
            "N": self.N,
            "makespan": self.makespan,
            "nodes": list(self.rows(spec)),
        }
        if self.deadline is not None:
            out["deadline"] = self.deadline
        if self.real_sizes is not None:
            out["real_sizes"] = list(self.real_sizes)
        return out

    def to_json(self, spec: ClusterSpec) -> str:
        return json.dumps(self.to_dict(spec), indent=2)


def read_partition_sizes(text: str) -> list[int]:
    """Chunk sizes from a CSV or JSON partition written by :class:`Partition`."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        return [int(n["size"]) for n in sorted(data["nodes"], key=lambda r: int(r["node"]))]
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return [int(r["size"]) for r in sorted(rows, key=lambda r: int(r["node"]))]


# -- rounding -------------------------------------------------------------

def _fill(base: list[int], extra: int, spec: ClusterSpec) -> list[int]:
    """Hand out ``extra`` unit items one by one to the node finishing first.

    The key is the node's time after taking one more item; ties go to the
    lowest node index.
    """
    sizes = list(base)
    if extra <= 0:
        return sizes
    heap = [(spec.node_time(i, sizes[i] + 1), i) for i in range(spec.p)]
    heapq.heapify(heap)
    for _ in range(extra):
        _, i = heapq.heappop(heap)
        sizes[i] += 1
        heapq.heappush(heap, (spec.node_time(i, sizes[i] + 1), i))
    return sizes


def greedy_round(real_sizes: Sequence[float], spec: ClusterSpec, N: int,
                 scheme: str = "greedy_round") -> Partition:
    """Round a real solution to integers summing to ``N``.

    Sizes are floored, then each leftover item goes to the node whose time
    after receiving it is smallest. When ``spec`` carries no cost function
    the key reduces to ``(floor + delta + 1) / k``.
    """
    reals = np.asarray(real_sizes, dtype=float)
    if reals.shape != (spec.p,):
        raise ContractError(f"expected {spec.p} real sizes, got shape {reals.shape}")
    if np.any(reals < 0) or not np.all(np.isfinite(reals)):
        raise ContractError("real sizes must be finite and nonnegative")
    floors = [int(math.floor(r)) for r in reals]
    left = N - sum(floors)
    if not 0 <= left <= spec.p:
        raise ContractError(f"{left} leftover items for {spec.p} nodes; expected 0..p")
    return Partition.from_sizes(spec, _fill(floors, left, spec), scheme, real_sizes=reals)


def _settle(reals: np.ndarray, spec: ClusterSpec, N: int, scheme: str,
            deadline: float | None = None) -> Partition:
    # tolerate float noise that pushes the floors one item over N
    floors = [int(math.floor(r)) for r in reals]
    over = sum(floors) - N
    if over > 0:
        frac = sorted(range(spec.p), key=lambda i: (reals[i] - floors[i], i))
        for i in frac:
            if over == 0:
                break
            if floors[i] > 0:
                floors[i] -= 1
                over -= 1
    sizes = _fill(floors, N - sum(floors), spec)
    return Partition.from_sizes(spec, sizes, scheme, real_sizes=reals, deadline=deadline)


def _check_n(N: int, minimum: int = 0) -> int:
    if isinstance(N, bool) or int(N) != N:
        raise ContractError("N must be an integer")
    N = int(N)
    if N < minimum:
        raise ContractError(f"N must be >= {minimum}")
    return N


# -- schemes --------------------------------------------------------------

def proportional(spec: ClusterSpec, N: int) -> Partition:
    """Sizes proportional to speed: ``n_i = N k_i / K``."""
    N = _check_n(N)
    k = spec.k
    return _settle(N * k / k.sum(), spec, N, "proportional")


def _require_nlogn(spec: ClusterSpec, what: str) -> CostFunction:
    f = spec.shared_cost
    if f.family != "nlogn":
        raise TheoremInapplicableError(f"{what} needs a shared nlogn cost, got {f.family}")
    return f


def taylor_epsilon(speeds: Sequence[float], N: float) -> np.ndarray:
    """First-order correction to the proportional split for n ln n costs."""
    k = np.asarray(speeds, dtype=float)
    K = k.sum()
    lk = np.log(k)
    # sum_j k_j ln(k_j / k_i) = sum_j k_j ln k_j - K ln k_i
    inner = (k * lk).sum() - K * lk
    return N / math.log(N) * (k / K**2) * inner


def taylor_nlogn(spec: ClusterSpec, N: int) -> Partition:
    """Proportional split corrected by a Taylor development of n ln n.

    Outside the asymptotic regime a node can come out negative; such nodes
    are clamped to 0 and the rest rescaled to sum to ``N``.
    """
    _require_nlogn(spec, "taylor_nlogn")
    N = _check_n(N, 2)
    k = spec.k
    reals = N * k / k.sum() + taylor_epsilon(k, N)
    if np.any(reals < 0):
        warnings.warn("Taylor correction produced negative sizes; clamping to 0", RuntimeWarning,
                      stacklevel=2)
        reals = np.clip(reals, 0.0, None)
        reals = reals * (N / reals.sum())
    return _settle(reals, spec, N, "taylor")


def _node_inverse(spec: ClusterSpec, T: float) -> np.ndarray:
    k = spec.k
    if spec.uniformly_related:
        return np.asarray(inverse(spec.shared_cost, T * k), dtype=float)
    return np.array([inverse(f, T * ki) for f, ki in zip(spec.costs, k)])


def solve_deadline(spec: ClusterSpec, N: float, max_iter: int = 400) -> float:
    """Largest T (to float precision) with ``sum_i f^-1(T k_i) <= N``.

    The sum is increasing in T, so plain bisection on
    ``[0, max_i f_i(N) / k_i]`` converges.
    """
    if N <= 0:
        return 0.0
    hi = max(evaluate(spec.cost_of(i) or CostFunction.linear(), N) / k
             for i, k in enumerate(spec.speeds))
    lo = 0.0
    if hi <= 0:
        return 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _node_inverse(spec, mid).sum() <= N:
            lo = mid
        else:
            hi = mid
    return lo


def exact_analytic(spec: ClusterSpec, N: int) -> Partition:
    """Equal-finish-time split: solve ``sum f^-1(T k_i) = N`` for T by bisection.

    Per-node costs are accepted as well (each node then uses its own inverse).
    """
    N = _check_n(N)
    if N == 0:
        return Partition.from_sizes(spec, [0] * spec.p, "exact", real_sizes=[0.0] * spec.p,
                                    deadline=0.0)
    T = solve_deadline(spec, N)
    reals = _node_inverse(spec, T)
    return _settle(reals, spec, N, "exact", deadline=T)


def multiplicative_closed_form(spec: ClusterSpec, N: int) -> Partition:
    """Closed form ``n_i = N g(k_i) / sum_j g(k_j)`` with ``g = f^-1``.

    Valid for multiplicative costs (linear, power). A scale factor cancels
    out of the shares, so the unit-scale inverse is used.
    """
    f = spec.shared_cost
    if not f.is_multiplicative:
        raise TheoremInapplicableError(
            f"closed form needs a multiplicative cost (linear or power); {f.family} is not")
    N = _check_n(N)
    unit = CostFunction(f.family, 1.0, exponent=f.exponent)
    g = np.asarray(inverse(unit, spec.k), dtype=float)
    return _settle(N * g / g.sum(), spec, N, "multiplicative")


def nlogn_inverse_approx(x, form: str = "derived"):
    """Asymptotic approximation of the inverse of n ln n for ``x > e``.

    ``derived``: ``(x ln x + x ln ln x) / (ln x)^2``, i.e.
    ``x/ln x * (1 + ln ln x / ln x)``.
    ``short``: ``(x + x ln ln x) / (ln x)^2``, kept for comparison; it
    drops a ``ln x`` factor and is far less accurate.
    """
    x = np.asarray(x, dtype=float)
    L = np.log(x)
    LL = np.log(L)
    if form == "derived":
        return (x * L + x * LL) / L**2
    if form == "short":
        return (x + x * LL) / L**2
    raise ValueError(f"unknown form {form!r}")


def asymptotic_nlogn(spec: ClusterSpec, N: int, form: str = "derived") -> Partition:
    """O(p)-per-step approximation of ``exact_analytic`` for n ln n costs.

    Raises :class:`AsymptoticRegimeError` when N is too small for
    ``T * min(k) > e``; fall back to ``exact_analytic`` then.
    """
    _require_nlogn(spec, "asymptotic_nlogn")
    N = _check_n(N, 2)
    k = spec.k
    scale = spec.shared_cost.scale

    def total(T):
        return nlogn_inverse_approx(T * k / scale, form).sum()

    lo = math.e * (1 + 1e-12) / k.min() * scale
    if total(lo) > N:
        raise AsymptoticRegimeError(
            f"asymptotic regime not reached for N={N}; use exact_analytic")
    hi = 2 * lo
    while total(hi) < N:
        lo, hi = hi, 2 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if total(mid) <= N:
            lo = mid
        else:
            hi = mid
    reals = nlogn_inverse_approx(lo * k / scale, form)
    return _settle(reals, spec, N, "asymptotic", deadline=lo)


def dp_optimal(spec: ClusterSpec, N: int, granularity: int = 1) -> Partition:
    """Makespan-optimal integer split for arbitrary per-node costs.

    ``best[i][m]`` is the smallest makespan for ``m`` units over nodes
    ``0..i``; node ``i`` takes ``x`` units and the rest recurse. With
    ``granularity g > 1`` chunks are multiples of ``g`` and the ``N mod g``
    remainder is placed greedily, trading optimality for a ``g^2`` speedup.
    """
    N = _check_n(N)
    g = int(granularity)
    if g < 1:
        raise ContractError("granularity must be a positive integer")
    M = N // g
    units = np.arange(M + 1) * g
    cost = np.array([spec.node_times(i, units) for i in range(spec.p)])

    best = cost[0].copy()
    choice = np.zeros((spec.p, M + 1), dtype=np.int64)
    choice[0] = np.arange(M + 1)
    for i in range(1, spec.p):
        nxt = np.empty(M + 1)
        ci = cost[i]
        for m in range(M + 1):
            # x units to node i, m - x to nodes 0..i-1
            vals = np.maximum(ci[: m + 1], best[m::-1])
            x = int(np.argmin(vals))
            nxt[m] = vals[x]
            choice[i, m] = x
        best = nxt

    sizes = [0] * spec.p
    m = M
    for i in range(spec.p - 1, -1, -1):
        x = int(choice[i, m])
        sizes[i] = x * g
        m -= x
    sizes = _fill(sizes, N - M * g, spec)
    return Partition.from_sizes(spec, sizes, "dp")


SCHEMES: dict[str, Callable[..., Partition]] = {
    "proportional": proportional,
    "taylor": taylor_nlogn,
    "exact": exact_analytic,
    "multiplicative": multiplicative_closed_form,
    "asymptotic": asymptotic_nlogn,
    "dp": dp_optimal,
}


def check_scheme(scheme: str, spec: ClusterSpec) -> None:
    """Raise before any work if ``scheme`` cannot run on ``spec``."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; valid schemes: {', '.join(SCHEMES)}")
    if scheme in ("taylor", "asymptotic"):
        _require_nlogn(spec, scheme)
    elif scheme == "multiplicative":
        f = spec.shared_cost
        if not f.is_multiplicative:
            raise TheoremInapplicableError(
                f"multiplicative closed form is inapplicable: {f.family} cost is not "
                "multiplicative (needs f(ab) = f(a) f(b), i.e. linear or power)")
    elif scheme == "proportional" and not spec.uniformly_related:
        raise ContractError("proportional needs uniformly related nodes")


def compute(scheme: str, spec: ClusterSpec, N: int, dp_granularity: int = 1) -> Partition:
    check_scheme(scheme, spec)
    if scheme == "dp":
        return dp_optimal(spec, N, dp_granularity)
    return SCHEMES[scheme](spec, N)
