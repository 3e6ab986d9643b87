"""
Strictly increasing cost functions f(n) and their inverses.

A cost function gives the time needed to process ``n`` items on a processor
of unit speed; a processor of relative speed ``k`` needs ``f(n) / k``.
Builtin families are linear, power, n log n, polylog and tabulated
(piecewise-linear) costs. ``evaluate`` and ``inverse`` accept scalars or
numpy arrays.

The n log n inverse goes through the Lambert W function, which is also
exposed here together with its two-term asymptotic development.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ModelUndefinedError

FAMILIES = ("linear", "power", "nlogn", "polylog", "table")

_BISECT_MAX_ITER = 200
_BISECT_WIDTH = 1e-12


@dataclass(frozen=True)
class CostFunction:
    """Immutable cost model ``scale * family(n)``.

    Only the fields relevant to ``family`` are used: ``exponent`` for
    ``power``, ``a`` and ``b`` for ``polylog`` (``n**a * ln(n)**b``),
    ``points`` and ``tail_slope`` for ``table``.
    """

    family: str
    scale: float = 1.0
    exponent: float = 1.0
    a: float = 1.0
    b: float = 1.0
    points: tuple[tuple[float, float], ...] = ()
    tail_slope: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown cost family {self.family!r}; expected one of {FAMILIES}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.family == "power" and not self.exponent > 0:
            raise ValueError("power exponent must be positive")
        if self.family == "polylog" and not (self.a > 0 and self.b >= 0):
            raise ValueError("polylog needs a > 0 and b >= 0")
        if self.family == "table":
            pts = tuple((float(s), float(c)) for s, c in self.points)
            object.__setattr__(self, "points", pts)
            for (s0, c0), (s1, c1) in zip(pts, pts[1:]):
                if not (s1 > s0 and c1 > c0):
                    raise ValueError("table points must be strictly increasing in size and cost")
            if pts and (pts[0][0] < 0 or pts[0][1] < 0):
                raise ValueError("table points must be nonnegative")
            if self.tail_slope is not None and not self.tail_slope > 0:
                raise ValueError("tail_slope must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def linear(cls, scale: float = 1.0) -> "CostFunction":
        return cls("linear", scale)

    @classmethod
    def power(cls, exponent: float, scale: float = 1.0) -> "CostFunction":
        return cls("power", scale, exponent=exponent)

    @classmethod
    def nlogn(cls, scale: float = 1.0) -> "CostFunction":
        return cls("nlogn", scale)

    @classmethod
    def polylog(cls, a: float, b: float, scale: float = 1.0) -> "CostFunction":
        return cls("polylog", scale, a=a, b=b)

    @classmethod
    def table(cls, points: Iterable[Sequence[float]], tail_slope: float | None = None,
              scale: float = 1.0) -> "CostFunction":
        return cls("table", scale, points=tuple(tuple(p) for p in points), tail_slope=tail_slope)

    # -- config -----------------------------------------------------------
    @classmethod
    def from_config(cls, cfg: dict) -> "CostFunction":
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise ValueError("cost config must be an object with a 'family' field")
        family = str(cfg["family"]).lower()
        scale = float(cfg.get("scale", 1.0))
        if family == "linear":
            return cls.linear(scale)
        if family == "power":
            return cls.power(float(cfg.get("exponent", 2.0)), scale)
        if family == "nlogn":
            return cls.nlogn(scale)
        if family == "polylog":
            return cls.polylog(float(cfg["a"]), float(cfg["b"]), scale)
        if family == "table":
            slope = cfg.get("tail_slope")
            return cls.table(cfg.get("points", []), None if slope is None else float(slope), scale)
        raise ValueError(f"unknown cost family {family!r}; expected one of {FAMILIES}")

    def to_config(self) -> dict:
        out: dict = {"family": self.family, "scale": self.scale}
        if self.family == "power":
            out["exponent"] = self.exponent
        elif self.family == "polylog":
            out.update(a=self.a, b=self.b)
        elif self.family == "table":
            out["points"] = [list(p) for p in self.points]
            if self.tail_slope is not None:
                out["tail_slope"] = self.tail_slope
        return out

    @property
    def is_multiplicative(self) -> bool:
        return self.family in ("linear", "power")

    def __call__(self, n):
        return evaluate(self, n)

    def inverse(self, c):
        return inverse(self, c)


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr).copy(), arr.ndim == 0


def _out(arr, scalar):
    return float(arr[0]) if scalar else arr


def _table_arrays(f: CostFunction):
    if not f.points:
        raise ModelUndefinedError("table cost function has no points")
    xs = np.array([p[0] for p in f.points])
    ys = np.array([p[1] for p in f.points])
    if xs[0] > 0:
        xs = np.concatenate(([0.0], xs))
        ys = np.concatenate(([0.0], ys))
    if f.tail_slope is not None:
        slope = f.tail_slope
    elif len(xs) >= 2:
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    else:
        raise ModelUndefinedError("a single table point at size 0 defines no slope")
    return xs, ys, slope


def _unit_eval(f: CostFunction, n: np.ndarray) -> np.ndarray:
    if f.family == "linear":
        return n.copy()
    if f.family == "power":
        return n ** f.exponent
    if f.family == "nlogn":
        out = np.zeros_like(n)
        big = n > 1
        out[big] = n[big] * np.log(n[big])
        return out
    if f.family == "polylog":
        if f.b == 0:
            return n ** f.a
        out = np.zeros_like(n)
        big = n > 1
        out[big] = n[big] ** f.a * np.log(n[big]) ** f.b
        return out
    xs, ys, slope = _table_arrays(f)
    out = np.interp(n, xs, ys)
    tail = n > xs[-1]
    out[tail] = ys[-1] + slope * (n[tail] - xs[-1])
    return out


def evaluate(f: CostFunction, n):
    """Real-interpolated cost ``f~(n)`` for ``n >= 0``."""
    arr, scalar = _as_array(n)
    if np.any(arr < 0):
        raise DomainError("sizes must be nonnegative")
    out = f.scale * _unit_eval(f, arr)
    return _out(out, scalar)


def _bisect_inverse(f: CostFunction, c: np.ndarray) -> np.ndarray:
    # bracket [0, 2], doubled until it covers c
    lo = np.zeros_like(c)
    hi = np.full_like(c, 2.0)
    for _ in range(2100):
        short = _unit_eval(f, hi) < c
        if not short.any():
            break
        hi[short] *= 2.0
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo) <= _BISECT_WIDTH) or np.all((mid == lo) | (mid == hi)):
            break
        below = _unit_eval(f, mid) < c
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _unit_inverse(f: CostFunction, c: np.ndarray) -> np.ndarray:
    if f.family == "linear":
        return c.copy()
    if f.family == "power":
        return c ** (1.0 / f.exponent)
    if f.family == "nlogn":
        out = np.zeros_like(c)
        pos = c > 0
        y = c[pos]
        x = y / lambert_w(y)
        # one Newton polish on x ln x = y
        x = x - (x * np.log(x) - y) / (np.log(x) + 1.0)
        out[pos] = x
        return out
    if f.family == "table":
        xs, ys, slope = _table_arrays(f)
        out = np.interp(c, ys, xs)
        out[c <= ys[0]] = xs[0] if ys[0] > 0 else 0.0
        tail = c > ys[-1]
        out[tail] = xs[-1] + (c[tail] - ys[-1]) / slope
        return out
    if f.b == 0:
        return c ** (1.0 / f.a)
    out = np.zeros_like(c)
    pos = c > 0
    out[pos] = _bisect_inverse(f, c[pos])
    return out


def inverse(f: CostFunction, c):
    """Size ``x`` with ``evaluate(f, x) == c``; ``inverse(f, 0) == 0``."""
    arr, scalar = _as_array(c)
    if np.any(arr < 0):
        raise DomainError("costs must be nonnegative")
    out = _unit_inverse(f, arr / f.scale)
    return _out(out, scalar)


def lambert_w(x):
    """Principal branch of Lambert W for ``x >= 0`` (Halley iteration).

    Seeded with ``ln x - ln ln x`` above e and ``log1p(x)`` below.
    """
    arr, scalar = _as_array(x)
    if np.any(arr < 0):
        raise DomainError("lambert_w is only defined here for x >= 0")
    w = np.log1p(arr)
    big = arr > np.e
    if big.any():
        w[big] = asymptotic_w(arr[big])
    for _ in range(60):
        ew = np.exp(w)
        r = w * ew - arr
        wp1 = w + 1.0
        dw = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1))
        w = w - dw
        if np.all(np.abs(dw) <= 4e-16 * (1.0 + np.abs(w))):
            break
    return _out(w, scalar)


def asymptotic_w(x):
    """Two-term development ``ln x - ln ln x`` of W(x); needs ``x > e``.

    An approximation only; its error decays like ``ln ln x / ln x``.
    """
    arr, scalar = _as_array(x)
    if np.any(arr <= np.e):
        raise DomainError("asymptotic_w needs x > e")
    lx = np.log(arr)
    out = lx - np.log(lx)
    return _out(out, scalar)
