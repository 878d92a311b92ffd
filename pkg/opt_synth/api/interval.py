"""
Interval abstract domains over partially ordered carriers.

An interval `(lo, hi)` over a carrier Z stands for the set
`{z in Z | lo <= z <= hi}`. Either endpoint may be marked open, in which case
the matching inequality is strict. Operators that do not track openness return
closed intervals, which only ever grows the denoted set.

Real intervals use the carrier extended with `-inf` / `+inf` (Python's
`math.inf`); Boolean intervals are ordered `False < True` and never need
infinite endpoints or open ends, so `BoolInterval` has exactly three
inhabitants: (f, f), (f, t) and (t, t).

Endpoints may be numpy arrays, in which case an `Interval` is a batch of
elementwise intervals. All operators below accept both forms; scalar inputs
produce Python scalars.
"""
import dataclasses
import math
from typing import Any, Callable, Collection, Tuple

import numpy as np


NEG_INF = -math.inf
POS_INF = math.inf


class _Bottom:
    """The empty interval. Kept for completeness; no operator produces it."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"


BOTTOM = _Bottom()


def _unbox(x: Any) -> Any:
    """Turns 0-d numpy values back into Python scalars."""
    if isinstance(x, np.ndarray) and x.ndim == 0:
        return x.item()
    if isinstance(x, np.generic):
        return x.item()
    return x


@dataclasses.dataclass(frozen=True)
class Interval:
    lo: Any
    hi: Any
    lo_open: Any = False
    hi_open: Any = False

    def __post_init__(self):
        assert np.all(
            np.asarray(self.lo) <= np.asarray(self.hi)
        ), f"Interval endpoints out of order: ({self.lo}, {self.hi})"

    def midpoint(self):
        return _unbox((np.asarray(self.lo) + np.asarray(self.hi)) / 2)

    def width(self):
        return _unbox(np.asarray(self.hi) - np.asarray(self.lo))

    def is_singleton(self):
        return _unbox(np.asarray(self.lo) == np.asarray(self.hi))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def is_closed(self) -> bool:
        return not (np.any(self.lo_open) or np.any(self.hi_open))

    def closure(self) -> "Interval":
        return Interval(self.lo, self.hi)

    def subsumes(self, other: "Interval") -> bool:
        """Does this interval contain every value of `other`?"""
        lo_ok = np.where(
            np.logical_and(self.lo_open, np.logical_not(other.lo_open)),
            np.less(self.lo, other.lo),
            np.less_equal(self.lo, other.lo),
        )
        hi_ok = np.where(
            np.logical_and(self.hi_open, np.logical_not(other.hi_open)),
            np.less(other.hi, self.hi),
            np.less_equal(other.hi, self.hi),
        )
        return bool(np.all(lo_ok) and np.all(hi_ok))

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __str__(self):
        left = "(" if np.any(self.lo_open) else "["
        right = ")" if np.any(self.hi_open) else "]"
        return f"{left}{self.lo},{self.hi}{right}"


BoolInterval = Interval

FF = Interval(False, False)
FT = Interval(False, True)
TT = Interval(True, True)
TOP = Interval(NEG_INF, POS_INF)


def abstract_singleton(v: Any) -> Interval:
    """The abstraction function: `v -> (v, v)`."""
    return Interval(v, v)


def contains(iv: Interval, v: Any) -> bool:
    if iv is BOTTOM:
        return False
    above = np.where(iv.lo_open, np.less(iv.lo, v), np.less_equal(iv.lo, v))
    below = np.where(iv.hi_open, np.less(v, iv.hi), np.less_equal(v, iv.hi))
    return bool(np.all(above) and np.all(below))


def lift_monotone(
    f: Callable, *args: Interval, decreasing: Collection[int] = ()
) -> Interval:
    """Interval transformer for a function monotone in each argument.

    `f` is evaluated once on the tuple of lower endpoints and once on the tuple
    of upper endpoints. Arguments whose indices are listed in `decreasing` are
    monotone decreasing, so their endpoints are swapped before evaluation.
    The result is closed.

    For real-valued results, an infinite endpoint fed into a bound saturates
    that bound: a `-inf` in the lower tuple (or `+inf` from a decreasing
    argument) makes the lower bound `-inf`, and symmetrically for the upper
    bound.

    Example:
        lift_monotone(np.add, Interval(1, 2), Interval(3, 4)) -> Interval(4, 6)
    """
    lo_args, hi_args = [], []
    lo_saturated = hi_saturated = False
    for i, arg in enumerate(args):
        if i in decreasing:
            lo_arg, hi_arg = arg.hi, arg.lo
            lo_ext = np.equal(lo_arg, POS_INF)
            hi_ext = np.equal(hi_arg, NEG_INF)
        else:
            lo_arg, hi_arg = arg.lo, arg.hi
            lo_ext = np.equal(lo_arg, NEG_INF)
            hi_ext = np.equal(hi_arg, POS_INF)
        lo_args.append(lo_arg)
        hi_args.append(hi_arg)
        lo_saturated = np.logical_or(lo_saturated, lo_ext)
        hi_saturated = np.logical_or(hi_saturated, hi_ext)

    with np.errstate(invalid="ignore"):
        lo = f(*lo_args)
        hi = f(*hi_args)
    if np.issubdtype(np.asarray(lo).dtype, np.floating):
        lo = np.where(lo_saturated, NEG_INF, lo)
        hi = np.where(hi_saturated, POS_INF, hi)
    return Interval(_unbox(lo), _unbox(hi))


def _with_ends(iv: Interval, lo_open: Any, hi_open: Any) -> Interval:
    return Interval(iv.lo, iv.hi, _unbox(lo_open), _unbox(hi_open))


def interval_add(a: Interval, b: Interval) -> Interval:
    """A sum endpoint is open when either summand's endpoint is."""
    return _with_ends(
        lift_monotone(np.add, a, b),
        np.logical_or(a.lo_open, b.lo_open),
        np.logical_or(a.hi_open, b.hi_open),
    )


def interval_neg(a: Interval) -> Interval:
    return Interval(
        _unbox(np.negative(a.hi)), _unbox(np.negative(a.lo)), a.hi_open, a.lo_open
    )


def _corner_attained(x, x_open, y, y_open):
    """Is the product of two endpoints a value the factors actually reach?

    Both endpoints must be reached, unless one of them is a reached zero.
    """
    x_closed = np.logical_not(x_open)
    y_closed = np.logical_not(y_open)
    reached_zero = np.logical_or(
        np.logical_and(x_closed, np.equal(x, 0)), np.logical_and(y_closed, np.equal(y, 0))
    )
    return np.logical_or(np.logical_and(x_closed, y_closed), reached_zero)


def interval_mul(a: Interval, b: Interval) -> Interval:
    """Multiplication is not monotone; take the hull of the endpoint products.

    A bound is open unless some corner reaching it is attained. `0 * inf` is
    undefined in IEEE arithmetic; such products saturate to `-inf` for the
    lower bound and `+inf` for the upper bound.
    """
    corners = [
        (a.lo, a.lo_open, b.lo, b.lo_open),
        (a.lo, a.lo_open, b.hi, b.hi_open),
        (a.hi, a.hi_open, b.lo, b.lo_open),
        (a.hi, a.hi_open, b.hi, b.hi_open),
    ]
    with np.errstate(invalid="ignore"):
        products = np.stack(
            np.broadcast_arrays(*[np.multiply(x, y) for x, _, y, _ in corners])
        ).astype(float)
    attained = np.broadcast_to(
        np.stack(np.broadcast_arrays(*[_corner_attained(*c) for c in corners])),
        products.shape,
    )
    undefined = np.isnan(products)
    lo = np.min(np.where(undefined, NEG_INF, products), axis=0)
    hi = np.max(np.where(undefined, POS_INF, products), axis=0)
    closed = np.any(undefined, axis=0)
    lo_open = np.logical_not(
        np.logical_or(closed, np.any(np.logical_and(attained, products == lo), axis=0))
    )
    hi_open = np.logical_not(
        np.logical_or(closed, np.any(np.logical_and(attained, products == hi), axis=0))
    )
    return Interval(_unbox(lo), _unbox(hi), _unbox(lo_open), _unbox(hi_open))


def interval_indicator(c: BoolInterval) -> Interval:
    """Maps (f, f) -> (0, 0), (f, t) -> (0, 1), (t, t) -> (1, 1)."""
    return Interval(
        _unbox(np.asarray(c.lo, dtype=float)), _unbox(np.asarray(c.hi, dtype=float))
    )


def bool_and(a: BoolInterval, b: BoolInterval) -> BoolInterval:
    return lift_monotone(np.logical_and, a, b)


def bool_or(a: BoolInterval, b: BoolInterval) -> BoolInterval:
    return lift_monotone(np.logical_or, a, b)


def bool_not(a: BoolInterval) -> BoolInterval:
    return Interval(_unbox(np.logical_not(a.hi)), _unbox(np.logical_not(a.lo)))


def threshold_ge(x: Interval, c: Interval) -> BoolInterval:
    """Abstract `x >= c`; increasing in `x`, decreasing in `c`.

    `x >= c` can only hold when `x.hi >= c.lo`, strictly so if either of those
    endpoints is open.

    Example:
        threshold_ge(Interval(65, 65), Interval(50, 75)) -> (f, t)
        threshold_ge(Interval(0, 0), Interval(-1, 0, hi_open=True)) -> (t, t)
        threshold_ge(Interval(-1, 0, hi_open=True), Interval(0, 0)) -> (f, f)
    """
    result = lift_monotone(np.greater_equal, x, c, decreasing=(1,))
    strict = np.logical_or(x.hi_open, c.lo_open)
    hi = np.where(strict, np.greater(x.hi, c.lo), result.hi)
    return Interval(result.lo, _unbox(hi))


def split_interval(iv: Interval) -> Tuple[Interval, Interval]:
    """Splits a finite interval at its midpoint into two closed halves that
    share the midpoint.

    Example:
        split_interval(Interval(50, 100)) -> (Interval(50, 75), Interval(75, 100))
    """
    if not iv.is_finite():
        raise ValueError(f"Cannot split an interval with infinite endpoints: {iv}")
    if not iv.lo < iv.hi:
        raise ValueError(f"Cannot split a degenerate interval: {iv}")
    mid = (iv.lo + iv.hi) / 2
    return Interval(iv.lo, mid), Interval(mid, iv.hi)


def partition_interval(iv: Interval) -> Tuple[Interval, Interval, Interval]:
    """Partitions a finite interval at its midpoint `m` into the part below
    `m`, the singleton `m` and the part above `m`. The three pieces are
    disjoint and their union is `iv`, keeping `iv`'s own open ends.

    Example:
        partition_interval(Interval(50, 100)) -> ([50,75), [75,75], (75,100])
    """
    if not iv.is_finite():
        raise ValueError(f"Cannot split an interval with infinite endpoints: {iv}")
    mid = (iv.lo + iv.hi) / 2
    if not iv.lo < mid < iv.hi:
        raise ValueError(f"Cannot split an interval this narrow: {iv}")
    return (
        Interval(iv.lo, mid, iv.lo_open, True),
        Interval(mid, mid),
        Interval(mid, iv.hi, True, iv.hi_open),
    )
