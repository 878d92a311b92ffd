import itertools
import math

import numpy as np
import pytest

from opt_synth.api.interval import (
    BOTTOM,
    FF,
    FT,
    TT,
    Interval,
    abstract_singleton,
    bool_and,
    bool_not,
    bool_or,
    contains,
    interval_add,
    interval_indicator,
    interval_mul,
    interval_neg,
    lift_monotone,
    partition_interval,
    split_interval,
    threshold_ge,
)
from opt_synth.api.utils import DEFAULT_SEED


def _random_interval(rng, scale=10.0):
    a, b = sorted(rng.uniform(-scale, scale, size=2))
    return Interval(float(a), float(b))


def _random_bool_interval(rng):
    return [FF, FT, TT][rng.integers(3)]


def _sample(rng, iv):
    if isinstance(iv.lo, (bool, np.bool_)):
        return bool(rng.integers(int(iv.lo), int(iv.hi) + 1))
    return float(rng.uniform(iv.lo, iv.hi))


def test_interval_rejects_out_of_order_endpoints():
    with pytest.raises(AssertionError):
        Interval(1.0, 0.0)


def test_interval_helpers():
    iv = Interval(50, 100)
    assert iv.midpoint() == 75
    assert iv.width() == 50
    assert not iv.is_singleton()
    assert abstract_singleton(3).is_singleton()
    assert Interval(0, 100).subsumes(iv)
    assert not iv.subsumes(Interval(0, 60))
    assert str(Interval(0.5, 0.75)) == "[0.5,0.75]"
    assert not Interval(-math.inf, 0).is_finite()


def test_bottom_is_inert():
    assert not contains(BOTTOM, 0.0)
    assert repr(BOTTOM) == "BOTTOM"


@pytest.mark.parametrize(
    "op,concrete",
    [
        (interval_add, lambda x, y: x + y),
        (interval_mul, lambda x, y: x * y),
    ],
)
def test_real_operators_contain_concrete_results(op, concrete):
    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(1000):
        a, b = _random_interval(rng), _random_interval(rng)
        x, y = _sample(rng, a), _sample(rng, b)
        assert contains(op(a, b), concrete(x, y))


@pytest.mark.parametrize(
    "op,concrete",
    [
        (bool_and, lambda x, y: x and y),
        (bool_or, lambda x, y: x or y),
    ],
)
def test_boolean_operators_contain_concrete_results(op, concrete):
    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(1000):
        a, b = _random_bool_interval(rng), _random_bool_interval(rng)
        x, y = _sample(rng, a), _sample(rng, b)
        assert contains(op(a, b), concrete(x, y))


def test_indicator_and_threshold_contain_concrete_results():
    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(1000):
        b = _random_bool_interval(rng)
        v = _sample(rng, b)
        assert contains(interval_indicator(b), float(v))

        x, c = _random_interval(rng), _random_interval(rng)
        xv, cv = _sample(rng, x), _sample(rng, c)
        assert contains(threshold_ge(x, c), xv >= cv)


def test_operators_are_exact_on_singletons():
    for x, y in itertools.product([-2.5, 0.0, 1.0, 3.0], repeat=2):
        assert interval_add(abstract_singleton(x), abstract_singleton(y)) == Interval(x + y, x + y)
        assert interval_mul(abstract_singleton(x), abstract_singleton(y)) == Interval(x * y, x * y)
        assert threshold_ge(abstract_singleton(x), abstract_singleton(y)) == abstract_singleton(x >= y)
    for x, y in itertools.product([False, True], repeat=2):
        assert bool_and(abstract_singleton(x), abstract_singleton(y)) == abstract_singleton(x and y)
        assert bool_or(abstract_singleton(x), abstract_singleton(y)) == abstract_singleton(x or y)
    assert bool_not(TT) == FF
    assert bool_not(FT) == FT
    assert interval_neg(Interval(1.0, 2.0)) == Interval(-2.0, -1.0)


def test_lift_monotone_matches_endpoint_grid():
    def f(x, y):
        return np.add(x, np.multiply(2.0, y))

    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(20):
        a, b = _random_interval(rng), _random_interval(rng)
        lifted = lift_monotone(f, a, b)
        grid = [
            f(x, y)
            for x in np.linspace(a.lo, a.hi, 10)
            for y in np.linspace(b.lo, b.hi, 10)
        ]
        assert lifted.lo == pytest.approx(min(grid), abs=1e-12)
        assert lifted.hi == pytest.approx(max(grid), abs=1e-12)


def test_lift_monotone_decreasing_argument():
    lifted = lift_monotone(np.subtract, Interval(5, 6), Interval(1, 2), decreasing=(1,))
    assert lifted == Interval(3, 5)


def test_infinite_endpoints_saturate():
    assert interval_add(Interval(-math.inf, 0.0), Interval(1.0, 2.0)) == Interval(-math.inf, 2.0)
    product = interval_mul(Interval(0.0, 1.0), Interval(-math.inf, math.inf))
    assert product == Interval(-math.inf, math.inf)


@pytest.mark.parametrize(
    "x,c,expected",
    [
        (Interval(65, 65), Interval(50, 75), FT),
        (Interval(80, 90), Interval(50, 75), TT),
        (Interval(10, 20), Interval(50, 75), FF),
    ],
)
def test_threshold_ge_cases(x, c, expected):
    assert threshold_ge(x, c) == expected


def test_array_endpoints():
    a = Interval(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    b = abstract_singleton(np.array([1.0, -1.0]))
    total = interval_add(a, b)
    np.testing.assert_array_equal(total.lo, [1.0, 0.0])
    np.testing.assert_array_equal(total.hi, [2.0, 1.0])
    labels = threshold_ge(total, abstract_singleton(0.5))
    np.testing.assert_array_equal(labels.lo, [True, False])
    np.testing.assert_array_equal(labels.hi, [True, True])


@pytest.mark.parametrize(
    "iv,expected",
    [
        (Interval(50, 100), (Interval(50, 75), Interval(75, 100))),
        (Interval(0, 100), (Interval(0, 50), Interval(50, 100))),
        (Interval(-1, 1), (Interval(-1, 0), Interval(0, 1))),
    ],
)
def test_split_interval(iv, expected):
    assert split_interval(iv) == expected


def test_split_children_cover_parent():
    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(100):
        parent = _random_interval(rng)
        left, right = split_interval(parent)
        v = _sample(rng, parent)
        assert contains(left, v) or contains(right, v)


@pytest.mark.parametrize("iv", [Interval(1.0, 1.0), Interval(0.0, math.inf)])
def test_split_interval_rejects_unsplittable(iv):
    with pytest.raises(ValueError):
        split_interval(iv)


def _random_half_open_interval(rng, scale=10.0):
    iv = _random_interval(rng, scale)
    return Interval(iv.lo, iv.hi, bool(rng.integers(2)), bool(rng.integers(2)))


def test_open_ends():
    iv = Interval(0.0, 1.0, lo_open=True)
    assert not contains(iv, 0.0)
    assert contains(iv, 1.0) and contains(iv, 0.5)
    assert not contains(Interval(0.0, 1.0, hi_open=True), 1.0)
    assert str(iv) == "(0.0,1.0]"
    assert Interval(0.0, 1.0).subsumes(iv)
    assert not iv.subsumes(Interval(0.0, 1.0))
    assert iv.subsumes(Interval(0.0, 0.5, lo_open=True))
    assert iv.closure() == Interval(0.0, 1.0)
    assert not iv.is_closed() and Interval(0.0, 1.0).is_closed()


def test_open_ends_propagate():
    below_zero = Interval(-1.0, 0.0, hi_open=True)
    assert interval_add(below_zero, abstract_singleton(2.0)) == Interval(1.0, 2.0, False, True)
    assert interval_neg(below_zero) == Interval(0.0, 1.0, True, False)
    # Scaling by a negative constant flips which end is open.
    assert interval_mul(below_zero, abstract_singleton(-2.0)) == Interval(0.0, 2.0, True, False)
    # A reached zero factor makes the product exactly zero.
    assert interval_mul(below_zero, abstract_singleton(0.0)) == Interval(0.0, 0.0)
    above_zero = Interval(0.0, 1.0, lo_open=True)
    assert interval_mul(above_zero, above_zero) == Interval(0.0, 1.0, True, False)
    assert interval_mul(below_zero, above_zero) == Interval(-1.0, 0.0, False, True)


def test_open_threshold_decides_sign():
    zero = abstract_singleton(0.0)
    assert threshold_ge(Interval(-1.0, 0.0, hi_open=True), zero) == FF
    assert threshold_ge(Interval(-1.0, 0.0), zero) == FT
    assert threshold_ge(Interval(0.0, 1.0, lo_open=True), zero) == TT
    assert threshold_ge(zero, Interval(0.0, 1.0, lo_open=True)) == FF
    assert threshold_ge(zero, Interval(-1.0, 0.0, hi_open=True)) == TT


def test_half_open_operators_contain_concrete_results():
    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(1000):
        a, b = _random_half_open_interval(rng), _random_half_open_interval(rng)
        x, y = _sample(rng, a), _sample(rng, b)
        if not (contains(a, x) and contains(b, y)):
            continue
        assert contains(interval_add(a, b), x + y)
        assert contains(interval_mul(a, b), x * y)
        assert contains(interval_neg(a), -x)
        assert contains(threshold_ge(a, b), x >= y)


@pytest.mark.parametrize(
    "iv,expected",
    [
        (
            Interval(50, 100),
            (Interval(50, 75, False, True), Interval(75, 75), Interval(75, 100, True, False)),
        ),
        (
            Interval(-1, 0, hi_open=True),
            (Interval(-1, -0.5, False, True), Interval(-0.5, -0.5), Interval(-0.5, 0, True, True)),
        ),
    ],
)
def test_partition_interval(iv, expected):
    assert partition_interval(iv) == expected


def test_partition_covers_parent_without_overlap():
    rng = np.random.default_rng(DEFAULT_SEED)
    for _ in range(100):
        parent = _random_half_open_interval(rng)
        pieces = partition_interval(parent)
        for v in [parent.lo, parent.midpoint(), parent.hi, _sample(rng, parent)]:
            assert sum(contains(piece, v) for piece in pieces) == int(contains(parent, v))


@pytest.mark.parametrize(
    "iv", [Interval(1.0, 1.0), Interval(0.0, math.inf), Interval(0.0, 5e-324)]
)
def test_partition_interval_rejects_unsplittable(iv):
    with pytest.raises(ValueError):
        partition_interval(iv)
