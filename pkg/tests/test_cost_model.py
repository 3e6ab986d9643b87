import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import lambertw

from hetpart.cost_model import CostFunction, asymptotic_w, evaluate, inverse, lambert_w
from hetpart.errors import DomainError


def _nlogn_root(c):
    # independent oracle: bracketed root of n ln n - c on n >= 1
    return brentq(lambda n: n * math.log(n) - c, 1.0, max(10.0, c), xtol=1e-13, rtol=1e-15)


def test_evaluate_families():
    assert evaluate(CostFunction.linear(2.0), 3) == 6.0
    assert evaluate(CostFunction.power(2), 7) == 49.0
    assert evaluate(CostFunction.nlogn(), math.e) == pytest.approx(math.e)
    assert evaluate(CostFunction.nlogn(), 1.0) == 0.0
    assert evaluate(CostFunction.nlogn(), 0.5) == 0.0
    f = CostFunction.polylog(a=1.0, b=2.0)
    assert evaluate(f, 10.0) == pytest.approx(10 * math.log(10) ** 2)


def test_evaluate_vectorized_matches_scalar():
    f = CostFunction.nlogn(3.0)
    ns = np.array([0.0, 1.0, 2.0, 50.0, 1e6])
    vec = evaluate(f, ns)
    assert np.allclose(vec, [evaluate(f, float(n)) for n in ns], rtol=0, atol=0)


def test_negative_size_rejected():
    with pytest.raises(DomainError):
        evaluate(CostFunction.linear(), -1)


def test_nlogn_inverse_against_bracketed_root():
    assert inverse(CostFunction.nlogn(), 1000.0) == pytest.approx(190.49060054943368, rel=1e-13)
    for c in np.logspace(-1, 14, 40):
        assert inverse(CostFunction.nlogn(), c) == pytest.approx(_nlogn_root(c), rel=1e-12)


@pytest.mark.parametrize("f", [
    CostFunction.linear(0.5),
    CostFunction.power(2),
    CostFunction.power(1.5, scale=3.0),
    CostFunction.nlogn(),
    CostFunction.nlogn(0.25),
    CostFunction.polylog(a=1.2, b=0.5),
    CostFunction.table([(10, 5.0), (20, 30.0), (40, 100.0)]),
])
@given(n=st.floats(min_value=2.0, max_value=1e9))
def test_inverse_round_trip(f, n):
    assert evaluate(f, inverse(f, evaluate(f, n))) == pytest.approx(evaluate(f, n), rel=1e-9)


def test_table_interpolates_and_extends():
    f = CostFunction.table([(10, 5.0), (20, 30.0)])
    assert evaluate(f, 5) == pytest.approx(2.5)  # segment from the origin
    assert evaluate(f, 15) == pytest.approx(17.5)
    assert evaluate(f, 30) == pytest.approx(55.0)  # last slope carried on
    assert inverse(f, 17.5) == pytest.approx(15.0)


def test_config_round_trip():
    for f in (CostFunction.nlogn(2.0), CostFunction.power(3), CostFunction.polylog(1.0, 2.0),
              CostFunction.table([(1, 1.0), (4, 9.0)], tail_slope=6.0)):
        assert CostFunction.from_config(f.to_config()) == f


def test_multiplicative_flag():
    assert CostFunction.linear().is_multiplicative
    assert CostFunction.power(2).is_multiplicative
    assert not CostFunction.nlogn().is_multiplicative


def test_lambert_w_known_values():
    assert lambert_w(0.0) == 0.0
    assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-15)
    assert lambert_w(1.0) == pytest.approx(0.5671432904097838, rel=1e-15)


def test_lambert_w_matches_scipy():
    xs = np.logspace(-8, 15, 300)
    assert np.allclose(lambert_w(xs), lambertw(xs).real, rtol=1e-13, atol=0)


def test_lambert_w_rejects_negative():
    with pytest.raises(DomainError):
        lambert_w(-0.1)


def test_asymptotic_w_tends_to_w():
    xs = np.array([1e3, 1e6, 1e12, 1e30])
    rel = np.abs(asymptotic_w(xs) - lambert_w(xs)) / lambert_w(xs)
    assert np.all(np.diff(rel) < 0)
    with pytest.raises(DomainError):
        asymptotic_w(2.0)
