import itertools
import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hetpart.cost_model import CostFunction, evaluate
from hetpart.errors import AsymptoticRegimeError, ContractError, TheoremInapplicableError
from hetpart.partition import (
    ClusterSpec,
    Partition,
    asymptotic_nlogn,
    compute,
    dp_optimal,
    exact_analytic,
    greedy_round,
    multiplicative_closed_form,
    nlogn_inverse_approx,
    parse_speeds,
    proportional,
    read_partition_sizes,
    taylor_epsilon,
    taylor_nlogn,
)

NLOGN = CostFunction.nlogn()

speeds_st = st.lists(st.floats(min_value=0.2, max_value=8.0), min_size=1, max_size=8)


def brute_makespan(spec, N):
    """Smallest makespan over every composition of N (small N, p only)."""
    best = math.inf
    for cut in itertools.product(range(N + 1), repeat=spec.p - 1):
        if sum(cut) > N:
            continue
        sizes = list(cut) + [N - sum(cut)]
        best = min(best, max(spec.node_time(i, n) for i, n in enumerate(sizes)))
    return best


# -- proportional / parse --------------------------------------------------

def test_proportional_examples():
    assert proportional(ClusterSpec((1, 1)), 10).sizes == (5, 5)
    assert proportional(ClusterSpec((1, 2)), 9).sizes == (3, 6)
    assert proportional(ClusterSpec((1, 1.5)), 10).sizes == (4, 6)


def test_parse_speeds_pattern():
    assert parse_speeds({"pattern": [1, 0.5], "repeat": 3}) == (1, 0.5, 1, 0.5, 1, 0.5)
    assert parse_speeds([2, 3]) == (2.0, 3.0)


@given(speeds_st, st.integers(0, 10**7))
def test_every_scheme_conserves_n(speeds, N):
    spec = ClusterSpec(tuple(speeds), cost=NLOGN)
    schemes = ["proportional", "exact"]
    if N >= 2:
        schemes.append("taylor")
    for scheme in schemes:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            part = compute(scheme, spec, N)
        assert sum(part.sizes) == N
        assert min(part.sizes) >= 0


# -- taylor ----------------------------------------------------------------

def test_taylor_against_extended_precision():
    mpmath.mp.dps = 40
    k = [mpmath.mpf(1), mpmath.mpf("1.5")]
    K = sum(k)
    N = mpmath.mpf(10) ** 6
    ref = [N * ki / K + N / mpmath.log(N) * ki / K**2 * sum(kj * mpmath.log(kj / ki) for kj in k)
           for ki in k]
    got = np.array([1e6, 1e6]) * np.array([1, 1.5]) / 2.5 + taylor_epsilon([1, 1.5], 1e6)
    assert np.allclose(got, [float(r) for r in ref], rtol=1e-12)
    part = taylor_nlogn(ClusterSpec((1, 1.5), cost=NLOGN), 10**6)
    assert part.sizes == (407043, 592957)


def test_taylor_moves_work_to_slower_node():
    eps = taylor_epsilon([1, 2, 4], 1e6)
    assert eps[0] > 0 > eps[2]
    assert abs(eps.sum()) < 1e-6


def test_taylor_requires_nlogn():
    with pytest.raises(TheoremInapplicableError):
        taylor_nlogn(ClusterSpec((1, 2), cost=CostFunction.linear()), 100)


def test_taylor_clamps_negative_sizes():
    with pytest.warns(RuntimeWarning):
        # many slow nodes push the single fast node's correction below zero
        part = taylor_nlogn(ClusterSpec((1.0,) * 1000 + (1000.0,), cost=NLOGN), 3)
    assert sum(part.sizes) == 3 and part.sizes[-1] == 0


# -- exact -----------------------------------------------------------------

def test_exact_matches_brute_force_example():
    spec = ClusterSpec((1, 2), cost=NLOGN)
    part = exact_analytic(spec, 1000)
    assert part.sizes == (355, 645)
    assert part.makespan == pytest.approx(2086.333227166637, rel=1e-12)
    assert part.deadline == pytest.approx(2085.7236184139674, rel=1e-9)


def test_exact_linear_equals_proportional():
    spec = ClusterSpec((1, 2, 3))
    assert exact_analytic(spec, 600).sizes == proportional(spec, 600).sizes == (100, 200, 300)


def test_exact_zero_items():
    part = exact_analytic(ClusterSpec((1, 3), cost=NLOGN), 0)
    assert part.sizes == (0, 0)
    assert part.makespan == 0


def test_exact_per_node_costs():
    spec = ClusterSpec((1, 1), costs=(CostFunction.power(2), CostFunction.linear()))
    part = exact_analytic(spec, 12)
    assert part.makespan == brute_makespan(spec, 12)


@given(speeds_st, st.integers(1000, 10**8))
def test_exact_equal_times(speeds, N):
    spec = ClusterSpec(tuple(speeds), cost=NLOGN)
    part = exact_analytic(spec, N)
    T = part.deadline
    times = np.array([evaluate(NLOGN, n) / k for n, k in zip(part.real_sizes, speeds)])
    assume(np.all(np.asarray(part.real_sizes) > 1.0))
    assert np.max(np.abs(times - T)) <= 1e-6 * T


def test_exact_beats_proportional_at_scale():
    spec = ClusterSpec((1, 1.5), cost=NLOGN)
    N = 541623000
    assert exact_analytic(spec, N).makespan < proportional(spec, N).makespan


# -- multiplicative --------------------------------------------------------

def test_multiplicative_square():
    spec = ClusterSpec((1, 4), cost=CostFunction.power(2))
    assert multiplicative_closed_form(spec, 30).sizes == (10, 20)


def test_multiplicative_rejects_nlogn():
    with pytest.raises(TheoremInapplicableError):
        multiplicative_closed_form(ClusterSpec((1, 2), cost=NLOGN), 10)


# -- asymptotic ------------------------------------------------------------

def test_asymptotic_close_to_exact():
    spec = ClusterSpec((1, 4), cost=NLOGN)
    approx = np.asarray(asymptotic_nlogn(spec, 10**6).real_sizes)
    # frozen from a bracketed-root solution of sum f^-1(T k_i) = N
    exact = np.array([216414.06865802125, 783585.9313419788])
    assert np.all(np.abs(approx - exact) / exact < 0.01)


def test_short_form_is_much_less_accurate():
    x = np.array([1e5, 1e7])
    from hetpart.cost_model import inverse

    truth = inverse(NLOGN, x)
    derived = np.abs(nlogn_inverse_approx(x, "derived") - truth) / truth
    short = np.abs(nlogn_inverse_approx(x, "short") - truth) / truth
    assert np.all(derived < 0.05) and np.all(short > 0.5)


def test_asymptotic_regime_error():
    with pytest.raises(AsymptoticRegimeError):
        asymptotic_nlogn(ClusterSpec((1, 1000), cost=NLOGN), 10)


# -- greedy ----------------------------------------------------------------

def test_greedy_symmetric_tie_goes_low():
    part = greedy_round([3.33, 3.33, 3.33], ClusterSpec((1, 1, 1)), 10)
    assert part.sizes == (4, 3, 3)


def test_greedy_example_two_nodes():
    # keys (2+1)/1 and (5+1)/2 tie at 3; the lower index wins
    part = greedy_round([2.5, 5.0], ClusterSpec((1, 2)), 8)
    assert part.sizes == (3, 5)
    assert part.makespan == 3.0


def test_greedy_contract():
    with pytest.raises(ContractError):
        greedy_round([1.0, 1.0], ClusterSpec((1, 1)), 10)
    with pytest.raises(ContractError):
        greedy_round([3.0, 3.0], ClusterSpec((1, 1)), 5)


def best_delta_makespan(floors, spec, left):
    best = math.inf
    for delta in itertools.product(range(left + 1), repeat=spec.p):
        if sum(delta) != left:
            continue
        best = min(best, max(spec.node_time(i, f + d) for i, (f, d) in enumerate(zip(floors, delta))))
    return best


@given(st.data())
def test_greedy_is_optimal_over_delta_assignments(data):
    p = data.draw(st.integers(1, 4))
    speeds = tuple(data.draw(st.lists(st.floats(0.3, 5.0), min_size=p, max_size=p)))
    cost = data.draw(st.sampled_from([None, NLOGN, CostFunction.power(2)]))
    reals = data.draw(st.lists(st.floats(0.0, 10.0), min_size=p, max_size=p))
    left = data.draw(st.integers(0, p))
    spec = ClusterSpec(speeds, cost=cost)
    floors = [math.floor(r) for r in reals]
    part = greedy_round(reals, spec, sum(floors) + left)
    assert part.makespan == best_delta_makespan(floors, spec, left)


# -- dp --------------------------------------------------------------------

def test_dp_examples():
    spec = ClusterSpec((1, 1), costs=(CostFunction.power(2), CostFunction.linear()))
    part = dp_optimal(spec, 4)
    assert part.sizes == (1, 3) and part.makespan == 3
    assert dp_optimal(ClusterSpec((1, 2, 3)), 60).sizes == (10, 20, 30)
    assert dp_optimal(ClusterSpec((2.0,), cost=NLOGN), 17).sizes == (17,)


@given(st.integers(0, 25), st.lists(st.floats(0.3, 4.0), min_size=1, max_size=3))
def test_dp_matches_brute_force(N, speeds):
    spec = ClusterSpec(tuple(speeds), cost=NLOGN)
    assert dp_optimal(spec, N).makespan == brute_makespan(spec, N)


def test_dp_granularity_trades_optimality():
    spec = ClusterSpec((1, 1.5, 2), cost=NLOGN)
    fine = dp_optimal(spec, 300)
    coarse = dp_optimal(spec, 301, granularity=10)
    assert sum(coarse.sizes) == 301
    assert coarse.makespan >= dp_optimal(spec, 301).makespan
    assert fine.makespan <= exact_analytic(spec, 300).makespan + 1e-9


def test_dp_not_worse_than_exact():
    spec = ClusterSpec((1, 1.5, 2, 3), cost=NLOGN)
    assert dp_optimal(spec, 500).makespan <= exact_analytic(spec, 500).makespan


# -- io --------------------------------------------------------------------

def test_partition_csv_json_round_trip():
    spec = ClusterSpec((1, 2), cost=NLOGN)
    part = exact_analytic(spec, 1000)
    assert read_partition_sizes(part.to_csv(spec)) == [355, 645]
    assert read_partition_sizes(part.to_json(spec)) == [355, 645]
    assert part.to_csv(spec).splitlines()[0] == "node,speed,size,projected_time"


def test_from_sizes_makespan():
    spec = ClusterSpec((1, 2))
    assert Partition.from_sizes(spec, [4, 4]).makespan == 4.0


def test_unknown_scheme_lists_valid_ones():
    with pytest.raises(ValueError, match="valid schemes: proportional"):
        compute("fastest", ClusterSpec((1,)), 1)
