import numpy as np
import pytest

from hetpart.cost_model import CostFunction
from hetpart.errors import ContractError, RecordCapExceeded
from hetpart.partition import ClusterSpec, exact_analytic, proportional
from hetpart.simulator import (
    PHASES,
    SimParams,
    SortTimeline,
    generate_records,
    is_sorted,
    multiset_digest,
    read_records,
    run_paired_sort,
    run_real_sort,
    sequential_sort,
    simulate,
    write_records,
)
from hetpart.simulator.realsort import choose_pivots, regular_sample, speed_factors
from hetpart.simulator.records import key_view, record_index

NLOGN = CostFunction.nlogn()


# -- records ---------------------------------------------------------------

def test_records_layout():
    batch = generate_records(50, "uniform", 7)
    data = batch.data
    assert data.shape == (50, 100) and data.dtype == np.uint8
    assert np.all((data[:, :10] >= 33) & (data[:, :10] <= 126))
    assert np.all(data[:, 98] == ord("\r")) and np.all(data[:, 99] == ord("\n"))
    assert np.array_equal(record_index(data), np.arange(50))


def test_generation_is_deterministic():
    a = generate_records(1000, "uniform", 3).data
    b = generate_records(1000, "uniform", 3).data
    c = generate_records(1000, "uniform", 4).data
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("dist", ["sorted", "reverse", "few"])
def test_key_distributions(dist):
    keys = key_view(generate_records(500, dist, 1).data)
    if dist == "sorted":
        assert np.all(keys[:-1] <= keys[1:])
    elif dist == "reverse":
        assert np.all(keys[:-1] >= keys[1:])
    else:
        assert len(np.unique(keys)) == 10


def test_digest_is_order_independent_and_sensitive():
    data = generate_records(2000, "uniform", 2).data
    shuffled = data[np.random.default_rng(0).permutation(len(data))]
    assert multiset_digest(data) == multiset_digest(shuffled)
    tampered = data.copy()
    tampered[5, 50] ^= 1
    assert multiset_digest(tampered) != multiset_digest(data)
    # duplicating one record and dropping another must show too
    dup = data.copy()
    dup[1] = dup[0]
    assert multiset_digest(dup) != multiset_digest(data)


def test_record_file_round_trip(tmp_path):
    batch = generate_records(123, "uniform", 5)
    path = tmp_path / "r.bin"
    write_records(path, batch)
    assert path.stat().st_size == 12300
    assert np.array_equal(read_records(path), batch.data)


def test_record_cap(monkeypatch):
    monkeypatch.setenv("HETPART_MAX_RECORDS", "100")
    with pytest.raises(RecordCapExceeded):
        generate_records(101)


# -- pivots ----------------------------------------------------------------

def test_regular_sample_spacing():
    keys = np.array([bytes([65 + i]) * 10 for i in range(10)], dtype="S10")
    assert list(regular_sample(keys, 5)) == list(keys[[1, 3, 5, 7, 9]])


def test_weighted_pivots_follow_targets():
    rng = np.random.default_rng(0)
    keys = np.sort(rng.integers(0, 10**9, 40000).astype("S10"))
    chunks = np.array_split(keys, 4)
    samples = [regular_sample(np.sort(c), 256) for c in chunks]
    targets = [4000, 6000, 12000, 18000]
    pivots = choose_pivots(samples, [len(c) for c in chunks], targets)
    counts = np.diff(np.concatenate(([0], np.searchsorted(keys, pivots, "right"), [len(keys)])))
    assert np.allclose(counts, targets, rtol=0.05)


def test_speed_factors():
    assert speed_factors([1, 2, 4]) == [4.0, 2.0, 1.0]
    assert speed_factors([0.5, 0.25]) == [2.0, 4.0]


# -- real sort -------------------------------------------------------------

@pytest.mark.parametrize("dist", ["uniform", "sorted", "reverse", "few"])
def test_real_sort_output(dist):
    spec = ClusterSpec((1, 1.5, 2), cost=NLOGN)
    batch = generate_records(20000, dist, 11)
    res = run_real_sort(spec, exact_analytic(spec, 20000), batch, keep_output=True)
    assert res.sorted_ok and res.permutation_ok
    expected = sequential_sort(batch.data)
    assert np.array_equal(key_view(res.output), key_view(expected))
    assert sum(res.received) == 20000


def test_real_sort_timeline_shape():
    spec = ClusterSpec((1, 2))
    res = run_real_sort(spec, [3000, 7000], generate_records(10000, "uniform", 0))
    tl = res.timeline
    assert len(tl.per_node) == 2 and tl.makespan > 0
    for node in tl.per_node:
        assert all(getattr(node, ph) >= 0 for ph in PHASES)
    # received sizes follow the input chunks (weighted pivots)
    assert res.received[0] == pytest.approx(3000, rel=0.1)


def test_real_sort_rejects_mismatched_partition():
    spec = ClusterSpec((1, 2))
    with pytest.raises(ContractError):
        run_real_sort(spec, [1, 2], generate_records(10, "uniform", 0))
    with pytest.raises(ContractError):
        run_real_sort(spec, [10], generate_records(10, "uniform", 0))


def test_real_sort_empty_and_single():
    spec = ClusterSpec((1, 1))
    assert run_real_sort(spec, [0, 0], generate_records(0)).makespan == 0
    res = run_real_sort(spec, [1, 0], generate_records(1))
    assert res.sorted_ok and res.permutation_ok


def test_paired_sort_both_arms_correct():
    spec = ClusterSpec((1, 1.5), cost=NLOGN)
    batch = generate_records(5000, "uniform", 1)
    a, b = run_paired_sort(spec, proportional(spec, 5000), exact_analytic(spec, 5000), batch)
    assert a.sorted_ok and b.sorted_ok and a.permutation_ok and b.permutation_ok


def test_sleep_throttle_slows_wall_clock():
    spec = ClusterSpec((0.25, 0.25))
    batch = generate_records(50000, "uniform", 0)
    fast = run_real_sort(ClusterSpec((1, 1)), [25000, 25000], batch, throttle="account")
    slow = run_real_sort(spec, [25000, 25000], batch, throttle="sleep")
    assert slow.wall_time > 1.5 * fast.wall_time


# -- analytic timeline ----------------------------------------------------

def test_simulate_phase_formulas():
    spec = ClusterSpec((1, 2), cost=NLOGN)
    tl = simulate(spec, [400, 600], SimParams(split_cost=2.0, merge_cost=3.0))
    n0 = tl.per_node[0]
    assert n0.local_sort == pytest.approx(400 * np.log(400))
    assert n0.partition_split == pytest.approx(800)
    assert n0.final_merge == pytest.approx(3 * 400 * 1.0)
    assert n0.pivot_exchange == 0 and n0.redistribution == 0
    assert tl.per_node[1].local_sort == pytest.approx(600 * np.log(600) / 2)


def test_simulate_uniform_received_and_comm():
    spec = ClusterSpec((1, 1, 1, 1))
    tl = simulate(spec, [10, 20, 30, 40], SimParams(received="uniform", bandwidth=100.0, latency=1.0))
    assert tl.per_node[0].final_merge == pytest.approx(25 * 2)
    assert tl.per_node[3].redistribution == pytest.approx(1 + 40 * 0.75 * 100 / 100)


def test_simulate_single_node_has_no_merge():
    tl = simulate(ClusterSpec((2.0,), cost=NLOGN), [100])
    assert tl.per_node[0].final_merge == 0 and tl.per_node[0].partition_split == 0


def test_simulated_exact_beats_proportional():
    spec = ClusterSpec((1, 1.5), cost=NLOGN)
    N = 10**6
    assert simulate(spec, exact_analytic(spec, N)).makespan < simulate(spec, proportional(spec, N)).makespan


def test_timeline_json_round_trip():
    tl = simulate(ClusterSpec((1, 3), cost=NLOGN), [100, 300])
    back = SortTimeline.from_dict(tl.to_dict())
    assert back.makespan == tl.makespan and back.totals == tl.totals


def test_is_sorted_helper():
    data = generate_records(100, "sorted", 0).data
    assert is_sorted(data) and not is_sorted(data[::-1])
