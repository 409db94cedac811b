import math

import numpy as np
import pytest
from scipy import stats

from bmcp.clocks import (BoxTooLarge, ClockField, ClockObjectId, ZeroRateObject,
                         trial_seed)


def test_next_arrival_deterministic():
    f1 = ClockField(12345, lambda_i=1.5, eps=0.5)
    f2 = ClockField(12345, lambda_i=1.5, eps=0.5)
    obj = ClockObjectId.recovery(0)
    seq1 = [f1.next_arrival(obj, 0.0)]
    seq2 = [f2.next_arrival(obj, 0.0)]
    for _ in range(50):
        seq1.append(f1.next_arrival(obj, seq1[-1]))
        seq2.append(f2.next_arrival(obj, seq2[-1]))
    assert seq1 == seq2
    assert all(b > a for a, b in zip(seq1, seq1[1:]))


def test_random_access_equals_sequential():
    f = ClockField(777, lambda_i=2.0, eps=0.25)
    obj = ClockObjectId.edge(3, +1)
    seq = []
    t = 0.0
    for _ in range(20):
        t = f.next_arrival(obj, t)
        seq.append(t)
    for i, t in enumerate(seq, start=1):
        assert f.arrival(obj, i) == t


def test_first_arrival_mean_rate_one():
    tot = 0.0
    n = 100_000
    for i in range(n):
        f = ClockField(trial_seed(9, i), lambda_i=1.0, eps=0.0)
        tot += f.next_arrival(ClockObjectId.recovery(0), 0.0)
    assert abs(tot / n - 1.0) <= 0.01


def test_first_arrival_mean_rate_two():
    tot = 0.0
    n = 100_000
    for i in range(n):
        f = ClockField(trial_seed(10, i), lambda_i=2.0, eps=0.0)
        tot += f.next_arrival(ClockObjectId.edge(3, +1), 0.0)
    assert abs(tot / n - 0.5) <= 0.005


def test_interarrival_ks_exponential():
    f = ClockField(2024, lambda_i=1.7, eps=0.0)
    obj = ClockObjectId.edge(-4, -1)
    times = [0.0]
    for _ in range(100_000):
        times.append(f.next_arrival(obj, times[-1]))
    gaps = np.diff(times)
    p = stats.kstest(gaps, "expon", args=(0, 1 / 1.7)).pvalue
    assert p > 1e-3


def test_disjoint_window_counts_independent():
    f = ClockField(515, lambda_i=0.0, eps=0.0)
    obj = ClockObjectId.recovery(2)
    horizon = 8000.0
    counts = np.zeros(int(horizon), dtype=int)
    t = 0.0
    while True:
        t = f.next_arrival(obj, t)
        if t >= horizon:
            break
        counts[int(t)] += 1
    a, b = counts[0::2], counts[1::2]
    med = np.median(counts)
    table = np.array([
        [np.sum((a <= med) & (b <= med)), np.sum((a <= med) & (b > med))],
        [np.sum((a > med) & (b <= med)), np.sum((a > med) & (b > med))],
    ])
    p = stats.chi2_contingency(table)[1]
    assert p > 1e-3
    # Poisson marginals: mean ~ variance
    assert abs(counts.mean() - 1.0) < 0.05
    assert abs(counts.var() - 1.0) < 0.1


def test_zero_rate_object_raises():
    f = ClockField(1, lambda_i=1.0, eps=0.0)
    with pytest.raises(ZeroRateObject):
        f.next_arrival(ClockObjectId.boost_right(), 0.0)


def test_view_identity():
    f = ClockField(88, lambda_i=1.2, eps=0.3)
    v = f.view(0, 0.0)
    obj = ClockObjectId.recovery(5)
    assert v.next_arrival(obj, 0.0) == f.next_arrival(obj, 0.0)


def test_view_translation():
    f = ClockField(88, lambda_i=1.2, eps=0.3)
    parent_obj = ClockObjectId.recovery(5)
    t_off = 7.0
    parent_arrival = f.next_arrival(parent_obj, t_off)
    v = f.view(space_offset=5, time_offset=t_off)
    assert v.next_arrival(ClockObjectId.recovery(0), 0.0) == parent_arrival - t_off


def test_view_boost_translates_time_only():
    f = ClockField(99, lambda_i=1.0, eps=0.5)
    t_off = 3.0
    parent_arrival = f.next_arrival(ClockObjectId.boost_right(), t_off)
    v = f.view(space_offset=17, time_offset=t_off)
    assert v.next_arrival(ClockObjectId.boost_right(), 0.0) == parent_arrival - t_off


def test_kernel_streams_match_field():
    # the kernel's first recovery ring of an isolated site equals the
    # field-level arrival, including space/time translation
    from bmcp.engine import Simulator
    from bmcp import _kernel_py as K
    from bmcp.params import Params, Variant

    params = Params(0.0, 0.0, Variant.STANDARD)
    for offset, start in ((0, 0.0), (9, 2.5)):
        sim = Simulator(params, seed=4242, lo=-5, hi=5, mode=K.MODE_CLOSED,
                        guard=0, initial_sites=[0], start_time=start,
                        space_offset=offset)
        sim.state.run_until(1e9)
        f = ClockField(4242, lambda_i=0.0, eps=0.0)
        want = f.next_arrival(ClockObjectId.recovery(offset), start)
        assert sim.state.extinction_time == want


def test_arrivals_in_box_counts_and_determinism():
    f = ClockField(31337, lambda_i=0.0, eps=0.0)
    rec = f.arrivals_in_box(0, 0, 0.0, 1000.0)
    n = len(rec.events)
    assert abs(n - 1000) <= 100  # Poisson(1000), 3 sigma
    f2 = ClockField(31337, lambda_i=0.0, eps=0.0)
    rec2 = f2.arrivals_in_box(0, 0, 0.0, 1000.0)
    assert rec.serialize() == rec2.serialize()


def test_arrivals_in_box_empty_interval():
    f = ClockField(5, lambda_i=1.0, eps=0.0)
    rec = f.arrivals_in_box(3, 2, 0.0, 10.0)
    assert rec.events == []


def test_arrivals_in_box_cap():
    f = ClockField(5, lambda_i=1.0, eps=0.0)
    with pytest.raises(BoxTooLarge):
        f.arrivals_in_box(0, 1000, 0.0, 1e9)


def test_events_sorted_and_covering():
    f = ClockField(606, lambda_i=1.3, eps=0.4)
    rec = f.arrivals_in_box(-2, 2, 0.0, 5.0)
    m = rec.merged()
    assert m == sorted(m, key=lambda e: (e[0], e[1]))
    assert rec.covers(-1, 1, 1.0, 4.0)
    assert not rec.covers(-3, 1, 1.0, 4.0)
