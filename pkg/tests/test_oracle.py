import math

import numpy as np
import pytest

from bmcp import _kernel_py as K
from bmcp.engine import Simulator
from bmcp.oracle import (MAX_SEGMENT, SegmentModel, TooLarge, build_generator,
                         distribution_at, exit_rate, expected_extinction_time,
                         extinction_probability_by, transition_rates)
from bmcp.params import Params, Variant

P_BM = Params(1.6489, 2.1489, Variant.BOUNDARY)


def test_n1_structure():
    m = build_generator(1, P_BM)
    assert m.generator[1, 0] == 1.0
    assert exit_rate(m, 1) == 1.0  # neighbors off-segment are suppressed


def test_n2_boundary_edge_rate():
    m = build_generator(2, P_BM)
    # {0} infects {0,1} at the boosted rate: site 0 is the right edge
    assert m.generator[0b01, 0b11] == pytest.approx(2.1489)
    # from the full segment only recoveries remain
    assert exit_rate(m, 0b11) == pytest.approx(2.0)


def test_row_sums_zero():
    for variant in (Variant.STANDARD, Variant.RIGHT_EDGE, Variant.BOUNDARY):
        params = Params(1.3, 1.9, variant) if variant else Params(1.3, 1.3, variant)
        m = build_generator(4, params)
        sums = np.asarray(m.generator.sum(axis=1)).ravel()
        assert np.allclose(sums, 0.0, atol=1e-12)


def test_size_cap():
    with pytest.raises(TooLarge):
        build_generator(MAX_SEGMENT + 1, P_BM)


def test_n1_pure_death_analytic():
    m = build_generator(1, P_BM)
    for t in (0.5, 1.0, 5.0):
        got = extinction_probability_by(m, t)[1]
        assert abs(got - (1 - math.exp(-t))) <= 1e-9


def test_t_zero_no_extinction():
    m = build_generator(3, P_BM)
    probs = extinction_probability_by(m, 0.0)
    assert probs[0] == 1.0
    assert np.all(probs[1:] == 0.0)


def test_probability_conservation():
    m = build_generator(3, P_BM)
    dist = distribution_at(m, 0b101, 2.5)
    assert abs(dist.sum() - 1.0) <= 1e-9
    assert np.all(dist >= -1e-12)


def test_half_step_composition():
    m = build_generator(3, P_BM)
    t = 3.0
    d_full = distribution_at(m, 0b010, t)
    d_half = distribution_at(m, 0b010, t / 2)
    # propagate the half-time distribution another half step
    d_two = np.zeros_like(d_half)
    for s, w in enumerate(d_half):
        if w > 0:
            d_two += w * distribution_at(m, s, t / 2)
    assert np.max(np.abs(d_two - d_full)) <= 1e-8


def test_expected_extinction_harmonic():
    m = build_generator(3, Params(0.0, 0.0, Variant.STANDARD))
    e = expected_extinction_time(m)
    assert e[0b001] == pytest.approx(1.0)
    assert e[0b011] == pytest.approx(1.5)
    assert e[0b111] == pytest.approx(1.0 + 0.5 + 1.0 / 3.0)


def test_expected_extinction_monotone():
    m = build_generator(4, P_BM)
    e = expected_extinction_time(m)
    assert e[0b0011] >= e[0b0001]
    assert e[0b1111] >= e[0b0111] >= e[0b0011]
    assert np.all(e[1:] > 0)


def test_exit_rates_match_engine_on_random_configs():
    import random

    rng = random.Random(12)
    for variant in (Variant.STANDARD, Variant.RIGHT_EDGE, Variant.BOUNDARY):
        params = Params(1.4, 2.0, variant) if variant != Variant.STANDARD \
            else Params(1.4, 1.4, variant)
        n = 5
        m = build_generator(n, params)
        for _ in range(40):
            state = rng.randrange(1, 1 << n)
            sites = [x for x in range(n) if (state >> x) & 1]
            sim = Simulator(params, seed=1, lo=0, hi=n - 1, mode=K.MODE_CLOSED,
                            guard=0, initial_sites=sites)
            assert sim.total_jump_rate() == pytest.approx(exit_rate(m, state), abs=1e-12)


def test_extinction_prob_monotone_in_time():
    m = build_generator(3, P_BM)
    ts = [0.5, 1.0, 2.0, 4.0]
    probs = [extinction_probability_by(m, t)[0b010] for t in ts]
    assert all(b >= a for a, b in zip(probs, probs[1:]))
