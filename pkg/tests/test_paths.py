import math

import numpy as np
import pytest

from bmcp.clocks import (ClockField, KIND_BOOST_RIGHT, KIND_EDGE_LEFT,
                         KIND_EDGE_RIGHT, KIND_RECOVERY, SpaceTimeRecord,
                         trial_seed)
from bmcp.params import Params, Variant
from bmcp.paths import (CrossingReport, RecordIncomplete, SpaceTimeBox,
                        box_crossed_horizontally, box_crossed_vertically,
                        fit_edge_envelope, open_path_exists, replay_dynamics,
                        validate_witness)


def manual_record(lo, hi, t1, events=(), boosts=()):
    ev = sorted(events, key=lambda e: (e[0], e[1]))
    bo = sorted(boosts, key=lambda e: (e[0], e[1]))
    return SpaceTimeRecord(lo=lo, hi=hi, t0=0.0, t1=t1, events=list(ev), boosts=list(bo))


def random_record(seed, lo=-3, hi=3, t1=3.0, eps=0.4):
    f = ClockField(seed, lambda_i=1.4, eps=eps)
    return f.arrivals_in_box(lo, hi, 0.0, t1)


def test_same_point_no_recovery_is_open():
    rec = manual_record(0, 3, 1.0)
    ok, wit = open_path_exists(rec, (0, 0.0), (0, 1.0), "lambda_i", initial_set=[0])
    assert ok and wit == []


def test_same_point_killed_by_recovery():
    rec = manual_record(0, 3, 1.0, events=[(0.5, 1, KIND_RECOVERY, 0)])
    ok, _ = open_path_exists(rec, (0, 0.0), (0, 1.0), "lambda_i", initial_set=[0])
    assert not ok


def test_no_arrows_no_path():
    rec = manual_record(0, 3, 1.0)
    ok, _ = open_path_exists(rec, (0, 0.0), (1, 1.0), "lambda_i", initial_set=[0])
    assert not ok


def test_requires_membership_in_initial_set():
    rec = manual_record(0, 3, 1.0, events=[(0.3, 2, KIND_EDGE_RIGHT, 0)])
    ok, _ = open_path_exists(rec, (0, 0.0), (1, 1.0), "lambda_i", initial_set=[1])
    assert not ok
    ok, _ = open_path_exists(rec, (0, 0.0), (1, 1.0), "lambda_i", initial_set=[0])
    assert ok


def test_record_incomplete():
    rec = manual_record(0, 2, 1.0)
    with pytest.raises(RecordIncomplete):
        open_path_exists(rec, (0, 0.0), (1, 1.0), "lambda_i",
                         confine=SpaceTimeBox(0, 5, 0.0, 1.0))


def test_lambda_e_path_uses_realized_boost():
    # a single boost arrow from the current edge reaches site 1
    rec = manual_record(0, 3, 1.0, boosts=[(0.4, 7, KIND_BOOST_RIGHT, 0)])
    ok_i, _ = open_path_exists(rec, (0, 0.0), (1, 1.0), "lambda_i", initial_set=[0])
    ok_e, wit = open_path_exists(rec, (0, 0.0), (1, 1.0), "lambda_e", initial_set=[0],
                                 variant=Variant.RIGHT_EDGE)
    assert not ok_i and ok_e
    assert len(wit) == 1 and wit[0].kind == KIND_BOOST_RIGHT


def test_boost_target_depends_on_initial_set():
    # with A = {0} the boost fires 0 -> 1; with A = {0, 2} it fires 2 -> 3
    rec = manual_record(0, 3, 1.0, boosts=[(0.4, 7, KIND_BOOST_RIGHT, 0)])
    arrows_a = replay_dynamics(rec, [0], SpaceTimeBox(0, 3, 0.0, 1.0),
                               Variant.RIGHT_EDGE)
    arrows_b = replay_dynamics(rec, [0, 2], SpaceTimeBox(0, 3, 0.0, 1.0),
                               Variant.RIGHT_EDGE)
    assert [(a.source, a.target) for a in arrows_a] == [(0, 1)]
    assert [(a.source, a.target) for a in arrows_b] == [(2, 3)]


def test_lambda_i_implies_lambda_e():
    for i in range(40):
        rec = random_record(trial_seed(2100, i))
        box = SpaceTimeBox(rec.lo, rec.hi, rec.t0, rec.t1)
        a = [-2, 0, 1]
        for x in a:
            for y in range(rec.lo, rec.hi + 1):
                got_i, _ = open_path_exists(rec, (x, 0.0), (y, rec.t1), "lambda_i",
                                            initial_set=a, confine=box)
                if got_i:
                    got_e, _ = open_path_exists(rec, (x, 0.0), (y, rec.t1),
                                                "lambda_e", initial_set=a,
                                                confine=box)
                    assert got_e


def test_vertical_crossing_trivial_cases():
    rec = manual_record(0, 3, 0.1)
    rep = box_crossed_vertically(rec, SpaceTimeBox(0, 3, 0.0, 0.1), initial_set=[2])
    assert rep.crossed and rep.witness == [] and rep.end_site == 2
    rep2 = box_crossed_vertically(rec, SpaceTimeBox(0, 3, 0.0, 0.1), initial_set=[])
    assert not rep2.crossed


def test_horizontal_crossing_trivial_cases():
    rec = manual_record(0, 0, 1.0)
    assert box_crossed_horizontally(rec, SpaceTimeBox(0, 0, 0.0, 1.0)).crossed
    rec2 = manual_record(0, 2, 1.0, events=[(0.5, 3, KIND_RECOVERY, 0)])
    assert not box_crossed_horizontally(rec2, SpaceTimeBox(0, 2, 0.0, 1.0)).crossed


def test_horizontal_restart_after_recovery():
    # source column recovers, then a new start still carries the crossing
    rec = manual_record(0, 1, 2.0, events=[
        (0.3, 5, KIND_RECOVERY, 0),
        (0.9, 6, KIND_EDGE_RIGHT, 0),
    ])
    rep = box_crossed_horizontally(rec, SpaceTimeBox(0, 1, 0.0, 2.0))
    assert rep.crossed
    assert rep.witness[0].time == 0.9


def test_witnesses_replay():
    n_checked = 0
    for i in range(60):
        rec = random_record(trial_seed(2200, i))
        box = SpaceTimeBox(rec.lo, rec.hi, 0.0, rec.t1)
        a = list(range(rec.lo, rec.hi + 1))
        rep = box_crossed_vertically(rec, box)
        if rep.crossed and rep.witness:
            start = rep.witness[0].source
            assert validate_witness(rec, (start, 0.0), (rep.end_site, rec.t1),
                                    rep.witness)
            n_checked += 1
        for x in (-1, 0):
            ok, wit = open_path_exists(rec, (x, 0.0), (2, rec.t1), "lambda_e",
                                       initial_set=[-1, 0], confine=box,
                                       variant=Variant.BOUNDARY)
            if ok:
                arrows = replay_dynamics(rec, [-1, 0], box, Variant.BOUNDARY)
                assert validate_witness(rec, (x, 0.0), (2, rec.t1), wit,
                                        extra_arrows=arrows)
                n_checked += 1
    assert n_checked > 10


def test_vertical_crossing_monotone_in_box_width():
    for i in range(30):
        f = ClockField(trial_seed(2300, i), lambda_i=1.4, eps=0.0)
        rec = f.arrivals_in_box(-4, 4, 0.0, 2.0)
        inner = SpaceTimeBox(-1, 1, 0.0, 2.0)
        outer = SpaceTimeBox(-4, 4, 0.0, 2.0)
        if box_crossed_vertically(rec, inner).crossed:
            assert box_crossed_vertically(rec, outer).crossed


def test_engine_survival_equals_record_crossing():
    # the vertical-crossing query agrees with box-restricted survival,
    # realization by realization
    from bmcp import _kernel_py as K
    from bmcp.engine import Simulator

    w, h = 3, 2.5
    params = Params(1.4, 1.4, Variant.STANDARD)
    for i in range(40):
        seed = trial_seed(2400, i)
        sim = Simulator(params, seed=seed, lo=0, hi=w, mode=K.MODE_CLOSED,
                        guard=0, initial_sites=list(range(w + 1)))
        sim.state.run_until(h)
        survived = sim.state.extinction_time is None
        f = ClockField(seed, lambda_i=1.4, eps=0.0)
        rec = f.arrivals_in_box(0, w, 0.0, h)
        crossed = box_crossed_vertically(rec, SpaceTimeBox(0, w, 0.0, h)).crossed
        assert crossed == survived


def test_envelope_fit_shapes():
    rng = np.random.default_rng(5)
    t_grid = [32.0, 64.0, 128.0]
    n = 1200
    # synthetic sup|R| growing like t^0.6 with exponential tails
    sup = np.array([[t ** 0.6 * (1 + rng.exponential(0.5)) for t in t_grid]
                    for _ in range(n)])
    fit = fit_edge_envelope(t_grid, sup, min_trials=1000)
    assert 0.3 < fit.scale_slope < 0.9
    assert fit.tail_slope < 0
    assert fit.tail_r2 > 0.9
    assert np.all(np.diff(fit.tail_probs) <= 1e-12)


def test_envelope_requires_enough_trials():
    from bmcp.paths import InsufficientTrials

    with pytest.raises(InsufficientTrials):
        fit_edge_envelope([8.0, 16.0], np.ones((10, 2)), min_trials=1000)
