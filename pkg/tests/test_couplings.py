import math

import numpy as np
import pytest
from scipy import stats

from bmcp import _kernel_py as K
from bmcp.clocks import trial_seed
from bmcp.couplings import (CouplingReport, collect_renewals,
                            domination_check_liggett, run_coupling_pair,
                            spawn_auxiliary)
from bmcp.engine import Simulator, TruncationPolicy, resolve_window, run_trial
from bmcp.params import InitialCondition, Params, Variant

LAM = 1.6489
P_BM = Params(LAM, LAM + 0.5, Variant.BOUNDARY)
P_RE = Params(LAM, LAM + 0.5, Variant.RIGHT_EDGE)


def test_spawn_at_zero_from_origin_reproduces_parent():
    # right-edge-modified parent from {0}: the auxiliary at t=0 reads the
    # same clocks with zero offsets, so the trajectories coincide exactly
    policy = TruncationPolicy()
    lo, hi, mode, sites = resolve_window(P_RE, InitialCondition.single_origin(),
                                         30.0, policy)
    parent = Simulator(P_RE, seed=4321, lo=lo, hi=hi, mode=mode,
                       guard=policy.guard, initial_sites=sites,
                       collect_edge_steps=True)
    aux = spawn_auxiliary(parent, 0.0, horizon=30.0)
    aux.child.state.run_until(30.0)
    parent.state.run_until(min(30.0, aux.child.state.extinction_time or 30.0))
    pt, pr, pl = parent.edge_step_log()
    ct, cr, cl = aux.child.edge_step_log()
    n = min(len(pt), len(ct))
    assert np.array_equal(pt[:n], ct[:n])
    assert np.array_equal(pr[:n], cr[:n])
    assert np.array_equal(pl[:n], cl[:n])


def test_identity_exact_on_many_pairs():
    rep = CouplingReport()
    for i in range(120):
        run_coupling_pair(P_BM, seed=trial_seed(5150, i), spawn_time=2.0,
                          horizon=25.0, report=rep)
    assert rep.pairs_checked > 100
    assert rep.identity_checks > 1000
    assert rep.identity_failures == 0
    assert rep.region_failures == 0
    assert rep.all_pass


def test_identity_with_right_edge_parent():
    rep = CouplingReport()
    for i in range(60):
        run_coupling_pair(P_RE, seed=trial_seed(5151, i), spawn_time=3.0,
                          horizon=20.0,
                          initial=InitialCondition.finite([-1, 0, 1]), report=rep)
    assert rep.identity_failures == 0 and rep.region_failures == 0


def test_dead_parent_spawn_convention():
    # rates zero: the parent dies quickly; the child still evolves from {0}
    p = Params(0.0, 0.0, Variant.BOUNDARY)
    parent = Simulator(p, seed=11, lo=-10, hi=10, mode=K.MODE_FINITE, guard=2,
                       initial_sites=[0], collect_edge_steps=True)
    parent.state.run_until(5.0)
    assert parent.is_extinct
    aux = spawn_auxiliary(parent, 5.0, horizon=10.0) if parent.now == 5.0 else None
    assert aux is None  # extinct parents sit at their last event time
    from bmcp.couplings import _spawn_at_offset

    aux = _spawn_at_offset(parent, 5.0, 10.0)
    assert aux.space_offset == 0
    assert not aux.parent_alive_at_spawn
    assert aux.child.state.infected_sites() == [0]
    aux.child.state.run_until(50.0)
    assert aux.extinction_time is not None and aux.extinction_time > 0


def test_spawn_requires_exact_time():
    policy = TruncationPolicy()
    lo, hi, mode, sites = resolve_window(P_BM, InitialCondition.single_origin(),
                                         10.0, policy)
    parent = Simulator(P_BM, seed=77, lo=lo, hi=hi, mode=mode,
                       guard=policy.guard, initial_sites=sites)
    with pytest.raises(ValueError):
        spawn_auxiliary(parent, 1.0, horizon=5.0)


def test_auxiliary_law_matches_fresh_runs():
    # unconditional auxiliary lifetimes have the law of a fresh single-seed
    # right-edge-modified run; compare censored extinction samples
    horizon = 60.0
    taus_aux, taus_fresh = [], []
    cens_aux = cens_fresh = 0
    n = 600
    for i in range(n):
        policy = TruncationPolicy()
        lo, hi, mode, sites = resolve_window(P_BM, InitialCondition.finite([-2, 0, 2]),
                                             3.0 + horizon, policy)
        parent = Simulator(P_BM, seed=trial_seed(600, i), lo=lo, hi=hi, mode=mode,
                           guard=policy.guard, initial_sites=sites,
                           collect_edge_steps=True)
        st = parent.state.run_until(3.0)
        if st != 1:
            continue
        aux = spawn_auxiliary(parent, 3.0, horizon=horizon)
        aux.child.state.run_until(3.0 + horizon)
        tau = aux.extinction_time
        if tau is None:
            cens_aux += 1
        else:
            taus_aux.append(tau)
    for i in range(n):
        _, s = run_trial(P_RE, InitialCondition.single_origin(),
                         seed=trial_seed(601, i), t_max=horizon, cadence=None)
        if s.extinction_time is None:
            cens_fresh += 1
        else:
            taus_fresh.append(s.extinction_time)
    p_ks = stats.ks_2samp(taus_aux, taus_fresh).pvalue
    assert p_ks > 1e-3
    pa = cens_aux / (cens_aux + len(taus_aux))
    pf = cens_fresh / n
    se = math.sqrt(pa * (1 - pa) / n + pf * (1 - pf) / n)
    assert abs(pa - pf) <= 3 * se + 1e-9


def test_renewal_records_consistent():
    recs = collect_renewals(P_RE, 40, seed=888, monitor_horizon=60.0, t_cap=2000.0)
    for r in recs:
        if not r.censored:
            assert r.I == len(r.attempt_durations) + 1
            assert r.T == pytest.approx(sum(r.attempt_durations))
            if r.I == 1:
                assert r.T == 0.0
        assert all(tau > 0 for tau in r.attempt_durations)
    assert any(r.I == 1 for r in recs)


def test_renewal_attempts_uncorrelated():
    recs = collect_renewals(P_RE, 300, seed=889, monitor_horizon=40.0, t_cap=3000.0)
    firsts, seconds = [], []
    for r in recs:
        if len(r.attempt_durations) >= 2:
            firsts.append(r.attempt_durations[0])
            seconds.append(r.attempt_durations[1])
    if len(firsts) >= 30:
        rho = np.corrcoef(firsts, seconds)[0, 1]
        assert abs(rho) <= 3.5 / math.sqrt(len(firsts))


def test_liggett_single_site_equal_law():
    rep = domination_check_liggett(LAM, [0], 1, [3.0, 6.0], trials=1500, seed=99)
    for pa, pb, se in zip(rep.p_spread, rep.p_contig, rep.se):
        assert abs(pa - pb) <= 3 * se
    assert rep.all_hold


def test_liggett_time_zero_probabilities_one():
    rep = domination_check_liggett(LAM, [0, 5], 2, [0.0, 4.0], trials=300, seed=98)
    assert rep.p_spread[0] == 1.0 and rep.p_contig[0] == 1.0
