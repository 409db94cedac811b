"""Coupling constructions on a shared clock realization.

The auxiliary process spawned at time t is a fresh right-edge-modified copy
started from {0} that reads the parent's clocks translated by
(R at spawn, spawn time); the boost clock translates in time only.  While
the auxiliary lives, the parent's right edge equals the spawn offset plus
the auxiliary's right edge, exactly, and the two configurations agree on
the interval the auxiliary spans.  Because clock streams are pure functions
of (seed, object), no event history needs storing: children re-read the
streams through their own cursors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py as K
from .clocks import trial_seed
from .engine import Simulator, TruncationPolicy, resolve_window
from .params import InitialCondition, Params, Variant


@dataclass
class AuxiliaryProcess:
    spawn_time: float
    space_offset: int          # parent right edge at spawn (0 when parent empty)
    parent_alive_at_spawn: bool
    child: Simulator

    @property
    def extinction_time(self):
        """Child extinction time measured from the spawn instant."""
        et = self.child.state.extinction_time
        return None if et is None else et - self.spawn_time


def spawn_auxiliary(parent: Simulator, t: float, *, horizon: float,
                    margin: int = 64, backend: str | None = None,
                    collect_events: bool = False) -> AuxiliaryProcess:
    """Spawn the single-seed right-edge-modified copy at parent time t.

    The parent must have been advanced exactly to time t.  The child shares
    the parent's clock field through the (space, time) translation; random
    access into the streams replaces event-history storage.
    """
    if parent.now != t:
        raise ValueError(f"parent must sit exactly at the spawn time (now={parent.now}, t={t})")
    r = parent.right_edge()
    alive = r is not None
    r0 = r if alive else 0  # empty-parent bookkeeping convention
    p = parent.params
    child_params = Params(p.lambda_i, p.lambda_e, Variant.RIGHT_EDGE)
    w = math.ceil(2.0 * (p.lambda_i + p.lambda_e) * horizon) + margin
    child = Simulator(
        child_params,
        seed=parent.seed,
        lo=-w,
        hi=w,
        mode=K.MODE_FINITE,
        guard=8,
        initial_sites=[0],
        start_time=t,
        space_offset=r0,
        backend=backend,
        collect_edge_steps=True,
        collect_events=collect_events,
    )
    return AuxiliaryProcess(spawn_time=t, space_offset=r0,
                            parent_alive_at_spawn=alive, child=child)


@dataclass
class CouplingReport:
    pairs_total: int = 0
    pairs_checked: int = 0          # parent alive at spawn
    identity_checks: int = 0
    identity_failures: int = 0
    region_checks: int = 0
    region_failures: int = 0
    failures: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return (self.identity_failures == 0 and self.region_failures == 0
                and self.pairs_checked > 0)

    def to_dict(self) -> dict:
        return {
            "pairs_total": self.pairs_total,
            "pairs_checked": self.pairs_checked,
            "identity_checks": self.identity_checks,
            "identity_failures": self.identity_failures,
            "region_checks": self.region_checks,
            "region_failures": self.region_failures,
            "all_pass": self.all_pass,
            "failures": self.failures[:20],
        }


def _step_value(times: np.ndarray, values: np.ndarray, t: float) -> int:
    """Value of a right-continuous step function at time t."""
    i = np.searchsorted(times, t, side="right") - 1
    return int(values[i])


def _bits_in(words: list[int], lo: int, a: int, b: int) -> int:
    """Occupancy of [a, b] packed into an int (bit 0 == site a)."""
    out = 0
    for s in range(a, b + 1):
        k = s - lo
        if (words[k >> 6] >> (k & 63)) & 1:
            out |= 1 << (s - a)
    return out


def verify_edge_identity(parent: Simulator, aux: AuxiliaryProcess, horizon: float,
                         sample_cadence: float = 1.0,
                         report: CouplingReport | None = None) -> CouplingReport:
    """Check the right-edge identity and the coupled-region agreement.

    The identity R_parent(t+s) = R_parent(t) + R_child(s) is exact while the
    child lives; any violation is an implementation defect, so checks are
    exact equality on the union of both edge-step grids.  Region agreement
    is checked at sample times: parent and shifted child must agree on
    [offset + L_child, offset + R_child].
    """
    rep = report if report is not None else CouplingReport()
    rep.pairs_total += 1
    if not aux.parent_alive_at_spawn:
        return rep
    rep.pairs_checked += 1
    t = aux.spawn_time
    child = aux.child

    n = int(math.floor(horizon / sample_cadence))
    grid = [t + k * sample_cadence for k in range(0, n + 1)]
    child.state.run_until(t + horizon, sample_times=list(grid), collect_config=True)
    tau_abs = child.state.extinction_time
    t_stop = t + horizon if tau_abs is None else tau_abs
    if parent.now > t:
        raise ValueError("parent already advanced past the spawn time")
    parent.state.run_until(t_stop, sample_times=[g for g in grid if g <= t_stop],
                           collect_config=True)

    pt, pr, _ = parent.edge_step_log()
    ct, cr, cl = child.edge_step_log()
    r0 = aux.space_offset

    check_times = np.unique(np.concatenate([pt[(pt >= t) & (pt < t_stop)],
                                            ct[ct < t_stop]]))
    for u in check_times:
        rp = _step_value(pt, pr, u)
        rc = _step_value(ct, cr, u)
        rep.identity_checks += 1
        if rp != r0 + rc:
            rep.identity_failures += 1
            rep.failures.append({"kind": "identity", "t": float(u),
                                 "parent_r": rp, "child_r": rc, "offset": r0})

    ps, cs = parent.state, child.state
    p_times = list(ps.s_t)
    for i, u in enumerate(cs.s_t):
        if u > t_stop or u not in p_times:
            continue
        j = p_times.index(u)
        rc = _step_value(ct, cr, u)
        lc = _step_value(ct, cl, u)
        if rc == K.R_NONE:
            continue
        child_bits = _bits_in(cs.s_configs[i], cs.lo, lc, rc)
        parent_bits = _bits_in(ps.s_configs[j], ps.lo, r0 + lc, r0 + rc)
        rep.region_checks += 1
        if child_bits != parent_bits:
            rep.region_failures += 1
            rep.failures.append({"kind": "region", "t": float(u),
                                 "child_interval": [lc, rc], "offset": r0})
    return rep


def run_coupling_pair(params: Params, *, seed: int, spawn_time: float, horizon: float,
                      initial: InitialCondition | None = None,
                      report: CouplingReport | None = None) -> CouplingReport:
    """One parent/auxiliary pair checked end to end."""
    initial = initial or InitialCondition.finite(range(-2, 3))
    policy = TruncationPolicy()
    lo, hi, mode, sites = resolve_window(params, initial, spawn_time + horizon, policy)
    parent = Simulator(params, seed=seed, lo=lo, hi=hi, mode=mode,
                       guard=policy.guard, initial_sites=sites,
                       collect_edge_steps=True)
    status = parent.state.run_until(spawn_time)
    if status in (K.EXTINCT, K.INVALID):
        rep = report if report is not None else CouplingReport()
        rep.pairs_total += 1
        return rep
    aux = spawn_auxiliary(parent, spawn_time, horizon=horizon)
    return verify_edge_identity(parent, aux, horizon, report=report)


@dataclass
class RenewalRecord:
    T: float
    I: int
    attempt_durations: list[float]
    censored: bool
    seed: int

    def to_dict(self) -> dict:
        return {"T": self.T, "I": self.I,
                "attempt_durations": self.attempt_durations,
                "censored": self.censored, "seed": self.seed}


def detect_renewal(parent: Simulator, monitor_horizon: float = 200.0,
                   t_cap: float = 4000.0) -> RenewalRecord:
    """Run the restart recursion: spawn a single-seed auxiliary at T_i, add
    its lifetime while it dies, stop at the first one alive at the horizon.

    Survival of an attempt is operationalized as being alive at
    ``monitor_horizon``; the misclassification probability decays
    stretched-exponentially in the horizon.
    """
    T = 0.0
    attempts: list[float] = []
    parent_dead = False
    while True:
        if not parent_dead and parent.now < T:
            status = parent.state.run_until(T)
            if status == K.EXTINCT:
                parent_dead = True
            elif status == K.INVALID:
                raise RuntimeError("parent trial invalid during renewal detection")
        aux = spawn_auxiliary(parent, T, horizon=monitor_horizon) if parent.now == T else None
        if aux is None:
            # parent sits past T only when extinct at an earlier event time
            aux = _spawn_at_offset(parent, T, monitor_horizon)
        aux.child.state.run_until(T + monitor_horizon)
        tau = aux.extinction_time
        if tau is None:
            return RenewalRecord(T=T, I=len(attempts) + 1,
                                 attempt_durations=attempts, censored=False,
                                 seed=parent.seed)
        attempts.append(tau)
        T += tau
        if T > t_cap:
            return RenewalRecord(T=T, I=len(attempts), attempt_durations=attempts,
                                 censored=True, seed=parent.seed)


def _spawn_at_offset(parent: Simulator, t: float, horizon: float) -> AuxiliaryProcess:
    """Auxiliary for an extinct parent: offset 0 by the bookkeeping convention."""
    p = parent.params
    child_params = Params(p.lambda_i, p.lambda_e, Variant.RIGHT_EDGE)
    w = math.ceil(2.0 * (p.lambda_i + p.lambda_e) * horizon) + 64
    child = Simulator(child_params, seed=parent.seed, lo=-w, hi=w,
                      mode=K.MODE_FINITE, guard=8, initial_sites=[0],
                      start_time=t, space_offset=0, collect_edge_steps=True)
    return AuxiliaryProcess(spawn_time=t, space_offset=0,
                            parent_alive_at_spawn=False, child=child)


def collect_renewals(params: Params, n_records: int, *, seed: int,
                     monitor_horizon: float = 200.0, t_cap: float = 4000.0,
                     initial: InitialCondition | None = None) -> list[RenewalRecord]:
    initial = initial or InitialCondition.single_origin()
    out = []
    for i in range(n_records):
        s = trial_seed(seed, i)
        policy = TruncationPolicy()
        lo, hi, mode, sites = resolve_window(params, initial, t_cap + monitor_horizon, policy)
        parent = Simulator(params, seed=s, lo=lo, hi=hi, mode=mode,
                           guard=policy.guard, initial_sites=sites,
                           collect_edge_steps=True)
        rec = detect_renewal(parent, monitor_horizon=monitor_horizon, t_cap=t_cap)
        rec.seed = s
        out.append(rec)
    return out


def shared_clock_domination(lam: float, eps: float, *, seed: int, horizon: float,
                            initial: InitialCondition, cadence: float = 0.5) -> bool:
    """Shared clocks: the standard process stays a subset of the boosted one.

    Both replicas read the same realization; the boost only adds infections,
    so containment holds at every time until the dominated copy dies.
    Checked here on a sample grid.
    """
    p_std = Params(lam, lam, Variant.STANDARD)
    p_bm = Params(lam, lam + eps, Variant.BOUNDARY)
    policy = TruncationPolicy()
    lo, hi, mode, sites = resolve_window(p_bm, initial, horizon, policy)
    grid = [k * cadence for k in range(int(horizon / cadence) + 1)]
    a = Simulator(p_std, seed=seed, lo=lo, hi=hi, mode=mode, guard=policy.guard,
                  initial_sites=sites)
    b = Simulator(p_bm, seed=seed, lo=lo, hi=hi, mode=mode, guard=policy.guard,
                  initial_sites=sites)
    a.state.run_until(horizon, sample_times=list(grid), collect_config=True)
    b.state.run_until(horizon, sample_times=list(grid), collect_config=True)
    ta = list(a.state.s_t)
    tb = list(b.state.s_t)
    for i, t in enumerate(ta):
        if t not in tb:
            continue  # dominated copy died first: nothing left to check
        j = tb.index(t)
        wa = a.state.s_configs[i]
        wb = b.state.s_configs[j]
        for x, y in zip(wa, wb):
            if x & ~y:
                return False
    return True


@dataclass
class DominationReport:
    t_grid: list[float]
    p_spread: list[float]
    p_contig: list[float]
    se: list[float]
    holds: list[bool]

    @property
    def all_hold(self) -> bool:
        return all(self.holds)

    def to_dict(self) -> dict:
        return {"t_grid": self.t_grid, "p_spread": self.p_spread,
                "p_contig": self.p_contig, "se": self.se,
                "holds": self.holds, "all_hold": self.all_hold}


def domination_check_liggett(lam: float, spread_sites, n: int, t_grid, trials: int,
                             *, seed: int) -> DominationReport:
    """Survival from a spread-out n-set dominates survival from [0, n-1].

    The order coupling behind this is not constructed; the probabilistic
    consequence is estimated by independent Monte Carlo on both sides and
    checked within 3 standard errors at each grid time.
    """
    params = Params(lam, lam, Variant.STANDARD)
    t_end = max(t_grid)
    ext_spread = _extinction_times(params, InitialCondition.finite(spread_sites),
                                   trials, seed=trial_seed(seed, 1), t_max=t_end)
    ext_contig = _extinction_times(params, InitialCondition.finite(range(n)),
                                   trials, seed=trial_seed(seed, 2), t_max=t_end)
    p_a, p_b, ses, holds = [], [], [], []
    for t in t_grid:
        pa = float(np.mean([e is None or e > t for e in ext_spread]))
        pb = float(np.mean([e is None or e > t for e in ext_contig]))
        se = math.sqrt(pa * (1 - pa) / trials + pb * (1 - pb) / trials)
        p_a.append(pa)
        p_b.append(pb)
        ses.append(se)
        holds.append(pa >= pb - 3 * se)
    return DominationReport(t_grid=list(t_grid), p_spread=p_a, p_contig=p_b,
                            se=ses, holds=holds)


def _extinction_times(params: Params, init: InitialCondition, trials: int, *,
                      seed: int, t_max: float) -> list:
    from .engine import run_trial

    out = []
    for i in range(trials):
        _, s = run_trial(params, init, seed=trial_seed(seed, i), t_max=t_max,
                         cadence=None)
        out.append(s.extinction_time)
    return out
