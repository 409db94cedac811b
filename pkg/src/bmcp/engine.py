"""Event-driven time evolution with causal-cone window management.

A :class:`Simulator` wraps a kernel state (compiled or pure-Python) over a
finite window.  Window sizes follow the causal-cone rule
``W(T) = ceil(factor * (lambda_i + lambda_e + 1) * T) + margin``: the right
edge is dominated by a rate-(lambda_i + eps) Poisson process, so a
linear-in-T window spills with only stretched-exponentially small
probability.  Spills are detected by guard bands and invalidate the trial
instead of wrapping around.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py as K
from .configuration import Configuration, FINITE, HALF_LINE
from .kernel import make_state
from .params import InitialCondition, Params, Variant

NEG_INF = -math.inf
POS_INF = math.inf


class EmptyProcess(Exception):
    """Stepping a process that is already extinct."""


class NeverDies(Exception):
    """A truncated half-line process went extinct: truncation bug."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Window sizing rule plus optional explicit overrides."""

    factor: float = 4.0
    margin: int = 64
    guard: int = 8
    lo: int | None = None
    hi: int | None = None
    closed: bool = False
    depth: int | None = None          # half-line truncation depth override
    right_margin: int | None = None   # right-side window extent override

    def halfwidth(self, params: Params, horizon: float) -> int:
        return math.ceil(self.factor * (params.lambda_i + params.lambda_e + 1.0) * horizon) + self.margin

    def to_dict(self) -> dict:
        d = {"factor": self.factor, "margin": self.margin, "guard": self.guard}
        for k in ("lo", "hi", "depth", "right_margin"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        if self.closed:
            d["closed"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TruncationPolicy":
        return cls(
            factor=float(d.get("factor", 4.0)),
            margin=int(d.get("margin", 64)),
            guard=int(d.get("guard", 8)),
            lo=d.get("lo"),
            hi=d.get("hi"),
            closed=bool(d.get("closed", False)),
            depth=d.get("depth"),
            right_margin=d.get("right_margin"),
        )


def resolve_window(params: Params, init: InitialCondition, t_max: float,
                   policy: TruncationPolicy) -> tuple[int, int, int, list[int]]:
    """Window (lo, hi), kernel mode, and initial site list for a trial."""
    horizon = t_max + (init.burn_in if init.kind == "stationary" else 0.0)
    if policy.closed:
        if policy.lo is None or policy.hi is None:
            raise ValueError("closed mode needs an explicit window")
        lo, hi = policy.lo, policy.hi
        sites = _initial_sites(init, lo, hi)
        return lo, hi, K.MODE_CLOSED, sites
    w = policy.halfwidth(params, horizon)
    if init.is_half_space:
        depth = policy.depth if policy.depth is not None else (init.depth or w)
        right = policy.right_margin if policy.right_margin is not None else w
        lo = -depth - policy.guard
        hi = right + policy.guard
        if policy.lo is not None:
            lo = policy.lo
        if policy.hi is not None:
            hi = policy.hi
        sites = list(range(lo, 1))
        return lo, hi, K.MODE_HALF_LINE, sites
    base = _initial_sites(init, None, None)
    lo = (policy.lo if policy.lo is not None else min(base) - w - policy.guard)
    hi = (policy.hi if policy.hi is not None else max(base) + w + policy.guard)
    return lo, hi, K.MODE_FINITE, base


def _initial_sites(init: InitialCondition, lo, hi) -> list[int]:
    if init.kind == "single":
        return [0]
    if init.kind == "finite":
        return sorted(init.sites)
    if init.kind in ("half_line", "stationary"):
        if lo is None:
            raise ValueError("half-line initial condition needs a resolved window")
        return list(range(lo, 1))
    raise ValueError(init.kind)


class Simulator:
    """One process over one window, owning one kernel state."""

    def __init__(self, params: Params, *, seed: int, lo: int, hi: int, mode: int,
                 guard: int, initial_sites, start_time: float = 0.0,
                 space_offset: int = 0, backend: str | None = None,
                 collect_edge_steps: bool = False, collect_events: bool = False):
        self.params = params
        self.seed = seed
        self.mode = mode
        self.state = make_state(
            backend=backend,
            seed=seed,
            lam_i=params.lambda_i,
            eps=params.eps,
            variant=params.variant,
            lo=lo,
            hi=hi,
            mode=mode,
            guard=guard,
            initial_sites=initial_sites,
            start_time=start_time,
            space_offset=space_offset,
            collect_edge_steps=collect_edge_steps,
            collect_events=collect_events,
        )

    # -- queries ---------------------------------------------------------

    @property
    def now(self) -> float:
        return self.state.now

    @property
    def is_extinct(self) -> bool:
        return self.state.extinction_time is not None

    @property
    def invalid_reason(self):
        return self.state.invalid_reason

    def right_edge(self):
        r = self.state.r_edge
        return None if r == K.R_NONE else r

    def left_edge(self):
        l = self.state.l_edge
        if l == K.L_NONE:
            return None
        if self.mode == K.MODE_HALF_LINE and l == self.state.lo:
            return NEG_INF
        return l

    def cardinality(self):
        if self.mode == K.MODE_HALF_LINE and self.state.count > 0 and self.state.l_edge == self.state.lo:
            return POS_INF
        return self.state.count

    def configuration(self) -> Configuration:
        st = self.state
        cfg = Configuration(
            lo=st.lo, hi=st.hi, words=list(st.config_words()),
            left_boundary=HALF_LINE if self.mode == K.MODE_HALF_LINE else FINITE,
        )
        sites = cfg.sites()
        cfg._count = len(sites)
        cfg._left = sites[0] if sites else None
        cfg._right = sites[-1] if sites else None
        return cfg

    # -- evolution ---------------------------------------------------------

    def run_until(self, t: float, sample_times=None, collect_config=False) -> int:
        if t < self.now:
            raise ValueError("cannot run backwards")
        if self.is_extinct:
            raise EmptyProcess("process is extinct")
        status = self.state.run_until(t, sample_times=sample_times,
                                      collect_config=collect_config)
        if status == K.EXTINCT and self.mode == K.MODE_HALF_LINE:
            raise NeverDies("truncated half-line process went extinct")
        return status

    def step(self):
        """Apply the next state-changing event; returns (time, kind, source, target)."""
        if self.is_extinct:
            raise EmptyProcess("process is extinct")
        if not self.state.collect_events:
            raise ValueError("step() needs collect_events=True")
        before = len(self.state.events)
        status = self.state.run_until(POS_INF, max_applied=1)
        if len(self.state.events) > before:
            return self.state.events[-1]
        return None

    def total_jump_rate(self) -> float:
        """Sum of rates of all currently effective transitions in-window."""
        st = self.state
        if st.count == 0:
            return 0.0
        p = self.params
        rate = float(st.count) * p.recovery_rate
        infected = st.infected_sites()
        occupied = set(infected)
        for s in infected:
            for t in (s + 1, s - 1):
                if st.lo <= t <= st.hi and t not in occupied:
                    rate += p.lambda_i
        eps = p.eps
        if eps > 0.0:
            r, l = st.r_edge, st.l_edge
            if p.variant >= Variant.RIGHT_EDGE:
                if st.lo <= r + 1 <= st.hi and (r + 1) not in occupied:
                    rate += eps
            if p.variant == Variant.BOUNDARY and self.mode != K.MODE_HALF_LINE:
                if st.lo <= l - 1 <= st.hi and (l - 1) not in occupied:
                    rate += eps
        return rate

    def edge_step_log(self):
        st = self.state
        return (np.asarray(st.edge_steps_t, dtype=float),
                np.asarray(st.edge_steps_r, dtype=np.int64),
                np.asarray(st.edge_steps_l, dtype=np.int64))


@dataclass
class Trajectory:
    """Sampled observables of one trial, in absolute time."""

    times: np.ndarray
    right: np.ndarray
    left: np.ndarray
    counts: np.ndarray
    run_max_r: np.ndarray
    run_min_r: np.ndarray
    extinction_time: float | None
    censored_at: float | None
    event_count: int
    invalid: bool
    invalid_reason: str | None
    t0: float
    r0: int | None
    half_line: bool

    def canonical_csv(self) -> bytes:
        lines = ["time,right_edge,left_edge,cardinality"]
        for i in range(len(self.times)):
            r = self.right[i]
            l = self.left[i]
            c = self.counts[i]
            rs = "" if np.isnan(r) else str(int(r))
            if np.isnan(l):
                ls = ""
            elif np.isinf(l):
                ls = "-inf"
            else:
                ls = str(int(l))
            cs = "inf" if np.isinf(c) else str(int(c))
            lines.append(f"{self.times[i]!r},{rs},{ls},{cs}")
        ext = "" if self.extinction_time is None else repr(self.extinction_time)
        lines.append(f"# extinction_time={ext} invalid={self.invalid_reason or ''}")
        return ("\n".join(lines) + "\n").encode()

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_csv()).hexdigest()


@dataclass
class TrialSummary:
    """Per-trial reduction consumed by the estimators."""

    trial_index: int
    seed: int
    valid: bool
    invalid_reason: str | None
    extinction_time: float | None     # absolute; None when censored or invalid
    censored: bool
    t_max: float
    t0: float
    r0: int | None
    times: np.ndarray
    right: np.ndarray                 # float, NaN when empty
    left: np.ndarray                  # float, NaN when empty, -inf on half-line
    counts: np.ndarray                # float, inf on half-line
    run_max_r: np.ndarray
    run_min_r: np.ndarray
    event_count: int
    digest: str

    def rel_right(self) -> np.ndarray:
        """R(t) - R(t0) on the sample grid."""
        return self.right - float(self.r0 if self.r0 is not None else 0)


def run_trial(params: Params, init: InitialCondition, *, seed: int, t_max: float,
              policy: TruncationPolicy | None = None, cadence: float | None = 1.0,
              trial_index: int = 0, backend: str | None = None,
              stop_at_extinction: bool = True) -> tuple[Trajectory, TrialSummary]:
    """Run one trial end to end: burn-in (if any), then the measured window.

    Deterministic given (seed, params, init, t_max, policy, cadence).
    """
    policy = policy or TruncationPolicy()
    lo, hi, mode, sites = resolve_window(params, init, t_max, policy)
    sim = Simulator(params, seed=seed, lo=lo, hi=hi, mode=mode,
                    guard=0 if mode == K.MODE_CLOSED else policy.guard,
                    initial_sites=sites, backend=backend)
    st = sim.state

    t0 = 0.0
    if init.kind == "stationary":
        t0 = float(init.burn_in)
        try:
            status = sim.run_until(t0)
        except NeverDies:
            raise
        if status == K.INVALID:
            return _finish(sim, t0, None, t_max, trial_index, seed)

    r0 = sim.right_edge()
    st.reset_running_extremes()
    grid = None
    if cadence is not None and cadence > 0:
        n = int(math.floor(t_max / cadence + 1e-9))
        grid = [t0 + k * cadence for k in range(0, n + 1)]
    target = t0 + t_max
    if sim.is_extinct:
        status = K.EXTINCT
    else:
        status = st.run_until(target, sample_times=grid)
        if status == K.EXTINCT and mode == K.MODE_HALF_LINE:
            raise NeverDies("truncated half-line process went extinct")
    return _finish(sim, t0, r0, t_max, trial_index, seed)


def _finish(sim: Simulator, t0: float, r0, t_max: float, trial_index: int, seed: int):
    st = sim.state
    invalid = st.invalid_reason is not None
    half_line = sim.mode == K.MODE_HALF_LINE
    times = np.asarray(st.s_t, dtype=float)
    right = np.asarray(st.s_r, dtype=float)
    left = np.asarray(st.s_l, dtype=float)
    counts = np.asarray(st.s_count, dtype=float)
    if len(times):
        right[right == float(K.R_NONE)] = np.nan
        left[left == float(K.L_NONE)] = np.nan
        if half_line:
            left[:] = NEG_INF
            counts[:] = POS_INF
    traj = Trajectory(
        times=times,
        right=right,
        left=left,
        counts=counts,
        run_max_r=np.asarray(st.s_maxr, dtype=float),
        run_min_r=np.asarray(st.s_minr, dtype=float),
        extinction_time=st.extinction_time,
        censored_at=None if st.extinction_time is not None else t0 + t_max,
        event_count=st.applied,
        invalid=invalid,
        invalid_reason=st.invalid_reason,
        t0=t0,
        r0=r0,
        half_line=half_line,
    )
    summary = TrialSummary(
        trial_index=trial_index,
        seed=seed,
        valid=not invalid,
        invalid_reason=st.invalid_reason,
        extinction_time=st.extinction_time,
        censored=st.extinction_time is None and not invalid,
        t_max=t_max,
        t0=t0,
        r0=r0,
        times=times,
        right=right,
        left=left,
        counts=counts,
        run_max_r=traj.run_max_r,
        run_min_r=traj.run_min_r,
        event_count=st.applied,
        digest=traj.digest(),
    )
    return traj, summary


@dataclass
class StationarySample:
    """Edge-shifted configuration drawn by burn-in from the half-line."""

    config: Configuration
    valid: bool
    right_edge_abs: int


def sample_stationary_shifted(params: Params, burn_in: float, *, seed: int,
                              depth: int | None = None, report_depth: int = 64,
                              policy: TruncationPolicy | None = None,
                              backend: str | None = None) -> StationarySample:
    """Approximate a draw from the edge-shifted invariant law by burn-in.

    Runs the truncated half-line process to ``burn_in`` and returns the
    configuration shifted so its right edge sits at 0, restricted to
    ``report_depth`` sites behind the edge.
    """
    if burn_in <= 0:
        raise ValueError("burn_in must be positive")
    policy = policy or TruncationPolicy()
    if depth is not None:
        policy = TruncationPolicy(**{**policy.to_dict(), "depth": depth})
    init = InitialCondition.half_line(depth or policy.depth or policy.halfwidth(params, burn_in))
    lo, hi, mode, sites = resolve_window(params, init, burn_in, policy)
    sim = Simulator(params, seed=seed, lo=lo, hi=hi, mode=mode,
                    guard=policy.guard, initial_sites=sites, backend=backend)
    status = sim.run_until(burn_in)
    valid = status != K.INVALID
    r = sim.right_edge()
    cfg = sim.configuration()
    shifted = Configuration.from_sites(
        (s - r for s in cfg.sites() if r - report_depth <= s <= r),
        lo=-report_depth, hi=0, left_boundary=HALF_LINE,
    )
    return StationarySample(config=shifted, valid=valid, right_edge_abs=r)


def occupancy_profile(params: Params, burn_in: float, *, trials: int, seed: int,
                      report_depth: int = 48, depth: int | None = None,
                      policy: TruncationPolicy | None = None) -> np.ndarray:
    """Mean occupancy at depths 0..report_depth behind the shifted edge."""
    from .clocks import trial_seed

    acc = np.zeros(report_depth + 1)
    n_valid = 0
    for i in range(trials):
        s = sample_stationary_shifted(params, burn_in, seed=trial_seed(seed, i),
                                      depth=depth, report_depth=report_depth,
                                      policy=policy)
        if not s.valid:
            continue
        n_valid += 1
        for site in s.config.sites():
            acc[-site] += 1.0
    if n_valid == 0:
        raise RuntimeError("no valid stationary samples")
    return acc / n_valid


def profile_tv_distance(p1: np.ndarray, p2: np.ndarray) -> float:
    """Total-variation distance between two normalized occupancy profiles."""
    q1 = p1 / p1.sum()
    q2 = p2 / p2.sum()
    return 0.5 * float(np.abs(q1 - q2).sum())


def replay_applied_events(lo: int, hi: int, initial_sites, events) -> list[int]:
    """Re-apply a logged event stream to the initial state; returns words."""
    n_words = (hi - lo + 64) // 64
    words = [0] * n_words
    for s in initial_sites:
        k = s - lo
        words[k >> 6] |= 1 << (k & 63)
    for t, kind, source, target in events:
        k = target - lo
        if kind == 0:
            words[k >> 6] &= ~(1 << (k & 63))
        else:
            words[k >> 6] |= 1 << (k & 63)
    return words
