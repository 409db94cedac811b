"""Space-time open-path reachability and box-crossing queries.

Queries run over a materialized :class:`~bmcp.clocks.SpaceTimeRecord`.
Interior-clock paths are decided by a reachability sweep over the realized
arrows (the construction is additive, so one source suffices).  Boosted
paths are dynamics-dependent: the boost clock infects from wherever the
running process's edge happens to be, so the full process is replayed
first to resolve boost targets and those realized arrows are then offered
to the sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clocks import (KIND_BOOST_LEFT, KIND_BOOST_RIGHT, KIND_EDGE_LEFT,
                     KIND_EDGE_RIGHT, KIND_RECOVERY, SpaceTimeRecord)
from .params import Variant


class RecordIncomplete(Exception):
    pass


@dataclass(frozen=True)
class SpaceTimeBox:
    lo: int
    hi: int
    t0: float
    t1: float

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("box needs lo <= hi")
        if self.t1 <= self.t0:
            raise ValueError("box needs positive time height")


@dataclass(frozen=True)
class PathStep:
    time: float
    source: int
    target: int
    kind: int

    def to_dict(self) -> dict:
        return {"time": self.time, "source": self.source,
                "target": self.target, "kind": self.kind}


class _Node:
    __slots__ = ("step", "prev")

    def __init__(self, step, prev):
        self.step = step
        self.prev = prev

    def chain(self) -> list[PathStep]:
        out = []
        node = self
        while node is not None:
            if node.step is not None:
                out.append(node.step)
            node = node.prev
        out.reverse()
        return out


@dataclass
class CrossingReport:
    crossed: bool
    witness: list[PathStep] | None
    start_site: int | None = None
    end_site: int | None = None

    def to_dict(self) -> dict:
        return {
            "crossed": self.crossed,
            "start_site": self.start_site,
            "end_site": self.end_site,
            "witness": None if self.witness is None else [s.to_dict() for s in self.witness],
        }


def _require_cover(record: SpaceTimeRecord, box: SpaceTimeBox):
    if not record.covers(box.lo, box.hi, box.t0, box.t1):
        raise RecordIncomplete(
            f"record [{record.lo},{record.hi}]x[{record.t0},{record.t1}] "
            f"does not cover box [{box.lo},{box.hi}]x[{box.t0},{box.t1}]"
        )


def replay_dynamics(record: SpaceTimeRecord, initial_set, box: SpaceTimeBox,
                    variant: int = Variant.BOUNDARY) -> list[PathStep]:
    """Replay the boosted process in the box (closed boundaries); return the
    realized boost arrows.  Interior arrows are the record's own arrivals."""
    _require_cover(record, box)
    occ = set(s for s in initial_set if box.lo <= s <= box.hi)
    realized: list[PathStep] = []
    for t, code, kind, site in record.merged():
        if t <= box.t0 or t > box.t1:
            continue
        if kind == KIND_RECOVERY:
            occ.discard(site)
        elif kind in (KIND_EDGE_RIGHT, KIND_EDGE_LEFT):
            if site not in occ:
                continue
            tgt = site + 1 if kind == KIND_EDGE_RIGHT else site - 1
            if box.lo <= tgt <= box.hi:
                occ.add(tgt)
        elif kind == KIND_BOOST_RIGHT and variant >= Variant.RIGHT_EDGE:
            if occ:
                r = max(occ)
                if r + 1 <= box.hi:
                    occ.add(r + 1)
                    realized.append(PathStep(t, r, r + 1, KIND_BOOST_RIGHT))
        elif kind == KIND_BOOST_LEFT and variant == Variant.BOUNDARY:
            if occ:
                l = min(occ)
                if l - 1 >= box.lo:
                    occ.add(l - 1)
                    realized.append(PathStep(t, l, l - 1, KIND_BOOST_LEFT))
    return realized


def _sweep(record: SpaceTimeRecord, box: SpaceTimeBox, sources: dict[int, float],
           t_stop: float, extra_arrows=None, renewable_source: int | None = None,
           stop_site: int | None = None):
    """Reachability over realized arrows with recovery kills.

    ``sources`` maps sites to activation times; ``renewable_source``
    reactivates immediately after each of its recoveries (free start time).
    Returns (reach, hit_node): reach maps occupied sites at t_stop to
    witness nodes; hit_node is the first activation of ``stop_site``.
    """
    rows = []
    for t, code, kind, site in record.events:
        if kind == KIND_RECOVERY:
            rows.append((t, code, 0, site, site))
        elif kind == KIND_EDGE_RIGHT:
            rows.append((t, code, 1, site, site + 1))
        elif kind == KIND_EDGE_LEFT:
            rows.append((t, code, 2, site, site - 1))
    for a in extra_arrows or ():
        rows.append((a.time, -1, a.kind, a.source, a.target))
    rows.sort(key=lambda r: (r[0], r[1]))

    reach: dict[int, _Node] = {}
    pend = sorted(sources.items(), key=lambda kv: (kv[1], kv[0]))
    pi = 0
    hit = None

    def activate_pending(limit):
        nonlocal pi, hit
        while pi < len(pend) and pend[pi][1] <= limit:
            s, _ = pend[pi]
            if s not in reach and box.lo <= s <= box.hi:
                reach[s] = _Node(None, None)
                if stop_site is not None and s == stop_site and hit is None:
                    hit = reach[s]
            pi += 1

    for t, code, kind, src, tgt in rows:
        if t > t_stop:
            break
        activate_pending(t)
        if t <= box.t0:
            continue
        if kind == 0:
            if box.lo <= src <= box.hi:
                reach.pop(src, None)
                if src == renewable_source:
                    reach[src] = _Node(None, None)
            continue
        if src in reach and box.lo <= src <= box.hi and box.lo <= tgt <= box.hi \
                and tgt not in reach:
            node = _Node(PathStep(t, src, tgt, kind), reach[src])
            reach[tgt] = node
            if stop_site is not None and tgt == stop_site and hit is None:
                hit = node
    activate_pending(t_stop)
    return reach, hit


def open_path_exists(record: SpaceTimeRecord, frm: tuple[int, float],
                     to: tuple[int, float], mode: str, initial_set=None,
                     confine: SpaceTimeBox | None = None,
                     variant: int = Variant.BOUNDARY):
    """Decide whether an open path joins two space-time points.

    mode "lambda_i" uses interior clocks only; mode "lambda_e" first replays
    the boosted process from ``initial_set`` to realize boost arrows and
    offers those to paths as well.  Returns (exists, witness_steps).
    """
    x, t_from = frm
    y, t_to = to
    if t_from > t_to:
        raise ValueError("need from.time <= to.time")
    box = confine or SpaceTimeBox(record.lo, record.hi, record.t0, record.t1)
    _require_cover(record, box)
    if not (box.lo <= x <= box.hi and box.lo <= y <= box.hi):
        return False, None
    extra = None
    if mode == "lambda_e":
        if initial_set is None:
            raise ValueError("lambda_e paths need the initial infected set")
        extra = replay_dynamics(record, initial_set, box, variant)
    elif mode != "lambda_i":
        raise ValueError(f"unknown mode {mode!r}")
    if initial_set is not None and t_from <= box.t0 and x not in set(initial_set):
        return False, None
    reach, _ = _sweep(record, box, {x: t_from}, t_to, extra_arrows=extra)
    if y in reach:
        return True, reach[y].chain()
    return False, None


def box_crossed_vertically(record: SpaceTimeRecord, box: SpaceTimeBox,
                           initial_set=None) -> CrossingReport:
    """A path from the bottom edge spans the full time height inside the box."""
    _require_cover(record, box)
    if initial_set is None:
        initial_set = range(box.lo, box.hi + 1)
    sources = {s: box.t0 for s in initial_set if box.lo <= s <= box.hi}
    if not sources:
        return CrossingReport(False, None)
    reach, _ = _sweep(record, box, sources, box.t1)
    if not reach:
        return CrossingReport(False, None)
    end = min(reach)
    steps = reach[end].chain()
    start = steps[0].source if steps else end
    return CrossingReport(True, steps, start_site=start, end_site=end)


def box_crossed_horizontally(record: SpaceTimeRecord, box: SpaceTimeBox) -> CrossingReport:
    """A path runs from the left to the right column inside the box, between
    some pair of times; the left column may restart after recoveries."""
    _require_cover(record, box)
    if box.hi == box.lo:
        return CrossingReport(True, [], start_site=box.lo, end_site=box.hi)
    reach, hit = _sweep(record, box, {box.lo: box.t0}, box.t1,
                        renewable_source=box.lo, stop_site=box.hi)
    if hit is None:
        return CrossingReport(False, None)
    steps = hit.chain()
    return CrossingReport(True, steps, start_site=box.lo, end_site=box.hi)


def validate_witness(record: SpaceTimeRecord, frm: tuple[int, float],
                     to: tuple[int, float], witness: list[PathStep],
                     extra_arrows: list[PathStep] | None = None) -> bool:
    """Independent check that a witness replays: every step is a realized
    arrow, consecutive sites differ by one, and no occupied segment spans a
    recovery arrival."""
    x, t_from = frm
    y, t_to = to
    arrows = set()
    for t, code, kind, site in record.events:
        if kind == KIND_EDGE_RIGHT:
            arrows.add((t, site, site + 1))
        elif kind == KIND_EDGE_LEFT:
            arrows.add((t, site, site - 1))
    for a in extra_arrows or ():
        arrows.add((a.time, a.source, a.target))
    recoveries: dict[int, list[float]] = {}
    for t, code, kind, site in record.events:
        if kind == KIND_RECOVERY:
            recoveries.setdefault(site, []).append(t)

    def killed(site, a, b) -> bool:
        return any(a < u <= b for u in recoveries.get(site, ()))

    cur_site, cur_t = x, t_from
    for s in witness:
        if abs(s.target - s.source) != 1 or s.source != cur_site:
            return False
        if (s.time, s.source, s.target) not in arrows:
            return False
        if s.time < cur_t or s.time > t_to:
            return False
        if killed(cur_site, cur_t, s.time):
            return False
        cur_site, cur_t = s.target, s.time
    if cur_site != y:
        return False
    if killed(cur_site, cur_t, t_to):
        return False
    return True


@dataclass
class EnvelopeFit:
    delta_hat: float
    scale_slope: float          # fitted exponent of sup|R| growth (= 1 - delta_hat)
    scale_slope_se: float
    y_grid: np.ndarray
    tail_probs: np.ndarray
    tail_slope: float
    tail_intercept: float
    tail_r2: float
    t_used: float

    def to_dict(self) -> dict:
        return {
            "delta_hat": self.delta_hat,
            "scale_slope": self.scale_slope,
            "scale_slope_se": self.scale_slope_se,
            "y_grid": self.y_grid.tolist(),
            "tail_probs": self.tail_probs.tolist(),
            "tail_slope": self.tail_slope,
            "tail_intercept": self.tail_intercept,
            "tail_r2": self.tail_r2,
            "t_used": self.t_used,
        }


class InsufficientTrials(Exception):
    pass


def fit_edge_envelope(t_grid, sup_abs_r: np.ndarray, min_trials: int = 1000,
                      y_grid=None) -> EnvelopeFit:
    """Envelope of the half-line edge: scaling exponent of sup |R| across the
    time grid, then the exponential-in-y tail at the largest time.

    ``sup_abs_r`` has one row per trial, one column per grid time.
    """
    sup_abs_r = np.asarray(sup_abs_r, dtype=float)
    n_trials = sup_abs_r.shape[0]
    if n_trials < min_trials:
        raise InsufficientTrials(f"need >= {min_trials} trials, got {n_trials}")
    t_grid = np.asarray(t_grid, dtype=float)
    means = sup_abs_r.mean(axis=0)
    lx = np.log(t_grid)
    ly = np.log(np.maximum(means, 1e-9))
    slope, intercept, se = _ols(lx, ly)
    delta_hat = 1.0 - slope
    t_big = float(t_grid[-1])
    scale = t_big ** (1.0 - delta_hat)
    sup_big = sup_abs_r[:, -1]
    if y_grid is None:
        qhi = np.quantile(sup_big, 0.995) / scale
        qlo = np.quantile(sup_big, 0.30) / scale
        y_grid = np.linspace(qlo, qhi, 12)
    y_grid = np.asarray(y_grid, dtype=float)
    probs = np.array([np.mean(sup_big > y * scale) for y in y_grid])
    keep = probs > 0
    ly2 = np.log(probs[keep])
    slope2, intercept2, _ = _ols(y_grid[keep], ly2)
    r2 = _r2(y_grid[keep], ly2, slope2, intercept2)
    return EnvelopeFit(
        delta_hat=delta_hat,
        scale_slope=slope,
        scale_slope_se=se,
        y_grid=y_grid,
        tail_probs=probs,
        tail_slope=slope2,
        tail_intercept=intercept2,
        tail_r2=r2,
        t_used=t_big,
    )


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept, and slope standard error of a least-squares line."""
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    if n > 2:
        resid = y - (slope * x + intercept)
        s2 = float(np.sum(resid**2) / (n - 2))
        se = math.sqrt(s2 / sxx)
    else:
        se = math.inf
    return slope, intercept, se


def _r2(x: np.ndarray, y: np.ndarray, slope: float, intercept: float) -> float:
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return 1.0 - ss_res / ss_tot
