"""Exact transient analysis of the process restricted to a finite segment.

The restriction closes the boundaries: infections that would leave the
segment are suppressed, and the segment's own extreme infected sites carry
the boosted rate according to the variant.  This makes a genuine
finite-state CTMC on {0,1}^n with the all-susceptible state absorbing,
solved by uniformization; it is the independent brute-force reference the
simulator is validated against in closed-boundary mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .params import Params, Variant

MAX_SEGMENT = 14


class TooLarge(Exception):
    pass


class SolveFailure(Exception):
    pass


@dataclass
class SegmentModel:
    n: int
    params: Params
    generator: sparse.csr_matrix   # Q, row sums 0, empty state absorbing

    @property
    def n_states(self) -> int:
        return 1 << self.n


def transition_rates(state: int, n: int, params: Params) -> list[tuple[int, float]]:
    """Outgoing (next_state, rate) pairs of one segment configuration."""
    if state == 0:
        return []
    out = []
    sites = [x for x in range(n) if (state >> x) & 1]
    r = sites[-1]
    l = sites[0]
    lam = params.lambda_i
    eps = params.eps
    for x in sites:
        out.append((state & ~(1 << x), params.recovery_rate))
        for y in (x + 1, x - 1):
            if 0 <= y < n and not (state >> y) & 1:
                rate = lam
                if eps > 0.0:
                    if params.variant >= Variant.RIGHT_EDGE and x == r and y == x + 1:
                        rate += eps
                    if params.variant == Variant.BOUNDARY and x == l and y == x - 1:
                        rate += eps
                if rate > 0.0:
                    out.append((state | (1 << y), rate))
    return out


def build_generator(n: int, params: Params) -> SegmentModel:
    if not 1 <= n <= MAX_SEGMENT:
        raise TooLarge(f"segment length must be in [1, {MAX_SEGMENT}]")
    size = 1 << n
    rows, cols, vals = [], [], []
    for state in range(1, size):
        total = 0.0
        for nxt, rate in transition_rates(state, n, params):
            rows.append(state)
            cols.append(nxt)
            vals.append(rate)
            total += rate
        rows.append(state)
        cols.append(state)
        vals.append(-total)
    q = sparse.csr_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(size, size)
    )
    return SegmentModel(n=n, params=params, generator=q)


def exit_rate(model: SegmentModel, state: int) -> float:
    return -float(model.generator[state, state])


def _uniformized(model: SegmentModel) -> tuple[sparse.csr_matrix, float]:
    q = model.generator
    lam = float(-q.diagonal().min())
    if lam <= 0.0:
        lam = 1.0
    p = sparse.eye(model.n_states, format="csr") + q / lam
    return p.tocsr(), lam


def _poisson_weights(mu: float, tol: float = 1e-10):
    """Poisson(mu) pmf terms until the truncated tail is below tol."""
    if mu == 0.0:
        return [1.0]
    w = math.exp(-mu)
    weights = [w]
    total = w
    k = 0
    while total < 1.0 - tol:
        k += 1
        w = w * mu / k
        weights.append(w)
        total += w
        if k > 10_000_000:
            raise RuntimeError("Poisson truncation failed to converge")
    return weights


def extinction_probability_by(model: SegmentModel, t: float) -> np.ndarray:
    """P(tau_empty <= t) for every initial state at once.

    The empty state is absorbing, so this is the empty-state mass of the
    time-t distribution; one uniformized vector iteration against the
    indicator of the empty state yields the whole column.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    size = model.n_states
    if t == 0.0:
        out = np.zeros(size)
        out[0] = 1.0
        return out
    p, lam = _uniformized(model)
    weights = _poisson_weights(lam * t)
    v = np.zeros(size)
    v[0] = 1.0
    acc = weights[0] * v
    for w in weights[1:]:
        v = p @ v
        acc = acc + w * v
    return acc


def distribution_at(model: SegmentModel, initial_state: int, t: float) -> np.ndarray:
    """Exact time-t distribution row for one initial state."""
    size = model.n_states
    row = np.zeros(size)
    row[initial_state] = 1.0
    if t == 0.0:
        return row
    p, lam = _uniformized(model)
    pt = p.T.tocsr()
    weights = _poisson_weights(lam * t)
    v = row
    acc = weights[0] * v
    for w in weights[1:]:
        v = pt @ v
        acc = acc + w * v
    return acc


def expected_extinction_time(model: SegmentModel) -> np.ndarray:
    """E[tau_empty] per initial state (index 0 is 0 by convention)."""
    size = model.n_states
    q = model.generator.tocsc()
    idx = np.arange(1, size)
    q_tt = q[idx][:, idx]
    rhs = -np.ones(size - 1)
    try:
        m = spsolve(q_tt.tocsc(), rhs)
    except Exception as exc:  # pragma: no cover - conditioning issues
        raise SolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(m)):
        raise SolveFailure("non-finite first-passage solution")
    out = np.zeros(size)
    out[1:] = m
    return out
