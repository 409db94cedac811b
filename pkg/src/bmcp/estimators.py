"""Statistical reductions over trial batches.

All estimators are deterministic functions of the summary multiset: inputs
are sorted by trial index internally, so merge order never matters.
Censoring is never silently dropped; every report carries the censored
fraction it was computed from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .engine import TrialSummary
from .paths import _ols, _r2


class TooFewTrials(Exception):
    pass


class InsufficientExtinctions(Exception):
    pass


def _valid_sorted(summaries) -> list[TrialSummary]:
    out = sorted((s for s in summaries if s.valid), key=lambda s: s.trial_index)
    return out


def invalid_census(summaries) -> dict:
    n = len(list(summaries))
    bad = [s for s in summaries if not s.valid]
    return {"total": n, "invalid": len(bad),
            "invalid_fraction": len(bad) / n if n else 0.0}


def _rel_at(s: TrialSummary, t: float) -> float:
    """R(t0 + t) - R(t0) from the sample grid."""
    idx = np.searchsorted(s.times, s.t0 + t)
    if idx >= len(s.times) or abs(s.times[idx] - (s.t0 + t)) > 1e-9:
        raise ValueError(f"time {t} not on the sample grid of trial {s.trial_index}")
    return float(s.right[idx]) - float(s.r0)


@dataclass
class EdgeSpeedEstimate:
    alpha_hat: float
    se: float
    n_trials: int
    horizon: float
    increment_mean: float       # mean unit-time increment (same estimand)
    censored_fraction: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def estimate_edge_speed(summaries, horizon: float, min_trials: int = 30) -> EdgeSpeedEstimate:
    """Mean of R(t)/t across trials, measured from the post-burn-in origin."""
    vs = _valid_sorted(summaries)
    if len(vs) < min_trials:
        raise TooFewTrials(f"need >= {min_trials} valid trials, got {len(vs)}")
    per = np.array([_rel_at(s, horizon) / horizon for s in vs])
    alpha = float(per.mean())
    se = float(per.std(ddof=1) / math.sqrt(len(per)))
    cens = float(np.mean([s.censored for s in vs]))
    return EdgeSpeedEstimate(alpha_hat=alpha, se=se, n_trials=len(vs),
                             horizon=horizon, increment_mean=alpha,
                             censored_fraction=cens)


@dataclass
class SurvivalCurve:
    sizes: list[int]
    theta_hat: list[float]
    se: list[float]
    n: list[int]
    t_max: float
    monotone_within_3sigma: bool
    loglog_slope: float | None
    loglog_slope_se: float | None
    sizes_used_in_fit: list[int]

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def survival_curve(results_by_size: dict[int, list[TrialSummary]], t_max: float) -> SurvivalCurve:
    """Censored survival estimates per initial interval size.

    theta_hat(n) is the fraction still alive at t_max (censoring declares
    survival; the bias is upward and stretched-exponentially small in t_max).
    """
    sizes = sorted(results_by_size)
    theta, ses, ns = [], [], []
    for n in sizes:
        vs = _valid_sorted(results_by_size[n])
        k = sum(1 for s in vs if s.censored)
        m = len(vs)
        p = k / m if m else 0.0
        theta.append(p)
        ses.append(math.sqrt(p * (1 - p) / m) if m else 0.0)
        ns.append(m)
    monotone = True
    for i in range(len(sizes) - 1):
        slack = 3 * math.sqrt(ses[i] ** 2 + ses[i + 1] ** 2)
        if theta[i + 1] < theta[i] - slack:
            monotone = False
    xs, ys, used = [], [], []
    for n, th, m in zip(sizes, theta, ns):
        p_ext = 1.0 - th
        if 0 < p_ext < 1 and m * p_ext >= 5 and n >= 1:
            xs.append(math.log(n))
            ys.append(math.log(-math.log(p_ext)))
            used.append(n)
    slope = slope_se = None
    if len(xs) >= 3:
        slope, _, slope_se = _ols(np.array(xs), np.array(ys))
    return SurvivalCurve(sizes=sizes, theta_hat=theta, se=ses, n=ns, t_max=t_max,
                         monotone_within_3sigma=monotone, loglog_slope=slope,
                         loglog_slope_se=slope_se, sizes_used_in_fit=used)


@dataclass
class TailFit:
    exponent: float             # fitted stretch exponent a
    exponent_se: float
    exponent_ci95: tuple[float, float]
    rate: float                 # fitted c' (scale of t^a inside the exponential)
    prefactor: float            # fitted c
    fit_range: tuple[float, float]
    grid: list[float]
    tail: list[float]
    r2: float
    n_extinct: int
    n_censored: int
    n_invalid: int

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["exponent_ci95"] = list(self.exponent_ci95)
        d["fit_range"] = list(self.fit_range)
        return d


def extinction_tail(summaries, t_max: float, min_extinct: int = 1000,
                    min_bin: int = 20, n_grid: int = 12) -> TailFit:
    """Stretched-exponential fit of the conditional extinction-time tail.

    G(t) = fraction of trials with t < tau < t_max; censored trials are
    excluded from the tail mass and reported.  The fit regresses
    log(-log G) on log t over grid points backed by at least ``min_bin``
    exceedances, so the censored end never enters the fit.
    """
    vs = _valid_sorted(summaries)
    n_invalid = len(list(summaries)) - len(vs)
    taus = np.array([s.extinction_time - s.t0 for s in vs if s.extinction_time is not None])
    n_cens = sum(1 for s in vs if s.censored)
    if len(taus) < min_extinct:
        raise InsufficientExtinctions(f"need >= {min_extinct} extinct trials, got {len(taus)}")
    n_tot = len(vs)
    t_lo = float(np.quantile(taus, 0.50))
    order = np.sort(taus)
    k = len(order) - min_bin
    t_hi = float(order[k]) if k >= 0 else float(order[-1])
    if t_hi <= t_lo:
        t_hi = float(order[-1])
    grid = np.exp(np.linspace(math.log(max(t_lo, 1e-3)), math.log(t_hi), n_grid))
    tail = np.array([np.sum(taus > t) / n_tot for t in grid])
    keep = tail > 0
    lx = np.log(grid[keep])
    ly = np.log(-np.log(tail[keep]))
    slope, intercept, se = _ols(lx, ly)
    r2 = _r2(lx, ly, slope, intercept)
    dof = max(len(lx) - 2, 1)
    tcrit = stats.t.ppf(0.975, dof)
    ci = (slope - tcrit * se, slope + tcrit * se)
    return TailFit(exponent=slope, exponent_se=se, exponent_ci95=ci,
                   rate=math.exp(intercept), prefactor=1.0,
                   fit_range=(float(grid[keep][0]), float(grid[keep][-1])),
                   grid=grid.tolist(), tail=tail.tolist(), r2=r2,
                   n_extinct=len(taus), n_censored=n_cens, n_invalid=n_invalid)


def tail_curve(summaries, grid) -> np.ndarray:
    """P(t < tau < t_max) on an explicit grid (censored mass excluded)."""
    vs = _valid_sorted(summaries)
    taus = np.array([s.extinction_time - s.t0 for s in vs if s.extinction_time is not None])
    n_tot = len(vs)
    return np.array([np.sum(taus > t) / n_tot for t in grid])


@dataclass
class CltReport:
    scales: list[float]
    variances: list[float]
    var_fit_r2: float
    var_slope: float
    sigma2_hat: float           # Var at the largest scale over that scale
    normality_pvalue: float     # calibrated KS distance to the fitted normal
    moment_test_pvalue: float   # skew/kurtosis moment test, reported alongside
    ks_stat: float
    skewness: list[float]
    n_trials: int
    alpha_hat: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def lilliefors_normal_pvalue(x: np.ndarray, n_null: int = 2000,
                             seed: int = 1234) -> tuple[float, float]:
    """KS distance to the normal with fitted mean/sd, with a Monte Carlo null.

    Fitting the parameters shrinks the KS statistic, so the plain KS table is
    badly conservative; the null distribution is rebuilt by simulation
    (deterministic internal seed).  Returns (p_value, ks_stat).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)

    def ks_fitted(v):
        z = (v - v.mean()) / v.std(ddof=1)
        z = np.sort(z)
        cdf = stats.norm.cdf(z)
        up = np.max(np.arange(1, n + 1) / n - cdf)
        dn = np.max(cdf - np.arange(0, n) / n)
        return max(up, dn)

    d_obs = ks_fitted(x)
    rng = np.random.default_rng(seed)
    null = rng.normal(size=(n_null, n))
    hits = 0
    for b in range(n_null):
        if ks_fitted(null[b]) >= d_obs:
            hits += 1
    return (1 + hits) / (1 + n_null), float(d_obs)


def clt_diagnostics(summaries, scales, min_trials: int = 100) -> CltReport:
    """Variance growth and normality of edge fluctuations across scales.

    Normality at the largest scale is judged by the calibrated KS distance
    to the fitted normal.  The moment (skew/kurtosis) test is reported as
    well: edge increments have gap-sized down-jumps but unit up-jumps, so a
    skewness of order t^(-1/2) remains resolvable by moment tests at any
    fixed scale when enough trials are taken, without saying anything
    against the limit shape.
    """
    vs = _valid_sorted(summaries)
    if len(vs) < min_trials:
        raise TooFewTrials(f"need >= {min_trials} trials, got {len(vs)}")
    scales = sorted(scales)
    horizon = scales[-1]
    alpha = estimate_edge_speed(vs, horizon, min_trials=min_trials).alpha_hat
    variances, skews = [], []
    z_at_largest = None
    for t in scales:
        incs = np.array([_rel_at(s, t) for s in vs])
        x = (incs - alpha * t)
        variances.append(float(x.var(ddof=1)))
        z = x / math.sqrt(t)
        skews.append(float(stats.skew(z)))
        if t == horizon:
            z_at_largest = z
    slope, intercept, _ = _ols(np.array(scales, dtype=float), np.array(variances))
    r2 = _r2(np.array(scales, dtype=float), np.array(variances), slope, intercept)
    p_moment = float(stats.normaltest(z_at_largest).pvalue)
    p_ks, d_ks = lilliefors_normal_pvalue(z_at_largest)
    return CltReport(scales=[float(s) for s in scales], variances=variances,
                     var_fit_r2=r2, var_slope=slope,
                     sigma2_hat=variances[-1] / horizon,
                     normality_pvalue=p_ks, moment_test_pvalue=p_moment,
                     ks_stat=d_ks, skewness=skews, n_trials=len(vs),
                     alpha_hat=alpha)


def increment_series(summary: TrialSummary) -> np.ndarray:
    """Unit-time increments of the right edge after the measurement origin."""
    mask = summary.times >= summary.t0 - 1e-9
    r = summary.right[mask]
    return np.diff(r)


@dataclass
class MixingReport:
    lags: list[int]
    alpha: list[float]          # dependence coefficient estimate per lag
    floor: list[float]          # permutation noise floor per lag (99th pct)
    autocorr: list[float]
    decay_exponent: float       # positive = decaying dependence
    decay_exponent_se: float
    trend_slope: float          # OLS slope of alpha on lag (should be <= 0)
    n_increments: int

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def mixing_profile(series_list, max_lag: int = 8, n_perm: int = 40,
                   perm_seed: int = 7, min_total: int = 1000) -> MixingReport:
    """Dependence decay of the unit increments.

    The coefficient at lag k is the largest absolute covariance defect
    |P(A, B_k) - P(A)P(B)| over a fixed family of threshold events of the
    increments (quartiles and sign).  A finite event family can only lower
    the supremum over sigma-fields, so this is a lower-bound diagnostic.
    The floor comes from within-series permutations, which destroy temporal
    structure while keeping marginals.
    """
    series_list = [np.asarray(s, dtype=float) for s in series_list]
    total = sum(len(s) for s in series_list)
    if total < min_total:
        raise TooFewTrials(f"need >= {min_total} increments, got {total}")
    pooled = np.concatenate(series_list)
    thresholds = list(np.quantile(pooled, [0.25, 0.5, 0.75])) + [0.0]
    lags = list(range(0, max_lag + 1))
    alpha = [_alpha_at_lag(series_list, k, thresholds) for k in lags]
    rng = np.random.default_rng(perm_seed)
    floors = np.zeros((n_perm, len(lags)))
    for b in range(n_perm):
        perm = [rng.permutation(s) for s in series_list]
        for j, k in enumerate(lags):
            floors[b, j] = _alpha_at_lag(perm, k, thresholds) if k > 0 else np.nan
    floor = [float("nan")] + [float(np.quantile(floors[:, j], 0.99))
                              for j in range(1, len(lags))]
    ac = [_autocorr(series_list, k) for k in lags]
    la = np.log(np.maximum(np.array(alpha), 1e-12))
    slope, _, se = _ols(np.array(lags, dtype=float), la)
    trend, _, _ = _ols(np.array(lags, dtype=float), np.array(alpha))
    return MixingReport(lags=lags, alpha=[float(a) for a in alpha], floor=floor,
                        autocorr=ac, decay_exponent=float(-slope),
                        decay_exponent_se=float(se), trend_slope=float(trend),
                        n_increments=total)


def _alpha_at_lag(series_list, lag: int, thresholds) -> float:
    worst = 0.0
    for qa in thresholds:
        for qb in thresholds:
            num = 0
            na = 0
            nb = 0
            tot = 0
            for s in series_list:
                if len(s) <= lag:
                    continue
                a = s[: len(s) - lag] <= qa
                b = s[lag:] <= qb
                num += int(np.sum(a & b))
                na += int(np.sum(a))
                nb += int(np.sum(b))
                tot += len(a)
            if tot == 0:
                continue
            d = abs(num / tot - (na / tot) * (nb / tot))
            worst = max(worst, d)
    return worst


def _autocorr(series_list, lag: int) -> float:
    num = 0.0
    den = 0.0
    for s in series_list:
        if len(s) <= lag:
            continue
        x = s - s.mean()
        num += float(np.sum(x[: len(x) - lag] * x[lag:]))
        den += float(np.sum(x * x))
    return num / den if den else float("nan")


@dataclass
class EnvelopeCheck:
    t: float
    n_grid: list[float]
    thresholds: list[float]
    probs: list[float]
    nonincreasing: bool
    rate_bound: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def increment_envelope_check(summaries, t: float, n_grid, rate_bound: float) -> EnvelopeCheck:
    """P(sup_{s<=t} |R(s) - R(0)| > 4 * rate_bound * (t + n)) across n.

    ``rate_bound`` is lambda_i + eps, the Poisson domination rate of edge
    jumps.  The running extremes come from the per-sample records, so the
    supremum is evaluated at the sample time nearest t from above.
    """
    vs = _valid_sorted(summaries)
    sups = []
    for s in vs:
        idx = int(np.searchsorted(s.times, s.t0 + t))
        idx = min(idx, len(s.times) - 1)
        hi = s.run_max_r[idx] - s.r0
        lo = s.r0 - s.run_min_r[idx]
        sups.append(max(hi, lo))
    sups = np.array(sups, dtype=float)
    thresholds = [4.0 * rate_bound * (t + n) for n in n_grid]
    probs = [float(np.mean(sups > thr)) for thr in thresholds]
    ok = all(probs[i + 1] <= probs[i] for i in range(len(probs) - 1))
    return EnvelopeCheck(t=t, n_grid=[float(n) for n in n_grid],
                         thresholds=thresholds, probs=probs,
                         nonincreasing=ok, rate_bound=rate_bound)


@dataclass
class LargeDeviationShape:
    t_grid: list[float]
    probs: list[float]
    se: list[float]
    gamma: float
    b: float
    nonincreasing_within_2sigma: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def large_deviation_shape(summaries, alpha_hat: float, t_grid, gamma: float = 0.25,
                          b: float = 1.0) -> LargeDeviationShape:
    """Empirical P(|R(t) - alpha t| > b t^(1-gamma)) across the time grid."""
    vs = _valid_sorted(summaries)
    probs, ses = [], []
    for t in t_grid:
        devs = np.array([abs(_rel_at(s, t) - alpha_hat * t) for s in vs])
        thr = b * t ** (1.0 - gamma)
        p = float(np.mean(devs > thr))
        probs.append(p)
        ses.append(math.sqrt(p * (1 - p) / len(vs)))
    ok = True
    for i in range(len(t_grid) - 1):
        slack = 2 * math.sqrt(ses[i] ** 2 + ses[i + 1] ** 2)
        if probs[i + 1] > probs[i] + slack:
            ok = False
    return LargeDeviationShape(t_grid=[float(t) for t in t_grid], probs=probs,
                               se=ses, gamma=gamma, b=b,
                               nonincreasing_within_2sigma=ok)


@dataclass
class GeometricFit:
    q_hat: float
    chi2: float
    pvalue: float
    bins: list[int]
    observed: list[int]
    expected: list[float]
    n: int

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def geometric_chi2(counts, min_expected: float = 5.0) -> GeometricFit:
    """Chi-square compatibility of attempt counts with a geometric law.

    q is estimated by maximum likelihood (q = N / sum I), one degree of
    freedom is charged for it, and the tail is pooled so every expected
    bin count stays above ``min_expected``.
    """
    counts = np.asarray(list(counts), dtype=int)
    n = len(counts)
    q = n / counts.sum()
    kmax = int(counts.max())
    probs = [(1 - q) ** (k - 1) * q for k in range(1, kmax + 1)]
    probs.append((1 - q) ** kmax)  # tail bin
    exp = np.array(probs) * n
    obs = np.array([np.sum(counts == k) for k in range(1, kmax + 1)] + [0])
    # pool from the right until expected counts are all large enough
    while len(exp) > 2 and exp[-2] < min_expected:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        exp = exp[:-1]
        obs = obs[:-1]
    if exp[-1] < min_expected and len(exp) > 2:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        exp = exp[:-1]
        obs = obs[:-1]
    dof = max(len(exp) - 2, 1)
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    pval = float(stats.chi2.sf(chi2, dof))
    return GeometricFit(q_hat=float(q), chi2=chi2, pvalue=pval,
                        bins=list(range(1, len(exp))) + [-1],
                        observed=obs.tolist(), expected=exp.tolist(), n=n)


def fit_positive_tail(values, cap: float, min_bin: int = 10, n_grid: int = 10):
    """Stretched-exponential-shape fit of P(X > n) for positive values.

    Returns (slope, se, ci95, grid, tail); slope is the fitted exponent of
    log(-log P) against log n.
    """
    vals = np.asarray([v for v in values if v > 0], dtype=float)
    n_tot = len(list(values))
    order = np.sort(vals)
    if len(order) < 3 * min_bin:
        raise TooFewTrials("not enough positive samples for a tail fit")
    t_lo = float(np.quantile(vals, 0.25))
    k = len(order) - min_bin
    t_hi = float(order[k])
    grid = np.exp(np.linspace(math.log(max(t_lo, 1e-3)), math.log(t_hi), n_grid))
    tail = np.array([np.sum(vals > t) / n_tot for t in grid])
    keep = (tail > 0) & (tail < 1)
    lx = np.log(grid[keep])
    ly = np.log(-np.log(tail[keep]))
    slope, intercept, se = _ols(lx, ly)
    dof = max(keep.sum() - 2, 1)
    tcrit = stats.t.ppf(0.975, dof)
    ci = (slope - tcrit * se, slope + tcrit * se)
    return slope, se, ci, grid.tolist(), tail.tolist()
