"""Acceptance suite: one test per quantitative criterion, each printing a
pass/fail line with its wall time.  Heavy trial batches are shared through
session fixtures; every tolerance is pinned here, nothing is calibrated at
run time."""

import time

import pytest

from bmcp.suites import SUITES, run_stationary_batch

THREADS = 2


_CACHE: dict = {}


def shared_eps05_batch():
    """Shared eps = 0.5 ensemble (500 half-line trials, burn-in 200, t = 512);
    built once, paid for by the first criterion that needs it."""
    if "eps05" not in _CACHE:
        _CACHE["eps05"] = run_stationary_batch(0.5, seed=303, trials=500,
                                               burn_in=200.0, t_max=512.0,
                                               threads=THREADS)
    return _CACHE["eps05"]


def _report(num, name, report, wall, budget_s):
    ok = report["pass"]
    line = f"ACCEPTANCE {num:>2} {name:<22} {'PASS' if ok else 'FAIL'}  wall {wall:7.1f}s (budget {budget_s:.0f}s)"
    print(line)
    return ok


def test_criterion_01_oracle_agreement():
    t0 = time.perf_counter()
    rep = SUITES["oracle-agreement"](seed=101, trials=10_000, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(1, "oracle-agreement", rep, wall, 120)
    assert rep["analytic_n1_ok"]
    assert rep["max_abs_z"] <= 3.0
    assert ok and wall <= 120


def test_criterion_02_coupling_exactness():
    t0 = time.perf_counter()
    rep = SUITES["coupling-exactness"](seed=202, pairs=1000, horizon=50.0,
                                       threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(2, "coupling-exactness", rep, wall, 60)
    assert rep["identity_failures"] == 0
    assert rep["region_failures"] == 0
    assert rep["pairs_checked"] >= 900
    assert ok and wall <= 60


def test_criterion_03_edge_speed():
    t0 = time.perf_counter()
    rep = SUITES["edge-speed"](seed=303, control_trials=300,
                               shared={"summaries_eps05": shared_eps05_batch()},
                               threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(3, "edge-speed", rep, wall, 600)
    assert rep["alpha_hat"] >= 0.5 - 3 * rep["se"]
    assert abs(rep["control_alpha_hat"]) <= 3 * rep["control_se"] + 0.05
    assert ok and wall <= 600


def test_criterion_04_clt():
    t0 = time.perf_counter()
    rep = SUITES["clt"](seed=304, trials=500, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(4, "clt", rep, wall, 600)
    assert rep["var_fit_r2"] >= 0.95
    assert rep["sigma2_hat"] >= 0.01
    assert rep["normality_pvalue"] >= 1e-3
    assert ok and wall <= 600


def test_criterion_05_extinction_tail():
    t0 = time.perf_counter()
    rep = SUITES["extinction-tail"](seed=404, trials=20_000, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(5, "extinction-tail", rep, wall, 600)
    assert rep["ci95"][0] > 0
    assert rep["tail_below_critical"]
    assert rep["tail_nonincreasing"]
    assert ok and wall <= 600


def test_criterion_06_survival_size():
    t0 = time.perf_counter()
    rep = SUITES["survival-size"](seed=505, trials_per_n=3000, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(6, "survival-size", rep, wall, 300)
    assert rep["monotone_within_3sigma"]
    assert rep["loglog_slope"] > 0
    assert ok and wall <= 300


def test_criterion_07_large_deviation_shape():
    t0 = time.perf_counter()
    rep = SUITES["large-deviation-shape"](shared={"summaries_eps05": shared_eps05_batch()})
    wall = time.perf_counter() - t0
    ok = _report(7, "large-deviation-shape", rep, wall, 600)
    assert rep["nonincreasing_within_2sigma"]
    assert ok and wall <= 600


def test_criterion_08_box_crossing():
    t0 = time.perf_counter()
    rep = SUITES["box-crossing"](seed=606, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(8, "box-crossing", rep, wall, 600)
    assert rep["delta_positive_95"]
    assert rep["band_ok"]
    assert rep["envelope"]["tail_r2"] >= 0.9
    assert ok and wall <= 600


def test_criterion_09_mixing():
    t0 = time.perf_counter()
    rep = SUITES["mixing"](seed=707, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(9, "mixing", rep, wall, 180)
    assert rep["trend_ok"] and rep["decay_ok"] and rep["null_ok"]
    assert ok and wall <= 180


def test_criterion_10_renewal():
    t0 = time.perf_counter()
    rep = SUITES["renewal"](seed=808, records=800, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(10, "renewal", rep, wall, 300)
    assert rep["geometric"]["pvalue"] >= 1e-3
    assert rep["t_tail_ci95"][0] > 0
    assert ok and wall <= 300


def test_criterion_11_determinism():
    t0 = time.perf_counter()
    rep = SUITES["determinism"](seed=111, trials=16)
    wall = time.perf_counter() - t0
    ok = _report(11, "determinism", rep, wall, 60)
    assert rep["digests_equal"] and rep["artifacts_equal"] and rep["replay_ok"]
    assert ok


def test_criterion_12_path_oracle():
    t0 = time.perf_counter()
    rep = SUITES["path-oracle"](seed=121, windows=1000, threads=THREADS)
    wall = time.perf_counter() - t0
    ok = _report(12, "path-oracle", rep, wall, 120)
    assert rep["mismatches"] == 0
    assert ok
