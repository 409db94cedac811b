"""Benchmark the compiled kernel against the pure-Python fallback.

Both kernels must produce bit-identical trajectories; the benchmark asserts
that on its workload before timing anything.
"""

from __future__ import annotations

import time

from .clocks import trial_seed
from .engine import TruncationPolicy, run_trial
from .params import LAMBDA_C_ESTIMATE, InitialCondition, Params, Variant


def run_benchmark(trials: int = 8, t_max: float = 40.0, depth: int = 300,
                  seed: int = 424242) -> dict:
    params = Params(LAMBDA_C_ESTIMATE, LAMBDA_C_ESTIMATE + 0.5, Variant.BOUNDARY)
    init = InitialCondition.half_line(depth)
    policy = TruncationPolicy(right_margin=200)

    def batch(backend: str):
        t0 = time.perf_counter()
        digests = []
        events = 0
        for i in range(trials):
            _, s = run_trial(params, init, seed=trial_seed(seed, i), t_max=t_max,
                             policy=policy, backend=backend)
            digests.append(s.digest)
            events += s.event_count
        return time.perf_counter() - t0, digests, events

    report: dict = {"trials": trials, "t_max": t_max}
    py_time, py_digests, events = batch("python")
    report["python_s"] = py_time
    report["events"] = events
    report["python_events_per_s"] = events / py_time
    try:
        cy_time, cy_digests, _ = batch("cython")
    except ValueError:
        report["cython_available"] = False
        return report
    report["cython_available"] = True
    report["cython_s"] = cy_time
    report["cython_events_per_s"] = events / cy_time
    report["speedup"] = py_time / cy_time
    report["identical"] = py_digests == cy_digests
    if not report["identical"]:
        raise RuntimeError("backends disagree: trajectories are not bit-identical")
    return report
