"""The compiled and pure-Python kernels must be bit-identical everywhere."""

import numpy as np
import pytest

pytest.importorskip("bmcp._speedups")

from bmcp.bench import run_benchmark
from bmcp.clocks import trial_seed
from bmcp.engine import Simulator, TruncationPolicy, resolve_window, run_trial
from bmcp.params import InitialCondition, Params, Variant
from bmcp import _kernel_py as K

CASES = [
    dict(p=Params(1.6489, 2.1489, Variant.BOUNDARY),
         ic=InitialCondition.single_origin(), t=40.0),
    dict(p=Params(1.6489, 2.1489, Variant.RIGHT_EDGE),
         ic=InitialCondition.finite([-3, 0, 4]), t=30.0),
    dict(p=Params(1.0, 1.0, Variant.STANDARD),
         ic=InitialCondition.finite([0, 1]), t=50.0),
    dict(p=Params(0.0, 0.0, Variant.STANDARD),
         ic=InitialCondition.single_origin(), t=10.0),
    dict(p=Params(1.6489, 2.1489, Variant.BOUNDARY),
         ic=InitialCondition.half_line(250), t=20.0),
    dict(p=Params(1.6489, 1.8489, Variant.BOUNDARY),
         ic=InitialCondition.stationary(12.0, depth=180), t=15.0),
]


@pytest.mark.parametrize("case", range(len(CASES)))
def test_trajectories_bit_identical(case):
    c = CASES[case]
    t1, s1 = run_trial(c["p"], c["ic"], seed=trial_seed(7001, case), t_max=c["t"],
                       backend="python")
    t2, s2 = run_trial(c["p"], c["ic"], seed=trial_seed(7001, case), t_max=c["t"],
                       backend="cython")
    assert s1.digest == s2.digest
    assert s1.event_count == s2.event_count
    assert s1.extinction_time == s2.extinction_time
    assert np.array_equal(t1.times, t2.times)
    assert np.array_equal(t1.right, t2.right, equal_nan=True)
    assert np.array_equal(t1.run_max_r, t2.run_max_r)
    assert t1.canonical_csv() == t2.canonical_csv()


def test_event_and_edge_logs_identical():
    p = Params(1.6489, 2.1489, Variant.BOUNDARY)
    states = []
    for backend in ("python", "cython"):
        sim = Simulator(p, seed=991, lo=-60, hi=60, mode=K.MODE_FINITE, guard=8,
                        initial_sites=[0, 1], backend=backend,
                        collect_edge_steps=True, collect_events=True)
        sim.state.run_until(25.0, sample_times=[float(k) for k in range(26)],
                            collect_config=True)
        states.append(sim.state)
    a, b = states
    assert a.events == b.events
    assert list(a.edge_steps_t) == list(b.edge_steps_t)
    assert list(a.edge_steps_r) == list(b.edge_steps_r)
    assert list(a.edge_steps_l) == list(b.edge_steps_l)
    assert a.s_configs == b.s_configs
    assert a.config_words() == b.config_words()
    assert a.pops == b.pops and a.applied == b.applied


def test_pause_and_resume_identical():
    p = Params(1.6489, 2.1489, Variant.BOUNDARY)
    outs = []
    for backend in ("python", "cython"):
        sim = Simulator(p, seed=313, lo=-80, hi=80, mode=K.MODE_FINITE, guard=8,
                        initial_sites=[0], backend=backend)
        for t in (5.0, 12.0, 20.0):
            if sim.state.extinction_time is not None:
                break
            sim.state.run_until(t)
        outs.append((sim.state.applied, sim.state.extinction_time,
                     sim.state.config_words()))
    assert outs[0] == outs[1]


def test_benchmark_asserts_identity():
    report = run_benchmark(trials=3, t_max=15.0, depth=120)
    assert report["cython_available"]
    assert report["identical"]
    assert report["events"] > 0
    assert report["speedup"] > 1.0
