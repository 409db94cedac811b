"""Experiment configuration, parallel trial execution, manifests, replay.

Reproducing any run needs only the config plus the code version: per-trial
seeds derive from the master seed by the documented splitmix rule, results
are keyed by trial index, and aggregation is an associative merge, so the
artifacts are identical for every parallelism degree.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .clocks import trial_seed
from .engine import TrialSummary, Trajectory, TruncationPolicy, run_trial
from .params import InitialCondition, Params, Variant


class ConfigInvalid(Exception):
    pass


class VersionMismatch(Exception):
    pass


class DigestMismatch(Exception):
    pass


class OutputUnwritable(Exception):
    pass


# Published config schema: field name -> (type, required, validator or None).
CONFIG_FIELDS = {
    "experiment": (str, True, None),
    "lambda_i": ((int, float), True, lambda v: v >= 0),
    "lambda_e": ((int, float), True, lambda v: v >= 0),
    "variant": (str, False, lambda v: v in ("standard", "right_edge", "boundary")),
    "init": (dict, False, None),
    "t_max": ((int, float), True, lambda v: v > 0),
    "trials": (int, True, lambda v: v >= 0),
    "seed": (int, True, None),
    "cadence": ((int, float, type(None)), False, None),
    "truncation": (dict, False, None),
    "out_dir": (str, False, None),
    "threads": (int, False, lambda v: v >= 1),
    "suite": (str, False, None),
    "suite_options": (dict, False, None),
    "trajectories": (str, False, lambda v: v in ("none", "combined", "per_trial")),
    "invalid_threshold": ((int, float), False, lambda v: 0 <= v <= 1),
}


def validate_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object")
    for key in raw:
        if key not in CONFIG_FIELDS:
            raise ConfigInvalid(f"unknown config field {key!r}")
    for key, (types, required, check) in CONFIG_FIELDS.items():
        if key not in raw:
            if required:
                raise ConfigInvalid(f"missing required config field {key!r}")
            continue
        v = raw[key]
        if not isinstance(v, types):
            raise ConfigInvalid(f"config field {key!r} has wrong type {type(v).__name__}")
        if check is not None and not check(v):
            raise ConfigInvalid(f"config field {key!r} has invalid value {v!r}")
    return raw


@dataclass
class ExperimentConfig:
    experiment: str
    params: Params
    init: InitialCondition
    t_max: float
    trials: int
    seed: int
    cadence: float | None = 1.0
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    out_dir: str | None = None
    threads: int | None = None
    trajectories: str = "none"
    invalid_threshold: float = 0.01

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            **self.params.to_dict(),
            "init": self.init.to_dict(),
            "t_max": self.t_max,
            "trials": self.trials,
            "seed": self.seed,
            "cadence": self.cadence,
            "truncation": self.policy.to_dict(),
            "trajectories": self.trajectories,
            "invalid_threshold": self.invalid_threshold,
        }
        if self.out_dir:
            d["out_dir"] = self.out_dir
        if self.threads:
            d["threads"] = self.threads
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        validate_config({k: v for k, v in raw.items() if k in CONFIG_FIELDS})
        recovery = raw.get("recovery_rate", 1.0)
        params = Params(
            lambda_i=float(raw["lambda_i"]),
            lambda_e=float(raw["lambda_e"]),
            variant=Variant.from_name(raw.get("variant", "boundary")),
            recovery_rate=recovery,
        )
        return cls(
            experiment=raw["experiment"],
            params=params,
            init=InitialCondition.from_dict(raw.get("init", {"kind": "single"})),
            t_max=float(raw["t_max"]),
            trials=int(raw["trials"]),
            seed=int(raw["seed"]),
            cadence=raw.get("cadence", 1.0),
            policy=TruncationPolicy.from_dict(raw.get("truncation", {})),
            out_dir=raw.get("out_dir"),
            threads=raw.get("threads"),
            trajectories=raw.get("trajectories", "none"),
            invalid_threshold=float(raw.get("invalid_threshold", 0.01)),
        )


def thread_count(requested: int | None = None) -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        return max(1, int(env))
    if requested:
        return max(1, requested)
    return max(1, os.cpu_count() or 1)


# -- parallel trial execution -------------------------------------------------

def _worker_chunk(args) -> list[tuple]:
    (params_d, init_d, t_max, policy_d, cadence, master_seed, indices) = args
    params = Params.from_dict(params_d)
    init = InitialCondition.from_dict(init_d)
    policy = TruncationPolicy.from_dict(policy_d)
    out = []
    for i in indices:
        _, summary = run_trial(params, init, seed=trial_seed(master_seed, i),
                               t_max=t_max, policy=policy, cadence=cadence,
                               trial_index=i)
        out.append(summary)
    return out


def run_trials(config: ExperimentConfig, collect=None) -> list[TrialSummary]:
    """Run the config's trial batch, in parallel when threads allow.

    Results are ordered by trial index regardless of scheduling.
    """
    n = config.trials
    workers = thread_count(config.threads)
    if n == 0:
        return []
    if workers <= 1 or n < 8:
        chunk = _worker_chunk((config.params.to_dict(), config.init.to_dict(),
                               config.t_max, config.policy.to_dict(),
                               config.cadence, config.seed, list(range(n))))
        return sorted(chunk, key=lambda s: s.trial_index)
    chunk_size = max(1, math.ceil(n / (workers * 8)))
    chunks = [list(range(a, min(a + chunk_size, n))) for a in range(0, n, chunk_size)]
    args = [(config.params.to_dict(), config.init.to_dict(), config.t_max,
             config.policy.to_dict(), config.cadence, config.seed, c)
            for c in chunks]
    results: list[TrialSummary] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk in pool.map(_worker_chunk, args):
            results.extend(chunk)
    results.sort(key=lambda s: s.trial_index)
    return results


# -- manifests ----------------------------------------------------------------

def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    config: dict
    code_version: str
    seed_rule: str
    trial_digests: list[str]
    trial_seeds: list[int]
    invalid_census: dict
    wall_clock_s: float
    artifacts: dict[str, str]
    finalized: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**d)


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> tuple[RunManifest, list[TrialSummary]]:
    """Execute a trial batch and write manifest plus artifacts.

    The manifest is written before the run (pending) and finalized after;
    every artifact file is listed with its digest.
    """
    out = Path(out_dir or config.out_dir or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputUnwritable(str(exc)) from exc
    manifest_path = out / "manifest.json"
    pending = {
        "config": config.to_dict(),
        "code_version": __version__,
        "seed_rule": "splitmix(master, trial_index)",
        "finalized": False,
    }
    manifest_path.write_text(json.dumps(pending, indent=2))

    t0 = time.perf_counter()
    summaries = run_trials(config)
    wall = time.perf_counter() - t0

    artifacts: dict[str, str] = {}
    if config.trajectories != "none" and summaries:
        csv_path = out / "trials.csv"
        with open(csv_path, "w") as f:
            f.write("trial,time,right_edge,left_edge,cardinality\n")
            for s in summaries:
                for j in range(len(s.times)):
                    r, l, c = s.right[j], s.left[j], s.counts[j]
                    rs = "" if math.isnan(r) else str(int(r))
                    if math.isnan(l):
                        ls = ""
                    elif math.isinf(l):
                        ls = "-inf"
                    else:
                        ls = str(int(l))
                    cs = "inf" if math.isinf(c) else str(int(c))
                    f.write(f"{s.trial_index},{s.times[j]!r},{rs},{ls},{cs}\n")
        artifacts["trials.csv"] = _file_digest(csv_path)

    summary_path = out / "summaries.json"
    summary_path.write_text(json.dumps([_summary_row(s) for s in summaries], indent=1))
    artifacts["summaries.json"] = _file_digest(summary_path)

    n_invalid = sum(1 for s in summaries if not s.valid)
    census = {
        "trials": len(summaries),
        "invalid": n_invalid,
        "invalid_fraction": (n_invalid / len(summaries)) if summaries else 0.0,
    }
    manifest = RunManifest(
        config=config.to_dict(),
        code_version=__version__,
        seed_rule="splitmix(master, trial_index)",
        trial_digests=[s.digest for s in summaries],
        trial_seeds=[s.seed for s in summaries],
        invalid_census=census,
        wall_clock_s=wall,
        artifacts=artifacts,
        finalized=True,
    )
    manifest_path.write_text(json.dumps(manifest.to_dict(), indent=2))
    manifest.artifacts["manifest.json"] = ""  # the manifest itself is not self-digested
    return manifest, summaries


def _summary_row(s: TrialSummary) -> dict:
    return {
        "trial": s.trial_index,
        "seed": s.seed,
        "valid": s.valid,
        "invalid_reason": s.invalid_reason,
        "extinction_time": s.extinction_time,
        "censored": s.censored,
        "event_count": s.event_count,
        "digest": s.digest,
    }


def verify_manifest_dir(out_dir: str) -> bool:
    """Directory <-> manifest bijection: every listed artifact exists with the
    recorded digest, and no unlisted data files sit beside them."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    listed = dict(manifest["artifacts"])
    listed.pop("manifest.json", None)
    for name, digest in listed.items():
        p = out / name
        if not p.exists() or _file_digest(p) != digest:
            return False
    for p in out.iterdir():
        if p.name in ("manifest.json", *listed):
            continue
        if p.suffix in (".csv", ".json"):
            return False
    return True


def replay(manifest_path: str, trial_index: int) -> Trajectory:
    """Re-run one trial from its manifest; digest must match bit for bit."""
    raw = json.loads(Path(manifest_path).read_text())
    if raw.get("code_version") != __version__:
        raise VersionMismatch(f"manifest built by {raw.get('code_version')}, "
                              f"running {__version__}")
    config = ExperimentConfig.from_dict(raw["config"])
    if not 0 <= trial_index < len(raw["trial_digests"]):
        raise ConfigInvalid(f"trial index {trial_index} out of range")
    traj, summary = run_trial(
        config.params, config.init, seed=trial_seed(config.seed, trial_index),
        t_max=config.t_max, policy=config.policy, cadence=config.cadence,
        trial_index=trial_index,
    )
    want = raw["trial_digests"][trial_index]
    if summary.digest != want:
        raise DigestMismatch(f"trial {trial_index}: digest {summary.digest} != manifest {want}")
    return traj
