"""Command-line interface.

    sim run --suite <name> [overrides]      named experiment suites
    sim run --config cfg.json [overrides]   generic trial batch
    sim oracle --n 3 --t 1,5 ...            exact extinction probabilities
    sim replay --manifest m.json --trial 4  digest-checked replay
    sim bench                               compiled vs fallback kernel
    sim suites                              list available suites
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _add_override_flags(p: argparse.ArgumentParser):
    p.add_argument("--lambda-i", type=float, dest="lambda_i")
    p.add_argument("--lambda-e", type=float, dest="lambda_e")
    p.add_argument("--variant", choices=["standard", "right_edge", "boundary"])
    p.add_argument("--init", help='initial condition, e.g. "single", "finite:0,1,4", '
                                  '"half_line:400", "stationary:200"')
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cadence", type=float)
    p.add_argument("--out", dest="out_dir")
    p.add_argument("--threads", type=int)


def _parse_init(spec: str) -> dict:
    kind, _, rest = spec.partition(":")
    if kind == "single":
        return {"kind": "single"}
    if kind == "finite":
        return {"kind": "finite", "sites": [int(x) for x in rest.split(",")]}
    if kind == "half_line":
        return {"kind": "half_line", "depth": int(rest)}
    if kind == "stationary":
        parts = rest.split(",")
        d = {"kind": "stationary", "burn_in": float(parts[0])}
        if len(parts) > 1:
            d["depth"] = int(parts[1])
        return d
    raise SystemExit(f"unparseable --init {spec!r}")


def cmd_run(args) -> int:
    from .harness import ExperimentConfig, run_experiment
    from .suites import get_suite

    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    for key in ("lambda_i", "lambda_e", "variant", "t_max", "trials", "seed",
                "cadence", "out_dir", "threads"):
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = v
    if args.init:
        raw["init"] = _parse_init(args.init)

    if args.suite:
        runner = get_suite(args.suite)
        opts = dict(raw.get("suite_options", {}))
        for key in ("seed", "trials", "threads", "t_max"):
            if key in raw:
                opts[key] = raw[key]
        report = runner(**opts)
        out = raw.get("out_dir")
        if out:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / f"{args.suite}.json").write_text(json.dumps(report, indent=2))
        print(json.dumps(report, indent=2))
        return 0 if report.get("pass") else 1

    raw.setdefault("experiment", "adhoc")
    config = ExperimentConfig.from_dict(raw)
    manifest, summaries = run_experiment(config, out_dir=raw.get("out_dir", "."))
    print(json.dumps(manifest.invalid_census, indent=2))
    frac = manifest.invalid_census["invalid_fraction"]
    return 0 if frac <= config.invalid_threshold else 2


def cmd_oracle(args) -> int:
    from .oracle import build_generator, extinction_probability_by
    from .params import Params, Variant

    params = Params(args.lambda_i, args.lambda_e, Variant.from_name(args.variant))
    model = build_generator(args.n, params)
    times = [float(x) for x in args.t.split(",")]
    rows = ["initial_state_bits,t,extinction_prob"]
    for t in times:
        probs = extinction_probability_by(model, t)
        states = range(model.n_states) if args.initial is None else [args.initial]
        for s in states:
            rows.append(f"{s:0{args.n}b},{t!r},{float(probs[s])!r}")
    text = "\n".join(rows) + "\n"
    if args.out_file:
        Path(args.out_file).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_replay(args) -> int:
    from .harness import DigestMismatch, VersionMismatch, replay

    try:
        traj = replay(args.manifest, args.trial)
    except (DigestMismatch, VersionMismatch) as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 1
    print(f"replay ok: trial {args.trial}, {traj.event_count} events, "
          f"digest {traj.digest()[:16]}...")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_benchmark

    report = run_benchmark(trials=args.trials, t_max=args.t_max)
    print(json.dumps(report, indent=2))
    return 0


def cmd_suites(_args) -> int:
    from .suites import SUITES

    for name in sorted(SUITES):
        print(name)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a suite or a trial batch")
    p_run.add_argument("--suite")
    p_run.add_argument("--config")
    _add_override_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_or = sub.add_parser("oracle", help="exact finite-segment extinction probabilities")
    p_or.add_argument("--n", type=int, required=True)
    p_or.add_argument("--lambda-i", type=float, dest="lambda_i", default=1.6489)
    p_or.add_argument("--lambda-e", type=float, dest="lambda_e", default=2.1489)
    p_or.add_argument("--variant", choices=["standard", "right_edge", "boundary"],
                      default="boundary")
    p_or.add_argument("--t", default="1.0")
    p_or.add_argument("--initial", type=int, default=None,
                      help="initial state as a bitmask; default all states")
    p_or.add_argument("--out", dest="out_file")
    p_or.set_defaults(func=cmd_oracle)

    p_rp = sub.add_parser("replay", help="re-run a manifest trial and check its digest")
    p_rp.add_argument("--manifest", required=True)
    p_rp.add_argument("--trial", type=int, required=True)
    p_rp.set_defaults(func=cmd_replay)

    p_b = sub.add_parser("bench", help="compare compiled and fallback kernels")
    p_b.add_argument("--trials", type=int, default=8)
    p_b.add_argument("--t-max", type=float, dest="t_max", default=40.0)
    p_b.set_defaults(func=cmd_bench)

    p_s = sub.add_parser("suites", help="list named suites")
    p_s.set_defaults(func=cmd_suites)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
