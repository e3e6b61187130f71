"""Command-line experiment runner.

Subcommands:
  run      execute a TOML experiment config (flags override fields)
  compare  merge summary JSONs into an algorithm-by-instance table
  audit    re-run the privacy-ledger arithmetic on a summary JSON
  replay   recompute summary statistics from a transcript CSV

Exit code is nonzero whenever an invariant violation or audit failure is
found.
"""

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .envs import InstanceRecipe
from .harness import ExperimentConfig, compare_report, replay_summary, run_experiment

_OVERRIDES = {
    "eps": float,
    "delta": float,
    "T": int,
    "channel": str,
}


def _load_config(path, args):
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    exp = raw.get("experiment", {})
    inst = raw.get("instance", {})
    params = raw.get("algorithm", {})

    if args.alg:
        exp["algorithm"] = args.alg
    if args.seeds is not None:
        exp["seeds"] = [int(s) for s in args.seeds.split(",")]
    if args.seed is not None:
        exp["seeds"] = [args.seed]
    if args.out:
        exp["out"] = args.out
    if args.d is not None:
        inst["d"] = args.d
    if args.K is not None:
        inst["K"] = args.K
    if args.S is not None:
        inst["S"] = args.S
    if args.link:
        inst["link"] = args.link
    for key, cast in _OVERRIDES.items():
        val = getattr(args, key, None)
        if val is not None:
            params[key] = cast(val)

    recipe = InstanceRecipe(
        d=int(inst.get("d", 3)),
        K=int(inst.get("K", 20)),
        S=float(inst.get("S", 1.0)),
        link_kind=inst.get("link", "logistic"),
        context_law=inst.get("context_law", "stochastic"),
        R=float(inst.get("R", 1.0)),
        seed=int(inst.get("seed", 0)),
    )
    return ExperimentConfig(
        name=exp.get("name", "experiment"),
        algorithm=exp["algorithm"],
        recipe=recipe,
        params=params,
        seeds=[int(s) for s in exp.get("seeds", [0])],
        out_dir=exp.get("out"),
    )


def main(argv=None):
    parser = argparse.ArgumentParser(prog="pglb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="TOML config path")
    p_run.add_argument("--alg", choices=("jdp_glm", "rs_nonprivate", "shuffle_glm", "glm_ucb"))
    p_run.add_argument("--eps", type=float)
    p_run.add_argument("--delta", type=float)
    p_run.add_argument("--T", type=int)
    p_run.add_argument("--d", type=int)
    p_run.add_argument("--K", type=int)
    p_run.add_argument("--S", type=float)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--seeds", help="comma-separated seed list")
    p_run.add_argument("--link", choices=("logistic", "probit", "linear"))
    p_run.add_argument("--channel", choices=("exact", "gaussian", "shuffle"))
    p_run.add_argument("--out", help="output directory")

    p_cmp = sub.add_parser("compare", help="summaries -> comparison table")
    p_cmp.add_argument("summaries", nargs="+", help="summary JSON paths")

    p_audit = sub.add_parser("audit", help="privacy-ledger arithmetic check")
    p_audit.add_argument("summary", help="summary JSON path")

    p_replay = sub.add_parser("replay", help="transcript CSV -> summary stats")
    p_replay.add_argument("transcript", help="transcript CSV path")

    args = parser.parse_args(argv)

    if args.command == "run":
        cfg = _load_config(args.config, args)
        summary = run_experiment(cfg)
        print(json.dumps(
            {k: summary[k] for k in ("name", "algorithm", "mean_regret", "std_regret", "passed")},
            indent=2,
        ))
        if not summary["passed"]:
            print("invariant violations:", summary["violations"], file=sys.stderr)
            return 1
        return 0

    if args.command == "compare":
        summaries = []
        for path in args.summaries:
            with open(path) as fh:
                summaries.append(json.load(fh))
        report = compare_report(summaries)
        print(report["table"])
        for flag, value in sorted(report["flags"].items()):
            print(f"  {flag}: {value}")
        return 0

    if args.command == "audit":
        with open(args.summary) as fh:
            summary = json.load(fh)
        ledger = summary.get("ledger")
        if ledger is None:
            print("no privacy ledger recorded (non-private baseline run)")
            return 0
        print(json.dumps(ledger, indent=2, sort_keys=True))
        return 0 if ledger.get("ok") else 1

    if args.command == "replay":
        stats = replay_summary(args.transcript)
        print(json.dumps(stats, indent=2, sort_keys=True))
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
