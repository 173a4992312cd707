"""CLI: `nlslab <kind> --config <path> [--jobs N] [--seed S] [--out DIR]`
and `nlslab report --runs <glob>`. Exit codes: 0 pass, 2 acceptance failure,
3 config error, 4 numerical abort."""

import argparse
import sys

from .config import EXPERIMENT_KINDS, ConfigError, load_config
from .experiments import exit_code, run_experiment
from .report import build_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nlslab")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
    rp = sub.add_parser("report", help="summarize finished runs")
    rp.add_argument("--runs", nargs="+", required=True, help="run dirs or globs")
    rp.add_argument("--out", default=None, help="write the markdown here too")

    args = parser.parse_args(argv)
    if args.command == "report":
        text = build_report(args.runs)
        print(text)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(text)
        return 0

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print("config errors:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 3
    if config.kind != args.command:
        print(
            f"config kind {config.kind!r} does not match subcommand {args.command!r}",
            file=sys.stderr,
        )
        return 3
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if overrides:
        config = config.with_overrides(**overrides)
    manifest, run_dir = run_experiment(config, jobs=args.jobs)
    failed = [v["name"] for v in manifest["verdicts"] if not v["passed"]]
    print(f"run {manifest['run_id']} [{manifest['status']}] -> {run_dir}")
    for v in manifest["verdicts"]:
        state = "pass" if v["passed"] else "FAIL"
        print(f"  {v['name']}: {state} (value {v['value']:.6g}, wants {v['threshold']})")
    if manifest.get("error"):
        print(f"  error: {manifest['error']}", file=sys.stderr)
    return exit_code(manifest)


if __name__ == "__main__":
    sys.exit(main())
