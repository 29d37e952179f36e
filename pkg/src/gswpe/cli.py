"""Command line entry point.

    gswpe run --config experiment.yaml [--seed N] [--jobs N] [--out DIR]
              [--emit-wav] [--baselines exhaustive,random,full]

Exit codes: 0 success, 1 invalid configuration, 2 unreadable input audio,
3 every bin degenerate.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiment import (
    ConfigError,
    DegenerateRunError,
    InputError,
    load_config,
    run_experiment,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gswpe",
        description="Microphone subset selection for WPE dereverberation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument(
        "--config", required=True, metavar="PATH",
        help="YAML config, or manifest.json from a previous run",
    )
    run.add_argument("--seed", type=int, default=None, help="override master seed")
    run.add_argument("--jobs", type=int, default=None, help="worker processes")
    run.add_argument("--out", default=None, metavar="DIR", help="output directory")
    run.add_argument(
        "--emit-wav", action="store_true", default=None,
        help="write processed reference-channel WAVs",
    )
    run.add_argument(
        "--baselines", default=None, metavar="LIST",
        help="comma separated subset of exhaustive,random,full",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.jobs is not None:
            overrides["jobs"] = args.jobs
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.emit_wav:
            overrides["emit_wav"] = True
        if args.baselines is not None:
            overrides["baselines"] = tuple(
                b.strip() for b in args.baselines.split(",") if b.strip()
            )
        if overrides:
            config = replace(config, **overrides)
        summary = run_experiment(config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DegenerateRunError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    n = summary["n_scenes"]
    print(f"wrote reports for {n} scene(s) to {config.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
