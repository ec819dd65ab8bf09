"""Command-line benchmark runner.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import ConfigError, parse_config, run_experiment, sweep_values
from .solvers import METHODS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnprox",
        description="Benchmark quasi-Newton and accelerated proximal "
                    "reconstruction on a simulated non-Cartesian MRI problem.")
    parser.add_argument("--config", metavar="PATH",
                        help="experiment config file (key = value lines)")
    parser.add_argument("--out", metavar="DIR", default="results",
                        help="output directory (default: %(default)s)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the config's RNG seed")
    parser.add_argument("--list-methods", action="store_true",
                        help="print the available solver names and exit")
    parser.add_argument("--sweep", metavar="KEY=V1,V2,...",
                        help="repeat the experiment once per value of one config key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_methods:
        for m in METHODS:
            print(m)
        return 0
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2

    try:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = parse_config(path.read_text())
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg = replace(cfg, seed=args.seed)
        sweep_key = None
        if args.sweep:
            sweep_key, sep, vals = args.sweep.partition("=")
            sweep_key = sweep_key.strip()
            if not sep or not vals:
                raise ConfigError("--sweep expects KEY=V1,V2,...")
            runs = sweep_values(cfg, sweep_key, vals.split(","))
        else:
            runs = [(None, cfg)]
            cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    failed = False
    for tag, sub_cfg in runs:
        out_dir = Path(args.out) if tag is None else Path(args.out) / f"{sweep_key}={tag}"
        artifact = run_experiment(sub_cfg, out_dir)
        for method, message in artifact.failures.items():
            print(f"solver failure [{method}]: {message}", file=sys.stderr)
            failed = True
        print(f"wrote {out_dir}")
    return 3 if failed else 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
