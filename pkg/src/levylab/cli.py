"""Command-line entry point: ``levylab <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath
from typing import List, Optional

from .harness import ConfigError, load_config, results_csv, run_experiment, write_results
from .svgplot import PLOT_KINDS, emit_plot

RUN_COMMANDS = ("simulate", "validate", "tau-scan", "cov-decay", "sup-tail")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levylab",
        description="Monte Carlo experiments on the iterated Levy transform of Brownian motion.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(RUN_COMMANDS + ("plot",)) + "}")
    sub.required = True
    for name in RUN_COMMANDS:
        p = sub.add_parser(name, help=("run the experiment kind named in the config"
                                       if name == "simulate" else f"run a {name} experiment"))
        p.add_argument("--config", type=FsPath, help="flat key=value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key (repeatable)")
        p.add_argument("--out", type=FsPath, help="results CSV path (default: config 'output' or stdout)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--seed", type=int, help="64-bit seed")
    p = sub.add_parser("plot", help="render a results CSV as SVG")
    p.add_argument("csv", type=FsPath, help="results CSV written by a run command")
    p.add_argument("--kind", choices=PLOT_KINDS, help="plot kind (default: from the CSV)")
    p.add_argument("--out", type=FsPath, required=True, help="output SVG path")
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _config_from_args(args):
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    overrides = list(args.overrides)
    if args.command != "simulate":
        overrides.insert(0, f"kind={args.command}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    return load_config(text, overrides, source=str(args.config or "<none>"))


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    if args.command == "plot":
        try:
            emit_plot(args.csv, args.kind, args.out)
        except (OSError, ValueError) as exc:
            print(f"levylab plot: {exc}", file=sys.stderr)
            return 1
        return 0

    try:
        cfg = _config_from_args(args)
    except (OSError, ConfigError) as exc:
        print(f"levylab {args.command}: {exc}", file=sys.stderr)
        return 2
    rs = run_experiment(cfg)
    out = args.out or (FsPath(cfg.output) if cfg.output else None)
    if out is None:
        sys.stdout.write(results_csv(rs))
    else:
        write_results(rs, out)
    if cfg.kind == "validate" and not rs.passed:
        print(json.dumps({"status": "fail", "kind": cfg.kind, "failures": rs.failures}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
