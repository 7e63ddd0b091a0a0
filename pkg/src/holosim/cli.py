"""Command-line interface: ``simulate``, ``list-presets`` and ``verify``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .sweeps import CsvSink, builtin_presets, emit_results, load_config, parse_grid, run_sweep
from .verify import run_checks


def _presets(args):
    presets = builtin_presets(fast=getattr(args, "fast", False))
    if getattr(args, "config", None):
        presets = load_config(args.config, presets)
    return presets


def cmd_simulate(args) -> int:
    presets = _presets(args)
    if args.preset not in presets:
        print(f"unknown preset {args.preset!r}; see 'list-presets'", file=sys.stderr)
        return 2
    cfg = presets[args.preset]
    changes = {k: v for k, v in (("seed", args.seed), ("samples", args.samples)) if v is not None}
    if args.grid:
        changes["grid"] = parse_grid(args.grid)
    cfg = cfg.replace(**changes)
    out = args.out or cfg.output
    start = time.perf_counter()
    partial = CsvSink(cfg, Path(out) / f"{cfg.name}.csv")

    def report(row):
        partial(row)
        if row.failed:
            print(f"  {row.sweep_value:.6g}: FAILED {row.error}", file=sys.stderr)
        elif args.verbose:
            print(f"  {row.sweep_value:.6g}: avg {row.stats.avg:.6f}")

    rows = run_sweep(cfg, workers=args.workers, sink=report)
    paths = emit_results(cfg, rows, out, args.format)
    failed = sum(r.failed for r in rows)
    print(f"{cfg.name}: {len(rows)} points, {failed} failed, {time.perf_counter() - start:.1f}s")
    for p in paths:
        print(f"  wrote {p}")
    return 1 if failed else 0


def cmd_list(args) -> int:
    for name, cfg in sorted(_presets(args).items()):
        consts = ", ".join(f"{k}={v:g}" for k, v in cfg.constants.items())
        print(f"{name:36s} {cfg.scheme:2s} {cfg.gate:10s} {cfg.error:17s} {len(cfg.grid):4d} pts  {consts}")
    return 0


def cmd_verify(args) -> int:
    ok = True
    for check in run_checks():
        ok &= check.passed
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.detail}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holosim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a preset sweep")
    sim.add_argument("--preset", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--samples", type=int)
    sim.add_argument("--fast", action="store_true", help="coarse grids for quick runs")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--format", choices=("csv", "plot"), default="csv")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--config", help="INI file with preset overrides")
    sim.add_argument("--grid", help="override grid: log:lo:hi:n, linear:lo:hi:n or a list")
    sim.add_argument("-v", "--verbose", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    lst = sub.add_parser("list-presets", help="list built-in and configured presets")
    lst.add_argument("--config")
    lst.add_argument("--fast", action="store_true")
    lst.set_defaults(func=cmd_list)

    ver = sub.add_parser("verify", help="run the built-in invariant checks")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
