"""Command line: ``qmultinet run|validate|figure2``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .monitor import MonitorConfig
from .photon_stats import DetectorParams
from .protocols import ConfigError
from .scenarios import InvariantError, append_rows, run_figure2, run_scenario, summarize, trial_rng

logger = logging.getLogger("qmultinet")


def _print_summary(rows, stream=None) -> None:
    stream = stream or sys.stdout
    print(f"{'scenario':<24} {'case':<6} {'n':>4} {'rate':>12} {'expected':>12} {'z':>9} {'alarm':>6}", file=stream)
    for scenario, case, n, rate, expected, z, alarm_frac in summarize(rows):
        print(
            f"{scenario:<24} {case:<6} {n:>4} {rate:>12.6g} {expected:>12.6g} {z:>9.2f} {alarm_frac:>6.2f}",
            file=stream,
        )


def _cmd_validate(args) -> int:
    specs = load_config(args.config)
    for spec in specs:
        print(f"{spec.name}: {spec.kind}, trials={spec.trials}, seed={spec.seed}")
    return 0


def _cmd_run(args) -> int:
    specs = load_config(args.config)
    if args.scenario:
        specs = [s for s in specs if s.name == args.scenario]
        if not specs:
            raise ConfigError(f"no scenario named {args.scenario!r}")
    default_out = Path(args.config).with_suffix(".csv").name
    all_rows = []
    for spec in specs:
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        out = args.out or spec.output_path or default_out
        logger.info("running %s (%d trials) -> %s", spec.name, spec.trials, out)
        all_rows.extend(run_scenario(spec, out))
    if not args.quiet:
        _print_summary(all_rows)
    return 0


def _cmd_figure2(args) -> int:
    det = DetectorParams(args.eta, args.pd)
    monitor = MonitorConfig(min_gates=min(10_000, args.gates))
    rows = run_figure2(args.mu, det, args.gates, trial_rng(args.seed, 0), monitor, seed=args.seed)
    if args.out:
        append_rows(args.out, rows)
    _print_summary(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmultinet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute scenarios from a config file")
    run.add_argument("config")
    run.add_argument("--scenario")
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("-q", "--quiet", action="store_true")
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate", help="check a config file without running it")
    validate.add_argument("config")
    validate.set_defaults(func=_cmd_validate)

    fig = sub.add_parser("figure2", help="four-case thermal-output power experiment")
    fig.add_argument("--mu", type=float, default=0.1)
    fig.add_argument("--eta", type=float, default=0.1)
    fig.add_argument("--pd", type=float, default=1e-5)
    fig.add_argument("--gates", type=int, default=1_000_000)
    fig.add_argument("--seed", type=int, default=0)
    fig.add_argument("--out")
    fig.set_defaults(func=_cmd_figure2)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
