"""Command-line entry point: ``nomalink <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import sys

from .config import FIDELITY_SWITCHES, load_config, parse_snr_range
from .cqi import DEFAULT_TABLE, load_cqi_csv

__all__ = ["main", "build_parser"]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="config file (JSON object or key = value lines)")
    p.add_argument("--seed", type=int, help="root seed (non-negative integer)")
    p.add_argument("--snr", help="SNR sweep as lo:hi:step in dB")
    p.add_argument("--trials", type=int, help="frames per sweep cell")
    p.add_argument("--symbols", type=int, help="symbols per frame")
    p.add_argument("--frames", type=int, help="closed-loop / comparison frames")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument(
        "--fidelity",
        action="append",
        choices=FIDELITY_SWITCHES,
        default=[],
        help="literal reading of one formula; repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nomalink",
        description="Two-user NOMA link simulator with SVM modulation classification and link adaptation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("amc-sweep", "open-loop modulation classification success rate vs SNR"),
        ("closed-loop", "frame-by-frame link adaptation, one CSV row per frame"),
        ("compare", "proposed vs fixed-LTE-style vs random: power and sum-rate summary"),
    ):
        _common(sub.add_parser(name, help=text, description=text))
    dump = sub.add_parser("dump-table", help="print the built-in CQI table as CSV")
    dump.add_argument("--table", help="load and re-emit this CSV instead of the built-in table")
    dump.add_argument("--out", help="output path (default: stdout)")
    st = sub.add_parser("selftest", help="solver-vs-QP-oracle and decision-table checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else load_config()
    over = dict(seed=args.seed, trials=args.trials, frame_symbols=args.symbols, frames=args.frames)
    if args.snr:
        over["snr_sweep_db"] = parse_snr_range(args.snr)
    if args.fidelity:
        over["fidelity"] = frozenset(cfg.fidelity | set(args.fidelity))
    return cfg.with_overrides(**over)


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dump-table":
            table = load_cqi_csv(args.table) if args.table else DEFAULT_TABLE
            _emit(table.to_csv(), args.out)
            return 0
        if args.command == "selftest":
            from .selfcheck import run_selftest

            results = run_selftest(seed=args.seed)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
            return 0 if all(r.passed for r in results) else 1

        from . import sim

        cfg = _config(args)
        if args.command == "amc-sweep":
            _emit(sim.sweep_csv(sim.run_amc_sweep(cfg)), args.out)
        elif args.command == "closed-loop":
            _emit(sim.closed_loop_csv(sim.run_closed_loop(cfg)), args.out)
        else:
            rows, _ = sim.run_baseline_comparison(cfg)
            _emit(sim.comparison_csv(rows), args.out)
        return 0
    except (ValueError, OSError) as exc:
        print(f"nomalink: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
