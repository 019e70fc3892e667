"""Command-line front end: sweeps, sensitivity search, and the PON budget preset.

Subcommands:
    model        analytic predictions over a parameter grid
    sim          Monte Carlo runs over a parameter grid
    compare      both, plus the model-minus-simulation SNR difference
    sensitivity  received power (and budget) at a target pre-FEC BER
    pon          access-network preset: budget check at both FEC thresholds

Any config key can be overridden via a ``key = value`` config file or the
``PAMLINK_SECTION__KEY`` environment variables.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import presets
from .config import ConfigError, load_config
from .params import watt_to_dbm
from .sweep import (BracketError, SweepRecord, SweepSpec, emit, parse_axis,
                    run_sweep, sensitivity_search)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="key = value configuration file")
    parser.add_argument("--sweep", action="append", default=[], metavar="KEY=VALUES",
                        help="sweep axis as key=start:stop:step or key=v1,v2,... "
                             "(repeatable)")
    parser.add_argument("--out", metavar="PATH",
                        help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pamlink",
        description="SNR/BER prediction and Monte Carlo validation of "
                    "band-limited M-PAM direct-detection links")
    sub = parser.add_subparsers(dest="command", required=True)

    for mode in ("model", "sim", "compare"):
        p = sub.add_parser(mode, help=f"run a parameter sweep in {mode} mode")
        _add_common(p)

    p = sub.add_parser("sensitivity",
                       help="received power at a target BER (analytic model)")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--target-ber", type=float, required=True)
    p.add_argument("--pmin-dbm", type=float, default=-40.0)
    p.add_argument("--pmax-dbm", type=float, default=None)
    p.add_argument("--scheme", choices=("ffe", "dfe"), default="ffe")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("pon", help="access-network power-budget preset")
    p.add_argument("--er-db", type=float, action="append", default=None,
                   help="extinction ratios to evaluate (repeatable; default 3, 6)")
    p.add_argument("--length-km", type=float, action="append", default=None,
                   help="fiber lengths to evaluate (repeatable; default 0, 25)")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    return parser


def _run_sweep_command(args: argparse.Namespace, mode: str) -> int:
    base = load_config(args.config)
    axes = [parse_axis(text) for text in args.sweep]
    spec = SweepSpec(base=base, axes=axes, mode=mode, seed=args.seed,
                     jobs=args.jobs)
    records = run_sweep(spec)
    emit(records, fmt=args.format, path=args.out)
    return 0


def _run_sensitivity(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    sens_w = sensitivity_search(cfg, args.target_ber,
                                p_rx_min_dbm=args.pmin_dbm,
                                p_rx_max_dbm=args.pmax_dbm,
                                scheme=args.scheme)
    sens_dbm = watt_to_dbm(sens_w)
    opb = cfg.modulation.p_avg_dbm - sens_dbm
    rec = SweepRecord(params={
        "target_ber": args.target_ber,
        "scheme": args.scheme,
        "sensitivity_dbm": sens_dbm,
        "sensitivity_w": sens_w,
        "opb_db": opb,
    })
    if args.out:
        emit([rec], fmt=args.format, path=args.out)
    print(f"sensitivity = {sens_dbm:.3f} dBm ({sens_w:.6g} W) at BER {args.target_ber:g}; "
          f"OPB = {opb:.3f} dB")
    return 0


def _run_pon(args: argparse.Namespace) -> int:
    ers = args.er_db if args.er_db else [3.0, 6.0]
    lengths = args.length_km if args.length_km else [0.0, 25.0]
    thresholds = (("hd-fec", presets.HD_FEC_BER), ("sd-fec", presets.SD_FEC_BER))
    records = []
    for er in ers:
        for length in lengths:
            cfg = presets.pon(er_db=er, length_km=length)
            for fec, ber in thresholds:
                try:
                    sens_dbm = watt_to_dbm(sensitivity_search(cfg, ber))
                    opb = cfg.modulation.p_avg_dbm - sens_dbm
                    meets = opb >= presets.N1_CLASS_OPB_DB
                except BracketError:
                    sens_dbm, opb, meets = None, None, False
                records.append(SweepRecord(params={
                    "er_db": er, "length_km": length, "fec": fec,
                    "target_ber": ber, "sensitivity_dbm": sens_dbm,
                    "opb_db": opb, "meets_29db": meets,
                }))
    emit(records, fmt=args.format, path=args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("model", "sim", "compare"):
            return _run_sweep_command(args, args.command)
        if args.command == "sensitivity":
            return _run_sensitivity(args)
        if args.command == "pon":
            return _run_pon(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, BracketError, ValueError, OSError) as exc:
        print(f"pamlink: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
