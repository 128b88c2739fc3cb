"""Command-line entry point.

Each subcommand runs one pipeline and writes CSV/JSON artifacts (with
embedded provenance) into the output directory; exit status 0 means every
stage converged within its tolerance.
"""

from __future__ import annotations

import argparse
import sys

from .model import ModelError
from .pipeline import COMMANDS, ExperimentSpec, run_pipeline


def _parse_bits(value: str):
    if value == "ideal":
        return "ideal"
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cebeam",
        description="Constant-envelope / one-bit transmit beamformer design "
                    "and evaluation for few-bit-receiver MIMO radar")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", default="default128",
                       help="scenario JSON path or built-in name (default128, desk32)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--bits", type=_parse_bits, default=1,
                       help="ADC resolution: 1..5 or 'ideal'")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        if name == "design-ce":
            p.add_argument("--method", choices=("AMM", "MM"), default="AMM")
        if name == "evaluate":
            p.add_argument("--design", required=True,
                           help="phase matrix (degrees) or +-1 sign grid, text")
        if name == "sweep-snr":
            p.add_argument("--pfa", type=float, default=1e-3)
            p.add_argument("--trials", type=int, default=100_000)
            p.add_argument("--snr", type=float, nargs="+",
                           default=(-20.0, -15.0, -10.0, -5.0, 0.0))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExperimentSpec(
        command=args.command,
        scenario=args.scenario,
        seed=args.seed,
        bits=args.bits,
        out_dir=args.out,
        max_iters=args.max_iters,
        tol=args.tol,
        method=getattr(args, "method", "AMM"),
        design_path=getattr(args, "design", None),
        pfa=getattr(args, "pfa", 1e-3),
        trials=getattr(args, "trials", 100_000),
        snr_grid_db=tuple(getattr(args, "snr", (-20.0, -15.0, -10.0, -5.0, 0.0))),
    )
    try:
        return run_pipeline(spec)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
