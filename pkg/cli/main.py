"""
Command-line entry point: run, compare, forecast.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from cli.commands import cmd_compare, cmd_forecast, cmd_run
from cli.models import ForecastSpec, RunSpec
from utils.config import config
from utils.errors import PpgError
from utils.log import setup_logging
from utils.models import Strategy

logger = logging.getLogger(__name__)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _strategies(text: str) -> list[Strategy]:
    names = [v.strip().upper() for v in text.split(",") if v.strip()]
    try:
        return [Strategy(n) for n in names]
    except ValueError:
        valid = ", ".join(s.value for s in Strategy)
        raise argparse.ArgumentTypeError(f"unknown strategy in '{text}'; choose from {valid}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppg", description="Energy cooperation simulator for PPG-connected BSs")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate scenarios and write metric CSVs")
    run.add_argument("--config", type=Path, help="scenario JSON file")
    run.add_argument("--out", type=Path, default=Path(config.OUTPUT_DIR))
    sweep = run.add_mutually_exclusive_group()
    sweep.add_argument("--sweep-p", type=_floats, help="cluster probabilities, e.g. 0,0.5,1")
    sweep.add_argument("--sweep-eta", type=_floats, help="purchase caps, e.g. 0.5,1,2")
    run.add_argument("--strategies", type=_strategies, default=[Strategy.CONV])
    run.add_argument("--seeds", type=_ints, default=[config.DEFAULT_SEED])
    run.add_argument("--days", type=int)

    compare = sub.add_parser("compare", help="merge summaries into one wide table")
    compare.add_argument("summaries", type=Path, nargs="+")
    compare.add_argument("--out", type=Path, default=Path(config.OUTPUT_DIR))

    forecast = sub.add_parser("forecast", help="rolling GP forecast of one trace")
    forecast.add_argument("trace", type=Path)
    forecast.add_argument("--column")
    forecast.add_argument("--kind", choices=["energy", "load"], default="energy")
    forecast.add_argument("--kernel", type=Path, help="kernel expression JSON")
    forecast.add_argument("--out", type=Path, default=Path(config.OUTPUT_DIR))
    forecast.add_argument("--window", type=int, default=336)
    forecast.add_argument("--horizon", type=int, default=24)
    forecast.add_argument("--refit", type=int, help="refit period in steps; pre-trained values only when omitted")
    forecast.add_argument("--raw", action="store_true", help="skip peak normalization")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        axis, values = "none", []
        if args.sweep_p is not None:
            axis, values = "p", args.sweep_p
        elif args.sweep_eta is not None:
            axis, values = "eta", args.sweep_eta
        spec = RunSpec(config_path=args.config, output_dir=args.out, axis=axis, values=values,
                       strategies=args.strategies, seeds=args.seeds, days=args.days)
        return cmd_run(spec)
    if args.command == "compare":
        return cmd_compare(args.summaries, args.out)
    spec = ForecastSpec(trace_path=args.trace, column=args.column, kind=args.kind, kernel_path=args.kernel,
                        output_dir=args.out, window=args.window, horizon=args.horizon,
                        refit_period=args.refit, normalize=not args.raw)
    return cmd_forecast(spec)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(config.effective_log_level())
    try:
        return _dispatch(args)
    except ValidationError as e:
        first = e.errors()[0]
        print(f"error: {'.'.join(str(p) for p in first['loc'])}: {first['msg']}", file=sys.stderr)
    except PpgError as e:
        print(f"error: {e}", file=sys.stderr)
    return 1
