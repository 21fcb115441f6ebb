"""Command-line entry point.

Subcommands: list, inspect, fit, forecast, compare. Module errors map to
exit codes (2 usage, 3 data, 4 fit) and print one machine-parsable JSON
record plus a human line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .core import MonthStamp, difference
from .exceptions import DataError, InsufficientDataError, MercastError
from .ingest import list_series, load_mer_csv
from .report import FORMATS, TRANSFORMS, RunConfig, run, write_series_plot_data
from .sarima import SarimaOrder, ndiffs, nsdiffs

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_FIT = 4


def _parse_order(text: str) -> SarimaOrder:
    parts = text.split(",")
    if len(parts) != 6:
        raise ValueError(f"--order expects p,d,q,P,D,Q, got {text!r}")
    p, d, q, sp, sd, sq = (int(part) for part in parts)
    return SarimaOrder(p, d, q, sp, sd, sq, m=12)


def _parse_levels(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_formats(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    io_parent = argparse.ArgumentParser(add_help=False)
    io_parent.add_argument("--input", required=True, type=Path, help="MER CSV file")

    series_parent = argparse.ArgumentParser(add_help=False)
    series_parent.add_argument("--msn", required=True, help="series mnemonic, e.g. DFRBPUS")
    series_parent.add_argument(
        "--from", dest="start", type=MonthStamp.parse, default=None, metavar="YYYY-MM"
    )
    series_parent.add_argument(
        "--to", dest="end", type=MonthStamp.parse, default=None, metavar="YYYY-MM"
    )

    model_parent = argparse.ArgumentParser(add_help=False)
    model_parent.add_argument("--transform", choices=TRANSFORMS, default="none")
    model_parent.add_argument("--model", choices=("snaive", "ets", "arima"), default="arima")
    model_parent.add_argument(
        "--order",
        type=_parse_order,
        default=None,
        metavar="p,d,q,P,D,Q",
        help="fixed SARIMA order (arima only; omit for stepwise selection)",
    )
    model_parent.add_argument("--seed", type=int, default=0, help="simulation seed")
    model_parent.add_argument("--out", type=Path, default=None, help="artifact directory")
    model_parent.add_argument(
        "--format",
        dest="formats",
        type=_parse_formats,
        default=("csv",),
        metavar=",".join(FORMATS),
    )

    parser = argparse.ArgumentParser(
        prog="mercast",
        description="Forecast EIA Monthly Energy Review series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", parents=[io_parent], help="catalog every series in the file")

    inspect_parser = sub.add_parser(
        "inspect", parents=[io_parent, series_parent], help="summarize one series"
    )
    inspect_parser.add_argument("--out", type=Path, default=None, help="write plot data here")

    sub.add_parser(
        "fit",
        parents=[io_parent, series_parent, model_parent],
        help="fit a model and print its report",
    )

    forecast_parser = sub.add_parser(
        "forecast",
        parents=[io_parent, series_parent, model_parent],
        help="fit, forecast and report",
    )
    forecast_parser.add_argument("--horizon", type=int, default=24)
    forecast_parser.add_argument(
        "--levels", type=_parse_levels, default=(0.80, 0.95), metavar="0.80,0.95"
    )

    compare_parser = sub.add_parser(
        "compare",
        parents=[io_parent, series_parent],
        help="three-model training accuracy comparison",
    )
    compare_parser.add_argument("--transform", choices=TRANSFORMS, default="none")
    compare_parser.add_argument("--out", type=Path, default=None)
    return parser


def _cmd_list(args: argparse.Namespace) -> int:
    catalog = list_series(args.input)
    if not catalog:
        print("no monthly series found")
        return EXIT_OK
    rows = [("MSN", "First", "Last", "Months", "Unit", "Description")]
    for entry in catalog:
        rows.append(
            (
                entry.msn,
                entry.first.isoformat(),
                entry.last.isoformat(),
                str(entry.n_months),
                entry.unit,
                entry.description,
            )
        )
    widths = [max(len(row[c]) for row in rows) for c in range(5)]
    for row in rows:
        lead = "  ".join(cell.ljust(w) for cell, w in zip(row[:5], widths))
        print(f"{lead}  {row[5]}".rstrip())
    return EXIT_OK


def _cmd_inspect(args: argparse.Namespace) -> int:
    ts = load_mer_csv(args.input, args.msn, span=(args.start, args.end))
    values = ts.values
    print(f"MSN:    {ts.name}")
    if ts.unit:
        print(f"Unit:   {ts.unit}")
    print(f"Range:  {ts.start.isoformat()} .. {ts.end.isoformat()} ({len(ts)} months)")
    print(f"Mean:   {values.mean():.6f}")
    print(f"Sd:     {values.std(ddof=1):.6f}" if len(ts) > 1 else "Sd:     NaN")
    print(f"Min:    {values.min():.6f}")
    print(f"Max:    {values.max():.6f}")
    try:
        seasonal_d = nsdiffs(ts)
        plain_d = ndiffs(difference(ts, ts.period) if seasonal_d else ts)
        print(f"Suggested differencing: d={plain_d}, D={seasonal_d}")
    except InsufficientDataError:
        pass
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for path in write_series_plot_data(out_dir, ts.name or args.msn, ts):
            print(f"wrote {path}")
    return EXIT_OK


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "list":
        return _cmd_list(args)
    if args.command == "inspect":
        return _cmd_inspect(args)
    if args.command == "compare":
        config = RunConfig(
            input=args.input,
            msn=args.msn,
            start=args.start,
            end=args.end,
            transform=args.transform,
            model="auto-compare",
            out_dir=args.out,
        )
        return run(config)
    config = RunConfig(
        input=args.input,
        msn=args.msn,
        start=args.start,
        end=args.end,
        transform=args.transform,
        model=args.model,
        order=args.order,
        horizon=getattr(args, "horizon", 24),
        levels=getattr(args, "levels", (0.80, 0.95)),
        seed=args.seed,
        out_dir=args.out,
        formats=args.formats,
        with_forecast=args.command == "forecast",
    )
    return run(config)


def _fail(exc: BaseException, code: int) -> int:
    record = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _dispatch(args)
    except ValueError as exc:
        return _fail(exc, EXIT_USAGE)
    except (DataError, OSError) as exc:
        return _fail(exc, EXIT_DATA)
    except MercastError as exc:
        return _fail(exc, EXIT_FIT)


if __name__ == "__main__":
    raise SystemExit(main())
