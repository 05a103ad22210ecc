"""Command-line entry point: ``noisyhybrid run | fit | collapse``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import FitModel
from .experiment import (
    COLLAPSE_HEADER,
    FITS_HEADER,
    OracleMismatch,
    SpecError,
    collapse_rows,
    fit_rows,
    load_spec,
    read_points,
    run_experiment,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


def _range(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None
    return a, b


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are configuration errors, not runtime failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="noisyhybrid", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep described by a TOML file")
    r.add_argument("spec", type=Path)
    r.add_argument("--out", type=Path, help="output directory (overrides [run] out)")
    r.add_argument("--workers", type=int, help="worker processes (default: spec, then $NOISYHYBRID_WORKERS)")
    r.add_argument("--oracle-check", action="store_true", help="replay every trajectory densely (L <= 8)")
    r.add_argument("--seed", type=int, help="master seed (overrides [run] master_seed)")

    f = sub.add_parser("fit", help="fit S(q) scaling laws to a points.csv")
    f.add_argument("points", type=Path)
    f.add_argument("--model", required=True, choices=[m.value for m in FitModel])
    f.add_argument("--qmax", type=float, default=1 / 8)
    f.add_argument("--observable", choices=["EN", "I"], default="EN")

    c = sub.add_parser("collapse", help="finite-size collapse of a points.csv")
    c.add_argument("points", type=Path)
    c.add_argument("--qc-range", type=_range, required=True)
    c.add_argument("--nu-range", type=_range, required=True)
    c.add_argument("--observable", choices=["EN", "I"], default="EN")
    return ap


def _write_table(header, rows) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _cmd_run(args) -> int:
    spec = load_spec(args.spec)
    if args.out is not None:
        spec = replace(spec, out_dir=args.out)
    if args.seed is not None:
        spec = replace(spec, master_seed=args.seed)
    if args.oracle_check:
        spec = replace(spec, oracle_check=True)
    points = run_experiment(spec, workers=args.workers)
    print(f"wrote {len(points)} points to {spec.out_dir / 'points.csv'}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    points = read_points(args.points)
    rows = fit_rows(points, [FitModel(args.model)], args.observable, args.qmax)
    if not rows:
        raise UsageError("no series had enough points for the fit")
    _write_table(FITS_HEADER, rows)
    return EXIT_OK


def _cmd_collapse(args) -> int:
    points = read_points(args.points)
    rows = collapse_rows(points, args.observable, args.qc_range, args.nu_range)
    if not rows:
        raise UsageError("collapse needs a series with at least three system sizes")
    _write_table(COLLAPSE_HEADER, rows)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "fit": _cmd_fit, "collapse": _cmd_collapse}[args.command]
    try:
        return handler(args)
    except (SpecError, UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # bad CSV contents or analysis inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OracleMismatch, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
