"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
Results go to stdout (or ``--out``); messages go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import diag, pipeline, sde
from .errors import DataError, DomainError, GigavolError, HorizonExceededError, NumericalError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
OUT_DIR_ENV = "GIGAVOL_OUT_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


_KINDS = {
    "giga": sde.SdeKind.GIGA_VOL,
    "iga-var": sde.SdeKind.VARIANCE_IGA,
    "heston": sde.SdeKind.HESTON_VARIANCE,
    "gga-a": sde.SdeKind.GGA_VOL_A,
    "gga-b": sde.SdeKind.GGA_VOL_B,
    "gga-c": sde.SdeKind.GGA_VOL_C,
    "ou-log": sde.SdeKind.OU_LOG,
    "ln-vol": sde.SdeKind.LN_VOL,
}
_SPEC_FLAGS = {
    "J": "J",
    "theta": "theta",
    "Sigma": "Sigma",
    "gamma": "gamma",
    "J_tilde": "J_tilde",
    "Sigma_tilde": "Sigma_tilde",
    "V_bar": "V_bar",
    "phi": "phi",
    "ou_theta": "ou_theta",
    "ou_mu": "ou_mu",
    "ou_sigma": "ou_sigma",
}


def _add_csv_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("csv", help="input CSV file")
    p.add_argument("--date-col", default="Date")
    p.add_argument("--value-col", default="Close")
    p.add_argument("--skip-rows", type=int, default=0, help="lines before the header row")


def _build_parser() -> _Parser:
    parser = _Parser(prog="gigavol", description="GIGa volatility and return-distribution toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit-vol", help="fit volatility-level families")
    _add_csv_args(p)
    p.add_argument("--family", action="append", choices=["GIGa", "IGa", "Ga", "GGa", "LN"])
    p.add_argument("--out")

    p = sub.add_parser("fit-returns", help="fit product families to returns")
    _add_csv_args(p)
    p.add_argument("--fix-gamma", type=float, action="append", help="exponent for fixed-exponent variants")
    p.add_argument("--family", action="append")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="simulate one SDE path to CSV")
    p.add_argument("--kind", choices=sorted(_KINDS), default="giga")
    for flag in _SPEC_FLAGS:
        p.add_argument(f"--{flag}", type=float)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--substeps", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("relax", help="relaxation-time experiment")
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--Sigma", type=float, required=True)
    p.add_argument("--paths", type=int, default=5000)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--x0", default="1.0", help="starting value or 'stationary'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("tails", help="log-log tail fit")
    _add_csv_args(p)
    p.add_argument("--lo", type=float, default=0.9)
    p.add_argument("--hi", type=float, default=0.99)
    p.add_argument("--side", choices=["Right", "LeftAbs"], default="Right")
    p.add_argument("--returns", action="store_true", help="fit log-returns instead of levels")
    p.add_argument("--out")

    p = sub.add_parser("spectrum", help="power-spectrum slope and noise color")
    _add_csv_args(p)
    p.add_argument("--returns", action="store_true", help="analyse log-returns instead of levels")
    p.add_argument("--out")

    p = sub.add_parser("report", help="full JSON report")
    _add_csv_args(p)
    p.add_argument("--mode", choices=["vol", "returns"], default="vol")
    p.add_argument("--out")
    return parser


def _resolve_out(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUT_DIR_ENV)
    return Path(base) / path if base and not path.is_absolute() else path


def _emit_text(text: str, out: str | None) -> None:
    path = _resolve_out(out)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _emit_json(obj, out: str | None) -> None:
    _emit_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", out)


def _load(args):
    frame = pipeline.load_level_csv(args.csv, args.date_col, args.value_col, args.skip_rows)
    if frame.dropped:
        print(f"note: dropped {frame.dropped} unparseable rows", file=sys.stderr)
    return frame


def _cmd_fit_vol(args) -> None:
    families = args.family or pipeline.VOL_FAMILIES
    _emit_text(pipeline.run_volatility_report(_load(args), families).to_json(), args.out)


def _cmd_fit_returns(args) -> None:
    variants = tuple(args.fix_gamma) if args.fix_gamma else (2.0,)
    report = pipeline.run_returns_report(_load(args), args.family, variants)
    _emit_text(report.to_json(), args.out)


def _cmd_simulate(args) -> None:
    kind = _KINDS[args.kind]
    params = {name: getattr(args, flag) for flag, name in _SPEC_FLAGS.items() if getattr(args, flag) is not None}
    spec = sde.SdeSpec(kind, **params)
    cfg = sde.SimConfig(args.dt, args.steps, args.x0, args.seed, substeps=args.substeps)
    path = sde.simulate(spec, cfg)
    dest = _resolve_out(args.out)
    fh = sys.stdout if dest is None else open(dest, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(["time", "value"])
        for k in range(1, args.steps + 1):
            w.writerow([repr(k * args.dt), repr(float(path[k]))])
    finally:
        if dest is not None:
            fh.close()


def _cmd_relax(args) -> None:
    x0 = args.x0 if args.x0 == "stationary" else float(args.x0)
    res = sde.relaxation_experiment(args.J, args.Sigma, args.paths, x0, args.dt, args.p, args.seed)
    _emit_json(res.to_dict(), args.out)


def _series(args):
    frame = _load(args)
    return pipeline.to_returns(frame).values if args.returns else frame.values


def _cmd_tails(args) -> None:
    _emit_json(diag.tail_loglog_fit(_series(args), args.lo, args.hi, args.side).to_dict(), args.out)


def _cmd_spectrum(args) -> None:
    _emit_json(diag.spectrum_slope(_series(args)).to_dict(), args.out)


def _cmd_report(args) -> None:
    frame = _load(args)
    if args.mode == "vol":
        report = pipeline.run_volatility_report(frame)
    else:
        report = pipeline.run_returns_report(frame)
    _emit_text(report.to_json(), args.out)


_COMMANDS = {
    "fit-vol": _cmd_fit_vol,
    "fit-returns": _cmd_fit_returns,
    "simulate": _cmd_simulate,
    "relax": _cmd_relax,
    "tails": _cmd_tails,
    "spectrum": _cmd_spectrum,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except HorizonExceededError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DomainError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GigavolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
