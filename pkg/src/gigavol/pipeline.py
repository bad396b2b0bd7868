"""
Data ingestion and report generation.

Level series (volatility indices, closing prices) are read from plain
``date,value`` CSV files; reports bundle the family fits, tail fits and
spectral classification into a JSON document that round-trips exactly.
Units are whatever the file holds (index points for volatility indices);
no rescaling is applied before fitting.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .diag import Side, SpectrumFit, TailFit, spectrum_slope, tail_loglog_fit
from .errors import DataError, GigavolError
from .fit import FitResult, fit_fixed_gamma, fit_gga_giga, fit_ln, fit_product, preprocess_returns

__all__ = [
    "FrameKind",
    "SeriesFrame",
    "Report",
    "load_level_csv",
    "to_returns",
    "min_length_filter",
    "run_volatility_report",
    "run_returns_report",
    "VOL_FAMILIES",
    "RETURN_FAMILIES",
]

log = logging.getLogger(__name__)

VOL_FAMILIES = ("GIGa", "IGa", "Ga", "LN")
RETURN_FAMILIES = ("GIGa*N", "GIGa(a,b,2)*N", "IGa*N", "LN*N", "GGa*N", "Ga*N", "GGa(a,b,2)*N")
_VOL_BASELINE = "LN"
_RET_BASELINE = "LN*N"
_MIN_VOL_POINTS = 50
_MIN_RET_POINTS = 300
_GIGA_RANGE = ((-8.0, -0.05),)
_DATE_FORMATS = ("%Y-%m-%d", "%m/%d/%Y", "%m/%d/%y", "%d-%b-%Y", "%Y/%m/%d")


class FrameKind(str, Enum):
    LEVEL = "Level"
    LOG_RETURN = "LogReturn"
    PREPROCESSED_RETURN = "PreprocessedReturn"


@dataclass
class SeriesFrame:
    """A dated series. ``dropped`` counts rows skipped while loading."""

    name: str
    dates: list[_dt.date]
    values: np.ndarray
    kind: FrameKind = FrameKind.LEVEL
    dropped: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.kind = FrameKind(self.kind)
        if len(self.dates) != self.values.size:
            raise DataError("dates and values differ in length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError(f"{self.name}: dates are not strictly increasing")
        if self.kind is FrameKind.LEVEL and np.any(self.values <= 0):
            raise DataError(f"{self.name}: level values must be positive")

    def __len__(self) -> int:
        return self.values.size


def _parse_date(text: str) -> _dt.date:
    text = text.strip()
    for fmt in _DATE_FORMATS:
        try:
            return _dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unrecognized date {text!r}")


def load_level_csv(
    path: str | Path,
    date_col: str = "Date",
    value_col: str = "Close",
    skip_header_rows: int = 0,
) -> SeriesFrame:
    """Read a level series from CSV.

    ``skip_header_rows`` lines (e.g. a vendor preamble) precede the column
    header. Rows whose value or date does not parse are dropped and counted.

    Raises
    ------
    DataError
        Missing file or columns, no usable rows, or dates out of order.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        for _ in range(skip_header_rows):
            fh.readline()
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        reader.fieldnames = header
        for col in (date_col, value_col):
            if col not in header:
                raise DataError(f"{path.name}: column {col!r} not found (have {header})")
        dates, values, dropped = [], [], 0
        for row in reader:
            try:
                d = _parse_date(row[date_col] or "")
                v = float(row[value_col])
            except (TypeError, ValueError):
                dropped += 1
                continue
            if not math.isfinite(v) or v <= 0:
                dropped += 1
                continue
            dates.append(d)
            values.append(v)
    if not values:
        raise DataError(f"{path.name}: no usable rows")
    if dropped:
        log.info("%s: dropped %d unparseable rows", path.name, dropped)
    return SeriesFrame(path.stem, dates, np.array(values), FrameKind.LEVEL, dropped)


def to_returns(frame: SeriesFrame) -> SeriesFrame:
    """Daily log-returns ``ln S_t - ln S_(t-1)`` dated by the later day."""
    if frame.kind is not FrameKind.LEVEL:
        raise DataError("to_returns expects a level series")
    if len(frame) < 2:
        raise DataError("need at least 2 levels")
    return SeriesFrame(frame.name, frame.dates[1:], np.diff(np.log(frame.values)), FrameKind.LOG_RETURN)


def min_length_filter(frames, min_points: int = 200) -> tuple[list[SeriesFrame], list[str]]:
    """Keep series with at least ``min_points`` values; also return the names dropped."""
    kept, dropped = [], []
    for f in frames:
        (kept if len(f) >= min_points else dropped).append(f)
    return kept, [f.name for f in dropped]


@dataclass
class Report:
    dataset: str
    mode: str
    n_points: int
    fits: list[FitResult]
    tails: list[TailFit]
    spectrum: SpectrumFit | None
    preprocessing: dict | None = None
    errors: dict[str, str] = field(default_factory=dict)
    units: str = "index points"

    def fit(self, family: str) -> FitResult:
        for f in self.fits:
            if f.family == family:
                return f
        raise KeyError(family)

    def ranking(self) -> list[str]:
        """Families ordered by decreasing mean log-likelihood."""
        return [f.family for f in sorted(self.fits, key=lambda f: -f.mean_loglik)]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "mode": self.mode,
            "units": self.units,
            "n_points": self.n_points,
            "fits": [f.to_dict() for f in self.fits],
            "tails": [t.to_dict() for t in self.tails],
            "spectrum": None if self.spectrum is None else self.spectrum.to_dict(),
            "preprocessing": self.preprocessing,
            "errors": self.errors,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Report:
        return cls(
            dataset=data["dataset"],
            mode=data["mode"],
            n_points=data["n_points"],
            fits=[FitResult.from_dict(f) for f in data["fits"]],
            tails=[TailFit.from_dict(t) for t in data["tails"]],
            spectrum=None if data["spectrum"] is None else SpectrumFit.from_dict(data["spectrum"]),
            preprocessing=data.get("preprocessing"),
            errors=dict(data.get("errors", {})),
            units=data.get("units", "index points"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Report:
        return cls.from_dict(json.loads(text))


def _attach_rel(fits: list[FitResult], baseline: str) -> None:
    base = next((f for f in fits if f.family == baseline), None)
    for f in fits:
        f.rel_loglik = None if base is None else (0.0 if f is base else f.mean_loglik - base.mean_loglik)


def _try(name: str, fn, fits: list, errors: dict) -> None:
    try:
        res = fn()
    except (GigavolError, ValueError, ArithmeticError) as exc:
        errors[name] = f"{type(exc).__name__}: {exc}"
        log.warning("fit %s failed: %s", name, exc)
        return
    res.family = name
    fits.append(res)


def _try_diag(name: str, fn, errors: dict):
    try:
        return fn()
    except (GigavolError, ValueError, ArithmeticError) as exc:
        errors[name] = f"{type(exc).__name__}: {exc}"
        return None


def run_volatility_report(
    frame: SeriesFrame,
    families=VOL_FAMILIES,
    cdf_lo: float = 0.9,
    cdf_hi: float = 0.99,
) -> Report:
    """Fit volatility levels with the GIGa, IGa, Ga and LN families.

    The GIGa fit searches only inverse (negative) exponents. Likelihoods
    are reported relative to LN; a failing family is recorded under
    ``errors`` and the rest still run.
    """
    if frame.kind is not FrameKind.LEVEL:
        raise DataError("volatility report expects a level series")
    if len(frame) < _MIN_VOL_POINTS:
        raise DataError(f"need at least {_MIN_VOL_POINTS} points, got {len(frame)}")
    x = frame.values
    makers = {
        "GIGa": lambda: fit_gga_giga(x, gamma_range=_GIGA_RANGE),
        "IGa": lambda: fit_fixed_gamma(x, 1.0, inverse=True),
        "Ga": lambda: fit_fixed_gamma(x, 1.0, inverse=False),
        "GGa": lambda: fit_gga_giga(x, gamma_range=((0.05, 8.0),)),
        "LN": lambda: fit_ln(x),
    }
    fits, errors = [], {}
    for name in families:
        if name not in makers:
            raise DataError(f"unknown volatility family {name!r}")
        _try(name, makers[name], fits, errors)
    _attach_rel(fits, _VOL_BASELINE)
    tail = _try_diag("tail", lambda: tail_loglog_fit(x, cdf_lo, cdf_hi), errors)
    spec = _try_diag("spectrum", lambda: spectrum_slope(x), errors)
    return Report(frame.name, "vol", len(frame), fits, [t for t in (tail,) if t], spec, None, errors)


def _return_makers(fix_gamma_variants) -> dict:
    makers = {
        "GIGa*N": ("GIGa", None),
        "IGa*N": ("IGa", None),
        "LN*N": ("LN", None),
        "GGa*N": ("GGa", None),
        "Ga*N": ("Ga", None),
    }
    for g in fix_gamma_variants:
        makers[f"GIGa(a,b,{g:g})*N"] = ("GIGa", float(g))
        makers[f"GGa(a,b,{g:g})*N"] = ("GGa", float(g))
    return makers


def run_returns_report(
    frame: SeriesFrame,
    families=None,
    fix_gamma_variants=(2.0,),
    cdf_lo: float = 0.9,
    cdf_hi: float = 0.99,
) -> Report:
    """Fit detrended, unit-variance returns with product families ``base * N(0,1)``.

    Accepts a level series (returns are taken first) or a log-return
    series. ``families`` defaults to the seven-family menu, with the
    fixed-exponent members built from ``fix_gamma_variants``. Likelihoods
    are relative to LN*N; failures are recorded per family.
    """
    if frame.kind is FrameKind.LEVEL:
        z, mean, stdev = preprocess_returns(frame.values)
    elif frame.kind is FrameKind.LOG_RETURN:
        # Reconstruct levels so both inputs share one preprocessing path.
        z, mean, stdev = preprocess_returns(np.exp(np.concatenate(([0.0], np.cumsum(frame.values)))))
    else:
        raise DataError("returns report expects levels or raw log-returns")
    if z.size < _MIN_RET_POINTS:
        raise DataError(f"need at least {_MIN_RET_POINTS} returns, got {z.size}")
    makers = _return_makers(fix_gamma_variants)
    if families is None:
        families = [f for f in RETURN_FAMILIES if f in makers] + [f for f in makers if f not in RETURN_FAMILIES]
    fits, errors = [], {}
    for name in families:
        if name not in makers:
            raise DataError(f"unknown returns family {name!r}")
        kind, g = makers[name]
        _try(name, lambda kind=kind, g=g: fit_product(z, kind, fix_gamma=g), fits, errors)
    _attach_rel(fits, _RET_BASELINE)
    tails = [
        _try_diag(f"tail_{side.value}", lambda side=side: tail_loglog_fit(z, cdf_lo, cdf_hi, side), errors)
        for side in (Side.RIGHT, Side.LEFT_ABS)
    ]
    spec = _try_diag("spectrum", lambda: spectrum_slope(z), errors)
    pre = {
        "mean": mean,
        "stdev": stdev,
        "fitted_mean": float(np.mean(z)),
        "fitted_stdev": float(np.sqrt(np.mean((z - z.mean()) ** 2))),
    }
    return Report(frame.name, "returns", int(z.size), fits, [t for t in tails if t], spec, pre, errors, "unit stdev")
