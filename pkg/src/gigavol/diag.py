"""
Empirical diagnostics.

Tail fits regress ``log10(1 - F)`` on ``log10 x`` with the rank-based
empirical CDF ``F_i = i/(n+1)``; theoretical local slopes give the exact
finite-``x`` slope of the same curve. Spectral fits use the power spectrum,
so Brown noise has slope -2.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import optimize, special

from . import dist
from .dist import DistModel
from .errors import DataError, DomainError, NumericalError
from .product import ProductModel, product_cdf, product_logpdf

__all__ = [
    "Side",
    "NoiseColor",
    "TailFit",
    "SpectrumFit",
    "empirical_cdf",
    "tail_loglog_fit",
    "local_slope_giga",
    "local_slope_ln",
    "spectrum_slope",
    "half_width",
    "giga_scaling_profile",
    "ks_test",
    "histogram_export",
    "write_csv",
    "write_json",
]

_WHITE_BAND = (-0.5, 0.5)
_BROWN_BAND = (-2.5, -1.5)
_SKIP_LOW = 2
_SKIP_HIGH_FRAC = 0.10


class Side(str, Enum):
    RIGHT = "Right"
    LEFT_ABS = "LeftAbs"


class NoiseColor(str, Enum):
    WHITE = "White"
    BROWN = "Brown"
    OTHER = "Other"


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    cdf_lo: float
    cdf_hi: float
    n_points: int
    side: Side = Side.RIGHT

    def to_dict(self) -> dict:
        d = asdict(self)
        d["side"] = self.side.value
        return d

    @classmethod
    def from_dict(cls, data: dict) -> TailFit:
        return cls(**{**data, "side": Side(data["side"])})


@dataclass(frozen=True)
class SpectrumFit:
    slope: float
    classification: NoiseColor
    n_freqs: int
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "classification": self.classification.value,
            "n_freqs": self.n_freqs,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SpectrumFit:
        return cls(data["slope"], NoiseColor(data["classification"]), data["n_freqs"], dict(data.get("meta", {})))


def _as_1d(data, min_n: int, what: str) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < min_n:
        raise DataError(f"{what} needs at least {min_n} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{what} received non-finite values")
    return x


def empirical_cdf(data) -> tuple[np.ndarray, np.ndarray]:
    """Sorted data and ``F_i = i/(n+1)``; ties keep distinct ranks."""
    x = np.sort(_as_1d(data, 2, "empirical_cdf"), kind="stable")
    n = x.size
    return x, np.arange(1, n + 1) / (n + 1.0)


def tail_loglog_fit(data, cdf_lo: float = 0.9, cdf_hi: float = 0.99, side: Side | str = Side.RIGHT) -> TailFit:
    """Least-squares line through ``(log10 x, log10(1-F))`` for ``F`` in ``[cdf_lo, cdf_hi]``.

    ``side="LeftAbs"`` fits the left tail by negating the data first. The
    slope estimates ``-k`` for a density tail ``x^(-1-k)``.
    """
    side = Side(side)
    if not 0.0 < cdf_lo < cdf_hi < 1.0:
        raise DomainError("need 0 < cdf_lo < cdf_hi < 1")
    x = _as_1d(data, 2, "tail_loglog_fit")
    if side is Side.LEFT_ABS:
        x = -x
    xs, F = empirical_cdf(x)
    keep = (F >= cdf_lo) & (F <= cdf_hi)
    xs, F = xs[keep], F[keep]
    if xs.size < 5:
        raise DataError(f"only {xs.size} points in the CDF window; need 5")
    if np.any(xs <= 0):
        raise DataError("tail window contains non-positive values")
    slope, intercept = np.polyfit(np.log10(xs), np.log10(1.0 - F), 1)
    return TailFit(float(slope), float(intercept), cdf_lo, cdf_hi, int(xs.size), side)


def local_slope_giga(alpha: float, beta: float, gamma: float, x):
    """Exact slope ``d log(1-CDF) / d log x`` of GIGa(alpha, beta, gamma).

    Tends to ``-alpha*gamma`` as ``x`` grows. Evaluated in log space with
    the lower regularized gamma ``P = 1 - Q`` so it stays accurate far out.
    """
    for v in (alpha, beta, gamma):
        if not v > 0:
            raise DomainError("alpha, beta and gamma must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x must be positive")
    u = (beta / x) ** gamma
    with np.errstate(divide="ignore"):
        log_mag = math.log(gamma) - u + alpha * np.log(u) - special.gammaln(alpha) - np.log(special.gammainc(alpha, u))
    out = -np.exp(log_mag)
    return float(out) if out.ndim == 0 else out


def local_slope_ln(mu: float, sigma: float, x):
    """Exact slope ``d log(1-CDF) / d log x`` of LN(mu, sigma); it never saturates."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x must be positive")
    t = (np.log(x) - mu) / sigma
    # sqrt(2/pi) e^{-t^2/2} / (1 + erf(-t/sqrt2)) = phi(t) / Phi(-t)
    log_ratio = -0.5 * t * t - 0.5 * math.log(2.0 * math.pi) - special.log_ndtr(-t)
    out = -np.exp(log_ratio) / sigma
    return float(out) if out.ndim == 0 else out


def _classify(slope: float) -> NoiseColor:
    if _WHITE_BAND[0] < slope < _WHITE_BAND[1]:
        return NoiseColor.WHITE
    if _BROWN_BAND[0] < slope < _BROWN_BAND[1]:
        return NoiseColor.BROWN
    return NoiseColor.OTHER


def spectrum_slope(series) -> SpectrumFit:
    """Log-log slope of the power spectrum and its noise color.

    The mean is removed before the transform; the lowest two and the
    highest tenth of the positive frequencies are left out of the fit.
    """
    y = _as_1d(series, 64, "spectrum_slope")
    y = y - y.mean()
    if np.all(np.abs(y) <= 1e-12 * max(1.0, float(np.abs(y).max()))):
        raise DataError("spectrum of a constant series is undefined")
    power = np.abs(np.fft.rfft(y)) ** 2
    freqs = np.fft.rfftfreq(y.size)
    k = np.arange(1, freqs.size)  # positive frequencies
    n_high = int(math.floor(_SKIP_HIGH_FRAC * k.size))
    k = k[_SKIP_LOW : k.size - n_high]
    p = power[k]
    if k.size < 8 or np.any(p <= 0):
        raise NumericalError("too few usable frequencies for a spectral fit")
    slope, _ = np.polyfit(np.log10(freqs[k]), np.log10(p), 1)
    meta = {
        "spectrum": "power",
        "skip_low": _SKIP_LOW,
        "skip_high_fraction": _SKIP_HIGH_FRAC,
        "white_band": list(_WHITE_BAND),
        "brown_band": list(_BROWN_BAND),
    }
    return SpectrumFit(float(slope), _classify(float(slope)), int(k.size), meta)


def _scan_side(f, x0: float, target: float, step: float, lower_bound: float | None) -> float:
    """Walk away from the mode until ``f`` falls below ``target``; return a root."""
    inner = x0
    for _ in range(200):
        outer = inner + step
        if lower_bound is not None and outer <= lower_bound:
            outer = 0.5 * (inner + lower_bound)
        if f(outer) < target:
            return optimize.brentq(lambda t: f(t) - target, min(inner, outer), max(inner, outer), xtol=1e-14, rtol=1e-14)
        inner = outer
        step *= 2.0
    raise NumericalError("density does not fall to half its peak")


def half_width(model: DistModel) -> float:
    """Full width at half maximum around the mode.

    Raises
    ------
    NumericalError
        If the density rises again while moving away from the mode, out to
        one full width beyond either half-maximum point.
    """
    m = dist.mode(model)
    peak = float(dist.pdf(model, m))
    half = 0.5 * peak

    def f(t):
        return float(dist.pdf(model, t))

    scale = max(abs(m), 1.0) * 1e-2
    lower = 0.0 if model.positive_support else None
    left = _scan_side(f, m, half, -scale, lower)
    right = _scan_side(f, m, half, scale, None)
    width = right - left
    lo = left - width if lower is None else max(left - width, 0.5 * left)
    slack = 1e-9 * peak
    for a, b in ((m, lo), (m, right + width)):
        profile = np.asarray(dist.pdf(model, np.linspace(a, b, 2001)))
        if np.any(np.diff(profile) > slack):
            raise NumericalError("density is not unimodal around the half-maximum interval")
    return width


def giga_scaling_profile(eta_list, locus_c: float = 2.1, x_grid=None) -> float:
    """Largest pointwise spread of unit-mean GIGa densities along ``gamma = c/eta``.

    Each ``eta`` gives GIGa with ``gamma = locus_c/eta`` and ``alpha = eta/gamma``
    rescaled to unit mean; the return value is ``max_x (max_eta pdf - min_eta pdf)``.
    """
    etas = [float(e) for e in eta_list]
    if not etas or any(e <= 1 for e in etas):
        raise DomainError("every eta must exceed 1")
    if not locus_c > 0:
        raise DomainError("locus_c must be positive")
    x = np.linspace(1e-3, 6.0, 6000) if x_grid is None else np.asarray(x_grid, dtype=float)
    rows = []
    for eta in etas:
        g = locus_c / eta
        model = dist.scaled_to_unit_mean(DistModel.giga(eta / g, 1.0, g))
        rows.append(dist.pdf(model, x))
    stack = np.vstack(rows)
    return float(np.max(stack.max(axis=0) - stack.min(axis=0)))


def ks_test(data, model: DistModel | ProductModel) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    The p-value is the Kolmogorov limit law evaluated at the
    small-sample-corrected ``(sqrt n + 0.12 + 0.11/sqrt n) D``.
    """
    x = np.sort(_as_1d(data, 8, "ks_test"))
    n = x.size
    if isinstance(model, ProductModel):
        F = np.asarray(product_cdf(model, x), dtype=float)
    else:
        F = np.asarray(dist.cdf(model, x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n), 0.0))
    d = min(d, 1.0)
    rn = math.sqrt(n)
    p = float(special.kolmogorov((rn + 0.12 + 0.11 / rn) * d))
    return d, min(max(p, 0.0), 1.0)


def _overlay_pdf(model, centers: np.ndarray) -> np.ndarray:
    if isinstance(model, ProductModel):
        return np.exp(product_logpdf(model, centers))
    return np.asarray(dist.pdf(model, centers), dtype=float)


def _overlay_label(model) -> str:
    if isinstance(model, ProductModel):
        return model.label
    return model.kind.value


def histogram_export(data, bins: int, overlay=None) -> dict[str, list[float]]:
    """Density-normalized histogram table with optional model PDFs at the bin centers.

    Returns
    -------
    dict
        Columns ``bin_lo``, ``bin_hi``, ``center``, ``density`` and one
        ``pdf_<label>`` column per overlay model (repeated labels get a
        numeric suffix).
    """
    if bins < 2:
        raise DomainError("bins must be at least 2")
    x = _as_1d(data, 1, "histogram_export")
    density, edges = np.histogram(x, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    table = {
        "bin_lo": edges[:-1].tolist(),
        "bin_hi": edges[1:].tolist(),
        "center": centers.tolist(),
        "density": density.tolist(),
    }
    for model in overlay or []:
        name = f"pdf_{_overlay_label(model)}"
        base, k = name, 2
        while name in table:
            name = f"{base}_{k}"
            k += 1
        table[name] = _overlay_pdf(model, centers).tolist()
    return table


def write_csv(table: dict[str, list], path: str | Path) -> None:
    """Write a column table as CSV with a header row."""
    cols = list(table)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        w.writerows(zip(*(table[c] for c in cols)))


def write_json(obj, path: str | Path) -> None:
    """Deterministic JSON (sorted keys, fixed indentation)."""
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
