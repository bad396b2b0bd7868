"""
Maximum-likelihood fitting.

Volatility-level fits
    :func:`fit_ln` (closed form), :func:`fit_gga_giga` (profile root search
    over a signed power exponent) and :func:`fit_fixed_gamma` (IGa, Ga and
    any other frozen exponent).

Returns fits
    :func:`fit_product` maximizes the quadrature likelihood of a product
    law with a Nelder-Mead simplex in log-parameter space;
    :func:`fit_student_direct` does the same for the closed-form Student-t
    special case.

All fits report the mean log-likelihood ``(1/n) sum log f(x_i)``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .dist import DistModel, Kind, log_pdf
from .errors import DegenerateDataError, DomainError, NoRootError, NumericalError
from .product import ProductModel, product_logpdf, student_t_logpdf
from .specfun import digamma

__all__ = [
    "FitResult",
    "SimplexConfig",
    "SimplexResult",
    "mean_loglik",
    "fit_ln",
    "fit_gga_giga",
    "fit_fixed_gamma",
    "fit_product",
    "fit_student_direct",
    "preprocess_returns",
    "nelder_mead",
    "bisection",
    "gga_program_residuals",
    "DEFAULT_GAMMA_RANGE",
]

DEFAULT_GAMMA_RANGE: tuple[tuple[float, float], ...] = ((-8.0, -0.05), (0.05, 8.0))
_SCAN_INTERVALS = 64
_TAIL_TARGET = 3.5


@dataclass
class FitResult:
    """Outcome of one maximum-likelihood fit."""

    model: DistModel | ProductModel
    mean_loglik: float
    iterations: int = 0
    converged: bool = True
    rel_loglik: float | None = None
    family: str = ""
    info: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "model": self.model.to_dict(),
            "mean_loglik": self.mean_loglik,
            "rel_loglik": self.rel_loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FitResult:
        m = data["model"]
        model = ProductModel.from_dict(m) if m["kind"] == "product" else DistModel.from_dict(m)
        return cls(
            model=model,
            mean_loglik=data["mean_loglik"],
            iterations=data["iterations"],
            converged=data["converged"],
            rel_loglik=data.get("rel_loglik"),
            family=data.get("family", ""),
            info=data.get("info", {}),
        )


@dataclass(frozen=True)
class SimplexConfig:
    max_iterations: int = 1000
    x_tol: float = 1e-6
    f_tol: float = 1e-9
    initial_step: float = 0.25

    def __post_init__(self):
        if self.max_iterations < 1 or self.x_tol <= 0 or self.f_tol <= 0 or self.initial_step <= 0:
            raise DomainError("simplex tolerances and step must be positive")


class SimplexResult(NamedTuple):
    x: np.ndarray
    f: float
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# Generic numerics


def _flat_at_centroid(fval, simplex: np.ndarray, values: np.ndarray, f_tol: float) -> bool:
    # Equal vertex values can straddle a minimum (e.g. a symmetric bowl);
    # the spread test only counts if the centroid agrees as well.
    fc = fval(simplex.mean(axis=0))
    return abs(fc - values[0]) < f_tol


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    cfg: SimplexConfig | None = None,
) -> SimplexResult:
    """Minimize ``objective`` with the Nelder-Mead simplex.

    Reflection, expansion, contraction and shrink coefficients are
    1, 2, 0.5 and 0.5. Stops when the simplex diameter drops below
    ``x_tol``, the spread of vertex values (and the centroid value)
    drops below ``f_tol``, or after
    ``max_iterations`` iterations (then ``converged`` is False). Non-finite
    objective values away from ``x0`` are treated as ``+inf``.
    """
    cfg = cfg or SimplexConfig()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise NumericalError("objective is not finite at the starting point")

    def fval(x):
        v = objective(x)
        return float(v) if np.isfinite(v) else math.inf

    n = x0.size
    simplex = np.empty((n + 1, n))
    simplex[0] = x0
    for i in range(n):
        simplex[i + 1] = x0
        simplex[i + 1, i] += cfg.initial_step
    values = np.array([float(f0)] + [fval(v) for v in simplex[1:]])

    iterations = 0
    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)))
        spread = values[-1] - values[0]
        if diameter < cfg.x_tol or (spread < cfg.f_tol and _flat_at_centroid(fval, simplex, values, cfg.f_tol)):
            converged = True
            break
        if iterations >= cfg.max_iterations:
            break
        iterations += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fval(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fval(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fval(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = fval(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        values[1:] = [fval(v) for v in simplex[1:]]

    return SimplexResult(simplex[0].copy(), float(values[0]), iterations, converged)


def bisection(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``f`` on a bracketing interval, returned once ``|hi - lo| <= tol``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoRootError(f"f({lo:g}) and f({hi:g}) have the same sign")
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Likelihood


def mean_loglik(model: DistModel | ProductModel, data) -> float:
    """``(1/n) sum log f(x_i)``; ``-inf`` if any datum has zero density."""
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("data must be non-empty")
    if isinstance(model, ProductModel):
        terms = product_logpdf(model, x)
    else:
        terms = log_pdf(model, x)
    terms = np.atleast_1d(terms)
    if not np.all(np.isfinite(terms)):
        return -math.inf
    # Compensated summation keeps the result independent of data order.
    return math.fsum(terms) / x.size


def _positive_log(data, min_n: int) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < min_n:
        raise DomainError(f"need at least {min_n} data points, got {x.size}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("data must be finite and strictly positive")
    return np.log(x)


def fit_ln(data) -> FitResult:
    """Closed-form lognormal fit (population variance of ``log x``)."""
    lx = _positive_log(data, 2)
    mu = float(np.mean(lx))
    sigma = float(np.sqrt(np.mean((lx - mu) ** 2)))
    if sigma <= 0.0:
        raise DegenerateDataError("log-data have zero variance")
    model = DistModel.ln(mu, sigma)
    return FitResult(model, mean_loglik(model, data), family="LN")


# ---------------------------------------------------------------------------
# GGa / GIGa by the profile equations


class _PowerMoments:
    """Moments of ``y = x**g`` on geometric-mean-normalized data."""

    def __init__(self, lx: np.ndarray):
        self.shift = float(np.mean(lx))
        self.lx = lx - self.shift
        if float(np.max(np.abs(self.lx))) == 0.0:
            raise DegenerateDataError("data are constant")

    def terms(self, g: float) -> tuple[float, float, float]:
        """Return ``mean(log y)``, ``log mean(y)`` and ``mean(y log y) / mean(y)``."""
        ly = g * self.lx
        top = float(np.max(ly))
        y = np.exp(ly - top)
        my = float(np.mean(y))
        mean_ly = float(np.mean(ly))
        log_my = math.log(my) + top
        ylogy = float(np.mean(y * ly)) / my
        return mean_ly, log_my, ylogy

    def alpha_from_gamma(self, g: float) -> float:
        mean_ly, _, ylogy = self.terms(g)
        denom = ylogy - mean_ly
        return 1.0 / denom if denom > 0 else math.nan

    def program1(self, g: float, alpha: float) -> float:
        mean_ly, log_my, _ = self.terms(g)
        return mean_ly - log_my + math.log(alpha) - digamma(alpha)

    def beta(self, g: float, alpha: float) -> float:
        _, log_my, _ = self.terms(g)
        return math.exp((log_my - math.log(alpha)) / g + self.shift)


def _model_from_signed(alpha: float, beta: float, g: float, fixed: bool) -> DistModel:
    if g < 0:
        if fixed and g == -1.0:
            return DistModel.iga(alpha, beta)
        return DistModel.giga(alpha, beta, -g)
    if fixed and g == 1.0:
        return DistModel.ga(alpha, beta)
    return DistModel.gga(alpha, beta, g)


def gga_program_residuals(data, alpha: float, beta: float, g: float) -> tuple[float, float, float]:
    """Residuals of the three profile equations at a signed exponent ``g``.

    Returns ``(program1, program2, beta_equation)`` where ``program2`` is
    ``alpha - alpha(g)`` and ``beta_equation`` is ``beta**g - mean(x**g)/alpha``
    on a relative scale. All three vanish at the joint maximum.
    """
    pm = _PowerMoments(_positive_log(data, 2))
    r1 = pm.program1(g, alpha)
    r2 = alpha - pm.alpha_from_gamma(g)
    r3 = beta / pm.beta(g, alpha) - 1.0
    return r1, r2, r3


def fit_gga_giga(
    data,
    gamma_range: Sequence[tuple[float, float]] | None = None,
    tol: float = 1e-12,
) -> FitResult:
    """Three-parameter GGa/GIGa fit by a root search over the signed exponent.

    For a trial exponent ``g`` the shape ``alpha(g)`` follows from the
    gamma-score equation; the alpha-score residual is then scanned over
    ``gamma_range`` (64 subintervals per interval) for sign changes, each
    of which is refined by bisection. Negative roots give GIGa(alpha,
    beta, |g|), positive roots GGa. Among several roots the one with the
    largest likelihood wins.

    Raises
    ------
    NoRootError
        If no sign change exists in the searched range.
    """
    lx = _positive_log(data, 10)
    pm = _PowerMoments(lx)
    intervals = gamma_range if gamma_range is not None else DEFAULT_GAMMA_RANGE

    def residual(g: float) -> float:
        a = pm.alpha_from_gamma(g)
        if not (a > 0 and math.isfinite(a)):
            return math.nan
        return pm.program1(g, a)

    roots = []
    for lo, hi in intervals:
        grid = np.linspace(lo, hi, _SCAN_INTERVALS + 1)
        vals = [residual(float(g)) for g in grid]
        for i in range(_SCAN_INTERVALS):
            f0, f1 = vals[i], vals[i + 1]
            if not (math.isfinite(f0) and math.isfinite(f1)) or f0 * f1 > 0:
                continue
            roots.append(bisection(residual, float(grid[i]), float(grid[i + 1]), tol))
    if not roots:
        raise NoRootError("no root of the GGa/GIGa likelihood equations in the searched range")

    best = None
    for g in roots:
        a = pm.alpha_from_gamma(g)
        try:
            model = _model_from_signed(a, pm.beta(g, a), g, fixed=False)
        except DomainError:
            continue
        ll = mean_loglik(model, data)
        if best is None or ll > best.mean_loglik:
            best = FitResult(
                model,
                ll,
                iterations=len(roots),
                family=model.kind.value,
                info={"signed_gamma": g, "n_roots": len(roots)},
            )
    if best is None:
        raise NoRootError("every root produced an invalid parameter set")
    return best


def fit_fixed_gamma(data, gamma: float, inverse: bool = False, tol: float = 1e-13) -> FitResult:
    """Two-parameter fit with the power exponent frozen.

    ``inverse=True`` gives GIGa (IGa when ``gamma == 1``), otherwise GGa
    (Ga when ``gamma == 1``). Shape solves ``log a - psi(a) = c`` by
    bisection in ``log a``; scale follows from the beta-score equation.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    lx = _positive_log(data, 10)
    pm = _PowerMoments(lx)
    g = -gamma if inverse else gamma
    mean_ly, log_my, _ = pm.terms(g)
    c = log_my - mean_ly
    if not c > 0:
        raise DegenerateDataError("data carry no spread at this exponent")

    def f(log_a: float) -> float:
        a = math.exp(log_a)
        return math.log(a) - digamma(a) - c

    lo, hi = -20.0, 1.0
    while f(hi) > 0:
        hi += 2.0
        if hi > 60:
            raise NoRootError("shape equation has no root")
    alpha = math.exp(bisection(f, lo, hi, tol))
    model = _model_from_signed(alpha, pm.beta(g, alpha), g, fixed=True)
    return FitResult(model, mean_loglik(model, data), family=model.kind.value, info={"signed_gamma": g})


# ---------------------------------------------------------------------------
# Returns


def preprocess_returns(levels) -> tuple[np.ndarray, float, float]:
    """Log-returns, detrended and scaled to unit (population) standard deviation.

    Returns the processed series together with the removed mean and the
    standard deviation used for scaling.
    """
    s = np.asarray(levels, dtype=float).ravel()
    if s.size < 3:
        raise DomainError("need at least 3 levels")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise DomainError("levels must be finite and strictly positive")
    r = np.diff(np.log(s))
    mean = float(np.mean(r))
    centred = r - mean
    stdev = float(np.sqrt(np.mean(centred**2)))
    if stdev <= 0:
        raise DegenerateDataError("returns have zero variance")
    return centred / stdev, mean, stdev


_PRODUCT_KINDS = {
    "GIGa": (Kind.GIGA, None),
    "IGa": (Kind.GIGA, 1.0),
    "GGa": (Kind.GGA, None),
    "Ga": (Kind.GGA, 1.0),
    "LN": (Kind.LN, None),
}


def _family_label(kind: Kind, fix_gamma: float | None) -> str:
    if fix_gamma is None or kind is Kind.LN:
        return f"{kind.value}*N"
    if fix_gamma == 1.0:
        return "IGa*N" if kind is Kind.GIGA else "Ga*N"
    return f"{kind.value}(a,b,{fix_gamma:g})*N"


def _product_start(kind: Kind, fix_gamma: float | None, scale: float) -> np.ndarray:
    if kind is Kind.LN:
        sigma = 0.5
        return np.array([math.log(scale) - sigma**2, math.log(sigma)])
    g = fix_gamma if fix_gamma is not None else 2.0
    a = _TAIL_TARGET / g
    sign = -2.0 if kind is Kind.GIGA else 2.0
    beta = scale / math.sqrt(math.exp(math.lgamma(a + sign / g) - math.lgamma(a)))
    start = [math.log(a), math.log(beta)]
    if fix_gamma is None:
        start.append(math.log(g))
    return np.array(start)


def _product_model(kind: Kind, fix_gamma: float | None, theta: np.ndarray) -> ProductModel:
    if kind is Kind.LN:
        return ProductModel(DistModel.ln(theta[0], math.exp(theta[1])))
    a, b = math.exp(theta[0]), math.exp(theta[1])
    g = fix_gamma if fix_gamma is not None else math.exp(theta[2])
    if kind is Kind.GIGA:
        base = DistModel.iga(a, b) if g == 1.0 else DistModel.giga(a, b, g)
    else:
        base = DistModel.ga(a, b) if g == 1.0 else DistModel.gga(a, b, g)
    return ProductModel(base)


def _run_simplex(objective, x0, cfg: SimplexConfig) -> SimplexResult:
    # One restart from the best vertex guards against premature collapse.
    first = nelder_mead(objective, x0, cfg)
    remaining = cfg.max_iterations - first.iterations
    if remaining < 1:
        return first
    second = nelder_mead(
        objective,
        first.x,
        SimplexConfig(remaining, cfg.x_tol, cfg.f_tol, cfg.initial_step / 2.0),
    )
    best = second if second.f <= first.f else first
    return SimplexResult(best.x, best.f, first.iterations + second.iterations, second.converged)


def fit_product(
    data,
    base_kind: str | Kind = "GIGa",
    fix_gamma: float | None = None,
    cfg: SimplexConfig | None = None,
) -> FitResult:
    """Fit ``base * N(0, 1)`` by simplex maximization of the quadrature likelihood.

    ``base_kind`` is one of GIGa, IGa, GGa, Ga, LN. IGa and Ga are GIGa and
    GGa with the exponent frozen at one; ``fix_gamma`` freezes it at any
    other value (e.g. 2 for the Student-t member).
    """
    z = np.asarray(data, dtype=float).ravel()
    if z.size < 100:
        raise DomainError(f"need at least 100 returns, got {z.size}")
    key = base_kind.value if isinstance(base_kind, Kind) else str(base_kind)
    if key not in _PRODUCT_KINDS:
        raise DomainError(f"unsupported product base {key!r}")
    kind, implied = _PRODUCT_KINDS[key]
    if implied is not None:
        fix_gamma = implied
    if fix_gamma is not None and not fix_gamma > 0:
        raise DomainError("fix_gamma must be positive")
    cfg = cfg or SimplexConfig()
    scale = float(np.sqrt(np.mean(z * z)))
    if scale <= 0:
        raise DegenerateDataError("returns are identically zero")

    def objective(theta):
        try:
            return -mean_loglik(_product_model(kind, fix_gamma, theta), z)
        except (DomainError, ValueError, OverflowError, ArithmeticError):
            return math.inf

    res = _run_simplex(objective, _product_start(kind, fix_gamma, scale), cfg)
    model = _product_model(kind, fix_gamma, res.x)
    return FitResult(
        model,
        -res.f,
        iterations=res.iterations,
        converged=res.converged,
        family=_family_label(kind, fix_gamma),
    )


def fit_student_direct(data, cfg: SimplexConfig | None = None) -> FitResult:
    """Closed-form Student-t likelihood fit of GIGa(alpha, beta, 2) * N.

    The returned model is the equivalent product law, so its likelihood is
    directly comparable with :func:`fit_product` at ``fix_gamma=2``.
    """
    z = np.asarray(data, dtype=float).ravel()
    if z.size < 100:
        raise DomainError(f"need at least 100 returns, got {z.size}")
    cfg = cfg or SimplexConfig()
    scale = float(np.sqrt(np.mean(z * z)))
    if scale <= 0:
        raise DegenerateDataError("returns are identically zero")

    def objective(theta):
        a, b = math.exp(theta[0]), math.exp(theta[1])
        return -math.fsum(student_t_logpdf(a, b, z)) / z.size

    res = _run_simplex(objective, _product_start(Kind.GIGA, 2.0, scale), cfg)
    a, b = math.exp(res.x[0]), math.exp(res.x[1])
    model = ProductModel(DistModel.giga(a, b, 2.0))
    return FitResult(
        model,
        -res.f,
        iterations=res.iterations,
        converged=res.converged,
        family="StudentT",
        info={"t_scale": b / math.sqrt(a), "t_dof": 2.0 * a},
    )
