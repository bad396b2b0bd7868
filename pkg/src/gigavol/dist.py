"""
The GIGa family of distributions and its relatives.

A :class:`DistModel` is an immutable tagged record. Every operation is a
module-level function taking the model first, vectorized over ``x``:

>>> m = DistModel.iga(2.0, 1.0)
>>> float(pdf(m, 1.0))   # doctest: +ELLIPSIS
0.367879441...

Positive-support kinds (GIGa, IGa, GGa, Ga, LN) have density zero and
log-density ``-inf`` for ``x <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "Kind",
    "DistModel",
    "ReparamLN",
    "pdf",
    "log_pdf",
    "cdf",
    "sf",
    "mean_var",
    "mode",
    "sample",
    "scaled_to_unit_mean",
    "iga_mode_stats",
    "ln_limit_of_giga",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Kind(str, Enum):
    GIGA = "GIGa"
    IGA = "IGa"
    GGA = "GGa"
    GA = "Ga"
    LN = "LN"
    NORMAL = "Normal"
    STUDENT_T = "StudentT"


_PARAM_NAMES = {
    Kind.GIGA: ("alpha", "beta", "gamma"),
    Kind.IGA: ("alpha", "beta"),
    Kind.GGA: ("alpha", "beta", "gamma"),
    Kind.GA: ("alpha", "beta"),
    Kind.LN: ("mu", "sigma"),
    Kind.NORMAL: ("mu", "sigma"),
    Kind.STUDENT_T: ("t_loc", "t_scale", "t_dof"),
}
_POSITIVE = {"alpha", "beta", "gamma", "sigma", "t_scale", "t_dof"}


@dataclass(frozen=True)
class DistModel:
    """One member of the distribution family.

    Only the fields named by ``kind`` are set; the others stay ``None``.
    Use the classmethod constructors rather than the raw initializer.
    """

    kind: Kind
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    mu: float | None = None
    sigma: float | None = None
    t_loc: float | None = None
    t_scale: float | None = None
    t_dof: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        names = _PARAM_NAMES[self.kind]
        for name in ("alpha", "beta", "gamma", "mu", "sigma", "t_loc", "t_scale", "t_dof"):
            value = getattr(self, name)
            if name not in names:
                if value is not None:
                    raise DomainError(f"{self.kind.value} takes no parameter {name!r}")
                continue
            if value is None:
                raise DomainError(f"{self.kind.value} requires parameter {name!r}")
            value = float(value)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            if name in _POSITIVE and value <= 0.0:
                raise DomainError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def giga(cls, alpha: float, beta: float, gamma: float) -> DistModel:
        return cls(Kind.GIGA, alpha=alpha, beta=beta, gamma=gamma)

    @classmethod
    def iga(cls, alpha: float, beta: float) -> DistModel:
        return cls(Kind.IGA, alpha=alpha, beta=beta)

    @classmethod
    def gga(cls, alpha: float, beta: float, gamma: float) -> DistModel:
        return cls(Kind.GGA, alpha=alpha, beta=beta, gamma=gamma)

    @classmethod
    def ga(cls, alpha: float, beta: float) -> DistModel:
        return cls(Kind.GA, alpha=alpha, beta=beta)

    @classmethod
    def ln(cls, mu: float, sigma: float) -> DistModel:
        return cls(Kind.LN, mu=mu, sigma=sigma)

    @classmethod
    def normal(cls, mu: float, sigma: float) -> DistModel:
        return cls(Kind.NORMAL, mu=mu, sigma=sigma)

    @classmethod
    def student_t(cls, loc: float, scale: float, dof: float) -> DistModel:
        return cls(Kind.STUDENT_T, t_loc=loc, t_scale=scale, t_dof=dof)

    @property
    def params(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _PARAM_NAMES[self.kind]}

    @property
    def positive_support(self) -> bool:
        return self.kind not in (Kind.NORMAL, Kind.STUDENT_T)

    @property
    def is_inverse(self) -> bool:
        """True for the power-law-tailed kinds GIGa and IGa."""
        return self.kind in (Kind.GIGA, Kind.IGA)

    @property
    def shape_gamma(self) -> float | None:
        """The power exponent gamma, with IGa and Ga mapped to 1."""
        if self.kind in (Kind.IGA, Kind.GA):
            return 1.0
        return self.gamma

    def with_params(self, **changes: float) -> DistModel:
        return DistModel(self.kind, **{**self.params, **changes})

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DistModel:
        return cls(Kind(data["kind"]), **data["params"])


def _generalized(model: DistModel) -> tuple[float, float, float]:
    return model.alpha, model.beta, model.shape_gamma


def log_pdf(model: DistModel, x):
    """Log-density, ``-inf`` outside the support."""
    xa = np.asarray(x, dtype=float)
    out = np.full(xa.shape, -np.inf)
    kind = model.kind
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if kind in (Kind.GIGA, Kind.IGA, Kind.GGA, Kind.GA):
            a, b, g = _generalized(model)
            pos = xa > 0
            lr = np.log(xa[pos]) - math.log(b)  # log(x / beta)
            norm = math.log(g) - math.log(b) - math.lgamma(a)
            if model.is_inverse:
                out[pos] = norm - np.exp(-g * lr) - (1.0 + a * g) * lr
            else:
                out[pos] = norm - np.exp(g * lr) + (a * g - 1.0) * lr
        elif kind is Kind.LN:
            pos = xa > 0
            lx = np.log(xa[pos])
            z = (lx - model.mu) / model.sigma
            out[pos] = -_LOG_SQRT_2PI - math.log(model.sigma) - lx - 0.5 * z * z
        elif kind is Kind.NORMAL:
            z = (xa - model.mu) / model.sigma
            out = -_LOG_SQRT_2PI - math.log(model.sigma) - 0.5 * z * z
        else:
            nu, s = model.t_dof, model.t_scale
            z = (xa - model.t_loc) / s
            out = (
                math.lgamma(0.5 * (nu + 1.0))
                - math.lgamma(0.5 * nu)
                - 0.5 * math.log(nu * math.pi)
                - math.log(s)
                - 0.5 * (nu + 1.0) * np.log1p(z * z / nu)
            )
    out = np.where(np.isnan(out), -np.inf, out)
    return out if out.ndim else float(out)


def pdf(model: DistModel, x):
    """Probability density, 0 outside the support."""
    return np.exp(log_pdf(model, x))


def _student_t_cdf(model: DistModel, x):
    xa = np.asarray(x, dtype=float)
    m = model.t_loc

    def density(t):
        return math.exp(log_pdf(model, t))

    flat = xa.ravel()
    out = np.empty_like(flat)
    for i, xi in enumerate(flat):
        if math.isinf(xi):
            out[i] = 1.0 if xi > 0 else 0.0
            continue
        # Integrate from the centre so the infinite tail is never traversed.
        half, _ = integrate.quad(density, m, xi, epsabs=1e-13, epsrel=1e-11, limit=200)
        out[i] = min(1.0, max(0.0, 0.5 + half))
    out = out.reshape(xa.shape)
    return out if out.ndim else float(out)


def cdf(model: DistModel, x):
    """Cumulative distribution function."""
    kind = model.kind
    if kind is Kind.STUDENT_T:
        return _student_t_cdf(model, x)
    xa = np.asarray(x, dtype=float)
    out = np.zeros(xa.shape)
    with np.errstate(divide="ignore", over="ignore"):
        if kind in (Kind.GIGA, Kind.IGA, Kind.GGA, Kind.GA):
            a, b, g = _generalized(model)
            pos = xa > 0
            t = (xa[pos] / b) ** g
            if model.is_inverse:
                out[pos] = special.gammaincc(a, 1.0 / t)
            else:
                out[pos] = special.gammainc(a, t)
        elif kind is Kind.LN:
            pos = xa > 0
            out[pos] = special.ndtr((np.log(xa[pos]) - model.mu) / model.sigma)
        else:
            out = special.ndtr((xa - model.mu) / model.sigma)
    return out if out.ndim else float(out)


def sf(model: DistModel, x):
    """Survival function 1 - CDF, computed without cancellation in the right tail."""
    kind = model.kind
    if kind is Kind.STUDENT_T:
        # Symmetric about the location.
        xa = np.asarray(x, dtype=float)
        return cdf(model, 2.0 * model.t_loc - xa)
    xa = np.asarray(x, dtype=float)
    out = np.ones(xa.shape)
    with np.errstate(divide="ignore", over="ignore"):
        if kind in (Kind.GIGA, Kind.IGA, Kind.GGA, Kind.GA):
            a, b, g = _generalized(model)
            pos = xa > 0
            t = (xa[pos] / b) ** g
            if model.is_inverse:
                out[pos] = special.gammainc(a, 1.0 / t)
            else:
                out[pos] = special.gammaincc(a, t)
        elif kind is Kind.LN:
            pos = xa > 0
            out[pos] = special.ndtr(-(np.log(xa[pos]) - model.mu) / model.sigma)
        else:
            out = special.ndtr(-(xa - model.mu) / model.sigma)
    return out if out.ndim else float(out)


def _gamma_ratio(a: float, shift: float) -> float:
    """Gamma(a + shift) / Gamma(a)."""
    return math.exp(math.lgamma(a + shift) - math.lgamma(a))


def mean_var(model: DistModel) -> tuple[float, float]:
    """Mean and variance; the variance is ``inf`` where the second moment diverges.

    Raises
    ------
    DomainError
        If the mean itself does not exist (GIGa with alpha*gamma <= 1,
        Student-t with dof <= 1).
    """
    kind = model.kind
    if kind is Kind.IGA and model.alpha > 2.0:
        a, b = model.alpha, model.beta
        return b / (a - 1.0), b * b / ((a - 1.0) ** 2 * (a - 2.0))
    if kind is Kind.GA:
        return model.alpha * model.beta, model.alpha * model.beta**2
    if kind in (Kind.GIGA, Kind.IGA, Kind.GGA, Kind.GA):
        a, b, g = _generalized(model)
        sign = -1.0 if model.is_inverse else 1.0
        if model.is_inverse and a * g <= 1.0:
            raise DomainError(f"mean undefined for {kind.value} with alpha*gamma = {a * g:g} <= 1")
        r1 = _gamma_ratio(a, sign / g)
        mean = b * r1
        if model.is_inverse and a * g <= 2.0:
            return mean, math.inf
        r2 = _gamma_ratio(a, 2.0 * sign / g)
        return mean, b * b * (r2 - r1 * r1)
    if kind is Kind.LN:
        s2 = model.sigma**2
        return math.exp(model.mu + 0.5 * s2), math.expm1(s2) * math.exp(2.0 * model.mu + s2)
    if kind is Kind.NORMAL:
        return model.mu, model.sigma**2
    nu = model.t_dof
    if nu <= 1.0:
        raise DomainError(f"mean undefined for Student-t with dof = {nu:g} <= 1")
    if nu <= 2.0:
        return model.t_loc, math.inf
    return model.t_loc, model.t_scale**2 * nu / (nu - 2.0)


def mode(model: DistModel) -> float:
    """Location of the density maximum.

    Raises
    ------
    DomainError
        For GGa/Ga with alpha*gamma <= 1, whose density peaks at the origin.
    """
    kind = model.kind
    if kind in (Kind.GIGA, Kind.IGA):
        a, b, g = _generalized(model)
        return b * (g / (1.0 + a * g)) ** (1.0 / g)
    if kind in (Kind.GGA, Kind.GA):
        a, b, g = _generalized(model)
        if a * g <= 1.0:
            raise DomainError("GGa density with alpha*gamma <= 1 has no interior mode")
        return b * ((a * g - 1.0) / g) ** (1.0 / g)
    if kind is Kind.LN:
        return math.exp(model.mu - model.sigma**2)
    if kind is Kind.NORMAL:
        return model.mu
    return model.t_loc


def sample(model: DistModel, n: int, seed: int | None = None) -> np.ndarray:
    """Draw ``n`` variates with a generator seeded from ``seed``.

    GGa is drawn as ``beta * G**(1/gamma)`` and GIGa as
    ``beta * G**(-1/gamma)`` with ``G`` a standard gamma variate of shape
    alpha, which is the reciprocal duality between the two kinds.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = np.random.default_rng(seed)
    kind = model.kind
    if kind in (Kind.GIGA, Kind.IGA, Kind.GGA, Kind.GA):
        a, b, g = _generalized(model)
        gvar = rng.standard_gamma(a, n)
        power = -1.0 / g if model.is_inverse else 1.0 / g
        return b * gvar**power
    if kind is Kind.LN:
        return np.exp(model.mu + model.sigma * rng.standard_normal(n))
    if kind is Kind.NORMAL:
        return model.mu + model.sigma * rng.standard_normal(n)
    return model.t_loc + model.t_scale * rng.standard_t(model.t_dof, n)


def scaled_to_unit_mean(model: DistModel) -> DistModel:
    """Rescale so the mean is exactly one; shape parameters are kept."""
    mean, _ = mean_var(model)
    if model.kind is Kind.LN:
        return model.with_params(mu=model.mu - math.log(mean))
    if model.kind in (Kind.GIGA, Kind.IGA, Kind.GGA, Kind.GA):
        return model.with_params(beta=model.beta / mean)
    if mean <= 0.0:
        raise DomainError("cannot rescale a non-positive mean to one")
    if model.kind is Kind.NORMAL:
        return model.with_params(mu=1.0, sigma=model.sigma / mean)
    return model.with_params(t_loc=1.0, t_scale=model.t_scale / mean)


def iga_mode_stats(alpha: float) -> tuple[float, float]:
    """Mode and modal density of the unit-mean inverse gamma law."""
    alpha = float(alpha)
    if not alpha > 1.0:
        raise DomainError(f"unit-mean IGa needs alpha > 1, got {alpha!r}")
    x_mode = (alpha - 1.0) / (alpha + 1.0)
    log_peak = (1.0 + alpha) * math.log1p(alpha) - 1.0 - alpha - math.lgamma(alpha) - math.log(alpha - 1.0)
    return x_mode, math.exp(log_peak)


@dataclass(frozen=True)
class ReparamLN:
    """The (mu, sigma, lambda) coordinates in which GIGa tends to LN as lambda -> 0."""

    mu: float
    sigma: float
    lam: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.lam > 0):
            raise DomainError("sigma and lambda must be positive")

    def to_giga(self) -> DistModel:
        lam, sigma = self.lam, self.sigma
        beta = math.exp(self.mu - (2.0 * sigma / lam) * math.log(lam))
        return DistModel.giga(1.0 / lam**2, beta, lam / sigma)

    @classmethod
    def from_giga(cls, model: DistModel) -> ReparamLN:
        a, b, g = _generalized(model)
        lam = 1.0 / math.sqrt(a)
        return cls(mu=math.log(b) - math.log(1.0 / lam**2) / g, sigma=1.0 / (g * math.sqrt(a)), lam=lam)


def ln_limit_of_giga(rp: ReparamLN) -> tuple[DistModel, DistModel]:
    """The GIGa at the given reparametrized point and its lognormal limit."""
    return rp.to_giga(), DistModel.ln(rp.mu, rp.sigma)
