"""
Volatility SDEs: Euler-Maruyama simulation, closed-form stationary laws,
the generic Fokker-Planck stationary density and the relaxation-time
experiment.

Every path ``i`` of an ensemble draws its noise from its own Philox
substream keyed by ``(seed, i)``, so a path is reproducible regardless of
how many companions it is simulated with; :func:`simulate` is path 0.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

from .diag import ks_test
from .dist import DistModel, mean_var, sample
from .errors import DomainError, HorizonExceededError, NumericalError
from .specfun import digamma, lgamma, trigamma

__all__ = [
    "SdeKind",
    "SdeSpec",
    "SimConfig",
    "RelaxResult",
    "drift",
    "diffusion",
    "simulate",
    "Ensemble",
    "stationary_samples",
    "stationary_of",
    "theta_from_mean",
    "variance_to_vol_params",
    "mean_sigma_from_variance",
    "fp_stationary_pdf",
    "relaxation_scale",
    "relaxation_experiment",
    "relax_mean_estimate",
    "relax_stdev_estimate",
]

_CLAMP_EPS = 1e-8
_DT_WARN = 0.1
_NOISE_CHUNK = 512


class SdeKind(str, Enum):
    GIGA_VOL = "GigaVol"
    VARIANCE_IGA = "VarianceIGa"
    HESTON_VARIANCE = "HestonVariance"
    GGA_VOL_A = "GgaVolA"
    GGA_VOL_B = "GgaVolB"
    GGA_VOL_C = "GgaVolC"
    OU_LOG = "OuLog"
    LN_VOL = "LnVol"


_FIELDS = {
    SdeKind.GIGA_VOL: ("J", "theta", "Sigma", "gamma"),
    SdeKind.VARIANCE_IGA: ("J_tilde", "Sigma_tilde", "V_bar"),
    SdeKind.HESTON_VARIANCE: ("J", "V_bar", "phi"),
    SdeKind.GGA_VOL_A: ("J", "theta", "Sigma", "gamma"),
    SdeKind.GGA_VOL_B: ("J", "theta", "Sigma", "gamma"),
    SdeKind.GGA_VOL_C: ("J", "theta", "Sigma", "gamma"),
    SdeKind.OU_LOG: ("ou_theta", "ou_mu", "ou_sigma"),
    SdeKind.LN_VOL: ("ou_theta", "ou_mu", "ou_sigma"),
}
_SIGNED = {"ou_mu"}
_NOISE = {"Sigma", "Sigma_tilde", "phi", "ou_sigma"}


@dataclass(frozen=True)
class SdeSpec:
    """Drift and diffusion parameters of one SDE variant.

    ``GigaVol``: d sigma = J(theta sigma^(1-gamma) - sigma) dt + Sigma sigma dW.
    ``VarianceIGa``: dV = J~(V_bar - V) dt + Sigma~ V dW.
    ``HestonVariance``: dV = J(V_bar - V) dt + phi sqrt(V) dW.
    ``GgaVolA``: J(sigma - theta sigma^(1+gamma)) dt + Sigma sigma dW.
    ``GgaVolB``: J(1 - theta sigma^gamma) dt + Sigma sqrt(sigma) dW.
    ``GgaVolC``: J(1/sigma - theta sigma^(gamma-1)) dt + Sigma dW.
    ``OuLog``: dx = theta(mu - x) dt + sigma dW (x is a log-volatility).
    ``LnVol``: dX = theta X (mu - log X) dt + sigma^2 X / 2 dt + sigma X dW.
    """

    kind: SdeKind
    J: float | None = None
    theta: float | None = None
    Sigma: float | None = None
    gamma: float | None = None
    J_tilde: float | None = None
    Sigma_tilde: float | None = None
    V_bar: float | None = None
    phi: float | None = None
    ou_theta: float | None = None
    ou_mu: float | None = None
    ou_sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SdeKind(self.kind))
        needed = _FIELDS[self.kind]
        for name in needed:
            value = getattr(self, name)
            if value is None:
                raise DomainError(f"{self.kind.value} requires {name!r}")
            value = float(value)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            if name in _NOISE and value < 0:
                raise DomainError(f"{name} must be non-negative, got {value!r}")
            if name not in _SIGNED and name not in _NOISE and value <= 0:
                raise DomainError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def giga_vol(cls, J, theta, Sigma, gamma):
        return cls(SdeKind.GIGA_VOL, J=J, theta=theta, Sigma=Sigma, gamma=gamma)

    @classmethod
    def variance_iga(cls, J_tilde, Sigma_tilde, V_bar):
        return cls(SdeKind.VARIANCE_IGA, J_tilde=J_tilde, Sigma_tilde=Sigma_tilde, V_bar=V_bar)

    @classmethod
    def heston_variance(cls, J, V_bar, phi):
        return cls(SdeKind.HESTON_VARIANCE, J=J, V_bar=V_bar, phi=phi)

    @classmethod
    def gga_vol(cls, variant: str, J, theta, Sigma, gamma):
        kind = {"A": SdeKind.GGA_VOL_A, "B": SdeKind.GGA_VOL_B, "C": SdeKind.GGA_VOL_C}[variant.upper()]
        return cls(kind, J=J, theta=theta, Sigma=Sigma, gamma=gamma)

    @classmethod
    def ou_log(cls, theta, mu, sigma):
        return cls(SdeKind.OU_LOG, ou_theta=theta, ou_mu=mu, ou_sigma=sigma)

    @classmethod
    def ln_vol(cls, theta, mu, sigma):
        return cls(SdeKind.LN_VOL, ou_theta=theta, ou_mu=mu, ou_sigma=sigma)

    @property
    def positive_support(self) -> bool:
        return self.kind is not SdeKind.OU_LOG

    @property
    def params(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _FIELDS[self.kind]}


@dataclass(frozen=True)
class SimConfig:
    """Euler-Maruyama settings.

    ``substeps`` internal steps of size ``dt / substeps`` are taken between
    recorded points.
    """

    dt: float
    steps: int
    x0: float = 1.0
    seed: int = 0
    scheme: str = "EulerMaruyama"
    substeps: int = 1

    def __post_init__(self):
        if not self.dt > 0 or self.steps < 1 or self.substeps < 1:
            raise DomainError("dt, steps and substeps must be positive")
        if self.scheme != "EulerMaruyama":
            raise DomainError(f"unsupported scheme {self.scheme!r}")


@dataclass
class RelaxResult:
    relax_time: float
    p_value_trace: list[tuple[float, float]]
    n_paths: int
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "relax_time": self.relax_time,
            "n_paths": self.n_paths,
            "p_value_trace": [[t, p] for t, p in self.p_value_trace],
            "meta": self.meta,
        }


def drift(spec: SdeSpec, x):
    k = spec.kind
    if k is SdeKind.GIGA_VOL:
        return spec.J * (spec.theta * x ** (1.0 - spec.gamma) - x)
    if k is SdeKind.VARIANCE_IGA:
        return spec.J_tilde * (spec.V_bar - x)
    if k is SdeKind.HESTON_VARIANCE:
        return spec.J * (spec.V_bar - np.maximum(x, 0.0))
    if k is SdeKind.GGA_VOL_A:
        return spec.J * (x - spec.theta * x ** (1.0 + spec.gamma))
    if k is SdeKind.GGA_VOL_B:
        return spec.J * (1.0 - spec.theta * x**spec.gamma)
    if k is SdeKind.GGA_VOL_C:
        return spec.J * (1.0 / x - spec.theta * x ** (spec.gamma - 1.0))
    if k is SdeKind.OU_LOG:
        return spec.ou_theta * (spec.ou_mu - x)
    return spec.ou_theta * x * (spec.ou_mu - np.log(x)) + 0.5 * spec.ou_sigma**2 * x


def diffusion(spec: SdeSpec, x):
    k = spec.kind
    if k in (SdeKind.GIGA_VOL, SdeKind.GGA_VOL_A):
        return spec.Sigma * x
    if k is SdeKind.VARIANCE_IGA:
        return spec.Sigma_tilde * x
    if k is SdeKind.HESTON_VARIANCE:
        return spec.phi * np.sqrt(np.maximum(x, 0.0))
    if k is SdeKind.GGA_VOL_B:
        return spec.Sigma * np.sqrt(x)
    if k is SdeKind.GGA_VOL_C:
        return spec.Sigma * np.ones_like(x)
    if k is SdeKind.OU_LOG:
        return spec.ou_sigma * np.ones_like(x)
    return spec.ou_sigma * x


def _rate(spec: SdeSpec) -> float:
    if spec.kind is SdeKind.VARIANCE_IGA:
        return spec.J_tilde
    if spec.kind in (SdeKind.OU_LOG, SdeKind.LN_VOL):
        return spec.ou_theta
    return spec.J


def _guard(spec: SdeSpec, x_old: np.ndarray, x_new: np.ndarray) -> np.ndarray:
    """Keep positive-support processes positive.

    Multiplicative-noise kinds clamp a non-positive proposal to a tiny
    fraction of the previous value; square-root and additive-noise GGa
    kinds reflect; Heston keeps the signed state (full truncation acts in
    the coefficients).
    """
    k = spec.kind
    if k in (SdeKind.OU_LOG, SdeKind.HESTON_VARIANCE):
        return x_new
    if k in (SdeKind.GGA_VOL_B, SdeKind.GGA_VOL_C):
        out = np.abs(x_new)
        return np.where(out > 0, out, _CLAMP_EPS * x_old)
    return np.where(x_new > 0, x_new, _CLAMP_EPS * x_old)


def _observe(spec: SdeSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind is SdeKind.HESTON_VARIANCE:
        return np.maximum(x, 0.0)
    return x


class Ensemble:
    """Independent paths advanced together in time.

    Parameters
    ----------
    spec : SdeSpec
    x0 : float or array
        Starting values, broadcast to ``n_paths``.
    dt : float
        Euler-Maruyama step.
    n_paths : int
    seed : int
        Master seed; path ``i`` uses the substream ``(seed, i)``.
    """

    def __init__(self, spec: SdeSpec, x0, dt: float, n_paths: int, seed: int = 0):
        if n_paths < 1:
            raise DomainError("n_paths must be at least 1")
        if not dt > 0:
            raise DomainError("dt must be positive")
        x = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,)).copy()
        if spec.positive_support and np.any(x <= 0):
            raise DomainError("starting values must be positive for this process")
        if dt * _rate(spec) > _DT_WARN:
            warnings.warn(f"dt*J = {dt * _rate(spec):g} exceeds {_DT_WARN}; discretization bias likely", stacklevel=2)
        self.spec = spec
        self.dt = dt
        self.x = x
        self.t = 0.0
        self._gens = [
            np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,))))
            for i in range(n_paths)
        ]
        self._buf = np.empty((n_paths, 0))
        self._pos = 0

    @property
    def n_paths(self) -> int:
        return self.x.size

    def _noise(self) -> np.ndarray:
        if self._pos >= self._buf.shape[1]:
            self._buf = np.stack([g.standard_normal(_NOISE_CHUNK) for g in self._gens])
            self._pos = 0
        col = self._buf[:, self._pos]
        self._pos += 1
        return col

    def advance(self, n_steps: int) -> np.ndarray:
        spec, dt = self.spec, self.dt
        sq = math.sqrt(dt)
        x = self.x
        for _ in range(n_steps):
            xi = self._noise()
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                proposal = x + drift(spec, x) * dt + diffusion(spec, x) * sq * xi
            x = _guard(spec, x, proposal)
        self.x = x
        self.t += n_steps * dt
        return self.values

    @property
    def values(self) -> np.ndarray:
        return _observe(self.spec, self.x)


def simulate(spec: SdeSpec, cfg: SimConfig) -> np.ndarray:
    """One Euler-Maruyama path recorded at ``0, dt, ..., steps*dt`` (length ``steps + 1``)."""
    ens = Ensemble(spec, cfg.x0, cfg.dt / cfg.substeps, 1, cfg.seed)
    path = np.empty(cfg.steps + 1)
    path[0] = ens.values[0]
    for i in range(1, cfg.steps + 1):
        path[i] = ens.advance(cfg.substeps)[0]
    return path


def relaxation_scale(spec: SdeSpec) -> float:
    """Analytic mean relaxation time used to size burn-in and thinning."""
    k = spec.kind
    if any(getattr(spec, name) == 0.0 for name in _NOISE if name in _FIELDS[k]):
        return 1.0 / _rate(spec)
    if k in (SdeKind.GIGA_VOL, SdeKind.GGA_VOL_A, SdeKind.GGA_VOL_B, SdeKind.GGA_VOL_C):
        return relax_mean_estimate(spec.J, spec.Sigma**2)
    if k is SdeKind.VARIANCE_IGA:
        return relax_mean_estimate(spec.J_tilde, spec.Sigma_tilde**2)
    return 1.0 / (2.0 * _rate(spec))


def stationary_samples(
    spec: SdeSpec,
    n: int,
    dt: float,
    seed: int = 0,
    n_paths: int | None = None,
    burn_in: float | None = None,
    thin: float | None = None,
    x0: float | None = None,
) -> np.ndarray:
    """Collect ``n`` post-burn-in samples from an ensemble.

    Defaults: burn-in of 10 relaxation times, thinning of one relaxation
    time, and one sample per path (``n_paths = n``).
    """
    tau = relaxation_scale(spec)
    burn_in = 10.0 * tau if burn_in is None else burn_in
    thin = tau if thin is None else thin
    n_paths = n if n_paths is None else n_paths
    per_path = math.ceil(n / n_paths)
    if x0 is None:
        x0 = mean_var(stationary_of(spec))[0]
    ens = Ensemble(spec, x0, dt, n_paths, seed)
    ens.advance(int(round(burn_in / dt)))
    draws = [ens.values.copy()]
    thin_steps = max(1, int(round(thin / dt)))
    for _ in range(per_path - 1):
        draws.append(ens.advance(thin_steps).copy())
    return np.concatenate(draws)[:n]


# ---------------------------------------------------------------------------
# Closed forms


def stationary_of(spec: SdeSpec) -> DistModel:
    """Closed-form stationary law of ``spec``.

    Raises
    ------
    DomainError
        For a noiseless spec, whose long-run state is a point mass.
    """
    k = spec.kind
    if any(getattr(spec, name) == 0.0 for name in _NOISE if name in _FIELDS[k]):
        raise DomainError("a noiseless process has no stationary density")
    if k is SdeKind.GIGA_VOL:
        r = 2.0 * spec.J / spec.Sigma**2
        g = spec.gamma
        return DistModel.giga((1.0 + r) / g, (spec.theta * r / g) ** (1.0 / g), g)
    if k is SdeKind.VARIANCE_IGA:
        r = 2.0 * spec.J_tilde / spec.Sigma_tilde**2
        return DistModel.iga(1.0 + r, spec.V_bar * r)
    if k is SdeKind.HESTON_VARIANCE:
        phi2 = spec.phi**2
        return DistModel.ga(2.0 * spec.J * spec.V_bar / phi2, phi2 / (2.0 * spec.J))
    if k in (SdeKind.GGA_VOL_A, SdeKind.GGA_VOL_B, SdeKind.GGA_VOL_C):
        r = 2.0 * spec.J / spec.Sigma**2
        g = spec.gamma
        # The three variants differ only in the 1/g^2 prefactor of the
        # stationary density, which shifts the shape by -1, 0 or +1 over gamma.
        offset = {SdeKind.GGA_VOL_A: -1.0, SdeKind.GGA_VOL_B: 0.0, SdeKind.GGA_VOL_C: 1.0}[k]
        alpha = (r + offset) / g
        if alpha <= 0:
            raise DomainError("no normalizable stationary law: 2J/Sigma^2 too small")
        return DistModel.gga(alpha, (g / (spec.theta * r)) ** (1.0 / g), g)
    sd = spec.ou_sigma / math.sqrt(2.0 * spec.ou_theta)
    if k is SdeKind.OU_LOG:
        return DistModel.normal(spec.ou_mu, sd)
    return DistModel.ln(spec.ou_mu, sd)


def theta_from_mean(mean_sigma: float, J: float, Sigma: float, gamma: float) -> float:
    """Level parameter of the GIGa SDE giving stationary mean ``mean_sigma``."""
    for v in (mean_sigma, J, Sigma, gamma):
        if not v > 0:
            raise DomainError("all arguments must be positive")
    r = 2.0 * J / Sigma**2
    log_ratio = lgamma((1.0 + r) / gamma) - lgamma(r / gamma)
    return (gamma * Sigma**2 / (2.0 * J)) * math.exp(gamma * (math.log(mean_sigma) + log_ratio))


def variance_to_vol_params(J_tilde: float, Sigma_tilde: float, V_bar: float) -> tuple[float, float, float, float]:
    """Map the variance-form IGa SDE to ``(J, theta, Sigma, gamma)`` of the volatility SDE."""
    J = J_tilde / 2.0 + Sigma_tilde**2 / 8.0
    theta = V_bar * (J_tilde / 2.0) / J
    return J, theta, Sigma_tilde / 2.0, 2.0


def mean_sigma_from_variance(J_tilde: float, Sigma_tilde: float, V_bar: float) -> float:
    """Stationary mean of ``sqrt(V)`` for the variance-form IGa SDE."""
    r = 2.0 * J_tilde / Sigma_tilde**2
    return math.sqrt(V_bar) * math.sqrt(r) * math.exp(lgamma(r + 0.5) - lgamma(r + 1.0))


def fp_stationary_pdf(
    drift_fn: Callable[[np.ndarray], np.ndarray],
    diffusion_fn: Callable[[np.ndarray], np.ndarray],
    grid,
) -> np.ndarray:
    """Stationary Fokker-Planck density ``(2/g^2) exp(int 2f/g^2)`` normalized on ``grid``.

    Raises
    ------
    NumericalError
        If the unnormalized density does not decay toward the grid ends,
        i.e. the normalization would diverge on an unbounded domain.
    """
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size < 3 or np.any(np.diff(x) <= 0):
        raise DomainError("grid must be a strictly increasing 1-d array")
    g2 = np.asarray(diffusion_fn(x), dtype=float) ** 2
    if np.any(g2 <= 0):
        raise DomainError("diffusion must be positive on the grid")
    ratio = 2.0 * np.asarray(drift_fn(x), dtype=float) / g2
    expo = integrate.cumulative_trapezoid(ratio, x, initial=0.0)
    log_p = math.log(2.0) - np.log(g2) + expo
    log_p -= log_p.max()
    p = np.exp(log_p)
    # A density whose edges carry a sizeable share of the peak is not
    # confined by the grid.
    if p[0] > 1e-2 or p[-1] > 1e-2:
        raise NumericalError("stationary density does not decay on the grid; normalization diverges")
    total = integrate.trapezoid(p, x)
    if not (total > 0 and math.isfinite(total)):
        raise NumericalError("stationary density is not normalizable on the grid")
    return p / total


# ---------------------------------------------------------------------------
# Relaxation


def relax_mean_estimate(J: float, sigma2: float, c1: float = 1.0) -> float:
    """Estimated mean relaxation time ``(2 c1 / s2) [ln(2J/s2) - psi(2J/s2)]``.

    Taken with a positive sign; for ``2J/s2 >> 1`` it tends to ``c1 / (2J)``.
    """
    if not (J > 0 and sigma2 > 0):
        raise DomainError("J and sigma2 must be positive")
    r = 2.0 * J / sigma2
    return (2.0 * c1 / sigma2) * (math.log(r) - digamma(r))


def relax_stdev_estimate(J: float, sigma2: float, c2: float = 0.25) -> float:
    """Estimated standard deviation of the relaxation time ``(c2 / s2) psi'(1 + 2J/s2)``."""
    if not (J > 0 and sigma2 > 0):
        raise DomainError("J and sigma2 must be positive")
    return (c2 / sigma2) * trigamma(1.0 + 2.0 * J / sigma2)


def relaxation_experiment(
    J: float,
    Sigma: float,
    n_paths: int = 5000,
    x0: float | str = 1.0,
    dt: float = 0.01,
    p_threshold: float = 0.1,
    seed: int = 0,
    sample_every: float | None = None,
    horizon: float | None = None,
) -> RelaxResult:
    """Time for an ensemble of IGa processes ``dX = J(1-X)dt + Sigma X dW`` to pass a KS test.

    The cross-section is tested against IGa(1 + 2J/S^2, 2J/S^2) at ``t = 0``
    and then every ``sample_every`` (default ``0.05/J``); the relaxation
    time is the first sampling time whose p-value exceeds ``p_threshold``.
    ``x0="stationary"`` starts the ensemble from the stationary law itself.

    Raises
    ------
    HorizonExceededError
        If no crossing happens before ``horizon`` (default ``200/J``); the
        error carries the p-value trace.
    """
    if not (J > 0 and Sigma > 0):
        raise DomainError("J and Sigma must be positive")
    spec = SdeSpec.giga_vol(J, 1.0, Sigma, 1.0)
    target = stationary_of(spec)
    if isinstance(x0, str):
        if x0 != "stationary":
            raise DomainError(f"unknown start {x0!r}")
        start = sample(target, n_paths, np.random.SeedSequence(seed, spawn_key=(2**31,)))
    else:
        start = float(x0)
    every = 0.05 / J if sample_every is None else sample_every
    horizon = 200.0 / J if horizon is None else horizon
    steps = max(1, int(round(every / dt)))
    ens = Ensemble(spec, start, dt, n_paths, seed)
    trace: list[tuple[float, float]] = []
    meta = {"test": "one-sample KS, asymptotic Kolmogorov with Stephens correction", "dt": dt, "x0": x0}
    while True:
        _, p = ks_test(ens.values, target)
        t = round(ens.t, 12)
        trace.append((t, p))
        if p > p_threshold:
            return RelaxResult(t, trace, n_paths, meta)
        if ens.t >= horizon:
            raise HorizonExceededError(f"p-value stayed below {p_threshold} up to t = {horizon:g}", trace)
        ens.advance(steps)
