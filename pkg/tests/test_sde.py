import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gigavol.diag import ks_test
from gigavol.dist import DistModel, Kind, mean_var, pdf
from gigavol.errors import DomainError, HorizonExceededError, NumericalError
from gigavol.sde import (
    Ensemble,
    SdeKind,
    SdeSpec,
    SimConfig,
    diffusion,
    drift,
    fp_stationary_pdf,
    mean_sigma_from_variance,
    relax_mean_estimate,
    relax_stdev_estimate,
    relaxation_experiment,
    simulate,
    stationary_of,
    stationary_samples,
    theta_from_mean,
    variance_to_vol_params,
)

S01 = math.sqrt(0.1)
IGA_PROCESS = SdeSpec.giga_vol(0.1, 1.0, S01, 1.0)


def _params_close(m, ref, tol):
    assert m.kind == ref.kind
    for k, v in ref.params.items():
        assert getattr(m, k) == pytest.approx(v, abs=tol)


# -- stationary laws --------------------------------------------------------------


def test_stationary_of_examples():
    _params_close(stationary_of(IGA_PROCESS), DistModel.giga(3.0, 2.0, 1.0), 1e-12)
    _params_close(stationary_of(SdeSpec.variance_iga(1.0, 2.0, 1.0)), DistModel.iga(1.5, 0.5), 1e-12)


def test_stationary_of_other_kinds():
    _params_close(stationary_of(SdeSpec.heston_variance(2.0, 0.5, 0.4)), DistModel.ga(2 * 2 * 0.5 / 0.16, 0.16 / 4), 1e-12)
    _params_close(stationary_of(SdeSpec.ou_log(2.0, -0.3, 0.4)), DistModel.normal(-0.3, 0.2), 1e-14)
    _params_close(stationary_of(SdeSpec.ln_vol(2.0, -0.3, 0.4)), DistModel.ln(-0.3, 0.2), 1e-14)
    r, g = 2 * 1.0 / 0.25, 1.5
    beta = (g / (2.0 * r)) ** (1 / g)
    for variant, offset in (("A", -1), ("B", 0), ("C", 1)):
        m = stationary_of(SdeSpec.gga_vol(variant, 1.0, 2.0, 0.5, g))
        _params_close(m, DistModel.gga((r + offset) / g, beta, g), 1e-12)


def test_stationary_of_noiseless():
    with pytest.raises(DomainError):
        stationary_of(SdeSpec.giga_vol(0.1, 1.0, 0.0, 1.0))


def test_gga_a_requires_enough_reversion():
    with pytest.raises(DomainError):
        stationary_of(SdeSpec.gga_vol("A", 0.1, 1.0, 1.0, 1.0))


# -- parameter maps ------------------------------------------------------------------


def test_theta_from_mean():
    for J, S in ((0.1, 0.3), (2.0, 1.1)):
        assert theta_from_mean(1.7, J, S, 1.0) == pytest.approx(1.7, rel=1e-12)
    # 2J/S^2 = 1, gamma = 2, mean sqrt(pi): the bracket is 1, leaving gamma S^2 / 2J = 2.
    assert theta_from_mean(math.sqrt(math.pi), 0.5, 1.0, 2.0) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("J, S, g", [(0.1, S01, 1.0), (1.0, 0.5, 2.0), (0.3, 0.2, 0.7), (2.0, 1.0, 3.0)])
def test_theta_round_trip(J, S, g):
    theta = theta_from_mean(2.5, J, S, g)
    assert mean_var(stationary_of(SdeSpec.giga_vol(J, theta, S, g)))[0] == pytest.approx(2.5, abs=1e-10)


def test_variance_to_vol_params():
    assert variance_to_vol_params(1.0, 2.0, 1.0) == pytest.approx((1.0, 0.5, 1.0, 2.0), abs=1e-15)
    J, theta, _, _ = variance_to_vol_params(3.0, 1e-7, 2.0)
    assert J == pytest.approx(1.5, rel=1e-12) and theta == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("Jt, St, V", [(1.0, 2.0, 1.0), (0.5, 0.7, 3.0), (2.0, 1.0, 0.2)])
def test_variance_map_matches_square_root_rule(Jt, St, V):
    r = 2 * Jt / St**2
    m = stationary_of(SdeSpec.giga_vol(*variance_to_vol_params(Jt, St, V)))
    _params_close(m, DistModel.giga(1 + r, math.sqrt(V * r), 2.0), 1e-10)
    assert mean_sigma_from_variance(Jt, St, V) == pytest.approx(mean_var(m)[0], abs=1e-10)


def test_mean_sigma_from_variance():
    assert mean_sigma_from_variance(1.0, math.sqrt(2.0), 1.0) == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-10)
    r = np.geomspace(0.05, 1e4, 60)
    vals = [mean_sigma_from_variance(x / 2, 1.0, 4.0) for x in r]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(2.0, rel=1e-4)


# -- Fokker-Planck --------------------------------------------------------------------


def test_fp_matches_iga():
    grid = np.linspace(0.01, 300, 300_000)
    p = fp_stationary_pdf(lambda x: drift(IGA_PROCESS, x), lambda x: diffusion(IGA_PROCESS, x), grid)
    inner = (grid >= 0.1) & (grid <= 10)
    ref = pdf(DistModel.iga(3, 2), grid[inner])
    assert np.max(np.abs(p[inner] / ref - 1)) < 0.01


def test_fp_matches_heston():
    spec = SdeSpec.heston_variance(1.5, 0.3, 0.5)
    grid = np.linspace(1e-6, 5, 200_000)
    p = fp_stationary_pdf(lambda x: drift(spec, x), lambda x: diffusion(spec, x), grid)
    ref = pdf(stationary_of(spec), grid)
    inner = (grid > 0.05) & (grid < 1.5)
    assert np.max(np.abs(p[inner] - ref[inner])) < 0.01 * ref.max()


@pytest.mark.parametrize("a", [0.5, 1.0, -0.7])
def test_fp_power_transform(a):
    # (f, g) -> (f s^2a, g s^a) keeps the exponent and rescales the 2/g^2
    # prefactor by s^-2a, so the two normalized densities differ by that factor.
    grid = np.linspace(0.05, 60, 60_000)
    f = lambda x: drift(IGA_PROCESS, x)  # noqa: E731
    g = lambda x: diffusion(IGA_PROCESS, x)  # noqa: E731
    p0 = fp_stationary_pdf(f, g, grid)
    p1 = fp_stationary_pdf(lambda x: f(x) * x ** (2 * a), lambda x: g(x) * x**a, grid)
    core = (p0 > 1e-8 * p0.max()) & (p1 > 1e-8 * p1.max())
    resid = np.log(p1[core]) - np.log(p0[core]) + 2 * a * np.log(grid[core])
    assert np.ptp(resid) < 1e-6


def test_fp_non_integrable():
    with pytest.raises(NumericalError):
        fp_stationary_pdf(lambda x: 0 * x, lambda x: np.ones_like(x), np.linspace(0.1, 10, 100))
    with pytest.raises(DomainError):
        fp_stationary_pdf(lambda x: -x, lambda x: 0 * x, np.linspace(0.1, 10, 100))


# -- simulation --------------------------------------------------------------------------


def test_noiseless_relaxation():
    spec = SdeSpec.giga_vol(0.1, 1.0, 0.0, 1.0)
    for x0 in (0.2, 5.0):
        path = simulate(spec, SimConfig(0.01, int(20 / 0.1 / 0.01), x0, 0))
        assert abs(path[-1] - 1.0) < 1e-3
        d = np.diff(path)
        assert np.all(d >= 0) if x0 < 1 else np.all(d <= 0)


def test_simulate_shape_and_determinism():
    cfg = SimConfig(0.01, 500, 1.3, 42)
    a, b = simulate(IGA_PROCESS, cfg), simulate(IGA_PROCESS, cfg)
    assert a.shape == (501,) and a[0] == 1.3
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate(IGA_PROCESS, SimConfig(0.01, 500, 1.3, 43)))


def test_substreams_independent_of_ensemble_size():
    e3 = Ensemble(IGA_PROCESS, 1.0, 0.01, 3, seed=9)
    e7 = Ensemble(IGA_PROCESS, 1.0, 0.01, 7, seed=9)
    v3, v7 = e3.advance(700), e7.advance(700)
    np.testing.assert_array_equal(v3, v7[:3])
    assert len(set(v7.tolist())) == 7
    np.testing.assert_array_equal(simulate(IGA_PROCESS, SimConfig(0.01, 700, 1.0, 9))[-1], v3[0])


def test_invalid_start():
    with pytest.raises(DomainError):
        simulate(IGA_PROCESS, SimConfig(0.01, 10, -1.0, 0))
    with pytest.raises(DomainError):
        SimConfig(0.0, 10)
    with pytest.raises(DomainError):
        SimConfig(0.1, 10, scheme="Milstein")


def test_dt_warning():
    with pytest.warns(UserWarning):
        simulate(IGA_PROCESS, SimConfig(2.0, 5, 1.0, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        simulate(IGA_PROCESS, SimConfig(1.0, 5, 1.0, 0))


def test_positivity_guard():
    harsh = SdeSpec.giga_vol(0.1, 1.0, 3.0, 1.0)
    path = simulate(harsh, SimConfig(0.05, 5_000, 1.0, 1))
    assert np.all(path > 0)
    heston = SdeSpec.heston_variance(0.5, 0.05, 1.0)
    assert np.all(simulate(heston, SimConfig(0.01, 5_000, 0.05, 2)) >= 0)
    for variant in "BC":
        spec = SdeSpec.gga_vol(variant, 1.0, 1.0, 1.5, 1.0)
        assert np.all(simulate(spec, SimConfig(0.01, 5_000, 1.0, 3)) > 0)


def test_long_single_path_stationary():
    path = simulate(IGA_PROCESS, SimConfig(0.01, 500_000, 1.0, 3))
    burn = int(round(10 * relax_mean_estimate(0.1, 0.1) / 0.01))
    thinned = path[burn::1_000]
    assert ks_test(thinned, DistModel.iga(3, 2))[1] > 0.01


STEADY_CASES = [
    (SdeSpec.giga_vol(1.0, 1.0, 0.8, 1.7), 0.002),
    (SdeSpec.variance_iga(1.0, 0.9, 1.5), 0.002),
    (SdeSpec.heston_variance(1.0, 0.5, 0.6), 0.002),
    (SdeSpec.gga_vol("A", 1.0, 1.0, 0.5, 1.0), 0.002),
    (SdeSpec.gga_vol("B", 1.0, 1.0, 0.5, 2.0), 0.002),
    (SdeSpec.gga_vol("C", 1.0, 1.0, 0.5, 2.0), 0.002),
    (SdeSpec.ou_log(1.0, 0.3, 0.5), 0.002),
    (SdeSpec.ln_vol(1.0, 0.3, 0.5), 0.002),
]


@pytest.mark.parametrize("spec, dt", STEADY_CASES, ids=lambda v: getattr(v, "kind", SdeKind.OU_LOG).value if hasattr(v, "kind") else str(v))
def test_steady_state_every_kind(spec, dt):
    x = stationary_samples(spec, 10_000, dt, seed=5, n_paths=2_000)
    assert ks_test(x, stationary_of(spec))[1] > 0.01


def test_square_root_consistency():
    var_spec = SdeSpec.variance_iga(1.0, 1.0, 1.0)
    v = stationary_samples(var_spec, 5_000, 0.002, seed=6)
    vol = stationary_of(SdeSpec.giga_vol(*variance_to_vol_params(1.0, 1.0, 1.0)))
    assert ks_test(np.sqrt(v), vol)[1] > 0.01


def test_ln_limit_of_giga_sde():
    g, ou_theta, ou_sigma = 0.05, 1.0, 0.3
    J = ou_theta / g
    giga = stationary_of(SdeSpec.giga_vol(J, theta_from_mean(1.0, J, ou_sigma, g), ou_sigma, g))
    sd = ou_sigma / math.sqrt(2 * ou_theta)
    ln = stationary_of(SdeSpec.ln_vol(ou_theta, -sd**2 / 2, ou_sigma))
    x = np.linspace(0.01, 5, 20_000)
    p, q = pdf(giga, x), pdf(ln, x)
    assert np.max(np.abs(p - q)) < 0.02 * q.max()


def test_time_step_robustness():
    n = 4_000
    target = DistModel.iga(3, 2)
    d1 = ks_test(stationary_samples(IGA_PROCESS, n, 0.01, seed=7), target)[0]
    d2 = ks_test(stationary_samples(IGA_PROCESS, n, 0.005, seed=7), target)[0]
    assert abs(d1 - d2) < 2 / math.sqrt(n)


# -- relaxation -------------------------------------------------------------------------


def test_relax_estimates():
    assert relax_mean_estimate(0.1, 0.1) == pytest.approx(5.4072568, abs=1e-6)
    assert relax_stdev_estimate(0.1, 0.1) == pytest.approx(0.9873352, abs=1e-6)
    assert relax_mean_estimate(0.1, 0.1, c1=0.0) == 0.0
    assert relax_mean_estimate(5.0, 0.1) == pytest.approx(1 / 10.0, rel=0.02)
    assert relax_stdev_estimate(0.1, 0.1, c2=0.5) == pytest.approx(2 * relax_stdev_estimate(0.1, 0.1), rel=1e-14)
    with pytest.raises(DomainError):
        relax_mean_estimate(0.0, 0.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 50), st.floats(0.01, 50))
def test_relax_mean_positive(J, s2):
    assert relax_mean_estimate(J, s2) > 0
    assert relax_stdev_estimate(J, s2) > 0


def test_relaxation_from_stationary_start():
    res = relaxation_experiment(0.1, S01, n_paths=2_000, x0="stationary", seed=3)
    assert res.relax_time == 0.0
    assert res.p_value_trace[0][0] == 0.0 and res.p_value_trace[0][1] > 0.1


def test_relaxation_trace_and_json():
    res = relaxation_experiment(0.1, S01, n_paths=300, x0=1.0, seed=1)
    times = [t for t, _ in res.p_value_trace]
    assert times[0] == 0.0 and times[-1] == res.relax_time
    assert np.allclose(np.diff(times), 0.5)
    assert all(p <= 0.1 for _, p in res.p_value_trace[:-1]) and res.p_value_trace[-1][1] > 0.1
    d = json.loads(json.dumps(res.to_dict()))
    assert d["n_paths"] == 300 and "KS" in d["meta"]["test"]


def test_relaxation_horizon():
    with pytest.raises(HorizonExceededError) as info:
        relaxation_experiment(0.1, S01, n_paths=2_000, x0=20.0, seed=1, horizon=1.0)
    assert len(info.value.trace) >= 2


def test_relaxation_rejects_bad_start():
    with pytest.raises(DomainError):
        relaxation_experiment(0.1, S01, n_paths=100, x0="equilibrium")
