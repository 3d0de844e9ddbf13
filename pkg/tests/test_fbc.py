import math

import numpy as np
import pytest
from scipy import integrate

from sagin.channel import (
    LinkBudget, NakagamiParams, ShadowedRicianParams, capacity_dispersion, pathloss_free_space, sample_shadowed_rician,
)
from sagin.fbc import (
    CapacityMethod, FbcSpec, LinkState, UavEnvironment, alzer_eta, epsilon_linearized, epsilon_normal,
    epsilon_satellite_asymptotic, epsilon_satellite_theorem1, epsilon_uav, epsilon_uav_asymptotic,
    gamma_mixture_sinr_cdf, gamma_mixture_sinr_pdf, linearization_constants, max_coding_rate,
    outage_capacity, outage_probability, outage_probability_satellite_asymptotic, psi, satellite_signal_scale,
)
from sagin.geometry import LosModelParams, Region, TierProcess
from sagin.interference import AerialInterferers, GammaInterferenceModel, draw_interference
from sagin.metrics import reference_uav_environment, sample_uav_link, uav_environments
from sagin.special import DomainError, q_inverse
from sagin.trials import run_trials, summarize

SR = ShadowedRicianParams(0.835, 0.126, 10)
SAT_BUDGET = LinkBudget(20.0, 2e9, 4e-15, 2.0, antenna_gain=5000.0, link_distance_m=500e3)
#: Close to the default ground interference on the satellite link
GM = GammaInterferenceModel(1.04, 6.0e-12)
UAV_BUDGET = LinkBudget(1.0, 28e9, 4e-13, 2.5, antenna_gain=10.0, bias=10.0, nlos_exponent=3.5,
                        excess_loss=(1.0, 0.1), isolation=1e-3)


def uav_env(density=15e-6, r=150.0, z=100.0):
    region = Region(3000)
    interferers = AerialInterferers(TierProcess(density, (10, 500), exclusion_radius_m=r), UAV_BUDGET,
                                    LosModelParams(), NakagamiParams(1))
    return UavEnvironment(interferers, region, math.hypot(r, z), z, NakagamiParams(2))


def test_fbc_spec_validation():
    with pytest.raises(ValueError):
        FbcSpec(0, 1.0)
    with pytest.raises(ValueError):
        FbcSpec(100, -1.0)
    with pytest.raises(ValueError):
        FbcSpec(100, 1.0, 1.0)
    assert FbcSpec(100, 2.0).threshold == 3.0


def test_linearization_constants():
    spec = FbcSpec(200, 1.0)
    c = linearization_constants(spec)
    assert c.theta == pytest.approx(1 / (2 * math.pi * math.sqrt(3)))
    half = 1 / (2 * c.theta * math.sqrt(200))
    assert c.zeta_low == pytest.approx(1 - half)
    assert c.zeta_up == pytest.approx(1 + half)


def test_linearization_lower_knot_clamped():
    c = linearization_constants(FbcSpec(4, 0.1))
    assert c.zeta_low == 0.0


def test_psi_ramp():
    spec = FbcSpec(200, 1.0)
    c = linearization_constants(spec)
    assert psi(spec.threshold, c, spec) == pytest.approx(0.5)
    assert psi(c.zeta_low - 0.1, c, spec) == 1.0
    assert psi(c.zeta_up + 0.1, c, spec) == 0.0
    values = psi(np.linspace(0, 3, 30), c, spec)
    assert np.all(np.diff(values) <= 0)


def test_epsilon_normal():
    spec = FbcSpec(200, 1.0)
    assert epsilon_normal(spec, [spec.threshold]) == pytest.approx(0.5)
    # Zero SINR has zero dispersion and always fails
    assert epsilon_normal(spec, [0.0]) == 1.0
    assert epsilon_normal(spec, [1000.0]) < 1e-12
    with pytest.raises(ValueError):
        epsilon_normal(spec, [])


@pytest.mark.parametrize('n, limit', [(200, 0.02), (800, 0.01)])
def test_linearization_fidelity_point_mass(n, limit):
    spec = FbcSpec(n, 1.0)
    point = 10.0
    linear = epsilon_linearized(lambda x: float(x >= point), spec)
    assert abs(linear - epsilon_normal(spec, [point])) <= limit


@pytest.mark.montecarlo
@pytest.mark.parametrize('n, limit', [(200, 0.02), (800, 0.01)])
def test_linearization_fidelity_gamma_mixture(n, limit, rng):
    spec = FbcSpec(n, 1.0)
    sinr = satellite_signal_scale(SAT_BUDGET) * sample_shadowed_rician(SR, rng, 20_000) / GM.sample(rng, 20_000)
    reference = epsilon_normal(spec, sinr)
    linear = epsilon_linearized(lambda x: gamma_mixture_sinr_cdf(x, SR, GM, SAT_BUDGET), spec)
    assert abs(linear - reference) <= limit + 0.01


@pytest.mark.parametrize('x', [0.5, 2.0, 6.0, 20.0])
def test_gamma_mixture_cdf_closed_form_matches_quadrature(x):
    closed = gamma_mixture_sinr_cdf(x, SR, GM, SAT_BUDGET)
    direct = gamma_mixture_sinr_cdf(x, SR, GM, SAT_BUDGET, method='quadrature')
    assert closed == pytest.approx(direct, rel=1e-6)


def test_gamma_mixture_pdf_integrates_to_cdf():
    lo, hi = 0.5, 4.0
    area, _ = integrate.quad(lambda x: gamma_mixture_sinr_pdf(x, SR, GM, SAT_BUDGET), lo, hi, epsrel=1e-10)
    expected = gamma_mixture_sinr_cdf(hi, SR, GM, SAT_BUDGET) - gamma_mixture_sinr_cdf(lo, SR, GM, SAT_BUDGET)
    assert area == pytest.approx(expected, rel=1e-6)


def test_noise_only_lowers_the_cdf_argument():
    assert gamma_mixture_sinr_cdf(3.0, SR, GM, SAT_BUDGET, noise=True) >= \
        gamma_mixture_sinr_cdf(3.0, SR, GM, SAT_BUDGET) - 1e-9


def test_unknown_cdf_method():
    with pytest.raises(ValueError):
        gamma_mixture_sinr_cdf(1.0, SR, GM, SAT_BUDGET, method='guess')


@pytest.mark.parametrize('rate', [0.5, 1.0, 2.5])
@pytest.mark.parametrize('n', [100, 400])
def test_theorem1_matches_quadrature(rate, n):
    spec = FbcSpec(n, rate)
    closed = epsilon_satellite_theorem1(SR, GM, SAT_BUDGET, spec)
    direct = epsilon_linearized(lambda x: gamma_mixture_sinr_cdf(x, SR, GM, SAT_BUDGET, method='quadrature'), spec)
    assert abs(closed - direct) <= 1e-3


def test_satellite_error_grows_with_rate():
    eps = [epsilon_satellite_theorem1(SR, GM, SAT_BUDGET, FbcSpec(200, r)) for r in (0.5, 1.0, 2.0, 3.0)]
    assert all(0 <= e <= 1 for e in eps)
    assert eps == sorted(eps)


def test_satellite_asymptotic_is_linear_in_interference():
    spec = FbcSpec(200, 0.5)
    low = epsilon_satellite_asymptotic(SR, GammaInterferenceModel(1.0, 1e-13), SAT_BUDGET, spec)
    high = epsilon_satellite_asymptotic(SR, GammaInterferenceModel(1.0, 2e-13), SAT_BUDGET, spec)
    assert high == pytest.approx(2 * low)


def test_alzer_eta():
    assert alzer_eta(1) == 1.0
    assert alzer_eta(2) == pytest.approx(2 / math.sqrt(2))


def test_epsilon_uav_bounds_and_noise():
    spec = FbcSpec(200, 1.0)
    env = uav_env()
    with_noise = epsilon_uav(spec, UAV_BUDGET, env)
    without = epsilon_uav_asymptotic(spec, UAV_BUDGET, env)
    assert 0 <= without <= with_noise <= 1


@pytest.mark.montecarlo
def test_epsilon_uav_matches_sampled_interference():
    spec = FbcSpec(200, 4.0)
    env = uav_env(density=5e-5)
    m = env.fading.m
    eta = alzer_eta(m)
    scale = UAV_BUDGET.signal_scale * env.pathloss
    model = env.interferers

    def outage(seed):
        interference = sum(draw_interference(model, env.region, seed))
        t = spec.threshold * (interference + UAV_BUDGET.noise_power_w) / scale
        return (-math.expm1(-eta * t)) ** m

    mc = summarize(run_trials(outage, 12, 2000))
    assert epsilon_uav(spec, UAV_BUDGET, env) == pytest.approx(mc.mean, abs=4 * mc.stderr + 1e-6)


@pytest.mark.montecarlo
@pytest.mark.scenario({'region.radius_m': 3000, 'run.trials': 3000})
@pytest.mark.parametrize('rate, altitude', [
    (1.0, None), (3.0, None), (1.0, 50.0), (1.0, 100.0), (1.0, 400.0),
])
def test_epsilon_uav_matches_sampled_links(scenario, rate, altitude):
    sc = scenario if altitude is None else scenario.with_value('uav.altitude_m', altitude)
    spec = FbcSpec(sc.fbc.blocklength, rate)
    draws = run_trials(lambda seed: sample_uav_link(sc, seed), sc.run.seed, sc.run.trials)
    outage = summarize(d.sinr < spec.threshold for d in draws if d.env is not None)
    analytic = math.fsum(w * epsilon_uav(spec, sc.uav_budget(), env) for env, w in uav_environments(sc))
    # The closed-form fading CDF is within a few percent of the exact one
    assert analytic == pytest.approx(outage.mean, abs=3 * outage.stderr + 0.05 * analytic + 1 / outage.count)


def test_reference_link_follows_pinned_altitude(scenario):
    envs = [reference_uav_environment(scenario.with_value('uav.altitude_m', a)) for a in (50, 100, 200, 400)]
    assert [env.altitude_m for env in envs] == pytest.approx([50, 100, 200, 400])
    distances = [env.distance_m for env in envs]
    assert distances == sorted(distances)
    # Interferers are never closer than the serving UAV
    assert all(env.interferers.tier.exclusion_slant_m == env.distance_m for env in envs)


def test_epsilon_uav_is_outage_at_fixed_interference():
    spec = FbcSpec(200, 2.0)
    env = uav_env(density=0.0)
    link = LinkState(UAV_BUDGET, env.pathloss, 0.0)
    assert epsilon_uav(spec, UAV_BUDGET, env) == pytest.approx(
        outage_probability(env.fading, spec, link), rel=1e-9, abs=1e-15)


def test_epsilon_nonincreasing_in_blocklength():
    blocklengths = (100, 200, 400, 800, 1600)
    eps = [epsilon_satellite_theorem1(SR, GM, SAT_BUDGET, FbcSpec(n, 1.0)) for n in blocklengths]
    assert all(b <= a + 1e-12 for a, b in zip(eps, eps[1:]))
    # A fixed SINR above the threshold only gets more reliable with longer blocks
    eps = [epsilon_normal(FbcSpec(n, 1.0), [1.5]) for n in blocklengths]
    assert eps == sorted(eps, reverse=True)


@pytest.mark.montecarlo
@pytest.mark.parametrize('rate', [1.0, 3.0])
def test_satellite_outage_matches_fading_draws(rate, rng):
    link = satellite_link()
    spec = FbcSpec(200, rate)
    below = summarize(sample_shadowed_rician(SR, rng, 1_000_000) < link.gain_for(spec.threshold))
    assert outage_probability(SR, spec, link) == pytest.approx(below.mean, abs=3 * below.stderr + 1e-6)


def satellite_link():
    return LinkState(SAT_BUDGET, float(pathloss_free_space(SAT_BUDGET, 500e3)), GM.mean)


def uav_link():
    env = uav_env()
    return LinkState(UAV_BUDGET, env.pathloss, 1e-12)


@pytest.mark.parametrize('eps', [1e-4, 1e-3, 1e-2])
def test_outage_roundtrip_exact(eps):
    link = satellite_link()
    rate = outage_capacity(SR, eps, link)
    assert outage_probability(SR, FbcSpec(200, rate, eps), link) == pytest.approx(eps, rel=1e-6)


@pytest.mark.parametrize('eps', [1e-4, 1e-3, 1e-2])
def test_outage_roundtrip_closed_forms(eps):
    sat = satellite_link()
    rate = outage_capacity(SR, eps, sat, method=CapacityMethod.ClosedForm)
    assert abs(outage_probability_satellite_asymptotic(SR, FbcSpec(200, rate, eps), sat) - eps) <= 1e-3
    fading, uav = NakagamiParams(2), uav_link()
    rate = outage_capacity(fading, eps, uav, method=CapacityMethod.ClosedForm)
    assert outage_probability(fading, FbcSpec(200, rate, eps), uav) == pytest.approx(eps, rel=1e-9)


def test_outage_capacity_upper_quantile():
    link = satellite_link()
    exact = outage_capacity(SR, 0.01, link)
    upper = outage_capacity(SR, 0.01, link, method=CapacityMethod.UpperQuantile)
    assert upper > exact
    assert upper == pytest.approx(outage_capacity(SR, 0.99, link))


def test_outage_capacity_increases_with_epsilon():
    link = satellite_link()
    rates = [outage_capacity(SR, e, link) for e in (1e-4, 1e-3, 1e-2, 1e-1)]
    assert rates == sorted(rates)


def test_outage_rayleigh_is_exact():
    link = LinkState(LinkBudget(1.0, 2e9, 1.0, 2.0), 1.0)
    spec = FbcSpec(100, 1.0)
    t = link.gain_for(spec.threshold)
    assert outage_probability(NakagamiParams(1), spec, link) == pytest.approx(1 - math.exp(-t))


def test_outage_capacity_domain():
    with pytest.raises(DomainError):
        outage_capacity(SR, 0.0, satellite_link())
    with pytest.raises(DomainError):
        outage_capacity(SR, 0.1, LinkState(SAT_BUDGET, 1e-16, 0.0), method=CapacityMethod.ClosedForm)


def test_max_coding_rate():
    cd = capacity_dispersion(3.0)
    expected = cd.capacity_bits - math.sqrt(cd.dispersion / 200) * float(q_inverse(1e-3))
    assert max_coding_rate(3.0, 200, 1e-3) == pytest.approx(expected)
    assert max_coding_rate(0.0, 200, 1e-3) == 0.0
    assert max_coding_rate(3.0, 800, 1e-3) > max_coding_rate(3.0, 200, 1e-3)
