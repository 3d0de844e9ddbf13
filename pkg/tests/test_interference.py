import dataclasses
import math

import numpy as np
import pytest

from sagin.channel import LinkBudget, NakagamiParams
from sagin.geometry import GeometryError, LosModelParams, Region, TierProcess, sample_field
from sagin.interference import (
    AerialInterferers, DegenerateInterferenceError, GroundInterferers, InfiniteMomentError, InterferenceMoments,
    draw_interference, gamma_fit, interference_cumulants, interference_moments, laplace_satellite, laplace_uav,
    laplace_uav_components, mc_interference, moments_from_cumulants, reference_power_w,
)
from sagin.special import DomainError
from sagin.trials import run_trials, summarize

REGION = Region(3000)
GROUND_BUDGET = LinkBudget(1.0, 2.4e9, 4e-15, 3.5)
UAV_BUDGET = LinkBudget(1.0, 28e9, 4e-13, 2.5, antenna_gain=10.0, bias=10.0, nlos_exponent=3.5,
                        excess_loss=(1.0, 0.1), isolation=1e-3)


def ground(density=15e-6, r0=100.0):
    return GroundInterferers(TierProcess(density, exclusion_radius_m=r0), GROUND_BUDGET)


def aerial(density=15e-6):
    return AerialInterferers(TierProcess(density, (10, 500)), UAV_BUDGET, LosModelParams(), NakagamiParams(2))


def test_ground_mean_closed_form():
    model = ground()
    beta, r0, big_r = 3.5, 100.0, REGION.radius_m
    radial = (r0 ** (2 - beta) - big_r ** (2 - beta)) / (beta - 2)
    expected = 2 * math.pi * 15e-6 * GROUND_BUDGET.wavelength_factor * radial
    assert interference_moments(model, REGION).mean_w == pytest.approx(expected, rel=1e-7)


def test_ground_variance_closed_form():
    model = ground()
    beta, r0, big_r = 3.5, 100.0, REGION.radius_m
    radial = (r0 ** (2 - 2 * beta) - big_r ** (2 - 2 * beta)) / (2 * beta - 2)
    # E[h²] = 2 for Rayleigh power
    expected = 2 * 2 * math.pi * 15e-6 * GROUND_BUDGET.wavelength_factor ** 2 * radial
    assert interference_moments(model, REGION).variance_w2 == pytest.approx(expected, rel=1e-7)


def test_ground_moments_need_exclusion_radius():
    with pytest.raises(InfiniteMomentError):
        interference_moments(ground(r0=0.0), REGION)


def test_empty_tier():
    model = ground(density=0.0)
    assert interference_moments(model, REGION) == InterferenceMoments(0.0, 0.0)
    assert laplace_satellite(1e12, model, REGION) == 1.0


def test_moments_from_cumulants():
    k1, k2, k3 = 2.0, 0.5, 0.25
    mu = moments_from_cumulants([k1, k2, k3])
    assert mu[0] == 1.0
    assert mu[1] == pytest.approx(k1)
    assert mu[2] == pytest.approx(k2 + k1 ** 2)
    assert mu[3] == pytest.approx(k3 + 3 * k2 * k1 + k1 ** 3)


def test_cumulant_units():
    model = aerial()
    k1, k2 = interference_cumulants(model, REGION, (1, 2))
    u1, u2 = interference_cumulants(model, REGION, (1, 2), unit_w=1e-12)
    assert u1 == pytest.approx(k1 / 1e-12, rel=1e-9)
    assert u2 == pytest.approx(k2 / 1e-24, rel=1e-9)


@pytest.mark.parametrize('isolation', [1.0, 1e-9])
def test_moments_scale_with_power(isolation):
    loud = aerial()
    budget = dataclasses.replace(UAV_BUDGET, isolation=UAV_BUDGET.isolation * isolation)
    quiet = dataclasses.replace(loud, budget=budget)
    a, b = interference_moments(loud, REGION), interference_moments(quiet, REGION)
    assert b.mean_w == pytest.approx(a.mean_w * isolation, rel=1e-9)
    assert b.variance_w2 == pytest.approx(a.variance_w2 * isolation ** 2, rel=1e-9)


def test_reference_power_is_the_closest_los_point():
    model = dataclasses.replace(aerial(), tier=TierProcess(15e-6, (10, 500), exclusion_slant_m=200))
    ref = reference_power_w(model, REGION)
    strongest = max(power for _, power in model.branches(model.tier.inner_radius(10.0, REGION), 10.0))
    assert ref == pytest.approx(strongest, rel=1e-3)
    assert ref > max(power for _, power in model.branches(400.0, 100.0))


def test_laplace_at_zero_and_domain():
    assert laplace_satellite(0.0, ground(), REGION) == 1.0
    with pytest.raises(DomainError):
        laplace_satellite(-1.0, ground(), REGION)


def test_laplace_small_s_expansion():
    model = ground()
    m = interference_moments(model, REGION)
    s = 1e-3 / m.mean_w
    # log ℒ(s) = −sκ₁ + s²κ₂/2 − …
    assert math.log(laplace_satellite(s, model, REGION)) == pytest.approx(
        -s * m.mean_w + s ** 2 * m.variance_w2 / 2, rel=1e-4)


def test_laplace_is_completely_monotone_start():
    model = aerial()
    mean = interference_moments(model, REGION).mean_w
    values = [laplace_uav(s / mean, model, REGION) for s in (0.1, 1.0, 10.0)]
    assert 1 > values[0] > values[1] > values[2] > 0


def test_laplace_uav_factors():
    model = aerial()
    s = 1 / interference_moments(model, REGION).mean_w
    los, nlos = laplace_uav_components(s, model, REGION)
    assert laplace_uav(s, model, REGION) == pytest.approx(los * nlos)
    assert 0 < los < 1 and 0 < nlos < 1


@pytest.mark.parametrize('model', [ground(), aerial()], ids=['ground', 'aerial'])
def test_laplace_is_log_convex(model):
    exact = laplace_satellite if isinstance(model, GroundInterferers) else laplace_uav
    mean = interference_moments(model, REGION).mean_w
    s = np.linspace(0.2, 5.0, 9) / mean
    log_l = np.log([exact(float(x), model, REGION) for x in s])
    assert np.all(np.diff(log_l) < 0)
    assert np.all(log_l[:-2] - 2 * log_l[1:-1] + log_l[2:] > 0)


def test_laplace_decreases_with_bias_and_density():
    base = ground()
    s = 1 / interference_moments(base, REGION).mean_w
    biased = dataclasses.replace(base, budget=dataclasses.replace(GROUND_BUDGET, bias=2.0))
    assert laplace_satellite(s, biased, REGION) < laplace_satellite(s, base, REGION)
    assert laplace_satellite(s, ground(density=30e-6), REGION) < laplace_satellite(s, base, REGION)

    base = aerial()
    s = 1 / interference_moments(base, REGION).mean_w
    biased = dataclasses.replace(base, budget=dataclasses.replace(UAV_BUDGET, bias=20.0))
    denser = dataclasses.replace(base, tier=TierProcess(30e-6, (10, 500)))
    assert laplace_uav(s, biased, REGION) < laplace_uav(s, base, REGION)
    assert laplace_uav(s, denser, REGION) < laplace_uav(s, base, REGION)


def test_gamma_fit_matches_moments():
    m = InterferenceMoments(2e-12, 3e-24)
    gm = gamma_fit(m)
    assert gm.mean == pytest.approx(2e-12)
    assert gm.variance == pytest.approx(3e-24)
    assert gm.moment(2) == pytest.approx(3e-24 + 4e-24)
    assert float(gm.cdf(gm.ppf(0.3))) == pytest.approx(0.3)


def test_gamma_fit_degenerate():
    with pytest.raises(DegenerateInterferenceError):
        gamma_fit(InterferenceMoments(0.0, 0.0))


def test_unthinned_aerial_field_is_rejected():
    field = sample_field(TierProcess(1e-4, (10, 500)), REGION, seed=1)
    with pytest.raises(GeometryError):
        mc_interference(field, UAV_BUDGET, seed=2)


def test_ground_field_interference_without_fading():
    field = sample_field(TierProcess(1e-5, exclusion_radius_m=100), REGION, seed=4)
    total = mc_interference(field, GROUND_BUDGET, seed=0, fading=None)
    expected = math.fsum(GROUND_BUDGET.wavelength_factor * field.horizontal_distances ** -3.5)
    assert total == pytest.approx(expected)


@pytest.mark.montecarlo
@pytest.mark.parametrize('model', [ground(), aerial()], ids=['ground', 'aerial'])
def test_laplace_matches_monte_carlo(model):
    samples = np.array(run_trials(lambda seed: sum(draw_interference(model, REGION, seed)), 8, 2000))
    mean = interference_moments(model, REGION).mean_w
    for s in (0.3 / mean, 1 / mean, 3 / mean):
        mc = summarize(np.exp(-s * samples))
        exact = laplace_satellite(s, model, REGION) if isinstance(model, GroundInterferers) \
            else laplace_uav(s, model, REGION)
        assert mc.mean == pytest.approx(exact, abs=4 * mc.stderr + 1e-3)


@pytest.mark.montecarlo
def test_ground_mean_matches_monte_carlo():
    model = ground()
    samples = run_trials(lambda seed: sum(draw_interference(model, REGION, seed)), 3, 2000)
    mc = summarize(samples)
    assert mc.mean == pytest.approx(interference_moments(model, REGION).mean_w, abs=4 * mc.stderr)


@pytest.mark.montecarlo
def test_slant_exclusion_moments_match_monte_carlo():
    model = dataclasses.replace(aerial(), tier=TierProcess(15e-6, (10, 500), exclusion_slant_m=250))
    samples = run_trials(lambda seed: sum(draw_interference(model, REGION, seed)), 5, 3000)
    mc = summarize(samples)
    assert mc.mean == pytest.approx(interference_moments(model, REGION).mean_w, abs=4 * mc.stderr)
