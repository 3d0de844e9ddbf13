"""
Validation suites: analytic results against independent oracles.

Monte Carlo checks keep a fixed tolerance and draw at least
``analysis.oracle_trials`` trials; each comes with a second check that
fails when three standard errors do not fit inside that tolerance.
"""
import logging
import math

import numpy as np

from .channel import sample_shadowed_rician
from .fbc import (
    CapacityMethod, FbcSpec, epsilon_linearized, epsilon_normal, epsilon_satellite_theorem1,
    gamma_mixture_sinr_cdf, outage_capacity, outage_probability, outage_probability_satellite_asymptotic,
    satellite_signal_scale,
)
from .interference import gamma_fit, interference_moments
from .metrics import (
    interference_model, interference_samples, reference_uav_environment, satellite_gamma, satellite_link, uav_link,
)
from .qos import effective_capacity, effective_capacity_limit, effective_capacity_uav, \
    effective_capacity_uav_quadrature, EcMethod, uav_rates
from .registry import CheckResult, Suite
from .special import self_test
from .trials import TrialSummary, summarize

LOG = logging.getLogger(__name__)

#: Error rates the round trip is checked at
ROUNDTRIP_EPSILONS = (1e-4, 1e-3, 1e-2)

#: QoS exponents for the monotonicity check
THETA_GRID = tuple(np.geomspace(1e-4, 1.0, 9))

#: QoS exponent of the UAV capacity check at the scenario's own parameters
UAV_CHECK_THETA = 1e-3


def _relative(measured: float, expected: float) -> float:
    return abs(measured - expected) / abs(expected)


def oracle_scenario(sc):
    """
    ``sc`` with at least ``analysis.oracle_trials`` trials.
    """
    trials = max(sc.run.trials, sc.analysis.oracle_trials)
    return sc if trials == sc.run.trials else sc.with_value('run.trials', trials)


def _mc_checks(name: str, mc: TrialSummary, expected: float, tolerance: float):
    """
    A Monte Carlo estimate within ``tolerance`` (relative) of the analytic
    value, and the trial count fine enough to tell: three standard errors
    inside the same tolerance.
    """
    yield CheckResult(name, _relative(mc.mean, expected), tolerance)
    yield CheckResult(f"{name} resolved by {mc.count} trials", 3 * mc.relative_stderr, tolerance)


class LaplaceVsMc(Suite, id='laplace-vs-mc'):
    """
    Exact Laplace transforms against E[exp(−sI)] over sampled fields.
    """
    def checks(self, sc):
        osc = oracle_scenario(sc)
        for tier in ('satellite', 'uav'):
            moments, exact = interference_model(sc, tier)
            gm = gamma_fit(moments)
            samples = interference_samples(osc, tier)
            grid = np.geomspace(sc.analysis.s_min, sc.analysis.s_max, sc.analysis.s_points) / gm.mean
            for s in grid:
                yield from _mc_checks(f"{tier} L(s={s:.4g})", summarize(np.exp(-s * samples)), exact(float(s)), 0.03)
            # The Gamma surrogate is only trusted where s·E[I] is small
            s_low = float(grid[0])
            yield CheckResult(f"{tier} gamma surrogate at s={s_low:.4g}",
                              _relative(float(gm.laplace(s_low)), exact(s_low)), 0.10)


class MomentsVsMc(Suite, id='moments-vs-mc'):
    """
    Campbell mean and variance against sample moments.
    """
    def checks(self, sc):
        osc = oracle_scenario(sc)
        for tier in ('satellite', 'uav'):
            moments, _ = interference_model(sc, tier)
            samples = interference_samples(osc, tier)
            mean = summarize(samples)
            yield from _mc_checks(f"{tier} mean", mean, moments.mean_w, 0.02)
            yield from _mc_checks(f"{tier} variance", summarize((samples - mean.mean) ** 2), moments.variance_w2, 0.02)


class ClosedFormVsQuadrature(Suite, id='theorem1-vs-quadrature'):
    """
    The closed-form satellite error against direct quadrature, and the
    linearized ramp against the normal approximation.
    """
    rates = (0.5, 1.0, 1.5, 2.0, 2.5)
    blocklengths = (100, 400)

    def checks(self, sc):
        sr, gm, budget, tol = sc.shadowing(), satellite_gamma(sc), sc.satellite_budget(), sc.numerics.tol
        for rate in self.rates:
            for n in self.blocklengths:
                spec = FbcSpec(n, rate, sc.fbc.target_error)
                closed = epsilon_satellite_theorem1(sr, gm, budget, spec, tol, cap=sc.numerics.series_cap)
                direct = epsilon_linearized(
                    lambda x: gamma_mixture_sinr_cdf(x, sr, gm, budget, tol=tol, method='quadrature'), spec, tol)
                yield CheckResult(f"closed form R={rate} n={n}", abs(closed - direct), 1e-3)

        for n, limit in ((200, 0.02), (800, 0.01)):
            spec = FbcSpec(n, sc.fbc.rate, sc.fbc.target_error)
            point = 10.0
            yield CheckResult(
                f"linearization, 10 dB point mass, n={n}",
                abs(epsilon_linearized(lambda x: float(x >= point), spec, tol) - epsilon_normal(spec, [point])),
                limit,
            )
            # Gamma-mixture SINR: sampled fading over sampled Gamma interference
            rng = np.random.default_rng(sc.run.seed)
            trials = oracle_scenario(sc).run.trials
            sinr = (satellite_signal_scale(budget) * sample_shadowed_rician(sr, rng, trials)
                    / gm.sample(rng, trials))
            per_sample = summarize(epsilon_normal(spec, [g]) for g in sinr)
            linear = epsilon_linearized(lambda x: gamma_mixture_sinr_cdf(x, sr, gm, budget, tol=tol), spec, tol)
            name = f"linearization, gamma mixture, n={n}"
            yield CheckResult(name, abs(linear - per_sample.mean), limit)
            yield CheckResult(f"{name} resolved by {trials} trials", 3 * per_sample.stderr, limit)


class OutageRoundtrip(Suite, id='outage-roundtrip'):
    """
    Outage probability at the ε-outage capacity gives ε back.
    """
    def checks(self, sc):
        n = sc.fbc.blocklength
        sr, sat = sc.shadowing(), satellite_link(sc)
        nak, uav = sc.uav_fading(), uav_link(sc)
        for eps in ROUNDTRIP_EPSILONS:
            rate = outage_capacity(sr, eps, sat)
            yield CheckResult(f"satellite exact ε={eps:g}",
                              abs(outage_probability(sr, FbcSpec(n, rate, eps), sat) - eps), 1e-3)
            rate = outage_capacity(sr, eps, sat, method=CapacityMethod.ClosedForm)
            yield CheckResult(f"satellite closed form ε={eps:g}",
                              abs(outage_probability_satellite_asymptotic(sr, FbcSpec(n, rate, eps), sat) - eps), 1e-3)
            rate = outage_capacity(nak, eps, uav, method=CapacityMethod.ClosedForm)
            yield CheckResult(f"uav closed form ε={eps:g}",
                              abs(outage_probability(nak, FbcSpec(n, rate, eps), uav) - eps), 1e-3)


def series_regime(sc):
    """
    The scenario pushed into the high-SINR, noise-limited regime where the
    binomial capacity series converges.
    """
    return (sc
            .with_value('uav.tx_power_w', sc.uav.tx_power_w * 1e4)
            .with_value('uav.isolation', sc.uav.isolation * 1e-6))


class EcLimits(Suite, id='ec-limits'):
    """
    Limits and shape of the ε-effective capacity.
    """
    def checks(self, sc):
        spec, eps, tol = sc.fbc_spec(), sc.fbc.target_error, sc.numerics.tol
        env = reference_uav_environment(sc)
        budget = sc.uav_budget()
        gm = gamma_fit(interference_moments(env.interferers, env.region, tol))
        trials = oracle_scenario(sc).run.trials
        rates = uav_rates(budget, env, eps, gm.sample(np.random.default_rng(sc.run.seed), trials))
        limit = effective_capacity_limit(spec, rates, eps)

        small = effective_capacity(1e-6, spec, rates, eps).value
        yield CheckResult("θ → 0 limit", _relative(small, limit), 0.01)

        values = [effective_capacity(theta, spec, rates, eps).value for theta in THETA_GRID]
        rise = max(max(b - a, 0.0) for a, b in zip(values, values[1:]))
        yield CheckResult("nonincreasing in θ", rise, 1e-9 * values[0])

        bound = spec.blocklength * math.fsum(rates) / len(rates)
        yield CheckResult("bounded by n·E[R]", max(max(values) - bound, 0.0), 1e-9 * bound)

        theta = UAV_CHECK_THETA
        analytic = effective_capacity_uav(theta, spec, budget, env, eps, sc.numerics.series_cap, tol)
        sampled = effective_capacity(theta, spec, rates, eps)
        yield CheckResult(f"UAV at θ={theta:g} by {analytic.method.value} vs {trials} sampled rates",
                          _relative(analytic.value, sampled.value), 0.02)

        hi = series_regime(sc)
        hi_env = reference_uav_environment(hi)
        theta = sc.qos.qos_exponent
        series = effective_capacity_uav(theta, spec, hi.uav_budget(), hi_env, eps, sc.numerics.series_cap, tol)
        direct = effective_capacity_uav_quadrature(theta, spec, hi.uav_budget(), hi_env, eps, tol)
        if series.method is not EcMethod.AsymptoticSeries:
            LOG.warning("Binomial series fell back to quadrature in the series regime")
        yield CheckResult("binomial series vs quadrature", _relative(series.value, direct.value), 0.02)


class Kernel(Suite, id='kernel'):
    """
    Special functions against closed-form identities.
    """
    def checks(self, sc):
        for check in self_test():
            yield CheckResult(check.name, check.error, check.tolerance)
