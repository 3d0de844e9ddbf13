"""
The metrics the runner can evaluate, and the Monte Carlo samplers they
share with the validation suites.
"""
import dataclasses
import logging
import math
from collections.abc import Callable

import numpy as np

from .association import Tier, association_probability
from .channel import pathloss_free_space, sample_shadowed_rician
from .fbc import (
    CapacityMethod, FbcSpec, LinkState, UavEnvironment, epsilon_linearized, epsilon_normal,
    epsilon_satellite_asymptotic, epsilon_satellite_theorem1, epsilon_uav, gamma_mixture_sinr_cdf,
    max_coding_rate, outage_capacity, outage_probability, outage_probability_satellite_asymptotic,
    satellite_signal_scale,
)
from .geometry import sample_field, serving_altitudes, serving_nodes, serving_slant_m, thin_by_los
from .interference import (
    InterferenceMoments, draw_interference, gamma_fit, interference_moments, laplace_satellite, laplace_uav,
    mc_interference_split,
)
from .qos import (
    effective_capacity, effective_capacity_satellite_asymptotic, effective_capacity_uav,
    delay_violation_probability, uav_rates,
)
from .registry import Metric
from .scenario import Scenario
from .trials import run_trials, substreams, summarize

LOG = logging.getLogger(__name__)


# Shared models

def satellite_gamma(sc: Scenario):
    """
    Gamma surrogate of the ground interference on the satellite link.
    """
    return gamma_fit(interference_moments(sc.ground_interferers(), sc.region_disk(), sc.numerics.tol))


def uav_environments(sc: Scenario) -> list[tuple[UavEnvironment, float]]:
    """
    Serving-UAV quadrature nodes with normalized weights.
    """
    nodes = serving_nodes(sc.uav_tier(), sc.region_disk(), sc.analysis.serving_order)
    if not nodes:
        return []
    total = math.fsum(w for *_, w in nodes)
    return [(serving_environment(sc, math.hypot(r, z), z), w / total) for r, z, w in nodes]


def serving_environment(sc: Scenario, slant_m: float, altitude_m: float) -> UavEnvironment:
    """
    The UAV link when the nearest UAV is ``slant_m`` away at ``altitude_m``.
    """
    return UavEnvironment(sc.uav_interferers(slant_m), sc.region_disk(), slant_m, altitude_m, sc.uav_fading())


def reference_uav_environment(sc: Scenario) -> UavEnvironment:
    """
    A representative serving UAV: median nearest distance, mid (or pinned)
    reachable altitude.
    """
    tier = sc.uav_tier()
    if tier.density == 0:
        z = sc.uav.altitude_m if sc.uav.altitude_m is not None else sc.uav.altitude_min_m
        return serving_environment(sc, math.hypot(sc.region.radius_m / 2, z), z)
    d = serving_slant_m(tier, math.log(2))
    zs, wz = serving_altitudes(tier, d)
    z = float(np.dot(zs, wz))
    r = min(math.sqrt(max(d ** 2 - z ** 2, 0.0)), sc.region.radius_m)
    return serving_environment(sc, math.hypot(r, z), z)


def uav_interference_moments(sc: Scenario) -> InterferenceMoments:
    """
    Mean and variance of the interference on the UAV link, over the
    serving UAV as well as the interferers.
    """
    envs = uav_environments(sc)
    if not envs:
        return InterferenceMoments(0.0, 0.0)
    tol = sc.numerics.tol
    per_node = [(interference_moments(env.interferers, env.region, tol), w) for env, w in envs]
    mean = math.fsum(w * m.mean_w for m, w in per_node)
    second = math.fsum(w * (m.variance_w2 + m.mean_w ** 2) for m, w in per_node)
    return InterferenceMoments(mean, max(second - mean ** 2, 0.0))


def uav_laplace(s: float, sc: Scenario) -> float:
    """
    E[exp(−sI)] of the interference on the UAV link, over the serving UAV.
    """
    tol = sc.numerics.tol
    envs = uav_environments(sc)
    if not envs:
        return 1.0
    return math.fsum(w * laplace_uav(s, env.interferers, env.region, tol) for env, w in envs)


def interference_model(sc: Scenario, tier: str) -> tuple[InterferenceMoments, Callable[[float], float]]:
    """
    Moments and exact Laplace transform of the interference on one tier's
    link.
    """
    if tier == 'uav':
        return uav_interference_moments(sc), lambda s: uav_laplace(s, sc)
    model, region, tol = sc.ground_interferers(), sc.region_disk(), sc.numerics.tol
    return interference_moments(model, region, tol), lambda s: laplace_satellite(s, model, region, tol)


def satellite_link(sc: Scenario) -> LinkState:
    """
    The satellite link at mean interference.
    """
    budget = sc.satellite_budget()
    mean = interference_moments(sc.ground_interferers(), sc.region_disk(), sc.numerics.tol).mean_w
    return LinkState(budget, float(pathloss_free_space(budget, budget.link_distance_m)), mean)


def uav_link(sc: Scenario, env: UavEnvironment | None = None) -> LinkState:
    """
    The UAV link at mean interference.
    """
    env = env or reference_uav_environment(sc)
    mean = interference_moments(env.interferers, env.region, sc.numerics.tol).mean_w
    return LinkState(sc.uav_budget(), env.pathloss, mean)


# Monte Carlo samplers

def sample_satellite_sinr(sc: Scenario, seed: int) -> float:
    interf, fade = substreams(seed, 2)
    los, _ = draw_interference(sc.ground_interferers(), sc.region_disk(), interf)
    budget = sc.satellite_budget()
    gain = float(sample_shadowed_rician(sc.shadowing(), np.random.default_rng(fade)))
    return gain * satellite_signal_scale(budget) / (los + budget.noise_power_w)


@dataclasses.dataclass(frozen=True)
class UavDraw:
    """
    One sampled UAV downlink.
    """
    sinr: float
    interference_w: float
    #: Serving link; None when there is no UAV at all
    env: UavEnvironment | None


def sample_uav_link(sc: Scenario, seed: int) -> UavDraw:
    """
    Serve from the nearest UAV (in 3D) at its LOS-averaged pathloss; every
    other UAV interferes through its sampled LOS mark.

    This is the link :func:`uav_environments` integrates over.
    """
    place, marks, fade, serve = substreams(seed, 4)
    field = sample_field(sc.uav_tier(), sc.region_disk(), place)
    idx = field.nearest()
    if idx is None:
        return UavDraw(0.0, 0.0, None)
    env = serving_environment(sc, float(field.distances[idx]), float(field.altitudes[idx]))
    field = thin_by_los(field.without(idx), sc.los_params(), marks)
    budget = sc.uav_budget()
    los, nlos = mc_interference_split(field, budget, fade, env.interferers.fading)
    gain = float(env.fading.sample(np.random.default_rng(serve)))
    interference = los + nlos
    return UavDraw(budget.signal_scale * gain * env.pathloss / (interference + budget.noise_power_w),
                   interference, env)


def _mc(sc: Scenario, fn) -> list:
    return run_trials(fn, sc.run.seed, sc.run.trials, sc.run.threads)


def interference_samples(sc: Scenario, tier: str) -> np.ndarray:
    """
    Aggregate interference draws on one tier's link.

    The UAV link skips trials without any UAV and leaves the serving UAV
    out of the sum.
    """
    if tier == 'uav':
        return np.array([d.interference_w for d in _mc(sc, lambda s: sample_uav_link(sc, s)) if d.env is not None])
    region, model = sc.region_disk(), sc.ground_interferers()
    return np.array(_mc(sc, lambda seed: sum(draw_interference(model, region, seed))))


# Metrics

class AssociationProbability(Metric, id='association-prob'):
    """
    Fraction of users served by each tier.
    """
    def evaluate(self, sc):
        probs = association_probability(sc.association_config(), sc.uav_tier(), sc.region_disk(),
                                        sc.run.trials, sc.run.seed, sc.run.threads)
        p = probs[Tier.Uav]
        return [{
            'p_satellite': probs[Tier.Satellite],
            'p_uav': p,
            'stderr': math.sqrt(p * (1 - p) / sc.run.trials),
        }]


class EpsilonSatellite(Metric, id='epsilon-sat'):
    """
    Decoding error of the satellite link.
    """
    def evaluate(self, sc):
        sr, gm, budget, spec = sc.shadowing(), satellite_gamma(sc), sc.satellite_budget(), sc.fbc_spec()
        tol = sc.numerics.tol
        row = {
            'eps_theorem1': epsilon_satellite_theorem1(sr, gm, budget, spec, tol, cap=sc.numerics.series_cap),
            'eps_asymptotic': epsilon_satellite_asymptotic(sr, gm, budget, spec),
            'eps_noisy': epsilon_linearized(
                lambda x: gamma_mixture_sinr_cdf(x, sr, gm, budget, noise=True, tol=tol), spec, tol),
        }
        if sc.analysis.oracle:
            per_trial = summarize(epsilon_normal(spec, [g]) for g in _mc(sc, lambda s: sample_satellite_sinr(sc, s)))
            row |= {'eps_mc': per_trial.mean, 'stderr': per_trial.stderr}
        return [row]


class EpsilonUav(Metric, id='epsilon-uav'):
    """
    Decoding error of the UAV link, averaged over the serving UAV.
    """
    def evaluate(self, sc):
        spec, budget, tol = sc.fbc_spec(), sc.uav_budget(), sc.numerics.tol
        envs = uav_environments(sc)
        # With no UAV to connect to, every block fails
        eps = math.fsum(w * epsilon_uav(spec, budget, env, tol) for env, w in envs) if envs else 1.0
        row = {'eps': eps}
        if sc.analysis.oracle:
            served = [d for d in _mc(sc, lambda s: sample_uav_link(sc, s)) if d.env is not None]
            if served:
                outage = summarize(d.sinr < spec.threshold for d in served)
                row |= {
                    'eps_mc_outage': outage.mean,
                    'eps_mc_normal': epsilon_normal(spec, [d.sinr for d in served]),
                    'stderr': outage.stderr,
                }
            else:
                LOG.warning("No trial had a serving UAV; oracle columns report total failure")
                row |= {'eps_mc_outage': 1.0, 'eps_mc_normal': 1.0, 'stderr': 0.0}
        return [row]


class OutageProbability(Metric, id='outage-prob'):
    """
    Outage of the chosen tier at mean interference.
    """
    def evaluate(self, sc):
        spec = sc.fbc_spec()
        if sc.analysis.tier == 'satellite':
            fading, link = sc.shadowing(), satellite_link(sc)
            row = {
                'outage': outage_probability(fading, spec, link),
                'outage_asymptotic': outage_probability_satellite_asymptotic(fading, spec, link),
            }
            draw = lambda rng, n: sample_shadowed_rician(fading, rng, n)  # noqa: E731
        else:
            fading, link = sc.uav_fading(), uav_link(sc)
            row = {
                'outage': outage_probability(fading, spec, link),
                'outage_exact': float(fading.cdf(link.gain_for(spec.threshold))),
            }
            draw = fading.sample
        if sc.analysis.oracle:
            gains = draw(np.random.default_rng(sc.run.seed), sc.run.trials)
            below = summarize(gains < link.gain_for(spec.threshold))
            row |= {'outage_mc': below.mean, 'stderr': below.stderr}
        return [row]


class OutageCapacity(Metric, id='outage-capacity'):
    """
    ε-outage capacity of both tiers at mean interference.
    """
    def evaluate(self, sc):
        eps = sc.fbc.target_error
        sr, sat = sc.shadowing(), satellite_link(sc)
        nak, uav = sc.uav_fading(), uav_link(sc)
        row = {
            'capacity_satellite': outage_capacity(sr, eps, sat),
            'capacity_satellite_closed': outage_capacity(sr, eps, sat, method=CapacityMethod.ClosedForm),
            'capacity_uav': outage_capacity(nak, eps, uav),
            'capacity_uav_closed': outage_capacity(nak, eps, uav, method=CapacityMethod.ClosedForm),
        }
        if sc.analysis.oracle:
            gains = sample_shadowed_rician(sr, np.random.default_rng(sc.run.seed), sc.run.trials)
            quantile = float(np.quantile(gains, eps))
            row['capacity_satellite_mc'] = math.log2(1 + sat.signal_scale * quantile / sat.impairment_w)
        return [row]


def satellite_closed_rates(sc: Scenario, interference_w) -> np.ndarray:
    """
    High-SNR satellite outage capacities for a batch of interference levels.
    """
    sr, budget = sc.shadowing(), sc.satellite_budget()
    snr_term = sc.fbc.target_error * satellite_signal_scale(budget) / sr.alpha_s
    return np.log2(1 + snr_term / np.asarray(interference_w, dtype=float))


class EffectiveCapacity(Metric, id='effective-capacity'):
    """
    ε-effective capacity per tier, and with/without the UAV tier.
    """
    def evaluate(self, sc):
        theta, spec, eps, tol = sc.qos.qos_exponent, sc.fbc_spec(), sc.fbc.target_error, sc.numerics.tol
        env = reference_uav_environment(sc)
        sat = effective_capacity_satellite_asymptotic(
            theta, spec, sc.shadowing(), satellite_gamma(sc), sc.satellite_budget(), eps, tol)
        uav = effective_capacity_uav(theta, spec, sc.uav_budget(), env, eps, sc.numerics.series_cap, tol)
        row = {
            'ec_satellite': sat.value,
            'ec_satellite_method': sat.method.value,
            'ec_uav': uav.value,
            'ec_uav_method': uav.method.value,
        }

        def trial(seed):
            sat_seed, uav_seed = substreams(seed, 2)
            los, _ = draw_interference(sc.ground_interferers(), sc.region_disk(), sat_seed)
            r_sat = float(satellite_closed_rates(sc, los))
            draw = sample_uav_link(sc, uav_seed)
            if draw.env is None:
                return r_sat, r_sat
            r_uav = float(uav_rates(sc.uav_budget(), draw.env, eps, draw.interference_w))
            return r_sat, max(r_sat, r_uav)

        rates = np.array(_mc(sc, trial))
        without, with_uav = (effective_capacity(theta, spec, rates[:, i], eps) for i in (0, 1))
        row |= {
            'ec_without_uav': without.value,
            'ec_with_uav': with_uav.value,
            'ec_mc_method': without.method.value,
        }
        return [row]


def representative_sinr(sc: Scenario) -> float:
    """
    Mean-gain SINR of the chosen tier at mean interference.
    """
    if sc.analysis.tier == 'satellite':
        link = satellite_link(sc)
        return link.signal_scale * sc.shadowing().mean_gain / link.impairment_w
    link = uav_link(sc)
    return link.signal_scale / link.impairment_w


class DelayViolation(Metric, id='delay-violation'):
    """
    Delay-bound violation at the normal-approximation coding rate.
    """
    def evaluate(self, sc):
        spec = sc.fbc_spec()
        rate = max_coding_rate(representative_sinr(sc), spec.blocklength, spec.target_error)
        if rate > 0:
            violation = delay_violation_probability(sc.qos_spec(), FbcSpec(spec.blocklength, rate, spec.target_error))
        else:
            violation = sc.qos.nonempty_prob
        return [{'rate': rate, 'violation': violation}]


class Laplace(Metric, id='laplace'):
    """
    Interference Laplace transform of the chosen tier on a log s-grid.
    """
    def evaluate(self, sc):
        moments, exact = interference_model(sc, sc.analysis.tier)
        gm = gamma_fit(moments)
        grid = np.geomspace(sc.analysis.s_min, sc.analysis.s_max, sc.analysis.s_points) / gm.mean
        samples = interference_samples(sc, sc.analysis.tier) if sc.analysis.oracle else None
        rows = []
        for s in grid:
            row = {'s': float(s), 'laplace_exact': exact(float(s)), 'laplace_gamma': float(gm.laplace(s))}
            if samples is not None:
                mc = summarize(np.exp(-s * samples))
                row |= {'laplace_mc': mc.mean, 'stderr': mc.stderr}
            rows.append(row)
        return rows


class Moments(Metric, id='moments'):
    """
    Campbell mean and variance of both tiers' interference, with their
    Gamma fits.
    """
    def evaluate(self, sc):
        row = {}
        for tier in ('satellite', 'uav'):
            moments, _ = interference_model(sc, tier)
            gm = gamma_fit(moments)
            row |= {
                f'mean_{tier}_w': moments.mean_w,
                f'variance_{tier}_w2': moments.variance_w2,
                f'gamma_shape_{tier}': gm.shape,
                f'gamma_scale_{tier}': gm.scale,
            }
            if sc.analysis.oracle:
                mc = summarize(interference_samples(sc, tier))
                row |= {
                    f'mean_{tier}_mc': mc.mean,
                    f'variance_{tier}_mc': mc.stderr ** 2 * mc.count,
                    f'stderr_{tier}': mc.stderr,
                }
        return [row]
