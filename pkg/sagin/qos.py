"""
Statistical delay/error QoS: ε-effective capacity and delay-bound violation.

The ε-effective capacity of a block-fading service that delivers ``n·R``
bits with probability 1 − ε and nothing otherwise is

    EC = −(1/θ)·ln(ε + (1 − ε)·E[exp(−θ·n·R)])

in bits per block. Expectations are taken over samples, over a Gamma
interference surrogate by quadrature, or (UAV links at high SINR) by a
binomial series in the interference moments.
"""
import dataclasses
import enum
import logging
import math

import numpy as np
from scipy import special

from .channel import LinkBudget, ShadowedRicianParams
from .constants import DEFAULT_TOL, LN2, SERIES_CAP
from .fbc import FbcSpec, UavEnvironment, alzer_eta, satellite_signal_scale
from .interference import (
    GammaInterferenceModel, gamma_fit, interference_cumulants, interference_moments,
    moments_from_cumulants,
)
from .special import DomainError, SeriesDivergenceError, quad

LOG = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class QosSpec:
    """
    Statistical delay requirement of a queue.
    """
    #: QoS exponent θ, per bit
    qos_exponent: float
    #: Delay bound, channel uses
    delay_bound: float = 100.0
    #: Probability the queue is non-empty
    nonempty_prob: float = 1.0
    #: Queue-length threshold, bits (reporting only)
    overflow_threshold: float | None = None

    def __post_init__(self):
        if not self.qos_exponent > 0:
            raise ValueError(f"QoS exponent must be positive, got {self.qos_exponent}")
        if not self.delay_bound > 0:
            raise ValueError(f"delay bound must be positive, got {self.delay_bound}")
        if not 0 < self.nonempty_prob <= 1:
            raise ValueError(f"non-empty probability must be in (0, 1], got {self.nonempty_prob}")


class EcMethod(enum.Enum):
    """
    How an effective capacity was evaluated.
    """
    #: Sample average over rate draws
    ExactMc = 'exact-MC'
    #: Binomial series over interference moments
    AsymptoticSeries = 'asymptotic-series'
    #: Quadrature over a Gamma interference surrogate
    Quadrature = 'quadrature'


@dataclasses.dataclass(frozen=True)
class EffectiveCapacityResult:
    #: Bits per block of n channel uses
    value: float
    #: θn/ln 2
    theta_tilde: float
    method: EcMethod


def _check(theta: float, epsilon: float):
    if not theta > 0:
        raise DomainError(f"θ must be positive, got {theta} (see effective_capacity_limit for θ → 0)")
    if not 0 <= epsilon <= 1:
        raise DomainError(f"ε must be in [0, 1], got {epsilon}")


def _from_log_expectation(theta: float, epsilon: float, log_expectation: float) -> float:
    """
    −(1/θ)·ln(ε + (1 − ε)·e^{log_expectation}), evaluated in log space.
    """
    with np.errstate(divide='ignore'):
        log_total = np.logaddexp(np.log(epsilon), np.log1p(-epsilon) + log_expectation)
    return max(-float(log_total) / theta, 0.0)


def effective_capacity(theta: float, spec: FbcSpec, rates, epsilon: float | None = None, *,
                       weights=None, method: EcMethod = EcMethod.ExactMc) -> EffectiveCapacityResult:
    """
    ε-effective capacity of a service delivering ``spec.blocklength·R``
    bits per block, R distributed as ``rates`` (optionally weighted).
    """
    epsilon = spec.target_error if epsilon is None else epsilon
    _check(theta, epsilon)
    rates = np.asarray(rates, dtype=float).ravel()
    if not len(rates):
        raise ValueError("need at least one rate")
    if weights is None:
        weights = np.full(len(rates), 1 / len(rates))
    log_e = float(special.logsumexp(-theta * spec.blocklength * rates, b=weights))
    return EffectiveCapacityResult(
        _from_log_expectation(theta, epsilon, log_e),
        theta * spec.blocklength / LN2,
        method,
    )


def effective_capacity_limit(spec: FbcSpec, rates, epsilon: float | None = None) -> float:
    """
    The θ → 0 value (1 − ε)·n·E[R].
    """
    epsilon = spec.target_error if epsilon is None else epsilon
    rates = np.asarray(rates, dtype=float).ravel()
    return (1 - epsilon) * spec.blocklength * math.fsum(rates) / len(rates)


def effective_capacity_satellite_asymptotic(theta: float, spec: FbcSpec, sr: ShadowedRicianParams,
                                            gm: GammaInterferenceModel, budget: LinkBudget,
                                            epsilon: float | None = None,
                                            tol: float = DEFAULT_TOL) -> EffectiveCapacityResult:
    """
    Satellite ε-effective capacity with the high-SNR outage capacity
    log₂(1 + ε𝒫φPL/(αI)) as the per-block rate.
    """
    epsilon = spec.target_error if epsilon is None else epsilon
    _check(theta, epsilon)
    theta_tilde = theta * spec.blocklength / LN2
    snr_term = epsilon * satellite_signal_scale(budget) / sr.alpha_s

    def integrand(q):
        interference = gm.ppf(q)
        return math.exp(-theta_tilde * math.log1p(snr_term / interference))

    expectation = quad(integrand, 0.0, 1.0, tol=tol)
    log_e = math.log(expectation) if expectation > 0 else -math.inf
    return EffectiveCapacityResult(_from_log_expectation(theta, epsilon, log_e), theta_tilde, EcMethod.Quadrature)


def uav_rate_constant(budget: LinkBudget, env: UavEnvironment, epsilon: float) -> float:
    """
    c in the UAV outage capacity R = log₂(1 + c/(I + σ²)).
    """
    m = env.fading.m
    return -budget.signal_scale * env.pathloss * math.log1p(-epsilon ** (1 / m)) / alzer_eta(m)


def uav_rates(budget: LinkBudget, env: UavEnvironment, epsilon: float, interference_w) -> np.ndarray:
    """
    Per-draw UAV outage capacities for a batch of interference levels.
    """
    c = uav_rate_constant(budget, env, epsilon)
    return np.log2(1 + c / (np.asarray(interference_w, dtype=float) + budget.noise_power_w))


def _moment_series(theta_tilde: float, env: UavEnvironment, sigma2: float, tol: float, cap: int) -> float:
    """
    Σ_ℓ C(θ̃, ℓ)·E[(I/σ²)^ℓ], stopping on a small term and giving up on
    growing ones.
    """
    model = env.interferers
    if model.tier.density == 0:
        return 1.0
    cumulants = []
    total = 1.0
    previous = math.inf
    growing = 0
    for ell in range(1, cap + 1):
        coeff = special.binom(theta_tilde, ell)
        if coeff == 0:
            LOG.debug("Binomial series terminated at ℓ=%d", ell - 1)
            return total
        cumulants += interference_cumulants(model, env.region, (ell,), unit_w=sigma2, tol=tol)
        if ell == 1 and cumulants[0] >= 1:
            raise SeriesDivergenceError(f"mean interference is {cumulants[0]:.3g}× the noise")
        term = coeff * moments_from_cumulants(cumulants)[-1]
        total += term
        if abs(term) <= tol * abs(total):
            LOG.debug("Binomial series converged after %d terms", ell)
            return total
        growing = growing + 1 if abs(term) > previous else 0
        if growing >= 3 or not math.isfinite(total):
            raise SeriesDivergenceError(f"binomial series terms grow from ℓ={ell - 2}")
        previous = abs(term)
    raise SeriesDivergenceError(f"binomial series needs more than {cap} terms")


def effective_capacity_uav(theta: float, spec: FbcSpec, budget: LinkBudget, env: UavEnvironment,
                           epsilon: float | None = None, series_cap: int = SERIES_CAP,
                           tol: float = DEFAULT_TOL) -> EffectiveCapacityResult:
    """
    High-SINR UAV ε-effective capacity by the binomial series in
    E[(I/σ²)^ℓ], falling back to :func:`effective_capacity_uav_quadrature`
    when the series diverges.
    """
    epsilon = spec.target_error if epsilon is None else epsilon
    _check(theta, epsilon)
    theta_tilde = theta * spec.blocklength / LN2
    sigma2 = budget.noise_power_w
    try:
        series = _moment_series(theta_tilde, env, sigma2, tol, series_cap)
    except SeriesDivergenceError as exc:
        LOG.warning("UAV effective capacity series diverged (%s); falling back to quadrature", exc)
        return effective_capacity_uav_quadrature(theta, spec, budget, env, epsilon, tol)
    if series <= 0:
        LOG.warning("UAV effective capacity series summed to %g; falling back to quadrature", series)
        return effective_capacity_uav_quadrature(theta, spec, budget, env, epsilon, tol)
    c = uav_rate_constant(budget, env, epsilon)
    log_e = theta_tilde * math.log(sigma2 / c) + math.log(series)
    return EffectiveCapacityResult(_from_log_expectation(theta, epsilon, log_e), theta_tilde,
                                   EcMethod.AsymptoticSeries)


def effective_capacity_uav_quadrature(theta: float, spec: FbcSpec, budget: LinkBudget, env: UavEnvironment,
                                      epsilon: float | None = None, tol: float = DEFAULT_TOL,
                                      gm: GammaInterferenceModel | None = None) -> EffectiveCapacityResult:
    """
    UAV ε-effective capacity with the full rate log₂(1 + c/(I + σ²)),
    averaged over a Gamma fit of the co-tier interference.
    """
    epsilon = spec.target_error if epsilon is None else epsilon
    _check(theta, epsilon)
    theta_tilde = theta * spec.blocklength / LN2
    c = uav_rate_constant(budget, env, epsilon)
    sigma2 = budget.noise_power_w
    if gm is None and env.interferers.tier.density > 0:
        gm = gamma_fit(interference_moments(env.interferers, env.region, tol))
    if gm is None:
        log_e = -theta_tilde * math.log1p(c / sigma2)
    else:
        expectation = quad(lambda q: math.exp(-theta_tilde * math.log1p(c / (gm.ppf(q) + sigma2))),
                           0.0, 1.0, tol=tol)
        log_e = math.log(expectation) if expectation > 0 else -math.inf
    return EffectiveCapacityResult(_from_log_expectation(theta, epsilon, log_e), theta_tilde, EcMethod.Quadrature)


def delay_violation_probability(qos: QosSpec, spec: FbcSpec) -> float:
    """
    δ·exp(−θ·R·D), with R in bits per channel use and D in channel uses.
    """
    return min(qos.nonempty_prob * math.exp(-qos.qos_exponent * spec.rate * qos.delay_bound), 1.0)


def ldp_tail_slope(violation_prob: float, overflow_threshold: float) -> float:
    """
    The exponent θ that a queue-overflow tail P[Q > Q^th] ≈ e^{−θQ^th}
    would imply.
    """
    if not (0 < violation_prob <= 1 and overflow_threshold > 0):
        raise DomainError("need 0 < P ≤ 1 and a positive threshold")
    return -math.log(violation_prob) / overflow_threshold
