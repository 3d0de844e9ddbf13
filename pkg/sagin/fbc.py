"""
Finite-blocklength error probability, outage probability and outage
capacity.

The decoding error of a block of ``n`` channel uses at rate ``R`` is the
normal approximation ε ≈ Q(√n(C(γ) − R)/√V(γ)), averaged over the SINR.
Averaging goes through the linearized ramp Ψ, which turns the expectation
into three evaluations of the SINR distribution::

    spec = FbcSpec(blocklength=200, rate=1.0)
    eps = epsilon_satellite_theorem1(shadowing, gamma_model, satellite_budget, spec)
"""
import dataclasses
import enum
import logging
import math
from collections.abc import Callable

import numpy as np
from scipy import special

from .channel import (
    LinkBudget, NakagamiParams, ShadowedRicianParams, capacity_dispersion,
    pathloss_free_space, pathloss_uav, shadowed_rician_cdf, shadowed_rician_ppf,
)
from .constants import DEFAULT_TOL, SERIES_CAP
from .geometry import Region
from .interference import AerialInterferers, GammaInterferenceModel, laplace_uav
from .special import DomainError, SeriesDivergenceError, hyp2f1, q_function, q_inverse, quad

LOG = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class FbcSpec:
    """
    A finite-blocklength coding operating point.
    """
    #: Channel uses per block
    blocklength: int
    #: Bits per channel use
    rate: float
    #: Target decoding error
    target_error: float = 1e-3

    def __post_init__(self):
        if int(self.blocklength) != self.blocklength or self.blocklength < 1:
            raise ValueError(f"blocklength must be a positive integer, got {self.blocklength}")
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not 0 < self.target_error < 1:
            raise ValueError(f"target error must be in (0, 1), got {self.target_error}")

    @property
    def threshold(self) -> float:
        """
        The SINR 2^R − 1 at which capacity equals the rate.
        """
        return 2 ** self.rate - 1


@dataclasses.dataclass(frozen=True)
class LinearizationConstants:
    """
    Slope and knots of the linear ramp that stands in for the Q-function.
    """
    #: Per-unit slope ϑ
    theta: float
    #: Lower knot, where the ramp reaches 1
    zeta_low: float
    #: Upper knot, where the ramp reaches 0
    zeta_up: float


def linearization_constants(spec: FbcSpec) -> LinearizationConstants:
    """
    ϑ = 1/(2π√(2^{2R} − 1)) and knots 2^R − 1 ∓ 1/(2ϑ√n), the lower one
    clamped at 0.
    """
    theta = 1 / (2 * math.pi * math.sqrt(2 ** (2 * spec.rate) - 1))
    half = 1 / (2 * theta * math.sqrt(spec.blocklength))
    center = spec.threshold
    return LinearizationConstants(theta, max(center - half, 0.0), center + half)


def psi(gamma, consts: LinearizationConstants, spec: FbcSpec):
    """
    The ramp: 1 below ζ_low, 0 above ζ_up, linear through 1/2 at 2^R − 1.
    """
    slope = consts.theta * math.sqrt(spec.blocklength)
    value = np.clip(0.5 - slope * (np.asarray(gamma, dtype=float) - spec.threshold), 0.0, 1.0)
    return value if value.ndim else float(value)


def epsilon_normal(spec: FbcSpec, sinr_samples) -> float:
    """
    Normal-approximation error averaged over SINR samples.
    """
    gamma = np.asarray(sinr_samples, dtype=float).ravel()
    if not len(gamma):
        raise ValueError("need at least one SINR sample")
    cd = capacity_dispersion(gamma)
    zero = cd.dispersion <= 0
    with np.errstate(divide='ignore', invalid='ignore'):
        arg = math.sqrt(spec.blocklength) * (cd.capacity_bits - spec.rate) / np.sqrt(cd.dispersion)
    per_sample = np.where(zero, 1.0, q_function(np.where(zero, 0.0, arg)))
    return math.fsum(per_sample) / len(per_sample)


def epsilon_linearized(cdf_of_sinr: Callable[[float], float], spec: FbcSpec, tol: float = DEFAULT_TOL) -> float:
    """
    E[Ψ(γ)] for an arbitrary SINR distribution function.

    ∫x dF over the ramp is integrated by parts, so only F itself is
    integrated numerically.
    """
    consts = linearization_constants(spec)
    zl, zu = consts.zeta_low, consts.zeta_up
    slope = consts.theta * math.sqrt(spec.blocklength)
    f_low, f_up = cdf_of_sinr(zl), cdf_of_sinr(zu)
    area = quad(cdf_of_sinr, zl, zu, tol=tol)
    first_moment = zu * f_up - zl * f_low - area
    eps = f_low + (0.5 + slope * spec.threshold) * (f_up - f_low) - slope * first_moment
    return min(max(eps, 0.0), 1.0)


def satellite_signal_scale(budget: LinkBudget) -> float:
    """
    Mean received power per unit fading gain on the satellite link.
    """
    if budget.link_distance_m is None:
        raise ValueError("satellite budget needs a link distance")
    return budget.signal_scale * float(pathloss_free_space(budget, budget.link_distance_m))


def gamma_mixture_sinr_cdf(x: float, sr: ShadowedRicianParams, gm: GammaInterferenceModel,
                           budget: LinkBudget, *, noise: bool = False, tol: float = DEFAULT_TOL,
                           method: str = 'closed-form') -> float:
    """
    CDF of the satellite SINR with Gamma interference.

    The noise-free closed form mixes regularized incomplete beta functions;
    ``method='quadrature'`` (always used with ``noise=True``) integrates the
    fading CDF over the interference quantile instead.
    """
    if x <= 0:
        return 0.0
    scale = satellite_signal_scale(budget)
    if noise or method == 'quadrature':
        sigma2 = budget.noise_power_w if noise else 0.0
        fading_tol = min(tol, 1e-10)
        return quad(lambda q: shadowed_rician_cdf(x * (gm.ppf(q) + sigma2) / scale, sr, fading_tol),
                    0.0, 1.0, tol=tol)
    elif method != 'closed-form':
        raise ValueError(f"unknown method {method!r}")

    u = sr.fade_rate * x / scale
    w = u * gm.scale / (1 + u * gm.scale)
    z = sr.delta_s / sr.fade_rate
    total = 0.0
    coeff = 1.0
    for i in range(SERIES_CAP):
        inner = special.betainc(i + 1, gm.shape, w)
        total += coeff * inner
        next_coeff = coeff * (sr.gamma_s + i) / (i + 1) * z
        ratio = (sr.gamma_s + i + 1) / (i + 2) * z
        if ratio < 1 and next_coeff * inner / (1 - ratio) <= tol * total:
            break
        coeff = next_coeff
    else:
        raise SeriesDivergenceError("SINR CDF series did not converge")
    return min(sr.alpha_s / sr.fade_rate * total, 1.0)


def gamma_mixture_sinr_pdf(x: float, sr: ShadowedRicianParams, gm: GammaInterferenceModel,
                           budget: LinkBudget) -> float:
    """
    Density of the noise-free satellite SINR with Gamma interference.
    """
    if x < 0:
        raise DomainError("SINR must be ≥ 0")
    scale = satellite_signal_scale(budget)
    k, eta = gm.shape, gm.scale
    rate = (sr.fade_rate - sr.delta_s) * eta / scale
    total = 0.0
    for l in range(sr.gamma_s):
        c_l = special.binom(sr.gamma_s - 1, l) / math.factorial(l)
        log_term = (special.gammaln(l + k + 1) - special.gammaln(k)
                    + l * math.log(sr.delta_s * eta / scale) + math.log(eta / scale))
        total += c_l * math.exp(log_term) * x ** l * (1 + rate * x) ** -(k + l + 1)
    return sr.alpha_s * total


def _incomplete_beta_series(a: float, b: float, w: float, tol: float, cap: int) -> float:
    """
    I_w(a, b) = Σ_j Γ(a+b+j)/(Γ(b)Γ(a+1+j)) w^{a+j}(1−w)^b.
    """
    if w <= 0:
        return 0.0
    term = math.exp(special.gammaln(a + b) - special.gammaln(b) - special.gammaln(a + 1)
                    + a * math.log(w) + b * math.log1p(-w))
    total = 0.0
    for j in range(cap):
        total += term
        term *= w * (a + b + j) / (a + 1 + j)
        bound_ratio = max(w * (a + b + j + 1) / (a + j + 2), w)
        if bound_ratio < 1 and term / (1 - bound_ratio) <= tol * total:
            return total
    raise SeriesDivergenceError(f"incomplete beta series needs more than {cap} terms at w={w:.6g}")


def _theorem1_cdf(x: float, sr: ShadowedRicianParams, gm: GammaInterferenceModel, scale: float,
                  tol: float, cap: int) -> float:
    if x <= 0:
        return 0.0
    u = sr.fade_rate * x / scale
    w = u * gm.scale / (1 + u * gm.scale)
    z = sr.delta_s / sr.fade_rate
    total = 0.0
    coeff = 1.0
    for i in range(cap):
        inner = _incomplete_beta_series(i + 1, gm.shape, w, tol, cap)
        total += coeff * inner
        next_coeff = coeff * (sr.gamma_s + i) / (i + 1) * z
        ratio = (sr.gamma_s + i + 1) / (i + 2) * z
        # inner is decreasing in i, so it bounds every later row
        if ratio < 1 and next_coeff * inner / (1 - ratio) <= tol * total:
            LOG.debug("Closed-form CDF at x=%.4g used %d rows", x, i + 1)
            break
        coeff = next_coeff
    else:
        raise SeriesDivergenceError(f"closed-form CDF needs more than {cap} rows")
    return sr.alpha_s / sr.fade_rate * total


def _theorem1_first_moment(zl: float, zu: float, sr: ShadowedRicianParams, gm: GammaInterferenceModel,
                           scale: float) -> float:
    """
    ∫ x f_γ(x) dx over [zl, zu], one ₂F₁ pair per Kummer term.
    """
    k, eta = gm.shape, gm.scale
    b = (sr.fade_rate - sr.delta_s) / scale
    total = 0.0
    for l in range(sr.gamma_s):
        c_l = special.binom(sr.gamma_s - 1, l) / math.factorial(l)
        coeff = (sr.alpha_s * c_l / (l + 2)
                 * math.exp(special.gammaln(l + k + 1) - special.gammaln(k)
                            + l * math.log(sr.delta_s * eta / scale) + math.log(eta / scale)))

        def antiderivative(zeta, l=l):
            if zeta <= 0:
                return 0.0
            return zeta ** (l + 2) * float(hyp2f1(l + k + 1, l + 2, l + 3, -b * eta * zeta))

        total += coeff * (antiderivative(zu) - antiderivative(zl))
    return total


def epsilon_satellite_theorem1(sr: ShadowedRicianParams, gm: GammaInterferenceModel, budget: LinkBudget,
                               spec: FbcSpec, tol: float = DEFAULT_TOL, *, cap: int = SERIES_CAP) -> float:
    """
    Closed-form error probability of the satellite link, noise neglected.

    The SINR CDF is a double series of Gamma-function ratios and the ramp's
    first moment a finite sum of ₂F₁ terms.
    """
    consts = linearization_constants(spec)
    scale = satellite_signal_scale(budget)
    zl, zu = consts.zeta_low, consts.zeta_up
    slope = consts.theta * math.sqrt(spec.blocklength)
    f_low = _theorem1_cdf(zl, sr, gm, scale, tol, cap)
    f_up = _theorem1_cdf(zu, sr, gm, scale, tol, cap)
    moment = _theorem1_first_moment(zl, zu, sr, gm, scale)
    eps = f_low + (0.5 + slope * spec.threshold) * (f_up - f_low) - slope * moment
    return min(max(eps, 0.0), 1.0)


def epsilon_satellite_asymptotic(sr: ShadowedRicianParams, gm: GammaInterferenceModel, budget: LinkBudget,
                                 spec: FbcSpec) -> float:
    """
    High-SNR error probability from the linear CDF F(x) ≈ α·E[I]·x/(𝒫φPL).
    """
    consts = linearization_constants(spec)
    zl, zu = consts.zeta_low, consts.zeta_up
    slope = consts.theta * math.sqrt(spec.blocklength)
    k_lin = sr.alpha_s * gm.mean / satellite_signal_scale(budget)
    eps = k_lin * (zl + (0.5 + slope * spec.threshold) * (zu - zl) - slope * (zu ** 2 - zl ** 2) / 2)
    return min(max(eps, 0.0), 1.0)


def alzer_eta(m: int) -> float:
    """
    η = m·(m!)^{−1/m}, the constant of the Gamma CDF bound
    P[h < t] ≈ (1 − e^{−ηt})^m.
    """
    return m * math.factorial(m) ** (-1 / m)


@dataclasses.dataclass(frozen=True)
class UavEnvironment:
    """
    Where the serving UAV is and who else is flying.
    """
    #: Co-tier interferers, none closer in 3D than the serving UAV (``tier.exclusion_slant_m``)
    interferers: AerialInterferers
    region: Region
    #: Slant distance to the serving UAV, meters
    distance_m: float
    #: Altitude of the serving UAV, meters
    altitude_m: float
    #: Fading of the serving link
    fading: NakagamiParams = NakagamiParams(2)

    @property
    def pathloss(self) -> float:
        return float(pathloss_uav(self.interferers.budget, self.distance_m, self.altitude_m,
                                  self.interferers.los))


def _alzer_series(spec: FbcSpec, budget: LinkBudget, env: UavEnvironment, tol: float, noise: bool) -> float:
    m = env.fading.m
    eta = alzer_eta(m)
    scale = budget.signal_scale * env.pathloss
    terms = []
    for l in range(m + 1):
        s = l * eta * spec.threshold / scale
        noise_factor = math.exp(-s * budget.noise_power_w) if noise else 1.0
        terms.append((-1) ** l * math.comb(m, l) * noise_factor * laplace_uav(s, env.interferers, env.region, tol))
    return min(max(math.fsum(terms), 0.0), 1.0)


def epsilon_uav(spec: FbcSpec, budget: LinkBudget, env: UavEnvironment, tol: float = DEFAULT_TOL) -> float:
    """
    Error probability of the UAV link through the interference Laplace
    transform.

    This is the outage-based surrogate: E over I of (1 − e^{−ηγ₀(I+σ²)/A})^m
    expanded binomially. :func:`epsilon_normal` on sampled SINRs is the
    reference it approximates.
    """
    return _alzer_series(spec, budget, env, tol, noise=True)


def epsilon_uav_asymptotic(spec: FbcSpec, budget: LinkBudget, env: UavEnvironment,
                           tol: float = DEFAULT_TOL) -> float:
    """
    :func:`epsilon_uav` with the noise term dropped.
    """
    return _alzer_series(spec, budget, env, tol, noise=False)


@dataclasses.dataclass(frozen=True)
class LinkState:
    """
    A serving link frozen at one interference level.
    """
    budget: LinkBudget
    #: Pathloss of the serving link, linear
    pathloss: float
    #: Aggregate interference, watts
    interference_w: float = 0.0

    @property
    def signal_scale(self) -> float:
        return self.budget.signal_scale * self.pathloss

    @property
    def impairment_w(self) -> float:
        """
        Interference plus noise.
        """
        return self.interference_w + self.budget.noise_power_w

    def gain_for(self, sinr: float) -> float:
        """
        The fading gain that produces ``sinr``.
        """
        return sinr * self.impairment_w / self.signal_scale


def outage_probability(fading: ShadowedRicianParams | NakagamiParams, spec: FbcSpec, link: LinkState, *,
                       tol: float = 1e-10) -> float:
    """
    P[γ < 2^R − 1] on a link.

    Shadowed-Rician links use the exact CDF; Nakagami links the closed form
    (1 − e^{−ηt})^m.
    """
    t = link.gain_for(spec.threshold)
    match fading:
        case ShadowedRicianParams():
            return float(shadowed_rician_cdf(t, fading, tol))
        case NakagamiParams(m=m):
            return (-math.expm1(-alzer_eta(m) * t)) ** m
        case _:
            raise TypeError(f"no outage model for {fading!r}")


def outage_probability_satellite_asymptotic(sr: ShadowedRicianParams, spec: FbcSpec, link: LinkState) -> float:
    """
    High-SNR satellite outage α·(2^R − 1)(I + σ²)/(𝒫φPL).
    """
    return min(sr.alpha_s * link.gain_for(spec.threshold), 1.0)


class CapacityMethod(enum.Enum):
    """
    How :func:`outage_capacity` inverts the outage probability.
    """
    #: Invert the exact fading CDF at ε
    Exact = 'exact'
    #: The tier's closed form (high-SNR for satellites, the Gamma bound for UAVs)
    ClosedForm = 'closed-form'
    #: Invert the CDF at 1 − ε, reading the distribution as a CCDF
    UpperQuantile = 'upper-quantile'


def outage_capacity(fading: ShadowedRicianParams | NakagamiParams, epsilon: float, link: LinkState, *,
                    method: CapacityMethod = CapacityMethod.Exact, tol: float = 1e-10) -> float:
    """
    The largest rate whose outage probability is ε, in bits per channel use.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"ε must be in (0, 1), got {epsilon}")

    def from_gain(gain):
        return math.log2(1 + link.signal_scale * gain / link.impairment_w)

    match method, fading:
        case CapacityMethod.ClosedForm, ShadowedRicianParams():
            if link.interference_w <= 0:
                raise DomainError("the high-SNR closed form needs interference")
            return math.log2(1 + epsilon * link.signal_scale / (fading.alpha_s * link.interference_w))
        case CapacityMethod.ClosedForm, NakagamiParams(m=m):
            return math.log2(1 - link.signal_scale / (alzer_eta(m) * link.impairment_w)
                             * math.log1p(-epsilon ** (1 / m)))
        case (CapacityMethod.Exact | CapacityMethod.UpperQuantile), _:
            q = epsilon if method is CapacityMethod.Exact else 1 - epsilon
            if isinstance(fading, ShadowedRicianParams):
                return from_gain(shadowed_rician_ppf(q, fading, tol))
            return from_gain(special.gammaincinv(fading.m, q) / fading.m)
        case _:
            raise TypeError(f"no outage capacity for {fading!r} by {method}")


def max_coding_rate(gamma: float, n: int, epsilon: float) -> float:
    """
    Normal-approximation rate C(γ) − √(V(γ)/n)·Q⁻¹(ε), floored at 0.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"ε must be in (0, 1), got {epsilon}")
    cd = capacity_dispersion(gamma)
    return max(cd.capacity_bits - math.sqrt(cd.dispersion / n) * float(q_inverse(epsilon)), 0.0)
