"""
Fading laws, pathloss, SINR and the capacity/dispersion pair.

Both fading families are expressed as *power* gains. Nakagami-m gains are
Gamma(m, 1/m) so that transmit power is the only power knob.
"""
import dataclasses
import logging
import math

import numpy as np
from scipy import optimize, special

from .constants import CHANNEL_SERIES_CAP, SPEED_OF_LIGHT
from .geometry import GeometryError, LosModelParams, los_probability
from .special import DomainError, SeriesDivergenceError, kummer_polynomial

LOG = logging.getLogger(__name__)


def db_to_linear(db):
    """
    Convert decibels to a linear ratio.
    """
    return 10 ** (np.asarray(db, dtype=float) / 10)


def dbm_to_watts(dbm):
    return db_to_linear(dbm) / 1000


@dataclasses.dataclass(frozen=True)
class ShadowedRicianParams:
    """
    Shadowed-Rician fading of a land-mobile satellite link.

    The LOS component is Nakagami-shadowed with average power ``omega_s``
    and shape ``gamma_s``; the multipath has average power ``2·b_s``.
    """
    #: Average LOS power (Ω)
    omega_s: float
    #: Half the average multipath power (b)
    b_s: float
    #: Nakagami shape of the LOS shadowing
    gamma_s: int

    def __post_init__(self):
        if not (self.omega_s > 0 and self.b_s > 0):
            raise DomainError(f"Ω and b must be positive, got {self.omega_s}, {self.b_s}")
        if int(self.gamma_s) != self.gamma_s or self.gamma_s < 1:
            raise DomainError(f"shadowing shape must be an integer ≥ 1, got {self.gamma_s}")

    @property
    def alpha_s(self) -> float:
        two_b = 2 * self.b_s
        return (two_b * self.gamma_s / (two_b * self.gamma_s + self.omega_s)) ** self.gamma_s / two_b

    @property
    def fade_rate(self) -> float:
        """
        The exponential rate 1/(2b) of the density (not a pathloss exponent).
        """
        return 1 / (2 * self.b_s)

    @property
    def delta_s(self) -> float:
        two_b = 2 * self.b_s
        return self.omega_s / (two_b * (two_b * self.gamma_s + self.omega_s))

    @property
    def mean_gain(self) -> float:
        return 2 * self.b_s + self.omega_s


@dataclasses.dataclass(frozen=True)
class NakagamiParams:
    """
    Nakagami-m fading with integer m, unit mean power.
    """
    #: Shape
    m: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"Nakagami shape must be an integer ≥ 1, got {self.m}")

    def moment(self, order: int) -> float:
        """
        E[h^order] of the unit-mean power gain.
        """
        return special.poch(self.m, order) / self.m ** order

    def cdf(self, x):
        return special.gammainc(self.m, self.m * np.asarray(x, dtype=float))

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.m, 1 / self.m, size)


@dataclasses.dataclass(frozen=True)
class LinkBudget:
    """
    Everything about one tier's transmitters that isn't geometry or fading.

    For aerial tiers ``pathloss_exponent`` is the LOS exponent and
    ``nlos_exponent`` the NLOS one.
    """
    #: Transmit power, watts
    tx_power_w: float
    #: Carrier frequency, Hz
    carrier_hz: float
    #: Noise power at the receiver, watts
    noise_power_w: float
    #: Pathloss exponent (LOS exponent for aerial tiers)
    pathloss_exponent: float
    #: Combined antenna gain, linear
    antenna_gain: float = 1.0
    #: Association bias, linear
    bias: float = 1.0
    #: NLOS pathloss exponent, aerial tiers only
    nlos_exponent: float | None = None
    #: Excess loss (LOS, NLOS), aerial tiers only
    excess_loss: tuple[float, float] = (1.0, 1.0)
    #: Fixed serving-link distance (eg, satellite altitude), meters
    link_distance_m: float | None = None
    #: Gain of interfering links relative to ``antenna_gain`` (sectored antennas)
    isolation: float = 1.0

    def __post_init__(self):
        for name in ('tx_power_w', 'carrier_hz', 'noise_power_w', 'antenna_gain', 'bias'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for exp in (self.pathloss_exponent, self.nlos_exponent):
            if exp is not None and not 2 <= exp <= 6:
                raise ValueError(f"pathloss exponent {exp} outside [2, 6]")
        if not all(xi > 0 for xi in self.excess_loss):
            raise ValueError(f"excess losses must be positive, got {self.excess_loss}")
        if not 0 < self.isolation <= 1:
            raise ValueError(f"isolation must be in (0, 1], got {self.isolation}")

    @property
    def wavelength_factor(self) -> float:
        """
        (c / 4πf)², the free-space constant.
        """
        return (SPEED_OF_LIGHT / (4 * math.pi * self.carrier_hz)) ** 2

    @property
    def signal_scale(self) -> float:
        """
        Bias·gain·power on the serving link.
        """
        return self.bias * self.antenna_gain * self.tx_power_w

    @property
    def interference_scale(self) -> float:
        """
        Bias·gain·power on an interfering link.
        """
        return self.signal_scale * self.isolation


@dataclasses.dataclass(frozen=True)
class CapacityDispersion:
    """
    The capacity/dispersion pair of an AWGN channel at a given SINR.
    """
    #: Bits per channel use
    capacity_bits: float
    #: Dimensionless, in [0, 1)
    dispersion: float


def shadowed_rician_pdf(x, p: ShadowedRicianParams):
    """
    Density of the shadowed-Rician power gain.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("fading gain must be ≥ 0")
    # α e^{-βx} ₁F₁(m; 1; δx) with the e^{δx} of Kummer's form folded in
    return p.alpha_s * np.exp(-(p.fade_rate - p.delta_s) * x) * kummer_polynomial(p.gamma_s, p.delta_s * x)


def shadowed_rician_cdf(x, p: ShadowedRicianParams, tol: float = 1e-10, *,
                        cap: int = CHANNEL_SERIES_CAP):
    """
    Distribution function of the shadowed-Rician power gain.

    Sums (α/β) Σ_i (m)_i/i! (δ/β)^i P(i+1, βx), P the regularized lower
    incomplete gamma function, until the geometric tail bound drops below
    ``tol`` relative to the partial sum.
    """
    if not 0 < tol < 1e-3:
        raise ValueError(f"tolerance must be in (0, 1e-3), got {tol}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("fading gain must be ≥ 0")
    beta = p.fade_rate
    z = p.delta_s / beta  # < 1 for every valid parameter set
    scale = p.alpha_s / beta
    total = np.zeros_like(x)
    coeff = 1.0
    for i in range(cap):
        inc = special.gammainc(i + 1, beta * x)
        total += coeff * inc
        next_coeff = coeff * (p.gamma_s + i) / (i + 1) * z
        ratio = (p.gamma_s + i + 1) / (i + 2) * z
        if ratio < 1:
            # P(i+1, ·) is decreasing in i, so it bounds every later term
            tail = next_coeff * special.gammainc(i + 2, beta * x) / (1 - ratio)
            if np.all(tail <= tol * total):
                LOG.debug("shadowed-Rician CDF converged after %d terms", i + 1)
                break
        coeff = next_coeff
    else:
        raise SeriesDivergenceError(f"shadowed-Rician CDF needs more than {cap} terms")
    result = np.minimum(scale * total, 1.0)
    return result if result.ndim else float(result)


def shadowed_rician_ppf(q: float, p: ShadowedRicianParams, tol: float = 1e-10) -> float:
    """
    Quantile of the shadowed-Rician power gain.
    """
    if not 0 < q < 1:
        raise DomainError(f"quantile needs 0 < q < 1, got {q}")
    hi = p.mean_gain
    while shadowed_rician_cdf(hi, p, tol) < q:
        hi *= 2
    return optimize.brentq(lambda x: shadowed_rician_cdf(x, p, tol) - q, 0.0, hi,
                           xtol=1e-300, rtol=1e-12)


def sample_shadowed_rician(p: ShadowedRicianParams, rng: np.random.Generator, size=None):
    """
    Draw power gains: a Nakagami-shadowed LOS amplitude plus circular
    Gaussian multipath.

    The phase of the LOS term is absorbed into the circular multipath.
    """
    los = rng.gamma(p.gamma_s, p.omega_s / p.gamma_s, size)
    sigma = math.sqrt(p.b_s)
    return (np.sqrt(los) + sigma * rng.standard_normal(size)) ** 2 + (sigma * rng.standard_normal(size)) ** 2


def pathloss_free_space(budget: LinkBudget, distance_m):
    """
    (c/4πf)²·d^{−β}.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise GeometryError("distance must be positive")
    return budget.wavelength_factor * d ** -budget.pathloss_exponent


def _branch_pathloss(budget: LinkBudget, d, los: bool):
    if los:
        return budget.excess_loss[0] * budget.wavelength_factor * d ** -budget.pathloss_exponent
    else:
        exponent = budget.nlos_exponent or budget.pathloss_exponent
        return budget.excess_loss[1] * budget.wavelength_factor * d ** -exponent


def pathloss_uav_branches(budget: LinkBudget, distance_m):
    """
    The (LOS, NLOS) pathloss pair at ``distance_m``, excess loss included.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise GeometryError("distance must be positive")
    return _branch_pathloss(budget, d, True), _branch_pathloss(budget, d, False)


def pathloss_uav(budget: LinkBudget, distance_m, altitude_m, los: LosModelParams):
    """
    LOS-probability-weighted pathloss of an air-to-ground link.
    """
    p = los_probability(distance_m, altitude_m, los)
    pl_los, pl_nlos = pathloss_uav_branches(budget, distance_m)
    return p * pl_los + (1 - p) * pl_nlos


def pathloss_marked(budget: LinkBudget, distance_m, los_marks):
    """
    Per-point pathloss of a thinned aerial field, picking the branch by mark.
    """
    pl_los, pl_nlos = pathloss_uav_branches(budget, distance_m)
    return np.where(los_marks, pl_los, pl_nlos)


def sinr(budget: LinkBudget, fading_gain, pathloss, interference_w, *, unit_noise: bool = False):
    """
    Signal to interference and noise ratio on the serving link.

    ``unit_noise`` replaces σ² by 1, for models normalized to the noise
    floor.
    """
    noise = 1.0 if unit_noise else budget.noise_power_w
    return budget.signal_scale * np.asarray(fading_gain) * pathloss / (np.asarray(interference_w) + noise)


def capacity_dispersion(gamma) -> CapacityDispersion:
    """
    C = log₂(1+γ) and V = 1 − (1+γ)^{−2}.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("SINR must be ≥ 0")
    capacity = np.log2(1 + g)
    dispersion = 1 - 1 / (1 + g) ** 2
    if not g.ndim:
        return CapacityDispersion(float(capacity), float(dispersion))
    return CapacityDispersion(capacity, dispersion)
