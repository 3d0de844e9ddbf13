"""
Aggregate interference at the typical user.

Three views of the same quantity:

* exact Laplace transforms through the PGFL, by radial quadrature
* Campbell cumulants, moments, and the moment-matched Gamma surrogate
* Monte Carlo sums over sampled fields

The satellite downlink is interfered by the ground tier
(:class:`GroundInterferers`), the UAV downlink by the other UAVs
(:class:`AerialInterferers`).
"""
import dataclasses
import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy import special

from .channel import LinkBudget, NakagamiParams, pathloss_free_space, pathloss_marked, pathloss_uav_branches
from .constants import DEFAULT_TOL
from .geometry import (
    GeometryError, LosModelParams, PointFieldRealization, Region, TierProcess,
    los_probability, sample_field, thin_by_los,
)
from .special import DomainError, quad
from .trials import substreams

LOG = logging.getLogger(__name__)


class InfiniteMomentError(ArithmeticError):
    """
    A Campbell integral diverges (eg, no exclusion radius around the user).
    """


class DegenerateInterferenceError(ValueError):
    """
    The interference has no spread to fit a Gamma law to.
    """


@dataclasses.dataclass(frozen=True)
class InterferenceMoments:
    """
    Mean and variance of the aggregate interference.
    """
    #: E[I], watts
    mean_w: float
    #: Var[I], watts²
    variance_w2: float


@dataclasses.dataclass(frozen=True)
class GammaInterferenceModel:
    """
    Gamma surrogate of the aggregate interference.
    """
    #: Shape k
    shape: float
    #: Scale η, watts
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError(f"Gamma shape and scale must be positive, got {self.shape}, {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale ** 2

    def moment(self, order: int) -> float:
        return self.scale ** order * special.poch(self.shape, order)

    def laplace(self, s):
        return (1 + np.asarray(s, dtype=float) * self.scale) ** -self.shape

    def cdf(self, x):
        return special.gammainc(self.shape, np.asarray(x, dtype=float) / self.scale)

    def ppf(self, q):
        return self.scale * special.gammaincinv(self.shape, q)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.shape, self.scale, size)


@dataclasses.dataclass(frozen=True)
class GroundInterferers:
    """
    Ground base stations interfering with the satellite downlink.

    ``budget.bias`` is the bias seen by the satellite link.
    """
    tier: TierProcess
    budget: LinkBudget
    fading: NakagamiParams = NakagamiParams(1)

    def branches(self, r: float, z: float):
        """
        Yields (intensity fraction, received power) pairs at horizontal
        distance ``r``.
        """
        yield 1.0, self.budget.interference_scale * pathloss_free_space(self.budget, r)


@dataclasses.dataclass(frozen=True)
class AerialInterferers:
    """
    UAVs interfering with the UAV downlink, split into LOS and NLOS
    sub-processes by independent thinning.
    """
    tier: TierProcess
    budget: LinkBudget
    los: LosModelParams = LosModelParams()
    fading: NakagamiParams = NakagamiParams(1)

    def branches(self, r: float, z: float, which: str | None = None):
        d = math.hypot(r, z)
        p = float(los_probability(d, z, self.los))
        pl_los, pl_nlos = pathloss_uav_branches(self.budget, d)
        scale = self.budget.interference_scale
        if which in (None, 'los'):
            yield p, scale * float(pl_los)
        if which in (None, 'nlos'):
            yield 1 - p, scale * float(pl_nlos)


InterfererModel = GroundInterferers | AerialInterferers


def _radial_integral(func, model: InterfererModel, region: Region, tol: float) -> float:
    """
    2πλ ∫ r·E_z[func(r, z)] dr over the part of the disk the tier may
    occupy at each altitude.

    Uses r = e^t away from the origin, where power-law integrands become
    smooth, and plain quadrature on the first meter otherwise.
    """
    tier = model.tier
    if tier.density == 0:
        return 0.0
    outer = region.radius_m
    total = 0.0
    for z, wz in zip(*tier.altitude_nodes()):
        z = float(z)
        inner = tier.inner_radius(z, region)
        part = 0.0
        if inner == 0:
            head = min(1.0, outer)
            part += quad(lambda r: r * func(r, z), 0.0, head, tol=tol)
            inner = head
        if inner < outer:
            part += quad(lambda t: math.exp(2 * t) * func(math.exp(t), z), math.log(inner), math.log(outer), tol=tol)
        total += wz * part
    return 2 * math.pi * tier.density * total


def _log_laplace(s: float, model: InterfererModel, region: Region, tol: float, which=None) -> float:
    if s < 0:
        raise DomainError(f"Laplace transform needs s ≥ 0, got {s}")
    if s == 0:
        return 0.0
    m = model.fading.m
    kwargs = {} if which is None else {'which': which}

    def integrand(r, z):
        # 1 − E_h[exp(−s·P·h)] for unit-mean Gamma(m) power gains
        return sum(frac * -math.expm1(-m * math.log1p(s * power / m))
                   for frac, power in model.branches(r, z, **kwargs))

    return -_radial_integral(integrand, model, region, tol)


def laplace_satellite(s: float, gbs: GroundInterferers, region: Region, tol: float = DEFAULT_TOL) -> float:
    """
    ℒ(s) = E[exp(−sI)] of the ground interference on the satellite link.
    """
    return math.exp(_log_laplace(s, gbs, region, tol))


def laplace_uav_components(s: float, uav: AerialInterferers, region: Region,
                           tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """
    The LOS and NLOS factors of the UAV interference transform.
    """
    return (
        math.exp(_log_laplace(s, uav, region, tol, which='los')),
        math.exp(_log_laplace(s, uav, region, tol, which='nlos')),
    )


def laplace_uav(s: float, uav: AerialInterferers, region: Region, tol: float = DEFAULT_TOL) -> float:
    """
    ℒ(s) of the co-tier UAV interference: the product of its LOS and NLOS
    factors, integrated in one pass.
    """
    return math.exp(_log_laplace(s, uav, region, tol))


def reference_power_w(model: InterfererModel, region: Region) -> float:
    """
    The strongest mean received power any interferer can have: the
    closest allowed point at the lowest altitude node.
    """
    zs, _ = model.tier.altitude_nodes()
    z = float(zs.min())
    r = max(model.tier.inner_radius(z, region), 1.0)
    return max((power for _, power in model.branches(r, z)), default=1.0) or 1.0


def interference_cumulants(model: InterfererModel, region: Region, orders: Sequence[int] = (1, 2), *,
                           unit_w: float = 1.0, tol: float = DEFAULT_TOL) -> list[float]:
    """
    Campbell cumulants κ_n = λ∫E[(P·h·PL)^n] of I/unit_w.

    The integrals run in units of :func:`reference_power_w`; ``unit_w``
    only sets the units of the result.
    """
    tier = model.tier
    if not tier.aerial and tier.inner_radius(0.0, region) == 0 and tier.density > 0:
        raise InfiniteMomentError("ground interference moments diverge without an exclusion radius")
    ref = reference_power_w(model, region)
    result = []
    for n in orders:
        hn = model.fading.moment(n)

        def integrand(r, z, n=n):
            return sum(frac * (power / ref) ** n for frac, power in model.branches(r, z))

        try:
            rescale = (ref / unit_w) ** n
        except OverflowError:
            rescale = math.inf
        result.append(hn * _radial_integral(integrand, model, region, tol) * rescale)
    return result


def moments_from_cumulants(cumulants: Sequence[float]) -> list[float]:
    """
    Raw moments μ_0…μ_N from cumulants κ_1…κ_N.
    """
    mu = [1.0]
    for n in range(1, len(cumulants) + 1):
        mu.append(math.fsum(math.comb(n - 1, k - 1) * cumulants[k - 1] * mu[n - k] for k in range(1, n + 1)))
    return mu


def interference_moments(model: InterfererModel, region: Region, tol: float = DEFAULT_TOL) -> InterferenceMoments:
    """
    Mean and variance of the interference by Campbell's theorem.
    """
    if model.tier.density == 0:
        return InterferenceMoments(0.0, 0.0)
    mean, var = interference_cumulants(model, region, (1, 2), tol=tol)
    if not math.isfinite(mean):
        raise InfiniteMomentError("interference mean is infinite")
    return InterferenceMoments(mean, var)


def gamma_fit(m: InterferenceMoments) -> GammaInterferenceModel:
    """
    The Gamma law with the same mean and variance.
    """
    if not (m.variance_w2 > 0 and m.mean_w > 0):
        raise DegenerateInterferenceError(
            f"cannot fit a Gamma law to mean {m.mean_w}, variance {m.variance_w2}")
    return GammaInterferenceModel(m.mean_w ** 2 / m.variance_w2, m.variance_w2 / m.mean_w)


def mc_interference_split(field: PointFieldRealization, budget: LinkBudget, seed: int,
                          fading: NakagamiParams | None = NakagamiParams(1)) -> tuple[float, float]:
    """
    The (LOS, NLOS) interference of one aerial field; ground fields put
    everything in the first slot.

    ``fading=None`` uses unit gains.
    """
    if not len(field):
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    gains = np.ones(len(field)) if fading is None else fading.sample(rng, len(field))
    if not field.aerial:
        powers = budget.interference_scale * gains * pathloss_free_space(budget, field.horizontal_distances)
        return math.fsum(powers), 0.0
    if field.los is None:
        raise GeometryError("aerial fields must be thinned before summing interference")
    powers = budget.interference_scale * gains * pathloss_marked(budget, field.distances, field.los)
    return math.fsum(powers[field.los]), math.fsum(powers[~field.los])


def mc_interference(field: PointFieldRealization, budget: LinkBudget, seed: int,
                    fading: NakagamiParams | None = NakagamiParams(1)) -> float:
    """
    Total interference power of one field.
    """
    los, nlos = mc_interference_split(field, budget, seed, fading)
    return los + nlos


def draw_interference(model: InterfererModel, region: Region, seed: int) -> tuple[float, float]:
    """
    Sample a field, thin it if aerial, and return its (LOS, NLOS) power.
    """
    place, marks, fade = substreams(seed, 3)
    field = sample_field(model.tier, region, place)
    if field.aerial:
        field = thin_by_los(field, model.los, marks)
    return mc_interference_split(field, model.budget, fade, model.fading)
