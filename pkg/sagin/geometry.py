"""
Point processes for the ground and aerial tiers, and the elevation-angle LOS
model.

The typical user sits at the origin; every tier is a homogeneous Poisson
process truncated to a disk around it::

    field = sample_field(TierProcess(15e-6, (10, 500)), Region(2000), seed=7)
    field = thin_by_los(field, LosModelParams(), seed=8)
    print(len(field), field.los.sum())
"""
import dataclasses
import logging
import math
from typing import Self

import numpy as np
from scipy import optimize, special

LOG = logging.getLogger(__name__)


class GeometryError(ValueError):
    """
    A geometric quantity was impossible (eg, altitude above slant distance).
    """


@dataclasses.dataclass(frozen=True)
class Region:
    """
    The disk of interest around the typical user.
    """
    #: Radius, meters
    radius_m: float = 10_000.0

    def __post_init__(self):
        if not self.radius_m > 0:
            raise GeometryError(f"region radius must be positive, got {self.radius_m}")


@dataclasses.dataclass(frozen=True)
class TierProcess:
    """
    A homogeneous Poisson process of base stations.

    Ground tiers have no altitude range. Aerial tiers draw each altitude
    uniformly from ``altitude_range`` unless ``pinned_altitude_m`` fixes
    them all.
    """
    #: Points per square meter
    density: float
    #: (H_min, H_max) in meters, aerial tiers only
    altitude_range: tuple[float, float] | None = None
    #: No points closer than this (horizontally), meters
    exclusion_radius_m: float = 0.0
    #: Put every aerial point at this altitude
    pinned_altitude_m: float | None = None
    #: No points closer than this in 3D (eg, the serving node's slant distance), meters
    exclusion_slant_m: float = 0.0

    def __post_init__(self):
        if self.density < 0:
            raise GeometryError(f"density must be ≥ 0, got {self.density}")
        if self.exclusion_radius_m < 0 or self.exclusion_slant_m < 0:
            raise GeometryError("exclusion radii must be ≥ 0")
        if self.altitude_range is not None:
            lo, hi = self.altitude_range
            if not 0 < lo <= hi:
                raise GeometryError(f"altitude range must satisfy 0 < H_min ≤ H_max, got {lo}, {hi}")
            if self.pinned_altitude_m is not None and not lo <= self.pinned_altitude_m <= hi:
                raise GeometryError(f"pinned altitude {self.pinned_altitude_m} outside [{lo}, {hi}]")
        elif self.pinned_altitude_m is not None:
            raise GeometryError("only aerial tiers can pin an altitude")

    @property
    def aerial(self) -> bool:
        return self.altitude_range is not None

    def mean_count(self, region: Region) -> float:
        """
        Expected number of points inside ``region``, before the slant
        exclusion.
        """
        inner = min(self.exclusion_radius_m, region.radius_m)
        return self.density * np.pi * (region.radius_m ** 2 - inner ** 2)

    def inner_radius(self, altitude_m: float, region: Region) -> float:
        """
        Smallest horizontal distance a point at ``altitude_m`` may have.
        """
        slant = math.sqrt(max(self.exclusion_slant_m ** 2 - altitude_m ** 2, 0.0))
        return min(max(self.exclusion_radius_m, slant), region.radius_m)

    def altitude_nodes(self, order: int = 12) -> tuple[np.ndarray, np.ndarray]:
        """
        Quadrature nodes and weights (summing to 1) for averaging over the
        altitude mark.

        Ground tiers give the single node z = 0.
        """
        if not self.aerial:
            return np.zeros(1), np.ones(1)
        if self.pinned_altitude_m is not None:
            return np.array([float(self.pinned_altitude_m)]), np.ones(1)
        lo, hi = self.altitude_range
        if lo == hi:
            return np.array([float(lo)]), np.ones(1)
        x, w = np.polynomial.legendre.leggauss(order)
        return lo + (hi - lo) * (x + 1) / 2, w / 2


@dataclasses.dataclass(frozen=True)
class LosModelParams:
    """
    Environment constants of the elevation-angle LOS model.

    Defaults are the urban pair.
    """
    #: Dimensionless environment constant
    nu1: float = 9.61
    #: Per-degree environment constant
    nu2: float = 0.16

    def __post_init__(self):
        if not (self.nu1 > 0 and self.nu2 > 0):
            raise GeometryError(f"LOS constants must be positive, got {self.nu1}, {self.nu2}")


@dataclasses.dataclass(frozen=True, eq=False)
class PointFieldRealization:
    """
    One sampled set of base stations around the user.
    """
    #: (N, 3) positions in meters
    points: np.ndarray
    #: Per-point LOS tag, once thinned (aerial tiers only)
    los: np.ndarray | None
    #: The seed that produced the positions
    seed: int | None
    #: Whether this is an aerial tier
    aerial: bool

    def __len__(self):
        return len(self.points)

    @classmethod
    def empty(cls, *, aerial: bool, seed: int | None = None) -> Self:
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=bool) if aerial else None, seed, aerial)

    @property
    def distances(self) -> np.ndarray:
        """
        3D distance from the user to every point.
        """
        return np.sqrt(np.sum(self.points ** 2, axis=1))

    @property
    def horizontal_distances(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])

    @property
    def altitudes(self) -> np.ndarray:
        return self.points[:, 2]

    def nearest(self) -> int | None:
        """
        Index of the closest point (3D), or None if the field is empty.

        This is the serving rule :func:`serving_nodes` integrates over.
        """
        if not len(self):
            return None
        return int(np.argmin(self.distances))

    def without(self, index: int) -> Self:
        """
        The same field with one point removed (eg, the serving node).
        """
        keep = np.arange(len(self)) != index
        return dataclasses.replace(
            self,
            points=self.points[keep],
            los=None if self.los is None else self.los[keep],
        )


def sample_field(tier: TierProcess, region: Region, seed: int) -> PointFieldRealization:
    """
    Draw one realization of ``tier`` inside ``region``.

    The count is Poisson with mean :meth:`TierProcess.mean_count`; positions
    are uniform over the (annular) disk. Points inside the slant exclusion
    are then dropped.
    """
    rng = np.random.default_rng(seed)
    count = rng.poisson(tier.mean_count(region))
    if not count:
        return PointFieldRealization.empty(aerial=tier.aerial, seed=seed)

    inner = min(tier.exclusion_radius_m, region.radius_m)
    r = np.sqrt(rng.uniform(inner ** 2, region.radius_m ** 2, count))
    phi = rng.uniform(0, 2 * np.pi, count)
    if not tier.aerial:
        z = np.zeros(count)
    elif tier.pinned_altitude_m is not None:
        z = np.full(count, float(tier.pinned_altitude_m))
    else:
        z = rng.uniform(*tier.altitude_range, count)

    points = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if tier.exclusion_slant_m > 0:
        points = points[np.hypot(r, z) >= tier.exclusion_slant_m]
    return PointFieldRealization(points, None, seed, tier.aerial)


def elevation_angle_deg(distance_m, altitude_m):
    """
    Elevation of a node at slant ``distance_m`` and height ``altitude_m``,
    in degrees.
    """
    d = np.asarray(distance_m, dtype=float)
    z = np.asarray(altitude_m, dtype=float)
    if np.any(z <= 0):
        raise GeometryError("altitude must be positive")
    # A few ulps of slack for points constructed as hypot(r, z) with r = 0
    if np.any(z > d * (1 + 1e-12)):
        raise GeometryError("altitude exceeds slant distance")
    ground = np.sqrt(np.maximum(d ** 2 - z ** 2, 0.0))
    return np.degrees(np.arctan2(z, ground))


def los_probability(distance_m, altitude_m, params: LosModelParams):
    """
    Probability of a line-of-sight link at the given geometry.

    p = 1 / (1 + ν₁·exp(−ν₂(θ − ν₁))), θ the elevation angle in degrees.
    """
    theta = elevation_angle_deg(distance_m, altitude_m)
    # expit(x) = 1/(1+e^{-x}); folding ν₁ into the exponent keeps it overflow-free
    return special.expit(params.nu2 * (theta - params.nu1) - np.log(params.nu1))


def thin_by_los(field: PointFieldRealization, params: LosModelParams, seed: int) -> PointFieldRealization:
    """
    Mark each aerial point LOS independently with its LOS probability.
    """
    if not field.aerial:
        raise GeometryError("only aerial fields carry LOS marks")
    rng = np.random.default_rng(seed)
    if not len(field):
        return dataclasses.replace(field, los=np.zeros(0, dtype=bool))
    p = los_probability(field.distances, field.altitudes, params)
    return dataclasses.replace(field, los=rng.random(len(field)) < p)


def _altitude_span(tier: TierProcess) -> tuple[float, float]:
    if not tier.aerial:
        return 0.0, 0.0
    if tier.pinned_altitude_m is not None:
        z = float(tier.pinned_altitude_m)
        return z, z
    lo, hi = tier.altitude_range
    return float(lo), float(hi)


def void_measure(tier: TierProcess, slant_m: float) -> float:
    """
    Expected number of points within ``slant_m`` (3D) of the user,
    ignoring the region edge.

    πλ·E_z[(d² − z² − r₀²)⁺] with z the altitude mark.
    """
    c = slant_m ** 2 - tier.exclusion_radius_m ** 2
    lo, hi = _altitude_span(tier)
    if c <= lo ** 2:
        return 0.0
    if hi == lo:
        return tier.density * math.pi * (c - lo ** 2)
    top = min(hi, math.sqrt(c))
    area = (c * top - top ** 3 / 3) - (c * lo - lo ** 3 / 3)
    return tier.density * math.pi * area / (hi - lo)


def serving_slant_m(tier: TierProcess, u: float) -> float:
    """
    The slant distance d with :func:`void_measure` (d) = u.

    The nearest point has void_measure(D) unit exponential, so u = ln 2
    gives the median serving distance.
    """
    if not (tier.density > 0 and u > 0):
        raise GeometryError(f"need a populated tier and u > 0, got λ={tier.density}, u={u}")
    lo, hi = _altitude_span(tier)
    base = lo ** 2 + tier.exclusion_radius_m ** 2
    spread = u / (math.pi * tier.density)
    if hi == lo:
        return math.sqrt(base + spread)
    upper = math.sqrt(hi ** 2 + tier.exclusion_radius_m ** 2 + spread)
    return optimize.brentq(lambda d: void_measure(tier, d) - u, math.sqrt(base), upper, xtol=1e-9, rtol=1e-12)


def serving_altitudes(tier: TierProcess, slant_m: float, order: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """
    Altitude nodes and weights (summing to 1) of the nearest point given
    its slant distance: uniform over the altitudes that slant can reach.
    """
    lo, hi = _altitude_span(tier)
    top = min(hi, math.sqrt(max(slant_m ** 2 - tier.exclusion_radius_m ** 2, 0.0)))
    if top <= lo:
        return np.array([lo]), np.ones(1)
    x, w = np.polynomial.legendre.leggauss(order)
    return lo + (top - lo) * (x + 1) / 2, w / 2


def serving_nodes(tier: TierProcess, region: Region, order: int = 12) -> list[tuple[float, float, float]]:
    """
    Quadrature nodes ``(horizontal distance, altitude, weight)`` for the
    nearest node (in 3D) of an aerial tier.

    u = :func:`void_measure` (D) is unit exponential and integrated by
    Gauss–Laguerre; given D, the altitude is averaged by
    :func:`serving_altitudes`. Nodes past the region edge are dropped, so
    the weights sum to the probability that some node exists.
    """
    if not tier.aerial:
        raise GeometryError("serving nodes are only defined for aerial tiers")
    if tier.density == 0:
        return []
    u, wu = np.polynomial.laguerre.laggauss(order)
    nodes = []
    for ui, wi in zip(u, wu):
        d = serving_slant_m(tier, float(ui))
        zs, wz = serving_altitudes(tier, d, order)
        for z, wzi in zip(zs, wz):
            r = math.sqrt(max(d ** 2 - z ** 2, 0.0))
            if r <= region.radius_m:
                nodes.append((r, float(z), float(wi * wzi)))
    LOG.debug("%d serving nodes for λ=%g", len(nodes), tier.density)
    return nodes
