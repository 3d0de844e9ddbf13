"""
Tier selection by maximum biased received power.
"""
import dataclasses
import enum
import logging
from collections.abc import Mapping

import numpy as np

from .channel import LinkBudget, pathloss_free_space, pathloss_uav
from .geometry import LosModelParams, Region, TierProcess, los_probability, sample_field
from .trials import run_trials, substreams

LOG = logging.getLogger(__name__)


class NoAdmissibleTierError(LookupError):
    """
    No tier can serve the user.
    """


class Tier(enum.Enum):
    """
    The tiers a user can associate with.

    Values double as the tie-break order.
    """
    #: The satellite downlink
    Satellite = 's'
    #: The nearest UAV
    Uav = 'u'


@dataclasses.dataclass(frozen=True)
class AssociationConfig:
    """
    Link budgets (biases included) of the tiers competing for the user.
    """
    satellite: LinkBudget
    uav: LinkBudget
    los: LosModelParams = LosModelParams()
    #: Only allow the satellite when the serving UAV has no LOS link
    los_gate: bool = False

    def budget(self, tier: Tier) -> LinkBudget:
        match tier:
            case Tier.Satellite:
                return self.satellite
            case Tier.Uav:
                return self.uav


@dataclasses.dataclass(frozen=True)
class CandidateLink:
    """
    Where the best node of a tier is.
    """
    #: Slant distance, meters
    distance_m: float
    #: Altitude, meters (aerial tiers)
    altitude_m: float | None = None
    #: Whether the link is line-of-sight, if known
    los: bool | None = None


def biased_received_power(tier: Tier, link: CandidateLink, cfg: AssociationConfig) -> float:
    """
    𝒫·φ·G·PL for one candidate; UAVs use the LOS-weighted pathloss.
    """
    budget = cfg.budget(tier)
    if tier is Tier.Uav:
        pathloss = pathloss_uav(budget, link.distance_m, link.altitude_m, cfg.los)
    else:
        pathloss = pathloss_free_space(budget, link.distance_m)
    return budget.signal_scale * float(pathloss)


def associate(links: Mapping[Tier, CandidateLink | None], cfg: AssociationConfig) -> Tier:
    """
    Pick the tier with the largest biased received power.

    Tiers mapped to None are not admissible. Ties go to the smaller tier id.
    """
    admissible = {tier: link for tier, link in links.items() if link is not None}
    uav = admissible.get(Tier.Uav)
    if cfg.los_gate and uav is not None and uav.los:
        admissible.pop(Tier.Satellite, None)
    if not admissible:
        raise NoAdmissibleTierError("no tier can serve the user")
    return min(
        admissible,
        key=lambda tier: (-biased_received_power(tier, admissible[tier], cfg), tier.value),
    )


def association_probability(cfg: AssociationConfig, uav_tier: TierProcess, region: Region, trials: int,
                            seed: int, threads: int = 1) -> dict[Tier, float]:
    """
    Fraction of sampled UAV fields in which each tier wins.

    The satellite link sits at ``cfg.satellite.link_distance_m``; the UAV
    candidate is the nearest UAV in 3D, or none if the field is empty.
    """
    satellite = CandidateLink(cfg.satellite.link_distance_m)

    def trial(trial_seed):
        place, mark = substreams(trial_seed, 2)
        field = sample_field(uav_tier, region, place)
        idx = field.nearest()
        if idx is None:
            uav = None
        else:
            d = float(field.distances[idx])
            z = float(field.altitudes[idx])
            is_los = bool(np.random.default_rng(mark).random() < los_probability(d, z, cfg.los))
            uav = CandidateLink(d, z, is_los)
        return associate({Tier.Satellite: satellite, Tier.Uav: uav}, cfg)

    winners = run_trials(trial, seed, trials, threads)
    result = {tier: sum(w is tier for w in winners) / trials for tier in Tier}
    LOG.debug("Association over %d trials: %r", trials, result)
    return result
