"""
Scenario files: flat dotted keys in TOML, validated into frozen sections.

::

    # scenario.toml
    uav.density = 15e-6
    uav.bias = "10 dB"
    sweep.path = "uav.density"
    sweep.values = [5e-6, 10e-6, 15e-6]

Every key has a default taken from the reference evaluation setup; an empty
file is a valid scenario. Numbers may be given as strings with a ``dB`` or
``dBm`` suffix.
"""
import dataclasses
import hashlib
import json
import logging
import os
import re
import tomllib
import types
import typing
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Self

from .association import AssociationConfig
from .channel import LinkBudget, NakagamiParams, ShadowedRicianParams
from .constants import ENV_SEED, ENV_THREADS
from .fbc import FbcSpec
from .geometry import LosModelParams, Region, TierProcess
from .interference import AerialInterferers, GroundInterferers
from .qos import QosSpec

LOG = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """
    Something is wrong with a scenario file.
    """


class ScenarioParseError(ScenarioError):
    """
    The file is not valid TOML.
    """
    def __init__(self, msg, *, line: int | None = None, column: int | None = None):
        super().__init__(msg)
        self.line = line
        self.column = column


class UnknownKeyError(ScenarioError):
    """
    A key does not name any scenario parameter.
    """
    def __init__(self, key: str):
        super().__init__(f"unknown scenario key {key!r}")
        self.key = key


class InvalidValueError(ScenarioError):
    """
    A key has a value of the wrong type or breaks an invariant.
    """
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclasses.dataclass(frozen=True)
class RegionSection:
    radius_m: float = 10_000.0


@dataclasses.dataclass(frozen=True)
class GroundSection:
    density: float = 15e-6
    exclusion_radius_m: float = 100.0
    tx_power_w: float = 1.0
    carrier_hz: float = 2.4e9
    pathloss_exponent: float = 3.5
    nakagami_m: int = 1


@dataclasses.dataclass(frozen=True)
class UavSection:
    density: float = 15e-6
    altitude_min_m: float = 10.0
    altitude_max_m: float = 500.0
    #: Pin every UAV to one altitude (unset: uniform in [min, max])
    altitude_m: float | None = None
    tx_power_w: float = 1.0
    antenna_gain: float = 10.0
    bias: float = 10.0
    carrier_hz: float = 28e9
    noise_power_w: float = 4e-13
    los_exponent: float = 2.5
    nlos_exponent: float = 3.5
    los_excess_loss: float = 1.0
    nlos_excess_loss: float = 0.1
    #: Power isolation between UAV links (1 is no isolation)
    isolation: float = 1.0
    nakagami_m: int = 2
    nu1: float = 9.61
    nu2: float = 0.16


@dataclasses.dataclass(frozen=True)
class SatelliteSection:
    tx_power_w: float = 20.0
    antenna_gain: float = 5000.0
    bias: float = 1.0
    carrier_hz: float = 2e9
    distance_m: float = 500e3
    pathloss_exponent: float = 2.0
    noise_power_w: float = 4e-15
    #: Average LOS power Ω
    los_power: float = 0.835
    #: Half the multipath power b
    multipath_power: float = 0.126
    #: Shadowing shape
    nakagami_m: int = 10


@dataclasses.dataclass(frozen=True)
class FbcSection:
    blocklength: int = 200
    rate: float = 1.0
    target_error: float = 1e-3


@dataclasses.dataclass(frozen=True)
class QosSection:
    qos_exponent: float = 0.01
    delay_bound: float = 100.0
    nonempty_prob: float = 1.0


@dataclasses.dataclass(frozen=True)
class AnalysisSection:
    #: Tier for single-tier metrics: "satellite" or "uav"
    tier: str = "uav"
    #: Add Monte Carlo oracle columns
    oracle: bool = False
    #: Laplace grid, in units of 1/E[I]
    s_min: float = 0.03
    s_max: float = 30.0
    s_points: int = 7
    #: Gauss–Laguerre order over the serving-UAV distance
    serving_order: int = 12
    #: Fewest trials a validation suite draws for its Monte Carlo oracles
    oracle_trials: int = 100_000
    #: Gate the satellite on UAV NLOS
    los_gate: bool = False


@dataclasses.dataclass(frozen=True)
class NumericsSection:
    tol: float = 1e-8
    series_cap: int = 500


@dataclasses.dataclass(frozen=True)
class RunSection:
    seed: int = 1
    trials: int = 2000
    threads: int = 1


@dataclasses.dataclass(frozen=True)
class SweepSection:
    path: str | None = None
    values: tuple[float, ...] = ()
    path2: str | None = None
    values2: tuple[float, ...] = ()


_DB = re.compile(r'^\s*([-+0-9.eE]+)\s*(dBm|dB)\s*$')


def _coerce(key: str, value: Any, hint) -> Any:
    """
    Check ``value`` against a section field's type, converting dB strings.
    """
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType) and type(None) in args:
        (inner,) = [a for a in args if a is not type(None)]
        return _coerce(key, value, inner)
    if origin is tuple:
        if not isinstance(value, list | tuple) or not value:
            raise InvalidValueError(key, "expected a non-empty list")
        return tuple(_coerce(key, v, float) for v in value)
    if hint is bool:
        if not isinstance(value, bool):
            raise InvalidValueError(key, f"expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidValueError(key, f"expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, str):
            match = _DB.match(value)
            if not match:
                raise InvalidValueError(key, f"expected a number or dB value, got {value!r}")
            linear = 10 ** (float(match[1]) / 10)
            return linear / 1000 if match[2] == 'dBm' else linear
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise InvalidValueError(key, f"expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise InvalidValueError(key, f"expected a string, got {value!r}")
        return value
    raise InvalidValueError(key, f"unsupported type {hint!r}")


def _flatten(table: Mapping[str, Any], prefix: str = '') -> dict[str, Any]:
    flat = {}
    for key, value in table.items():
        if isinstance(value, Mapping):
            flat |= _flatten(value, f"{prefix}{key}.")
        else:
            flat[f"{prefix}{key}"] = value
    return flat


@dataclasses.dataclass(frozen=True)
class Scenario:
    """
    Every parameter of a run, plus an optional sweep.

    Builds the model objects the analytic modules consume.
    """
    region: RegionSection = RegionSection()
    ground: GroundSection = GroundSection()
    uav: UavSection = UavSection()
    satellite: SatelliteSection = SatelliteSection()
    fbc: FbcSection = FbcSection()
    qos: QosSection = QosSection()
    analysis: AnalysisSection = AnalysisSection()
    numerics: NumericsSection = NumericsSection()
    run: RunSection = RunSection()
    sweep: SweepSection = SweepSection()

    @classmethod
    def from_flat(cls, values: Mapping[str, Any]) -> Self:
        """
        Build from dotted keys, validating names, types and invariants.
        """
        scenario = cls()
        for key, value in values.items():
            scenario = scenario.with_value(key, value)
        scenario.validate()
        return scenario

    def with_value(self, key: str, value: Any) -> Self:
        """
        A copy with one dotted key replaced.
        """
        section_name, _, field_name = key.partition('.')
        section = getattr(self, section_name, None) if section_name in self._sections() else None
        if section is None or field_name not in {f.name for f in dataclasses.fields(section)}:
            raise UnknownKeyError(key)
        hint = typing.get_type_hints(type(section))[field_name]
        new_section = dataclasses.replace(section, **{field_name: _coerce(key, value, hint)})
        return dataclasses.replace(self, **{section_name: new_section})

    @classmethod
    def _sections(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def flat(self) -> dict[str, Any]:
        """
        Every key and its resolved value.
        """
        return {
            f"{name}.{f.name}": getattr(getattr(self, name), f.name)
            for name in self._sections()
            for f in dataclasses.fields(getattr(self, name))
        }

    def value(self, key: str) -> Any:
        section_name, _, field_name = key.partition('.')
        try:
            return getattr(getattr(self, section_name), field_name)
        except AttributeError:
            raise UnknownKeyError(key) from None

    @property
    def hash(self) -> str:
        """
        SHA-256 of the resolved parameters; the thread count is excluded
        since it cannot change results.
        """
        flat = {k: v for k, v in self.flat().items() if k != 'run.threads'}
        blob = json.dumps(flat, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()

    def validate(self):
        """
        Build every model object once so invariant violations surface with
        the key that caused them.
        """
        checks = [
            ('region', self.region_disk), ('ground', self.ground_tier), ('uav', self.uav_tier),
            ('uav', self.uav_budget), ('uav', self.los_params), ('uav', self.uav_fading),
            ('satellite', self.satellite_budget), ('satellite', self.shadowing),
            ('ground', self.ground_budget), ('ground', self.ground_fading),
            ('fbc', self.fbc_spec), ('qos', self.qos_spec),
        ]
        for section, build in checks:
            try:
                build()
            except (ValueError, TypeError) as exc:
                raise InvalidValueError(section, str(exc)) from exc
        if self.run.trials < 1:
            raise InvalidValueError('run.trials', f"need at least one trial, got {self.run.trials}")
        if self.run.threads < 1:
            raise InvalidValueError('run.threads', f"need at least one thread, got {self.run.threads}")
        if self.analysis.oracle_trials < 1:
            raise InvalidValueError('analysis.oracle_trials',
                                    f"need at least one trial, got {self.analysis.oracle_trials}")
        if self.analysis.tier not in ('satellite', 'uav'):
            raise InvalidValueError('analysis.tier', f"expected 'satellite' or 'uav', got {self.analysis.tier!r}")
        for path_key, values_key in (('sweep.path', 'sweep.values'), ('sweep.path2', 'sweep.values2')):
            path = self.value(path_key)
            if path is None:
                continue
            if not self.value(values_key):
                raise InvalidValueError(values_key, "sweep values must be non-empty")
            if path.split('.')[0] in ('sweep', 'run'):
                raise InvalidValueError(path_key, f"cannot sweep {path!r}")
            self.value(path)  # raises UnknownKeyError
        if self.sweep.path2 is not None and self.sweep.path is None:
            raise InvalidValueError('sweep.path2', "second sweep axis needs sweep.path")

    def sweep_points(self) -> list[dict[str, Any]]:
        """
        The parameter overrides of every sweep point, in order (second axis
        fastest). A scenario without a sweep has one empty point.
        """
        if self.sweep.path is None:
            return [{}]
        inner = [{}] if self.sweep.path2 is None else [{self.sweep.path2: v} for v in self.sweep.values2]
        return [{self.sweep.path: v} | extra for v in self.sweep.values for extra in inner]

    def at(self, overrides: Mapping[str, Any]) -> Self:
        """
        This scenario with sweep overrides applied.
        """
        scenario = self
        for key, value in overrides.items():
            current = scenario.value(key)
            if isinstance(current, int) and not isinstance(current, bool):
                value = int(value)
            scenario = scenario.with_value(key, value)
        return scenario

    # Model builders

    def region_disk(self) -> Region:
        return Region(self.region.radius_m)

    def ground_tier(self) -> TierProcess:
        return TierProcess(self.ground.density, exclusion_radius_m=self.ground.exclusion_radius_m)

    def uav_tier(self) -> TierProcess:
        u = self.uav
        return TierProcess(u.density, (u.altitude_min_m, u.altitude_max_m), pinned_altitude_m=u.altitude_m)

    def los_params(self) -> LosModelParams:
        return LosModelParams(self.uav.nu1, self.uav.nu2)

    def uav_budget(self) -> LinkBudget:
        u = self.uav
        return LinkBudget(
            tx_power_w=u.tx_power_w, carrier_hz=u.carrier_hz, noise_power_w=u.noise_power_w,
            pathloss_exponent=u.los_exponent, nlos_exponent=u.nlos_exponent,
            antenna_gain=u.antenna_gain, bias=u.bias,
            excess_loss=(u.los_excess_loss, u.nlos_excess_loss), isolation=u.isolation,
        )

    def uav_fading(self) -> NakagamiParams:
        return NakagamiParams(self.uav.nakagami_m)

    def satellite_budget(self) -> LinkBudget:
        s = self.satellite
        return LinkBudget(
            tx_power_w=s.tx_power_w, carrier_hz=s.carrier_hz, noise_power_w=s.noise_power_w,
            pathloss_exponent=s.pathloss_exponent, antenna_gain=s.antenna_gain, bias=s.bias,
            link_distance_m=s.distance_m,
        )

    def shadowing(self) -> ShadowedRicianParams:
        s = self.satellite
        return ShadowedRicianParams(s.los_power, s.multipath_power, s.nakagami_m)

    def ground_budget(self) -> LinkBudget:
        """
        Ground transmitters as seen by the satellite receiver (satellite bias).
        """
        g = self.ground
        return LinkBudget(
            tx_power_w=g.tx_power_w, carrier_hz=g.carrier_hz,
            noise_power_w=self.satellite.noise_power_w, pathloss_exponent=g.pathloss_exponent,
            bias=self.satellite.bias,
        )

    def ground_fading(self) -> NakagamiParams:
        return NakagamiParams(self.ground.nakagami_m)

    def ground_interferers(self) -> GroundInterferers:
        return GroundInterferers(self.ground_tier(), self.ground_budget(), self.ground_fading())

    def uav_interferers(self, serving_slant_m: float = 0.0) -> AerialInterferers:
        """
        The other UAVs, none closer (in 3D) than the serving one.
        """
        tier = dataclasses.replace(self.uav_tier(), exclusion_slant_m=serving_slant_m)
        return AerialInterferers(tier, self.uav_budget(), self.los_params(), self.uav_fading())

    def association_config(self) -> AssociationConfig:
        return AssociationConfig(self.satellite_budget(), self.uav_budget(), self.los_params(),
                                 self.analysis.los_gate)

    def fbc_spec(self) -> FbcSpec:
        return FbcSpec(self.fbc.blocklength, self.fbc.rate, self.fbc.target_error)

    def qos_spec(self) -> QosSpec:
        return QosSpec(self.qos.qos_exponent, self.qos.delay_bound, self.qos.nonempty_prob)


def parse_scenario(text: str) -> Scenario:
    """
    Parse scenario text.
    """
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, 'lineno', None)
        column = getattr(exc, 'colno', None)
        if line is None:
            found = re.search(r'line (\d+), column (\d+)', str(exc))
            if found:
                line, column = int(found[1]), int(found[2])
        raise ScenarioParseError(f"invalid scenario: {exc}", line=line, column=column) from exc
    return Scenario.from_flat(_flatten(table))


def load_scenario(path: str | os.PathLike | None, env: Mapping[str, str] = os.environ) -> Scenario:
    """
    Load a scenario file (or the defaults, for None), then apply
    environment overrides.
    """
    if path is None:
        scenario = Scenario()
    else:
        scenario = parse_scenario(Path(path).read_text())
    for var, key in ((ENV_SEED, 'run.seed'), (ENV_THREADS, 'run.threads')):
        if var in env:
            try:
                scenario = scenario.with_value(key, int(env[var]))
            except ValueError as exc:
                raise InvalidValueError(key, f"bad ${var}: {env[var]!r}") from exc
    LOG.info("Scenario %s loaded from %s", scenario.hash[:12], path or "defaults")
    return scenario
