"""
Registry of metrics and validation suites, keyed by their CLI ids.
"""
import abc
import dataclasses
import logging
from collections.abc import Iterable
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .scenario import Scenario

LOG = logging.getLogger(__name__)
_metrics = {}
_suites = {}


class UnrecognizedMetricError(ValueError):
    """
    No metric has the given id.
    """


class UnrecognizedSuiteError(ValueError):
    """
    No validation suite has the given id.
    """


def iter_metrics() -> Iterable[type['Metric']]:
    """
    List all known metrics.
    """
    yield from _metrics.values()


def iter_suites() -> Iterable[type['Suite']]:
    """
    List all known validation suites.
    """
    yield from _suites.values()


def metric_for(id: str) -> 'Metric':
    """
    An instance of the metric registered as ``id``.
    """
    try:
        return _metrics[id]()
    except KeyError as exc:
        raise UnrecognizedMetricError(f"Unknown metric {id!r} (known: {', '.join(sorted(_metrics))})") from exc


def suite_for(id: str) -> 'Suite':
    """
    An instance of the suite registered as ``id``.
    """
    try:
        return _suites[id]()
    except KeyError as exc:
        raise UnrecognizedSuiteError(f"Unknown suite {id!r} (known: {', '.join(sorted(_suites))})") from exc


class Metric(abc.ABC):
    """
    Something that can be evaluated at one point of a sweep.

    Metrics must be defined as::

        class Spam(Metric, id='spam'):

    Pass :const:`None` as the ID if this should not be registered.
    """
    #: The id this metric is registered under
    id: str

    @abc.abstractmethod
    def evaluate(self, scenario: 'Scenario') -> list[dict[str, float]]:
        """
        Rows (usually one) of named values at this scenario.
        """
        raise NotImplementedError

    def __init_subclass__(cls, /, id: str | None, **kwargs):
        super().__init_subclass__(**kwargs)
        if id is not None:
            cls.id = id
            _metrics[id] = cls


@dataclasses.dataclass(frozen=True)
class CheckResult:
    """
    Outcome of one validation check.
    """
    #: What was checked
    check: str
    #: Measured error
    measured: float
    #: Allowed error
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.tolerance


class Suite(abc.ABC):
    """
    A group of checks of analytic results against independent oracles.

    Defined like :class:`Metric`, with ``class Eggs(Suite, id='eggs')``.
    """
    #: The id this suite is registered under
    id: str

    @abc.abstractmethod
    def checks(self, scenario: 'Scenario') -> Iterable[CheckResult]:
        raise NotImplementedError

    def __init_subclass__(cls, /, id: str | None, **kwargs):
        super().__init_subclass__(**kwargs)
        if id is not None:
            cls.id = id
            _suites[id] = cls
