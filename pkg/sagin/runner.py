"""
Sweeps, validation runs and the canned figure datasets, assembled into
CSV tables.
"""
import asyncio
import csv
import dataclasses
import importlib.metadata
import io
import logging
import math
from collections.abc import Mapping
from typing import Any, TextIO

import aioevents

from .registry import Metric, metric_for, suite_for
from .scenario import Scenario

LOG = logging.getLogger(__name__)


def tool_version() -> str:
    try:
        return importlib.metadata.version('sagin-qos')
    except importlib.metadata.PackageNotFoundError:
        return '0+unknown'


def format_value(value: Any) -> str:
    """
    Locale-free text for one CSV cell.

    Floats keep 12 significant digits, in scientific notation below 1e-3.
    """
    match value:
        case bool():
            return str(int(value))
        case int():
            return str(value)
        case float() if not math.isfinite(value):
            return str(value)
        case float() if 0 < abs(value) < 1e-3:
            return f"{value:.12e}"
        case float():
            return f"{value:.12g}"
        case _:
            return str(value)


@dataclasses.dataclass
class ResultTable:
    """
    A rectangular table of results with provenance.
    """
    #: Column names
    columns: list[str]
    #: One list of cells per row, in column order
    rows: list[list[Any]] = dataclasses.field(default_factory=list)
    #: Written as ``# key: value`` lines ahead of the header
    metadata: dict[str, str] = dataclasses.field(default_factory=dict)

    def append(self, row: Mapping[str, Any]):
        """
        Add a row given by column name; every column must be present.
        """
        if set(row) != set(self.columns):
            raise ValueError(f"row columns {sorted(row)} do not match table columns {sorted(self.columns)}")
        self.rows.append([row[c] for c in self.columns])

    def column(self, name: str) -> list[Any]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def write_csv(self, stream: TextIO):
        for key, value in self.metadata.items():
            stream.write(f"# {key}: {value}\n")
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _metadata(scenario: Scenario, **extra) -> dict[str, str]:
    return {
        'scenario': scenario.hash,
        'seed': str(scenario.run.seed),
        'version': tool_version(),
    } | extra


class SweepRunner:
    """
    Evaluates a metric at every point of a scenario's sweep, in order.

    ::

        runner = SweepRunner(scenario, metric_for('epsilon-uav'))

        @runner.point_finished.handler
        def progress(_, index, overrides, rows):
            print(index, overrides)

        table = await runner.run()
    """
    point_finished = aioevents.Event(
        "(index: int, overrides: dict[str, Any], rows: list[dict[str, float]]) A sweep point was evaluated."
    )

    def __init__(self, scenario: Scenario, metric: Metric):
        self.scenario = scenario
        self.metric = metric

    @property
    def axes(self) -> list[str]:
        return [p for p in (self.scenario.sweep.path, self.scenario.sweep.path2) if p is not None]

    async def run(self) -> ResultTable:
        points = self.scenario.sweep_points()
        table = None
        for index, overrides in enumerate(points):
            scenario = self.scenario.at(overrides)
            # Metrics are blocking; keep the loop free for event handlers
            rows = await asyncio.to_thread(self.metric.evaluate, scenario)
            for row in rows:
                full = {axis: overrides[axis] for axis in self.axes} | row
                if table is None:
                    table = ResultTable(list(full), metadata=_metadata(self.scenario, metric=self.metric.id))
                table.append(full)
            LOG.info("Point %d/%d of %s done: %r", index + 1, len(points), self.metric.id, overrides)
            self.point_finished.trigger(index, overrides, rows)
        # Let handlers scheduled by the last trigger run
        await asyncio.sleep(0)
        assert table is not None
        return table


def run_metric(scenario: Scenario, metric_id: str) -> ResultTable:
    """
    One row per sweep point (more for metrics over a grid, like laplace).
    """
    return asyncio.run(SweepRunner(scenario, metric_for(metric_id)).run())


#: Suites a bare ``validate`` runs
DEFAULT_SUITES = ('laplace-vs-mc', 'moments-vs-mc', 'theorem1-vs-quadrature', 'outage-roundtrip', 'ec-limits')


def run_validation(scenario: Scenario, suite_id: str) -> ResultTable:
    """
    Pass/fail per check, with the measured error against its tolerance.

    Suites run at the base scenario; any sweep is ignored.
    """
    suite = suite_for(suite_id)
    table = ResultTable(['suite', 'check', 'measured', 'tolerance', 'passed'],
                        metadata=_metadata(scenario, suite=suite_id))
    for result in suite.checks(scenario):
        LOG.log(logging.DEBUG if result.passed else logging.WARNING,
                "%s: %s measured %g (tolerance %g)", suite_id, result.check, result.measured, result.tolerance)
        table.append({
            'suite': suite_id,
            'check': result.check,
            'measured': float(result.measured),
            'tolerance': float(result.tolerance),
            'passed': 'pass' if result.passed else 'fail',
        })
    return table


def table_passed(table: ResultTable) -> bool:
    return all(p == 'pass' for p in table.column('passed'))


@dataclasses.dataclass(frozen=True)
class Figure:
    """
    A canned sweep that regenerates one figure's dataset.
    """
    #: Output name, also the CSV file stem
    name: str
    metric: str
    #: Dotted-key settings, sweep axes included
    settings: Mapping[str, Any]

    def scenario(self, base: Scenario) -> Scenario:
        scenario = base
        for key, value in self.settings.items():
            scenario = scenario.with_value(key, value)
        scenario.validate()
        return scenario


_BLOCKLENGTHS = (100, 200, 400, 800)
_DENSITIES = (1.5e-6, 4.7e-6, 1.5e-5, 4.7e-5, 1.5e-4)
_ALTITUDES = (50, 100, 200, 300, 400, 500)
_THETAS = (0.01, 0.001)

FIGURES = (
    Figure('fig2', 'association-prob', {'sweep.path': 'uav.density', 'sweep.values': _DENSITIES}),
    Figure('fig3', 'epsilon-uav', {
        'uav.altitude_m': 100,
        'sweep.path': 'uav.density', 'sweep.values': (5e-6, 1e-5, 1.5e-5, 3e-5, 6e-5),
        'sweep.path2': 'uav.antenna_gain', 'sweep.values2': (5, 10, 20),
    }),
    Figure('fig4', 'epsilon-uav', {'sweep.path': 'uav.altitude_m', 'sweep.values': _ALTITUDES}),
    Figure('fig5', 'outage-capacity', {
        'sweep.path': 'fbc.target_error', 'sweep.values': (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1),
    }),
    Figure('fig6', 'outage-capacity', {
        'sweep.path': 'uav.altitude_m', 'sweep.values': _ALTITUDES,
        'sweep.path2': 'fbc.target_error', 'sweep.values2': (1e-4, 1e-3),
    }),
    Figure('fig7-density', 'delay-violation', {
        'analysis.tier': 'satellite',
        'sweep.path': 'ground.density', 'sweep.values': (5e-6, 1.5e-5, 4.5e-5),
        'sweep.path2': 'fbc.blocklength', 'sweep.values2': _BLOCKLENGTHS,
    }),
    Figure('fig7-theta', 'delay-violation', {
        'sweep.path': 'qos.qos_exponent', 'sweep.values': (1e-3, 3e-3, 1e-2, 3e-2, 1e-1),
    }),
    Figure('fig8', 'effective-capacity', {
        'sweep.path': 'fbc.blocklength', 'sweep.values': _BLOCKLENGTHS,
        'sweep.path2': 'fbc.target_error', 'sweep.values2': (1e-4, 1e-3),
    }),
    Figure('fig8-theta', 'effective-capacity', {
        'sweep.path': 'qos.qos_exponent', 'sweep.values': (1e-4, 1e-3, 1e-2, 1e-1, 1.0),
    }),
    Figure('fig9', 'effective-capacity', {
        'sweep.path': 'fbc.blocklength', 'sweep.values': _BLOCKLENGTHS,
        'sweep.path2': 'qos.qos_exponent', 'sweep.values2': _THETAS,
    }),
)


def figures_named(names: list[str]) -> list[Figure]:
    """
    Figures whose name is, or starts with, one of ``names`` (all for an
    empty list). ``fig7`` selects both delay-violation datasets.
    """
    if not names:
        return list(FIGURES)
    chosen = [f for f in FIGURES if any(f.name == n or f.name.startswith(f"{n}-") for n in names)]
    unknown = [n for n in names if not any(f.name == n or f.name.startswith(f"{n}-") for f in FIGURES)]
    if unknown:
        raise ValueError(f"Unknown figure(s): {', '.join(unknown)}")
    return chosen
