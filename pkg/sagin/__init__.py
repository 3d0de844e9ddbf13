"""
Multi-QoS metrics of satellite/UAV/ground networks: decoding error under
finite blocklength coding, outage capacity and ε-effective capacity, with
Monte Carlo oracles for each.

::

    scenario = load_scenario('scenario.toml')
    table = run_metric(scenario, 'epsilon-uav')
    table.write_csv(sys.stdout)
"""
from . import metrics, validation  # noqa: F401  (registers metrics and suites)
from .registry import iter_metrics, iter_suites, metric_for, suite_for
from .runner import DEFAULT_SUITES, FIGURES, ResultTable, SweepRunner, run_metric, run_validation
from .scenario import Scenario, load_scenario, parse_scenario

__all__ = [
    'DEFAULT_SUITES', 'FIGURES', 'ResultTable', 'Scenario', 'SweepRunner',
    'iter_metrics', 'iter_suites', 'load_scenario', 'metric_for', 'parse_scenario',
    'run_metric', 'run_validation', 'suite_for',
]
