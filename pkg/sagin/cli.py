"""
Command line: evaluate metrics, run sweeps and validations, regenerate
figure datasets.

Exits 0 on success, 1 when a validation check or an evaluation fails, and
2 on usage or scenario errors.
"""
import argparse
import asyncio
import contextlib
import dataclasses
import logging
import logging.config
import sys
from pathlib import Path

from . import metrics, validation  # noqa: F401  (registration)
from .registry import (
    UnrecognizedMetricError, UnrecognizedSuiteError, iter_metrics, iter_suites, metric_for, suite_for,
)
from .runner import DEFAULT_SUITES, SweepRunner, figures_named, run_validation, table_passed
from .scenario import Scenario, ScenarioError, SweepSection, load_scenario

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def configure_logging(verbose: bool):
    logging.config.dictConfig({
        'version': 1,
        'disable_existing_loggers': True,
        'formatters': {
            'standard': {
                'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s'
            },
        },
        'handlers': {
            'default': {
                'level': 'DEBUG' if verbose else 'INFO',
                'formatter': 'standard',
                'class': 'logging.StreamHandler',
                'stream': 'ext://sys.stderr',  # stdout carries CSV
            },
        },
        'loggers': {
            '': {  # root logger
                'handlers': ['default'],
                'level': 'WARNING',
                'propagate': False
            },
            'sagin': {
                'handlers': ['default'],
                'level': 'DEBUG' if verbose else 'INFO',
                'propagate': False
            },
        }
    })


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help="scenario file (TOML, dotted keys)")
    common.add_argument('--out', type=Path, help="output file (directory for figures); default stdout")
    common.add_argument('--seed', type=int, help="override run.seed")
    common.add_argument('--trials', type=int, help="override run.trials")
    common.add_argument('--tol', type=float, help="override numerics.tol")
    common.add_argument('--threads', type=int, help="override run.threads")
    common.add_argument('-v', '--verbose', action='store_true', help="debug logging")

    parser = argparse.ArgumentParser(prog='sagin', description=__doc__.split('\n\n')[0])
    sub = parser.add_subparsers(dest='command', required=True)

    ev = sub.add_parser('eval', parents=[common], help="evaluate a metric at one point")
    ev.add_argument('metric', choices=sorted(m.id for m in iter_metrics()))
    ev.add_argument('--oracle', action='store_true', help="add Monte Carlo oracle columns")

    sw = sub.add_parser('sweep', parents=[common], help="evaluate a metric over the scenario's sweep")
    sw.add_argument('metric', choices=sorted(m.id for m in iter_metrics()))
    sw.add_argument('--oracle', action='store_true', help="add Monte Carlo oracle columns")
    sw.add_argument('--axis', action='append', default=[], metavar='KEY=V1,V2,...',
                    help="sweep axis (up to two); replaces the scenario's sweep")

    va = sub.add_parser('validate', parents=[common], help="check analytic results against oracles")
    va.add_argument('suites', nargs='*', metavar='suite',
                    help=f"suites to run (default: {', '.join(DEFAULT_SUITES)}; "
                         f"known: {', '.join(sorted(s.id for s in iter_suites()))})")

    fi = sub.add_parser('figures', parents=[common], help="regenerate figure datasets")
    fi.add_argument('names', nargs='*', metavar='figure', help="figures to generate (default: all)")

    return parser


def parse_axis(text: str) -> tuple[str, tuple[float, ...]]:
    key, sep, values = text.partition('=')
    if not sep or not values:
        raise ValueError(f"expected KEY=V1,V2,..., got {text!r}")
    return key.strip(), tuple(float(v) for v in values.split(','))


def scenario_from_args(args) -> Scenario:
    """
    The scenario file, then environment, then command line flags.
    """
    scenario = load_scenario(args.config)
    for flag, key in (('seed', 'run.seed'), ('trials', 'run.trials'), ('tol', 'numerics.tol'),
                      ('threads', 'run.threads')):
        value = getattr(args, flag)
        if value is not None:
            scenario = scenario.with_value(key, value)
    if getattr(args, 'oracle', False):
        scenario = scenario.with_value('analysis.oracle', True)
    match args.command:
        case 'eval':
            scenario = dataclasses.replace(scenario, sweep=SweepSection())
        case 'sweep' if args.axis:
            if len(args.axis) > 2:
                raise ValueError("at most two sweep axes")
            scenario = dataclasses.replace(scenario, sweep=SweepSection())
            for n, axis in enumerate(args.axis):
                key, values = parse_axis(axis)
                suffix = '2' if n else ''
                scenario = scenario.with_value(f'sweep.path{suffix}', key).with_value(f'sweep.values{suffix}', values)
    scenario.validate()
    return scenario


@contextlib.contextmanager
def output(path: Path | None):
    if path is None:
        yield sys.stdout
    else:
        with path.open('w', newline='') as stream:
            yield stream


def cmd_metric(args, scenario: Scenario) -> int:
    runner = SweepRunner(scenario, metric_for(args.metric))

    @runner.point_finished.handler
    def progress(_, index, overrides, rows):
        LOG.debug("Point %d: %r → %d row(s)", index, overrides, len(rows))

    table = asyncio.run(runner.run())
    with output(args.out) as stream:
        table.write_csv(stream)
    return EXIT_OK


def cmd_validate(args, scenario: Scenario) -> int:
    ok = True
    with output(args.out) as stream:
        for suite in args.suites or DEFAULT_SUITES:
            table = run_validation(scenario, suite)
            table.write_csv(stream)
            if table_passed(table):
                LOG.info("Suite %s passed", suite)
            else:
                LOG.error("Suite %s failed", suite)
                ok = False
    return EXIT_OK if ok else EXIT_FAILED


def cmd_figures(args, scenario: Scenario) -> int:
    out = args.out or Path('figures')
    out.mkdir(parents=True, exist_ok=True)
    for figure in figures_named(args.names):
        runner = SweepRunner(figure.scenario(scenario), metric_for(figure.metric))

        @runner.point_finished.handler
        def progress(_, index, overrides, rows, name=figure.name):
            LOG.info("%s: point %d done", name, index + 1)

        table = asyncio.run(runner.run())
        path = out / f"{figure.name}.csv"
        with path.open('w', newline='') as stream:
            table.write_csv(stream)
        LOG.info("Wrote %s", path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        scenario = scenario_from_args(args)
        match args.command:
            case 'figures':
                figures_named(args.names)
            case 'validate':
                for suite in args.suites:
                    suite_for(suite)
    except (ScenarioError, ValueError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        match args.command:
            case 'eval' | 'sweep':
                return cmd_metric(args, scenario)
            case 'validate':
                return cmd_validate(args, scenario)
            case 'figures':
                return cmd_figures(args, scenario)
    except (UnrecognizedMetricError, UnrecognizedSuiteError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as exc:
        LOG.error("%s failed: %s", args.command, exc)
        return EXIT_FAILED
    return EXIT_OK
