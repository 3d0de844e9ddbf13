#!/usr/bin/env python3
import asyncio
import logging.config
import sys

from sagin import DEFAULT_SUITES, Scenario, SweepRunner, metric_for, run_validation
from sagin.runner import table_passed

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
            'level': 'INFO',
            'formatter': 'standard',
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
        },
    },
    'loggers': {
        '': {  # root logger
            'handlers': ['default'],
            'level': 'INFO',
            'propagate': False
        },
        'sagin': {
            'handlers': ['default'],
            'level': 'DEBUG',
            'propagate': False
        },
    }
})


async def main():
    scenario = Scenario.from_flat({
        'run.trials': 500,
        'sweep.path': 'fbc.blocklength',
        'sweep.values': [100, 200, 400, 800],
    })

    runner = SweepRunner(scenario, metric_for('effective-capacity'))

    @runner.point_finished.handler
    def show(_, index, overrides, rows):
        print(f"{overrides} -> {rows}")

    table = await runner.run()
    table.write_csv(sys.stdout)

    ok = True
    for suite in DEFAULT_SUITES:
        result = await asyncio.to_thread(run_validation, scenario, suite)
        result.write_csv(sys.stdout)
        ok &= table_passed(result)
    return 0 if ok else 1


sys.exit(asyncio.run(main()))
