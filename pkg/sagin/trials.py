"""
Seeded, thread-parallel Monte Carlo.

Every trial gets its own integer seed spawned from the run seed, and results
come back in trial order, so reductions do not depend on the worker count.
"""
import concurrent.futures
import dataclasses
import logging
import math
from collections.abc import Callable, Iterable
from typing import TypeVar

import numpy as np

LOG = logging.getLogger(__name__)

T = TypeVar('T')


def substreams(seed: int, count: int) -> list[int]:
    """
    Derive ``count`` independent integer seeds from ``seed``.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def run_trials(fn: Callable[[int], T], seed: int, trials: int, threads: int = 1) -> list[T]:
    """
    Call ``fn(trial_seed)`` for every trial and return the results in
    trial order.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    seeds = substreams(seed, trials)
    LOG.debug("Running %d trials on %d thread(s)", trials, threads)
    if threads <= 1:
        return [fn(s) for s in seeds]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


@dataclasses.dataclass(frozen=True)
class TrialSummary:
    """
    Sample mean and its standard error.
    """
    mean: float
    stderr: float
    count: int

    @property
    def relative_stderr(self) -> float:
        return self.stderr / abs(self.mean) if self.mean else math.inf


def summarize(values: Iterable[float]) -> TrialSummary:
    """
    Mean and standard error with compensated, order-fixed summation.
    """
    values = [float(v) for v in values]
    n = len(values)
    if not n:
        raise ValueError("nothing to summarize")
    mean = math.fsum(values) / n
    if n == 1:
        return TrialSummary(mean, math.inf, 1)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return TrialSummary(mean, math.sqrt(var / n), n)
