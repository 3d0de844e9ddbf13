import numpy as np
import pytest

from sagin.interference import InterferenceMoments
from sagin.validation import MomentsVsMc, oracle_scenario


@pytest.mark.scenario({'run.trials': 50})
def test_oracle_scenario_draws_enough_trials(scenario):
    assert oracle_scenario(scenario).run.trials == scenario.analysis.oracle_trials
    more = scenario.with_value('run.trials', 10 * scenario.analysis.oracle_trials)
    assert oracle_scenario(more) is more


def exponential_interference(mocker, rng, count):
    # Unit-mean exponential interference: mean 1, variance 1
    mocker.patch('sagin.validation.interference_model', return_value=(InterferenceMoments(1.0, 1.0), None))
    mocker.patch('sagin.validation.interference_samples', return_value=rng.exponential(size=count))


@pytest.mark.scenario({'analysis.oracle_trials': 20})
def test_monte_carlo_tolerance_is_fixed(scenario, mocker, rng):
    exponential_interference(mocker, rng, 20)
    checks = list(MomentsVsMc().checks(scenario))
    assert {c.tolerance for c in checks} == {0.02}
    # Twenty draws cannot resolve a 2% error
    unresolved = [c for c in checks if 'resolved by 20 trials' in c.check]
    assert len(unresolved) == 4
    assert not any(c.passed for c in unresolved)


@pytest.mark.montecarlo
def test_monte_carlo_checks_pass_when_resolved(scenario, mocker, rng):
    exponential_interference(mocker, rng, 1_000_000)
    checks = list(MomentsVsMc().checks(scenario))
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]
