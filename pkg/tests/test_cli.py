import pytest

from sagin import cli
from sagin.registry import CheckResult

configure_logging = cli.configure_logging


@pytest.fixture(autouse=True)
def cli_env(monkeypatch, mocker):
    monkeypatch.setenv('SAGIN_SEED', '3')
    monkeypatch.delenv('SAGIN_THREADS', raising=False)
    # Leave pytest's log capture in place
    mocker.patch.object(cli, 'configure_logging')


def test_configure_logging(mocker):
    dict_config = mocker.patch('logging.config.dictConfig')
    configure_logging(True)
    config = dict_config.call_args.args[0]
    assert config['handlers']['default']['stream'] == 'ext://sys.stderr'
    assert config['loggers']['sagin']['level'] == 'DEBUG'


def read_rows(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith('#')]
    return [line.split(',') for line in lines]


def test_eval_writes_csv(tmp_path):
    out = tmp_path / "dv.csv"
    assert cli.main(['eval', 'delay-violation', '--out', str(out)]) == cli.EXIT_OK
    text = out.read_text()
    assert text.startswith('# scenario: ')
    assert '# seed: 3\n' in text
    header, row = read_rows(out)
    assert header == ['rate', 'violation']
    assert 0 <= float(row[1]) <= 1


def test_eval_ignores_scenario_sweep(tmp_path):
    config = tmp_path / "s.toml"
    config.write_text('sweep.path = "qos.qos_exponent"\nsweep.values = [0.001, 0.01]\n')
    out = tmp_path / "dv.csv"
    assert cli.main(['eval', 'delay-violation', '--config', str(config), '--out', str(out)]) == cli.EXIT_OK
    assert len(read_rows(out)) == 2


def test_sweep_axes(tmp_path):
    out = tmp_path / "sweep.csv"
    argv = ['sweep', 'delay-violation', '--out', str(out),
            '--axis', 'qos.qos_exponent=0.001,0.01', '--axis', 'fbc.blocklength=100,200']
    assert cli.main(argv) == cli.EXIT_OK
    rows = read_rows(out)
    assert rows[0][:2] == ['qos.qos_exponent', 'fbc.blocklength']
    assert len(rows) == 5


def test_seed_flag_beats_environment(tmp_path):
    out = tmp_path / "dv.csv"
    assert cli.main(['eval', 'delay-violation', '--seed', '11', '--out', str(out)]) == cli.EXIT_OK
    assert '# seed: 11\n' in out.read_text()


def test_validate_kernel(tmp_path):
    out = tmp_path / "kernel.csv"
    assert cli.main(['validate', 'kernel', '--out', str(out)]) == cli.EXIT_OK
    rows = read_rows(out)
    assert rows[0] == ['suite', 'check', 'measured', 'tolerance', 'passed']
    assert {r[-1] for r in rows[1:]} == {'pass'}


def test_validate_failure_exits_1(tmp_path, mocker):
    mocker.patch('sagin.validation.Kernel.checks', return_value=[CheckResult('broken', 1.0, 0.1)])
    out = tmp_path / "kernel.csv"
    assert cli.main(['validate', 'kernel', '--out', str(out)]) == cli.EXIT_FAILED
    assert read_rows(out)[1][-1] == 'fail'


def test_arithmetic_failure_exits_1(mocker):
    mocker.patch('sagin.metrics.DelayViolation.evaluate', side_effect=ArithmeticError("series diverged"))
    assert cli.main(['eval', 'delay-violation']) == cli.EXIT_FAILED


@pytest.mark.parametrize('argv', [
    ['validate', 'no-such-suite'],
    ['figures', 'fig99'],
    ['eval', 'delay-violation', '--trials', '0'],
    ['sweep', 'delay-violation', '--axis', 'uav.densty=1e-5'],
    ['sweep', 'delay-violation', '--axis', 'uav.density'],
    ['sweep', 'delay-violation', '--axis', 'a=1', '--axis', 'b=2', '--axis', 'c=3'],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv) == cli.EXIT_USAGE
    assert 'error' in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text('uav.density = = 1\n')
    assert cli.main(['eval', 'delay-violation', '--config', str(config)]) == cli.EXIT_USAGE


def test_unknown_metric_is_rejected_by_argparse():
    with pytest.raises(SystemExit) as info:
        cli.main(['eval', 'spam'])
    assert info.value.code == 2


def test_figures_subset(tmp_path):
    assert cli.main(['figures', 'fig7-theta', '--out', str(tmp_path)]) == cli.EXIT_OK
    rows = read_rows(tmp_path / 'fig7-theta.csv')
    assert rows[0] == ['qos.qos_exponent', 'rate', 'violation']
    assert len(rows) == 6


def test_parse_axis():
    assert cli.parse_axis('uav.density=1e-5,2e-5') == ('uav.density', (1e-5, 2e-5))
    with pytest.raises(ValueError):
        cli.parse_axis('uav.density=')
