import json
import pytest
import numpy as np
from scatter_trace import load_scatter1d, load_soperator
from scatter_trace import cli
from scatter_trace.cli import main, run
from scatter_trace.tabulation import Tabulation

FREE = {'kind': 'gaussian', 'V0': 0.0, 'a': 1.0}
DELTA = {'kind': 'delta', 'g': 2.0}
BUMP = {'kind': 'gaussian_bump', 'center': 1.0, 'width': 0.5}
SMALL_GRID = {'k_min': 0.1, 'k_max': 5.0, 'count': 16}

@pytest.fixture
def write_config(tmp_path):
    def write(document, name='run.json'):
        path = tmp_path/name
        path.write_text(json.dumps(document))
        return str(path)
    return write

def test_free_scatter1d(tmp_path, write_config, capsys):
    config = write_config({'potential': FREE, 'kgrid': SMALL_GRID})
    assert run('scatter1d', config, out=str(tmp_path/'out'), emit_integrand=True) == 0
    data = load_scatter1d(tmp_path/'out'/'scatter1d.csv')
    assert len(data) == 16
    assert all(abs(rec.arg_det_S) < 1e-12 and rec.abs_R2 < 1e-24 for rec in data)
    assert (tmp_path/'out'/'density_of_states.csv').is_file()
    assert 'scatter1d: 16 wavenumbers' in capsys.readouterr().out

def test_gamma_demo(tmp_path, write_config, capsys):
    config = write_config({'gamma': {'z': [0.5, 1.5, 2.5], 'N': 1000}})
    with pytest.raises(SystemExit) as exit_info:
        main(['gamma-demo', '--config', config, '--out', str(tmp_path/'out')])
    assert exit_info.value.code == 0
    table = Tabulation.from_csv(tmp_path/'out'/'gamma_demo.csv', abscissa='z')
    assert np.all(table['relative_error'] < 1e-6)
    summary = json.loads((tmp_path/'out'/'gamma_demo.json').read_text())
    assert summary['euler_error'] < 1e-9
    assert capsys.readouterr().out.startswith('gamma-demo:')

def test_trace1d_is_deterministic(tmp_path, write_config):
    config = write_config({'potential': DELTA, 'phi': BUMP, 'route': 'reflection'})
    outputs = []
    for name in ('first', 'second'):
        assert run('trace1d', config, out=str(tmp_path/name)) == 0
        outputs.append((tmp_path/name/'trace1d.json').read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])['route'] == 'reflection'

def test_casimir1d_from_scatter_file(tmp_path, write_config):
    potential = {'kind': 'delta', 'g': 2.0, 'dispersion': {'k_c': 1.0, 'p': 2}}
    solve_config = write_config({'potential': potential, 'kgrid': {'k_min': 1e-3, 'k_max': 200.0, 'count': 400}},
                                'solve.json')
    assert run('scatter1d', solve_config, out=str(tmp_path)) == 0
    config = write_config({'io': {'inputs': {'scatter1d': 'scatter1d.csv'}}}, 'casimir.json')
    assert run('casimir1d', config, out=str(tmp_path/'out')) == 0
    result = json.loads((tmp_path/'out'/'casimir1d.json').read_text())
    assert result['value'] > 0

def test_scatter3d_then_casimir3d(tmp_path, write_config):
    potential = {'kind': 'gaussian', 'V0': 0.5, 'a': 1.0}
    assert run('scatter3d', write_config({'potential': potential, 'kgrid': SMALL_GRID}), out=str(tmp_path)) == 0
    operators = load_soperator(tmp_path/'soperator.json')
    assert len(operators) == 16
    config = write_config({'io': {'inputs': {'soperator': 'soperator.json', 'born': 'dispersion_inputs.csv'}}},
                          'casimir.json')
    # Without dispersion the anomaly integral diverges:
    assert run('casimir3d', config, out=str(tmp_path/'out')) == 3

def test_validate(tmp_path, write_config):
    config = write_config({'potential': DELTA, 'phi': BUMP})
    assert run('validate', config, out=str(tmp_path)) == 0
    header = (tmp_path/'validate.csv').read_text().splitlines()[0].split(',')
    rows = np.loadtxt(tmp_path/'validate.csv', delimiter=',', skiprows=1)
    # The last row holds the extrapolated limit:
    assert rows[-1, header.index('L')] == np.inf
    assert rows[-1, header.index('relative_gap')] < 0.01

def test_validate_mismatch(tmp_path, write_config):
    config = write_config({'potential': DELTA, 'phi': BUMP, 'tolerances': {'gap': 1e-12}})
    assert run('validate', config, out=str(tmp_path)) == 4
    assert (tmp_path/'validate.csv').is_file()

EXIT_CODE_TEST_CASES = {
    'broken_json': ('scatter1d', '{"potential": ', 2),
    'task_mismatch': ('scatter1d', json.dumps({'task': 'trace1d', 'potential': DELTA, 'phi': BUMP}), 2),
    'bad_field': ('scatter1d', json.dumps({'potential': DELTA, 'kgrid': {'count': 3}}), 2),
    'divergent_casimir': ('casimir1d', json.dumps({'potential': DELTA, 'kgrid': SMALL_GRID}), 3),
}
@pytest.mark.parametrize('task, text, code', EXIT_CODE_TEST_CASES.values(), ids=EXIT_CODE_TEST_CASES.keys())
def test_exit_codes(tmp_path, task, text, code, capsys):
    path = tmp_path/'run.json'
    path.write_text(text)
    assert run(task, str(path), out=str(tmp_path/'out')) == code
    assert task in capsys.readouterr().err

def test_unexpected_failure_exits_numerical(tmp_path, write_config, monkeypatch, capsys, caplog):
    def broken(*args):
        raise ZeroDivisionError('float division by zero')
    monkeypatch.setitem(cli.TASK_RUNNERS, 'scatter1d', broken)
    config = write_config({'potential': FREE, 'kgrid': SMALL_GRID})
    assert run('scatter1d', config, out=str(tmp_path/'out')) == 3
    assert 'ZeroDivisionError' in capsys.readouterr().err
    assert 'scatter1d failed unexpectedly' in caplog.text

def test_casimir1d_adds_singular_phase(tmp_path, write_config):
    potential = {'kind': 'delta', 'g': 2.0, 'dispersion': {'k_c': 1.0, 'p': 1}}
    kgrid = {'k_min': 1e-3, 'k_max': 200.0, 'count': 600}
    assert run('casimir1d', write_config({'potential': potential, 'kgrid': kgrid}), out=str(tmp_path/'casimir')) == 0
    casimir = json.loads((tmp_path/'casimir'/'casimir1d.json').read_text())
    config = write_config({'potential': potential, 'kgrid': kgrid, 'phi': {'kind': 'casimir'}}, 'direct.json')
    assert run('trace1d', config, out=str(tmp_path/'direct')) == 0
    direct = json.loads((tmp_path/'direct'/'trace1d.json').read_text())
    assert set(casimir['breakdown']) == {'double_integral', 'singularities'}
    assert casimir['value'] == pytest.approx(direct['value'], rel=5e-3)
