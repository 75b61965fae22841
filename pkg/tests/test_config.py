import pytest

from gchoquard.interface.config import check_output_dir, config_from_dict, load_config
from gchoquard.utils.errors import ConfigError

BASE = """
[problem]
m = 1
ell = 2
gamma = 1.0
mu = 1.0
p = 2.0

[grid]
nr = 16
ns = 16
R = 8.0
S = 8.0

[solver]
tol = 1e-6

[kernel]
n_theta = 16
"""


def _write(tmp_path, text, name='run.toml'):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_config(tmp_path):
    config = load_config(_write(tmp_path, BASE))
    assert config.problem.p == 2.0
    assert (config.grid.nr, config.grid.R) == (16, 8.0)
    assert config.solver.tol == 1e-6
    assert config.kernel.n_theta == 16
    assert config.outputs.emit_field
    assert config.source.endswith('run.toml')
    assert config.with_problem(p=2.5).problem.p == 2.5
    assert config.with_solver(allow_nonadmissible=True).solver.allow_nonadmissible
    assert list(config.to_dict()) == ['problem', 'grid', 'solver', 'kernel', 'outputs']


def test_defaults_fill_missing_sections():
    config = config_from_dict({'problem': {'m': 1, 'ell': 2, 'gamma': 1.0, 'mu': 1.0, 'p': 2.0}})
    assert config.grid.nr == 48 and config.kernel.n_theta == 32


@pytest.mark.parametrize('text, fragment', [
    (BASE + "\n[extra]\nx = 1\n", 'unknown section'),
    (BASE.replace('tol = 1e-6', 'tolerance = 1e-6'), 'solver.tolerance'),
    (BASE.replace('p = 2.0\n', ''), 'problem.p'),
    (BASE.replace('n_theta = 16', 'n_theta = 2'), 'n_theta'),
    (BASE.replace('nr = 16', 'nr = 2'), 'grid.nr'),
    (BASE.replace('p = 2.0', 'p = 0.5'), 'p must exceed 1'),
    (BASE.replace('tol = 1e-6', 'tol = -1.0'), 'tol'),
])
def test_invalid_configs(tmp_path, text, fragment):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, text))
    assert fragment in info.value.message


def test_parse_error_has_position(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, "[problem]\nm = = 1\n"))
    assert info.value.line == 2
    assert 'line 2' in info.value.message


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'absent.toml')


def test_output_dir_checks(tmp_path):
    assert check_output_dir(tmp_path / 'new' / 'deeper') == tmp_path / 'new' / 'deeper'
    blocker = tmp_path / 'file'
    blocker.write_text('x')
    with pytest.raises(ConfigError):
        check_output_dir(blocker / 'sub')
