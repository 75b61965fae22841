import csv
import json

import numpy as np
import pytest

from gchoquard.core.grid_ops import build_grid, gaussian_bump
from gchoquard.core.nonlocal_ops import build_kernel
from gchoquard.utils.constants import FIELD_MAGIC
from gchoquard.utils.errors import FormatError
from gchoquard.utils.fileio import (
    KERNEL_HEADER,
    load_field,
    load_kernel,
    read_field_header,
    read_json,
    read_kernel_header,
    save_field,
    save_kernel,
    write_csv,
    write_json,
    write_ray_profile,
)


@pytest.fixture
def field_file(tmp_path, ref_params, small_grid):
    u = gaussian_bump(small_grid, ref_params).scaled(np.pi)
    return save_field(tmp_path / 'field.csv', u, ref_params), u


def test_field_round_trip(field_file, ref_params, small_grid):
    path, u = field_file
    loaded, header = load_field(path, params=ref_params, grid=small_grid)
    np.testing.assert_array_equal(loaded.values, u.values)
    assert loaded.grid is small_grid
    assert header['gamma'] == 1.0 and header['nr'] == 16.0


def test_field_without_context_builds_grid(field_file):
    path, u = field_file
    loaded, _ = load_field(path)
    assert loaded.grid.same_as(u.grid)
    np.testing.assert_array_equal(loaded.values, u.values)


def test_field_header_layout(field_file):
    path, _ = field_file
    lines = path.read_text().splitlines()
    assert lines[0] == FIELD_MAGIC
    assert lines[1] == '# 1,2,1.0,1.0,2.0,16,16,8.0,8.0'
    assert len(lines) == 2 + 16 * 16


@pytest.mark.parametrize('changes, key', [
    (dict(gamma=0.5), 'gamma'),
    (dict(mu=1.5), 'mu'),
    (dict(p=2.5), 'p'),
])
def test_field_parameter_mismatch_names_key(field_file, ref_params, changes, key):
    path, _ = field_file
    with pytest.raises(FormatError) as info:
        load_field(path, params=ref_params.replace(**changes))
    assert info.value.key == key
    assert key in info.value.message


def test_field_grid_mismatch(field_file, ref_params):
    path, _ = field_file
    other = build_grid(16, 16, 10.0, 8.0, ref_params)
    with pytest.raises(FormatError) as info:
        load_field(path, params=ref_params, grid=other)
    assert info.value.key == 'R'


def test_keyed_header_values_are_accepted(tmp_path, field_file):
    path, u = field_file
    lines = path.read_text().splitlines()
    lines[1] = '# m=1,ell=2,gamma=1.0,mu=1.0,p=2.0,nr=16,ns=16,R=8.0,S=8.0'
    keyed = tmp_path / 'keyed.csv'
    keyed.write_text('\n'.join(lines) + '\n')
    assert read_field_header(keyed)['S'] == 8.0
    loaded, _ = load_field(keyed)
    np.testing.assert_array_equal(loaded.values, u.values)

    renamed = tmp_path / 'renamed.csv'
    renamed.write_text('\n'.join([lines[0], lines[1].replace('gamma=', 'g=')] + lines[2:]) + '\n')
    with pytest.raises(FormatError) as info:
        load_field(renamed)
    assert info.value.key == 'gamma'


def test_malformed_field_files(tmp_path, field_file):
    path, _ = field_file
    lines = path.read_text().splitlines()

    bad_magic = tmp_path / 'magic.csv'
    bad_magic.write_text('\n'.join(['# other'] + lines[1:]) + '\n')
    with pytest.raises(FormatError) as info:
        load_field(bad_magic)
    assert info.value.key == 'magic'

    garbled = tmp_path / 'garbled.csv'
    garbled.write_text('\n'.join([lines[0], '# 1,2,one,1.0,2.0,16,16,8.0,8.0'] + lines[2:]) + '\n')
    with pytest.raises(FormatError) as info:
        load_field(garbled)
    assert info.value.key == 'gamma'

    truncated = tmp_path / 'truncated.csv'
    truncated.write_text('\n'.join([lines[0], '# 1,2,1.0,1.0,2.0,16,16'] + lines[2:]) + '\n')
    with pytest.raises(FormatError) as info:
        load_field(truncated)
    assert info.value.key == 'R'

    short = tmp_path / 'short.csv'
    short.write_text('\n'.join(lines[:-3]) + '\n')
    with pytest.raises(FormatError):
        load_field(short)

    with pytest.raises(FormatError):
        load_field(tmp_path / 'missing.csv')


def test_kernel_round_trip(tmp_path, ref_params, small_grid, small_kernel):
    path = save_kernel(tmp_path / 'k.gkrn', small_kernel)
    assert path.stat().st_size == KERNEL_HEADER.size + 8 * small_grid.size ** 2
    header = read_kernel_header(path)
    assert header['n_theta'] == 16 and header['mu'] == 1.0
    loaded = load_kernel(path, small_grid, ref_params, n_theta=16)
    np.testing.assert_array_equal(loaded.entries, small_kernel.entries)
    np.testing.assert_array_equal(loaded.self_entries, small_kernel.self_entries)


def test_kernel_mismatch(tmp_path, ref_params, small_grid, small_kernel):
    path = save_kernel(tmp_path / 'k.gkrn', small_kernel)
    with pytest.raises(FormatError) as info:
        load_kernel(path, small_grid, ref_params, n_theta=32)
    assert info.value.key == 'n_theta'
    with pytest.raises(FormatError) as info:
        load_kernel(path, small_grid, ref_params.replace(mu=2.0))
    assert info.value.key == 'mu'
    # p never enters the kernel
    loaded = load_kernel(path, small_grid, ref_params.replace(p=2.5))
    assert loaded.n_theta == 16


def test_kernel_corrupt_files(tmp_path, ref_params, small_grid, small_kernel):
    path = save_kernel(tmp_path / 'k.gkrn', small_kernel)
    raw = path.read_bytes()
    truncated = tmp_path / 'trunc.gkrn'
    truncated.write_bytes(raw[:-8])
    with pytest.raises(FormatError):
        load_kernel(truncated, small_grid, ref_params)
    bad = tmp_path / 'bad.gkrn'
    bad.write_bytes(b'XXXXX' + raw[5:])
    with pytest.raises(FormatError) as info:
        read_kernel_header(bad)
    assert info.value.key == 'magic'
    with pytest.raises(FormatError):
        read_kernel_header(tmp_path / 'missing.gkrn')


def test_matrix_free_kernel_cannot_be_saved(tmp_path, ref_params, small_grid):
    free = build_kernel(small_grid, ref_params, n_theta=8, matrix_free=True)
    with pytest.raises(FormatError):
        save_kernel(tmp_path / 'free.gkrn', free)


def test_json_is_deterministic(tmp_path):
    payload = {'b': 1, 'a': np.float64(0.1), 'bad': float('nan'), 'arr': np.arange(3), 'flag': np.bool_(True)}
    first = write_json(tmp_path / 'one.json', payload).read_bytes()
    second = write_json(tmp_path / 'two.json', payload).read_bytes()
    assert first == second
    loaded = read_json(tmp_path / 'one.json')
    assert list(loaded) == ['b', 'a', 'bad', 'arr', 'flag']
    assert loaded['bad'] == 'nan' and loaded['arr'] == [0, 1, 2] and loaded['flag'] is True
    assert json.loads(first)['a'] == 0.1


def test_csv_writers(tmp_path):
    path = write_csv(tmp_path / 'rows.csv', ('value', 'converged', 'regime'),
                     [{'value': 0.1, 'converged': True, 'regime': 'admissible'},
                      {'value': 2.0, 'converged': False}])
    with open(path, newline='') as fh:
        rows = list(csv.reader(fh))
    assert rows == [['value', 'converged', 'regime'], ['0.1', 'true', 'admissible'], ['2.0', 'false', '']]
    profile = write_ray_profile(tmp_path / 'ray.csv', [(0.0, 0.0), (1.0, 0.25)])
    assert profile.read_text().splitlines() == ['t,E', '0.0,0.0', '1.0,0.25']
