"""
Field CSV, GKRN1 kernel cache and JSON / CSV report writers
"""
import csv
import json
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import FIELD_HEADER_KEYS, FIELD_MAGIC, KERNEL_MAGIC
from .errors import FormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# magic, nr, ns, R, S, gamma, mu, m, ell, n_theta
KERNEL_HEADER = struct.Struct('<5sIIddddIII')
INT_KEYS = ('m', 'ell', 'nr', 'ns')


# === FIELD CSV ===

def _header_values(params, grid) -> Dict[str, Any]:
    return {'m': params.m, 'ell': params.ell, 'gamma': params.gamma, 'mu': params.mu,
            'p': params.p, 'nr': grid.nr, 'ns': grid.ns, 'R': grid.R, 'S': grid.S}


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def save_field(path: PathLike, u, params) -> Path:
    """`# grushin-field v1`, `# m,ell,gamma,mu,p,nr,ns,R,S` as bare values, then r,s,value rows (r outer)"""
    path = Path(path)
    header = _header_values(params, u.grid)
    rr, ss = u.grid.mesh()
    with open(path, 'w', newline='') as fh:
        fh.write(FIELD_MAGIC + '\n')
        fh.write('# ' + ','.join(_fmt(header[k]) for k in FIELD_HEADER_KEYS) + '\n')
        rows = np.column_stack([rr.ravel(), ss.ravel(), u.values.ravel()])
        np.savetxt(fh, rows, fmt='%.17g', delimiter=',')
    logger.debug("wrote field %s (%dx%d)", path, u.grid.nr, u.grid.ns)
    return path


def _parse_header(line: str) -> Dict[str, float]:
    body = line.lstrip('#').strip()
    parts = [part.strip() for part in body.split(',')]
    if len(parts) != len(FIELD_HEADER_KEYS):
        raise FormatError(f"field header needs {len(FIELD_HEADER_KEYS)} entries, got {len(parts)}",
                          key=FIELD_HEADER_KEYS[min(len(parts), len(FIELD_HEADER_KEYS) - 1)])
    out = {}
    for key, part in zip(FIELD_HEADER_KEYS, parts):
        name, sep, text = part.partition('=')
        if not sep:
            # bare values in canonical order
            name, text = key, part
        if name.strip() != key:
            raise FormatError(f"field header key {name.strip()!r} where {key!r} expected", key=key)
        try:
            out[key] = float(text)
        except ValueError:
            raise FormatError(f"field header value for {key} is not a number: {text!r}", key=key)
    return out


def _first_mismatch(header: Mapping[str, float], expected: Mapping[str, Any]) -> Optional[str]:
    for key in FIELD_HEADER_KEYS:
        if key not in expected:
            continue
        if header[key] != float(expected[key]):
            return key
    return None


def read_field_header(path: PathLike) -> Dict[str, float]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"field file not found: {path}")
    with open(path) as fh:
        magic = fh.readline().rstrip('\r\n')
        if magic != FIELD_MAGIC:
            raise FormatError(f"not a grushin field file (first line {magic!r})", key='magic')
        return _parse_header(fh.readline())


def load_field(path: PathLike, params=None, grid=None):
    """
    Read a field CSV. Returns (RadialField, header dict).

    With `params` / `grid` the header is checked against them and the first
    mismatching key (in header order) is named in the FormatError. Without a grid
    one is built from the header.
    """
    from ..core.geometry import ProblemParams
    from ..core.grid_ops import RadialField, build_grid

    header = read_field_header(path)
    expected: Dict[str, Any] = {}
    if params is not None:
        expected.update(params.to_dict())
    if grid is not None:
        expected.update(grid.describe())
    bad = _first_mismatch(header, expected)
    if bad is not None:
        raise FormatError(f"field header mismatch on {bad}: file has {header[bad]!r}, "
                          f"expected {expected[bad]!r}", key=bad)

    if params is None:
        params = ProblemParams(**{k: (int(header[k]) if k in INT_KEYS else header[k])
                                  for k in ('m', 'ell', 'gamma', 'mu', 'p')})
    nr, ns = int(header['nr']), int(header['ns'])
    if grid is None:
        grid = build_grid(nr, ns, header['R'], header['S'], params)

    try:
        rows = np.loadtxt(path, delimiter=',', comments='#', ndmin=2)
    except ValueError as e:
        raise FormatError(f"field body unreadable: {e}")
    if rows.shape != (nr * ns, 3):
        raise FormatError(f"field body has shape {rows.shape}, expected ({nr * ns}, 3)", key='nr')
    rr, ss = grid.mesh()
    if not (np.allclose(rows[:, 0], rr.ravel(), rtol=1e-12, atol=0.0)
            and np.allclose(rows[:, 1], ss.ravel(), rtol=1e-12, atol=0.0)):
        raise FormatError("field node coordinates do not match the grid", key='R')
    return RadialField(grid, rows[:, 2].reshape(nr, ns)), header


# === KERNEL CACHE (GKRN1) ===

def save_kernel(path: PathLike, kernel) -> Path:
    if kernel.entries is None:
        raise FormatError("matrix-free kernels have no stored entries to save")
    path = Path(path)
    g = kernel.grid
    head = KERNEL_HEADER.pack(KERNEL_MAGIC, g.nr, g.ns, g.R, g.S, kernel.gamma, kernel.mu,
                              kernel.m, kernel.ell, kernel.n_theta)
    with open(path, 'wb') as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(kernel.entries, dtype='<f8').tobytes())
    logger.info("saved kernel %s (%d bytes)", path, KERNEL_HEADER.size + kernel.entries.nbytes)
    return path


def read_kernel_header(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"kernel file not found: {path}")
    with open(path, 'rb') as fh:
        raw = fh.read(KERNEL_HEADER.size)
    if len(raw) < KERNEL_HEADER.size:
        raise FormatError("kernel file truncated in header", key='magic')
    magic, nr, ns, R, S, gamma, mu, m, ell, n_theta = KERNEL_HEADER.unpack(raw)
    if magic != KERNEL_MAGIC:
        raise FormatError(f"bad kernel magic {magic!r}", key='magic')
    return {'nr': nr, 'ns': ns, 'R': R, 'S': S, 'gamma': gamma, 'mu': mu,
            'm': m, 'ell': ell, 'n_theta': n_theta}


def load_kernel(path: PathLike, grid, params, n_theta: Optional[int] = None):
    """Verify every header field against (grid, params[, n_theta]) before reading entries"""
    from ..core.nonlocal_ops import kernel_from_entries

    header = read_kernel_header(path)
    expected = {'nr': grid.nr, 'ns': grid.ns, 'R': grid.R, 'S': grid.S,
                'gamma': params.gamma, 'mu': params.mu, 'm': params.m, 'ell': params.ell}
    if n_theta is not None:
        expected['n_theta'] = int(n_theta)
    for key, value in expected.items():
        if header[key] != value:
            raise FormatError(f"kernel cache mismatch on {key}: file has {header[key]!r}, "
                              f"expected {value!r}", key=key)
    n = grid.size
    entries = np.fromfile(path, dtype='<f8', offset=KERNEL_HEADER.size)
    if entries.size != n * n:
        raise FormatError(f"kernel file holds {entries.size} entries, expected {n * n}", key='nr')
    logger.info("loaded kernel %s", path)
    return kernel_from_entries(grid, params, header['n_theta'], entries.reshape(n, n).astype(np.float64))


# === REPORTS ===

def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no NaN / Infinity
        return value if math.isfinite(value) else str(value)
    return value


def write_json(path: PathLike, payload: Mapping[str, Any]) -> Path:
    """Key order preserved, stable float repr: equal payloads give equal bytes"""
    path = Path(path)
    with open(path, 'w') as fh:
        json.dump(_jsonable(dict(payload)), fh, indent=2, allow_nan=False)
        fh.write('\n')
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path) as fh:
        return json.load(fh)


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    path = Path(path)
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(c, '')) for c in columns])
    return path


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_ray_profile(path: PathLike, profile: Sequence[Tuple[float, float]]) -> Path:
    return write_csv(path, ('t', 'E'), ({'t': t, 'E': e} for t, e in profile))
