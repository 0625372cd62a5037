"""Binary snapshots and CSV time series.

Snapshot layout (all little-endian):

    offset  type     content
    0       4 bytes  magic b"CNSF"
    4       u16      format version (1)
    6       u8       dim
    7       f64      alpha
    15      d x (u32 N, f64 L), interleaved per axis
    15+12d  f64      t
    23+12d  f64[]    n, c, u_1 .. u_d, each C order (last axis fastest)
"""

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, TruncatedSnapshot, VersionMismatch
from .model import State
from .spectral import SpectralGrid

__all__ = [
    "MAGIC",
    "VERSION",
    "header_size",
    "snapshot_bytes",
    "parse_snapshot",
    "write_snapshot",
    "read_snapshot",
    "emit_timeseries",
    "read_timeseries",
]

MAGIC = b"CNSF"
VERSION = 1
_PREFIX = struct.Struct("<4sHBd")
_AXIS = struct.Struct("<Id")
_TIME = struct.Struct("<d")


def header_size(dim):
    return _PREFIX.size + dim * _AXIS.size + _TIME.size


def snapshot_bytes(state, alpha):
    g = state.grid
    parts = [_PREFIX.pack(MAGIC, VERSION, g.dim, float(alpha))]
    parts += [_AXIS.pack(n, L) for n, L in zip(g.sizes, g.box_lengths)]
    parts.append(_TIME.pack(float(state.t)))
    for arr in (state.n, state.c, *state.u):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(parts)


def parse_snapshot(data):
    """Decode snapshot bytes into ``(state, alpha)``."""
    if len(data) < _PREFIX.size:
        raise TruncatedSnapshot(f"snapshot truncated: {len(data)} bytes, header needs {_PREFIX.size}")
    magic, version, dim, alpha = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatch(f"snapshot version {version} not supported (expected {VERSION})")
    if dim not in (2, 3):
        raise BadMagic(f"corrupt snapshot header: dim = {dim}")
    hsize = header_size(dim)
    if len(data) < hsize:
        raise TruncatedSnapshot(f"snapshot truncated: {len(data)} bytes, header needs {hsize}")
    axes = [_AXIS.unpack_from(data, _PREFIX.size + i * _AXIS.size) for i in range(dim)]
    (t,) = _TIME.unpack_from(data, _PREFIX.size + dim * _AXIS.size)
    sizes = tuple(a[0] for a in axes)
    lengths = tuple(a[1] for a in axes)
    npts = int(np.prod(sizes))
    expected = hsize + (2 + dim) * npts * 8
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "has trailing bytes"
        raise TruncatedSnapshot(f"snapshot {kind}: {len(data)} bytes, expected {expected}")
    payload = np.frombuffer(data, dtype="<f8", offset=hsize).astype(np.float64)
    fields = payload.reshape((2 + dim,) + sizes)
    grid = SpectralGrid(sizes, lengths)
    state = State(grid, fields[0].copy(), fields[1].copy(), fields[2:].copy(), t)
    return state, alpha


def write_snapshot(state, path, alpha):
    Path(path).write_bytes(snapshot_bytes(state, alpha))


def read_snapshot(path):
    """Returns ``(state, alpha)``."""
    return parse_snapshot(Path(path).read_bytes())


def _fmt(x):
    return format(float(x), ".17g")


def emit_timeseries(records, columns=None):
    """CSV text: a header row then one row per record, floats at 17 significant digits.

    ``columns`` defaults to the columns of the first record (just ``t`` when
    there are none).
    """
    records = list(records)
    if columns is None:
        columns = records[0].columns() if records else ["t"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        row = rec.row()
        w.writerow([_fmt(row[c]) if row.get(c) is not None else "" for c in columns])
    return buf.getvalue()


def read_timeseries(source):
    """Parse CSV text (or a path) into ``{column: np.ndarray}``."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        source = Path(source).read_text()
    rows = list(csv.reader(io.StringIO(source)))
    header, body = rows[0], rows[1:]
    return {
        name: np.array([float(r[i]) if r[i] else np.nan for r in body], dtype=float)
        for i, name in enumerate(header)
    }
