"""VPF1 binary snapshots and round-trip CSV output.

VPF1 layout (all little-endian): magic ``b"VPF1"``, u32 n, u32 nx, u32 nv,
f64 lx, f64 lv, f64 t, then ``nx**n * nv**n`` f64 values in row-major
x-major order.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import DIAG_COLUMNS, DistributionField, PhaseGrid

MAGIC = b"VPF1"
_HEADER = struct.Struct("<4sIIIddd")


class SnapshotError(ValueError):
    pass


def encode_snapshot(f: DistributionField, t: float) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, g.n, g.nx, g.nv, g.lx, g.lv, float(t))
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def decode_snapshot(buf: bytes) -> tuple[DistributionField, float]:
    if len(buf) < _HEADER.size:
        raise SnapshotError("truncated VPF1 header")
    magic, n, nx, nv, lx, lv, t = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    grid = PhaseGrid(n, nx, nv, lx, lv)
    count = grid.size
    if len(buf) != _HEADER.size + 8 * count:
        raise SnapshotError(f"payload has {len(buf) - _HEADER.size} bytes, expected {8 * count}")
    vals = np.frombuffer(buf, dtype="<f8", count=count, offset=_HEADER.size)
    return DistributionField(grid, vals.astype(np.float64).reshape(grid.shape)), t


def write_snapshot(path, f: DistributionField, t: float) -> None:
    Path(path).write_bytes(encode_snapshot(f, t))


def read_snapshot(path) -> tuple[DistributionField, float]:
    return decode_snapshot(Path(path).read_bytes())


def fmt(x) -> str:
    """Shortest round-trip text for a number (``repr`` of a Python float)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_diagnostics(path, diag) -> None:
    write_csv(path, DIAG_COLUMNS, diag.rows())
