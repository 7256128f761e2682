"""NLCD binary dump format for density fields.

Layout (all little-endian):

    magic      4 bytes  'N' 'L' 'C' 'D'
    version    u32      = 1
    dim        u32
    m          u32      number of populations
    counts     dim*u32  cells per axis
    origin     dim*f64
    spacing    dim*f64
    time       f64
    data       m arrays of prod(counts) f64, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import DensityField, Grid

__all__ = ["FORMAT_VERSION", "write_nlcd", "read_nlcd"]

MAGIC = b"NLCD"
FORMAT_VERSION = 1


def write_nlcd(path, field: DensityField) -> None:
    grid = field.grid
    dim = grid.dim
    header = struct.pack("<4sIII", MAGIC, FORMAT_VERSION, dim, field.populations)
    header += struct.pack(f"<{dim}I", *grid.cells)
    header += struct.pack(f"<{dim}d", *grid.origin)
    header += struct.pack(f"<{dim}d", *grid.spacing)
    header += struct.pack("<d", field.time)
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_nlcd(path) -> DensityField:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ValueError(f"{path}: truncated NLCD file")
    magic, version, dim, m = struct.unpack_from("<4sIII", raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported NLCD version {version}")
    off = 16
    counts = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    origin = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    spacing = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    (time,) = struct.unpack_from("<d", raw, off)
    off += 8
    n_vals = m * int(np.prod(counts))
    expected = off + 8 * n_vals
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} != expected {expected}")
    data = np.frombuffer(raw, dtype="<f8", count=n_vals, offset=off)
    values = data.reshape((m,) + tuple(counts)).astype(np.float64)
    grid = Grid(cells=tuple(counts), origin=origin, spacing=spacing)
    return DensityField(grid, values, time)
