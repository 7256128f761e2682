import struct

import numpy as np
import pytest

from nlclaw import DensityField, Grid, read_nlcd, write_nlcd


def test_roundtrip_2d(tmp_path):
    rng = np.random.default_rng(0)
    g = Grid(cells=(8, 12), origin=(-1.0, 2.0), spacing=(0.25, 0.125))
    f = DensityField(g, rng.standard_normal((3, 8, 12)), time=1.75)
    path = tmp_path / "f.nlcd"
    write_nlcd(path, f)
    back = read_nlcd(path)
    assert back.grid == g
    assert back.time == 1.75
    assert np.array_equal(back.values, f.values)


def test_golden_header_bytes(tmp_path):
    g = Grid(cells=(4,), origin=(-1.0,), spacing=(0.5,))
    f = DensityField(g, np.arange(4.0)[np.newaxis], time=2.0)
    path = tmp_path / "f.nlcd"
    write_nlcd(path, f)
    raw = path.read_bytes()
    expected = (
        b"NLCD"
        + struct.pack("<III", 1, 1, 1)
        + struct.pack("<I", 4)
        + struct.pack("<d", -1.0)
        + struct.pack("<d", 0.5)
        + struct.pack("<d", 2.0)
        + struct.pack("<4d", 0.0, 1.0, 2.0, 3.0)
    )
    assert raw == expected


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.nlcd"
    path.write_bytes(b"XXXX" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        read_nlcd(path)


def test_bad_version(tmp_path):
    g = Grid(cells=(4,), origin=(0.0,), spacing=(1.0,))
    f = DensityField.zeros(g)
    path = tmp_path / "f.nlcd"
    write_nlcd(path, f)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 9)
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="version"):
        read_nlcd(path)


def test_truncated(tmp_path):
    g = Grid(cells=(4,), origin=(0.0,), spacing=(1.0,))
    path = tmp_path / "f.nlcd"
    write_nlcd(path, DensityField.zeros(g))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="size"):
        read_nlcd(path)
