"""Encrypt/decrypt by reversible nonlocal transport, with roundtrip metrics.

The continuum flow is a group in time: evolving a payload density forward by
a horizon ``T`` scrambles it (the cipher), and integrating the same equation
backward -- the same code path with the closure sign flipped -- recovers it.
The kernel, the velocity closure, the horizon and the grid together form the
key.  The discrete scheme is not exactly reversible, so decryption incurs a
resolution-dependent L1 error, quantified by :func:`roundtrip_report`.

This is a demonstration of reversible transport, not a security claim:
whether the key-to-cipher map can reach arbitrary target densities is an
open question, and known structural results on nonlocal transport imply the
reachable class is genuinely restricted.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import KVReader, format_kv, parse_kv
from .errors import ConfigError
from .grid import DensityField, Grid, l1_norm, support_bbox
from .kernels import Kernel, kernel_from_spec
from .scheme import SchemeConfig
from .solver import evolve
from .velocity import VelocityModel

__all__ = [
    "CryptKey",
    "KeyQualityWarning",
    "RoundtripReport",
    "encrypt",
    "decrypt",
    "roundtrip_report",
    "ingest_payload_1d",
    "ingest_payload_2d",
]


class KeyQualityWarning(UserWarning):
    """The key cannot mix this payload (flow is stationary on its support)."""


@dataclass(frozen=True)
class CryptKey:
    """Everything needed to reproduce the flow: kernel, closure, horizon, grid."""

    kernel_family: str
    kernel_inner: float
    kernel_outer: float
    model: VelocityModel
    horizon: float
    grid: Grid
    flux: str = "upwind"
    cfl: float = 0.9

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    def build_kernel(self) -> Kernel:
        return kernel_from_spec(
            self.kernel_family, self.kernel_inner, self.kernel_outer, self.grid
        )

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(flux=self.flux, cfl=self.cfl)

    def to_text(self) -> str:
        pairs = {
            "kernel.family": self.kernel_family,
            "kernel.r": repr(self.kernel_inner),
            "kernel.l": repr(self.kernel_outer),
            "velocity.variant": self.model.variant,
            "velocity.sign": repr(self.model.sign),
            "crypt.horizon": repr(self.horizon),
            "scheme.flux": self.flux,
            "scheme.cfl": repr(self.cfl),
            "grid.cells": " ".join(str(n) for n in self.grid.cells),
            "grid.origin": " ".join(repr(v) for v in self.grid.origin),
            "grid.spacing": " ".join(repr(v) for v in self.grid.spacing),
        }
        R = self.model.rotation_matrix()
        if R is not None:
            pairs["velocity.rotation"] = " ".join(repr(float(v)) for v in R.ravel())
        return format_kv(pairs)

    @classmethod
    def from_text(cls, text: str) -> "CryptKey":
        r = KVReader(parse_kv(text))
        cells = r.ints("grid.cells", required=True)
        origin = r.floats("grid.origin", required=True)
        spacing = r.floats("grid.spacing", required=True)
        grid = Grid(cells=cells, origin=origin, spacing=spacing)
        rotation = r.floats("velocity.rotation")
        if rotation is not None:
            n = grid.dim
            if len(rotation) != n * n:
                raise ConfigError(
                    f"velocity.rotation needs {n * n} entries, got {len(rotation)}"
                )
            rotation = tuple(
                tuple(rotation[i * n + j] for j in range(n)) for i in range(n)
            )
        model = VelocityModel(
            variant=r.str("velocity.variant", default="saturating"),
            rotation=rotation,
            sign=r.float("velocity.sign", default=1.0),
        )
        key = cls(
            kernel_family=r.str("kernel.family", required=True),
            kernel_inner=r.float("kernel.r", default=0.0),
            kernel_outer=r.float("kernel.l", required=True),
            model=model,
            horizon=r.float("crypt.horizon", required=True),
            grid=grid,
            flux=r.str("scheme.flux", default="upwind"),
            cfl=r.float("scheme.cfl", default=0.9),
        )
        r.reject_unknown()
        return key

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> "CryptKey":
        return cls.from_text(Path(path).read_text())


def _check_payload(payload: DensityField, key: CryptKey):
    if payload.grid != key.grid:
        raise ConfigError("payload grid does not match the key's grid")
    if not payload.is_finite():
        raise ValueError("payload contains non-finite values")


def _warn_if_stationary(payload: DensityField, key: CryptKey):
    if key.kernel_inner <= 0:
        return
    boxes = support_bbox(payload, 0.0)
    diam = 0.0
    for box in boxes:
        if box is None:
            continue
        diam = max(diam, float(np.linalg.norm(np.subtract(box.hi, box.lo))))
    if 0.0 < diam < key.kernel_inner:
        warnings.warn(
            f"payload support diameter {diam:.4g} is below the kernel plateau "
            f"radius {key.kernel_inner:.4g}: the flow is stationary there and "
            "this key encrypts to the identity",
            KeyQualityWarning,
        )


def encrypt(payload: DensityField, key: CryptKey, method: str = "auto") -> DensityField:
    """Evolve the payload forward by the key's horizon."""
    _check_payload(payload, key)
    _warn_if_stationary(payload, key)
    kernel = key.build_kernel()
    snaps, _report = evolve(
        payload,
        kernel,
        key.model,
        key.scheme(),
        t_final=payload.time + key.horizon,
        method=method,
    )
    return snaps[-1]


def decrypt(cipher: DensityField, key: CryptKey, method: str = "auto") -> DensityField:
    """Evolve the cipher backward by the key's horizon (sign-flipped closure)."""
    if cipher.grid != key.grid:
        raise ConfigError("cipher grid does not match the key's grid")
    kernel = key.build_kernel()
    snaps, _report = evolve(
        cipher,
        kernel,
        key.model,
        key.scheme(),
        t_final=cipher.time - key.horizon,
        method=method,
    )
    return snaps[-1]


@dataclass(frozen=True)
class RoundtripReport:
    """L1 sizes of original/cipher/decrypted fields and the recovery error."""

    original_l1: float
    cipher_l1: float
    decrypted_l1: float
    absolute_error: float
    relative_error: float

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("original_l1", self.original_l1),
            ("cipher_l1", self.cipher_l1),
            ("decrypted_l1", self.decrypted_l1),
            ("absolute_error", self.absolute_error),
            ("relative_error", self.relative_error),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("quantity,value\n")
        for name, val in self.rows():
            buf.write(f"{name},{float(val)!r}\n")
        return buf.getvalue()


def roundtrip_report(
    original: DensityField, decrypted: DensityField, cipher: DensityField
) -> RoundtripReport:
    """The five recovery metrics, all with the grid L1 norm."""
    if original.grid != decrypted.grid or original.grid != cipher.grid:
        raise ValueError("fields live on different grids")
    diff = DensityField(original.grid, original.values - decrypted.values)
    abs_err = l1_norm(diff)
    orig = l1_norm(original)
    return RoundtripReport(
        original_l1=orig,
        cipher_l1=l1_norm(cipher),
        decrypted_l1=l1_norm(decrypted),
        absolute_error=abs_err,
        relative_error=abs_err / orig if orig > 0 else 0.0,
    )


def ingest_payload_1d(samples, grid: Grid) -> DensityField:
    """Map a 1D signal verbatim onto cell averages."""
    if grid.dim != 1:
        raise ValueError("ingest_payload_1d requires a 1D grid")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.shape != (grid.cells[0],):
        raise ValueError(
            f"sample count {arr.shape} does not match grid cells {grid.cells}"
        )
    return DensityField(grid, arr[np.newaxis].copy())


def ingest_payload_2d(image, grid: Grid) -> DensityField:
    """Map an image (rows of nonnegative reals) onto cell averages.

    2D input becomes one population; 3D input (channels, rows, cols) maps
    channels to populations.
    """
    if grid.dim != 2:
        raise ValueError("ingest_payload_2d requires a 2D grid")
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3 or arr.shape[1:] != grid.cells:
        raise ValueError(
            f"image shape {arr.shape} does not match grid cells {grid.cells}"
        )
    return DensityField(grid, arr.copy())
