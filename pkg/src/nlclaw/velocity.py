"""Velocity closures and assembly of the per-population velocity field.

A velocity model maps the convolved-gradient matrix ``w`` (shape ``(n, m)``
at each cell: spatial axes times populations) to a velocity matrix of the
same shape.  Supported closures:

* ``saturating``          ``w / sqrt(1 + |w|^2)`` with the Frobenius norm;
* ``rotated_saturating``  an orthogonal ``n x n`` matrix applied after
                          saturation, per population column;
* ``negated_saturating``  the saturating closure with reversed sign;
* ``identity``            ``w`` itself.

All four have Lipschitz constant 1 and fix the origin; their image norm is
below 1 for the saturating variants.  The model's ``sign`` field composes
with the variant and is what backward-in-time integration flips.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .grid import DensityField, Grid
from .kernels import Kernel, convolve_gradient

__all__ = ["VelocityModel", "VelocityField", "eval_velocity", "assemble_velocity"]

_VARIANTS = ("saturating", "rotated_saturating", "negated_saturating", "identity")


@dataclass(frozen=True)
class VelocityModel:
    variant: str = "saturating"
    rotation: tuple[tuple[float, ...], ...] | None = None
    sign: float = 1.0

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown velocity variant {self.variant!r}")
        if self.sign not in (1.0, -1.0, 1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        object.__setattr__(self, "sign", float(self.sign))
        if self.variant == "rotated_saturating":
            if self.rotation is None:
                raise ValueError("rotated_saturating requires a rotation matrix")
        if self.rotation is not None:
            R = np.asarray(self.rotation, dtype=np.float64)
            if R.ndim != 2 or R.shape[0] != R.shape[1]:
                raise ValueError(f"rotation must be square, got shape {R.shape}")
            if not np.allclose(R.T @ R, np.eye(R.shape[0]), atol=1e-12, rtol=0.0):
                raise ValueError("rotation matrix is not orthogonal to 1e-12")
            object.__setattr__(
                self, "rotation", tuple(tuple(float(v) for v in row) for row in R)
            )

    @property
    def lipschitz_bound(self) -> float:
        return 1.0

    def rotation_matrix(self) -> np.ndarray | None:
        if self.rotation is None:
            return None
        return np.asarray(self.rotation, dtype=np.float64)

    def negated(self) -> "VelocityModel":
        """Model with the output sign flipped (backward-in-time closure)."""
        return replace(self, sign=-self.sign)


def eval_velocity(model: VelocityModel, w: np.ndarray) -> np.ndarray:
    """Apply the closure to ``w`` of shape ``(n, m)`` or ``(n, m, *cells)``."""
    w = np.asarray(w, dtype=np.float64)
    if model.variant == "identity":
        return model.sign * w
    norm2 = np.sum(w * w, axis=(0, 1))
    sat = w / np.sqrt(1.0 + norm2)
    if model.variant == "saturating":
        return model.sign * sat
    if model.variant == "negated_saturating":
        return -model.sign * sat
    R = model.rotation_matrix()
    if R.shape[0] != w.shape[0]:
        raise ConfigError(
            f"rotation is {R.shape[0]}x{R.shape[0]} but w has {w.shape[0]} spatial rows"
        )
    return model.sign * np.einsum("ab,b...->a...", R, sat)


@dataclass
class VelocityField:
    """Cell-center velocities, shape ``(n, m, *cells)`` on ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        expected = (self.grid.dim,)
        if vals.ndim != self.grid.dim + 2 or vals.shape[0] != self.grid.dim \
                or vals.shape[2:] != self.grid.cells:
            raise ValueError(
                f"velocity shape {vals.shape} does not match (dim, m, *{self.grid.cells})"
            )
        self.values = vals

    @property
    def populations(self) -> int:
        return self.values.shape[1]

    def max_speed(self, axis: int) -> float:
        """Largest |component| along one axis over all cells and populations."""
        return float(np.max(np.abs(self.values[axis]))) if self.values.size else 0.0


def assemble_velocity(
    field: DensityField,
    kernel: Kernel,
    model: VelocityModel,
    method: str = "auto",
) -> VelocityField:
    """Velocity at every cell: closure applied to the convolved gradient.

    Satisfies ``max |v| <= L_V * sup|grad eta| * |rho|_L1`` cellwise.
    """
    w = convolve_gradient(field, kernel, method=method)
    return VelocityField(field.grid, eval_velocity(model, w))
