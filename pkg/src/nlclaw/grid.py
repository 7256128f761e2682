"""Uniform Cartesian grids and multi-population density fields.

A :class:`Grid` describes a 1D or 2D box partitioned into uniform cells;
densities are stored as cell averages at cell centers.  A
:class:`DensityField` carries ``m >= 1`` population arrays on one grid at a
single time stamp.  Everything outside the box is implicitly zero (all
supported scenarios keep compactly supported data inside the box).

Reductions (masses, norms) use numpy's deterministic pairwise summation over
C-ordered arrays, so repeated calls on identical data are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "DensityField",
    "BoundingBox",
    "cell_center",
    "total_mass",
    "l1_norm",
    "region_mass",
    "support_bbox",
]


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered Cartesian mesh on a 1D interval or 2D rectangle.

    ``cells[a]`` cells along axis ``a``, lower corner at ``origin[a]``,
    uniform spacing ``spacing[a]``.  The center of cell ``i`` along an axis
    is ``origin + (i + 1/2) * spacing``, exactly reproducible.
    """

    cells: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        dim = len(self.cells)
        if dim not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got dim={dim}")
        if len(self.origin) != dim or len(self.spacing) != dim:
            raise ValueError("cells, origin and spacing must have equal length")
        if any(n < 4 for n in self.cells):
            raise ValueError(f"need at least 4 cells per axis, got {self.cells}")
        if any(h <= 0 for h in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple(n * h for n, h in zip(self.cells, self.spacing))

    @property
    def domain_half_width(self) -> tuple[float, ...]:
        return tuple(0.5 * e for e in self.extent)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + e for o, e in zip(self.origin, self.extent))

    @classmethod
    def over_box(cls, lo: Sequence[float], hi: Sequence[float], cells: Sequence[int]) -> "Grid":
        """Grid covering box ``[lo, hi]`` with the given cell counts."""
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        cells = tuple(int(n) for n in cells)
        spacing = tuple((b - a) / n for a, b, n in zip(lo, hi, cells))
        return cls(cells=cells, origin=lo, spacing=spacing)

    @classmethod
    def centered(cls, half_width: Sequence[float], cells: Sequence[int]) -> "Grid":
        """Grid covering ``[-w, w]`` per axis, centered at the coordinate origin."""
        hw = tuple(float(v) for v in half_width)
        return cls.over_box([-w for w in hw], list(hw), cells)

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        n = self.cells[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.spacing[axis]

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, one per axis, shaped like the cell array."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def cell_center(self, index) -> np.ndarray:
        """Coordinates of the center of cell ``index`` (scalar in 1D, pair in 2D)."""
        idx = np.atleast_1d(np.asarray(index, dtype=np.int64))
        if idx.shape != (self.dim,):
            raise IndexError(f"index must have {self.dim} components, got {index!r}")
        for a, i in enumerate(idx):
            if not 0 <= i < self.cells[a]:
                raise IndexError(f"index {index!r} out of bounds for cells {self.cells}")
        return np.array(
            [self.origin[a] + (idx[a] + 0.5) * self.spacing[a] for a in range(self.dim)]
        )


def cell_center(grid: Grid, index) -> np.ndarray:
    return grid.cell_center(index)


@dataclass
class DensityField:
    """Cell-average densities of ``m`` populations on a grid at time ``time``.

    ``values`` has shape ``(m, *grid.cells)`` in C order, dtype float64.
    """

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == self.grid.dim:  # single population passed bare
            vals = vals[np.newaxis]
        if vals.shape[1:] != self.grid.cells or vals.ndim != self.grid.dim + 1:
            raise ValueError(
                f"values shape {vals.shape} does not match (m, *{self.grid.cells})"
            )
        if vals.shape[0] < 1:
            raise ValueError("need at least one population")
        self.values = np.ascontiguousarray(vals)
        self.time = float(self.time)

    @property
    def populations(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy(), self.time)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    @classmethod
    def zeros(cls, grid: Grid, populations: int = 1, time: float = 0.0) -> "DensityField":
        return cls(grid, np.zeros((populations,) + grid.cells), time)

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        functions: Callable | Sequence[Callable],
        time: float = 0.0,
    ) -> "DensityField":
        """Sample initial data at cell centers (midpoint rule), one callable per
        population.  Each callable receives the meshgrid coordinate arrays."""
        if callable(functions):
            functions = [functions]
        coords = grid.meshgrid()
        vals = np.stack([np.broadcast_to(np.asarray(f(*coords), dtype=np.float64), grid.cells)
                         for f in functions])
        return cls(grid, vals, time)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, as (lower corner, upper corner) coordinate tuples."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def contains(self, other: "BoundingBox") -> bool:
        return all(a <= b for a, b in zip(self.lo, other.lo)) and all(
            a >= b for a, b in zip(self.hi, other.hi)
        )

    def corners(self) -> np.ndarray:
        """All corner points, shape (2**dim, dim)."""
        dim = len(self.lo)
        pts = []
        for mask in range(2**dim):
            pts.append([self.hi[a] if mask & (1 << a) else self.lo[a] for a in range(dim)])
        return np.array(pts)


def total_mass(field: DensityField) -> np.ndarray:
    """Cell-volume weighted sum of each population, shape ``(m,)``.

    Deterministic C-order pairwise summation: repeated calls are bit-identical.
    """
    axes = tuple(range(1, field.grid.dim + 1))
    return field.values.sum(axis=axes) * field.grid.cell_volume


def l1_norm(field: DensityField) -> float:
    """Grid L1 norm, with the Euclidean norm across populations at each cell."""
    if field.populations == 1:
        pointwise = np.abs(field.values[0])
    else:
        pointwise = np.sqrt(np.sum(field.values**2, axis=0))
    return float(pointwise.sum() * field.grid.cell_volume)


def _ball_mask(grid: Grid, center, radius: float) -> np.ndarray:
    coords = grid.meshgrid()
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    d2 = sum((c - center[a]) ** 2 for a, c in enumerate(coords))
    return d2 <= radius * radius


def region_mass(field: DensityField, center, radius: float) -> np.ndarray:
    """Mass of each population over cells whose centers lie in the closed ball."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    mask = _ball_mask(field.grid, center, radius)
    out = np.empty(field.populations)
    for i in range(field.populations):
        out[i] = field.values[i][mask].sum() * field.grid.cell_volume
    return out


def support_bbox(field: DensityField, threshold: float = 0.0) -> list[BoundingBox | None]:
    """Smallest axis-aligned box covering, per population, all cells with
    ``|value| > threshold``; ``None`` when there is no such cell.

    The box covers the full cell extents (center +- spacing/2), so an
    indicator datum is recovered to within one spacing.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    grid = field.grid
    out: list[BoundingBox | None] = []
    for i in range(field.populations):
        idx = np.nonzero(np.abs(field.values[i]) > threshold)
        if idx[0].size == 0:
            out.append(None)
            continue
        lo = []
        hi = []
        for a in range(grid.dim):
            lo.append(grid.origin[a] + idx[a].min() * grid.spacing[a])
            hi.append(grid.origin[a] + (idx[a].max() + 1) * grid.spacing[a])
        out.append(BoundingBox(tuple(lo), tuple(hi)))
    return out
