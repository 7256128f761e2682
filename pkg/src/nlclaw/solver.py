"""Time-loop driver: forward/backward evolution, diagnostics, checks.

Backward evolution reuses the forward stepper with the closure's sign
negated and time relabeled to decrease: orbits of the sign-flipped flow are
the forward orbits traversed in reverse, which is what makes the
encrypt/decrypt workflow possible.

During a run the driver records, at the requested snapshot times, per
population: total mass, support bounding box, mass inside each configured
diagnostic ball, and the largest |density| outside the union of those balls
inflated by two spacings.  Snapshot times are hit exactly by truncating the
adaptive step, never by interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ConfigError
from .grid import (
    BoundingBox,
    DensityField,
    Grid,
    l1_norm,
    region_mass,
    support_bbox,
    total_mass,
)
from .kernels import Kernel
from .scheme import SchemeConfig, advance, cfl_timestep
from .velocity import VelocityModel, assemble_velocity

__all__ = [
    "Ball",
    "RunReport",
    "evolve",
    "check_propagation_bound",
    "check_cluster_independence",
    "check_symmetry",
]


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))


@dataclass
class RunReport:
    """Diagnostic time series of one evolution.

    ``times`` is strictly monotone in the direction of integration.  Series
    are indexed ``[time][population]``; ``region_mass_series`` additionally
    by ball.  ``velocity_bound_W`` is the a-priori support growth speed
    ``L_V * sup|grad eta| * |rho_0|_L1``.
    """

    grid: Grid
    times: list[float] = dataclass_field(default_factory=list)
    mass_series: list[np.ndarray] = dataclass_field(default_factory=list)
    support_series: list[list[BoundingBox | None]] = dataclass_field(default_factory=list)
    region_mass_series: list[np.ndarray] = dataclass_field(default_factory=list)
    outside_balls_max: list[float] = dataclass_field(default_factory=list)
    boundary_loss_series: list[np.ndarray] = dataclass_field(default_factory=list)
    balls: tuple[Ball, ...] = ()
    velocity_bound_W: float = 0.0
    steps_taken: int = 0
    boundary_mass_lost: np.ndarray | None = None
    support_threshold: float = 0.0

    @property
    def t0(self) -> float:
        return self.times[0]

    def mass_drift(self) -> float:
        """Largest relative drift of any population's mass over the run."""
        m0 = self.mass_series[0]
        scale = np.maximum(np.abs(m0), 1e-300)
        return float(
            max(np.max(np.abs(m - m0) / scale) for m in self.mass_series)
        )


def _outside_union_max(field: DensityField, balls, slack: float) -> float:
    coords = field.grid.meshgrid()
    inside = np.zeros(field.grid.cells, dtype=bool)
    for b in balls:
        d2 = sum((c - b.center[a]) ** 2 for a, c in enumerate(coords))
        inside |= d2 <= (b.radius + slack) ** 2
    outside = ~inside
    if not outside.any():
        return 0.0
    return float(np.max(np.abs(field.values[:, outside])))


def _record(report: RunReport, field: DensityField):
    report.times.append(field.time)
    report.mass_series.append(total_mass(field))
    report.support_series.append(support_bbox(field, report.support_threshold))
    report.boundary_loss_series.append(np.array(report.boundary_mass_lost))
    if report.balls:
        report.region_mass_series.append(
            np.stack([region_mass(field, b.center, b.radius) for b in report.balls])
        )
        slack = 2.0 * max(field.grid.spacing)
        report.outside_balls_max.append(
            _outside_union_max(field, report.balls, slack)
        )


def evolve(
    initial: DensityField,
    kernel: Kernel,
    model: VelocityModel,
    cfg: SchemeConfig,
    t_final: float,
    snapshot_times=(),
    diagnostic_balls=(),
    support_threshold: float = 0.0,
    method: str = "auto",
) -> tuple[list[DensityField], RunReport]:
    """Integrate from ``initial.time`` to ``t_final`` in either direction.

    Returns the snapshots (initial state, each requested time inside the
    span, and the final state) together with the diagnostic report.
    ``t_final < initial.time`` runs the time-reversed dynamics: same loop,
    closure sign negated, time stamps decreasing.
    """
    if kernel.stencil is None or not kernel.stencil.matches(initial.grid):
        kernel.build_stencil(initial.grid)
    t0 = initial.time
    direction = 1.0 if t_final >= t0 else -1.0
    eff_model = model if direction > 0 else model.negated()

    balls = tuple(
        b if isinstance(b, Ball) else Ball(tuple(b[0]) if np.ndim(b[0]) else (b[0],), b[1])
        for b in diagnostic_balls
    )
    report = RunReport(
        grid=initial.grid,
        balls=balls,
        velocity_bound_W=model.lipschitz_bound * kernel.grad_sup() * l1_norm(initial),
        support_threshold=support_threshold,
        boundary_mass_lost=np.zeros(initial.populations),
    )

    events = sorted(
        {float(s) for s in snapshot_times if (s - t0) * direction > 0 and (t_final - s) * direction > 0},
        key=lambda s: (s - t0) * direction,
    )
    events.append(float(t_final))

    field = initial.copy()
    snapshots = [field.copy()]
    _record(report, field)
    if t_final == t0:
        return snapshots, report

    # the loop advances the elapsed span tau, identical for both directions,
    # so forward and backward runs of the same dynamics take bit-identical
    # step sequences; time labels are derived from tau
    span = abs(t_final - t0)
    tau = 0.0
    for target in events:
        tau_target = (target - t0) * direction
        while True:
            remaining = tau_target - tau
            if remaining <= 1e-14 * max(span, 1.0):
                field.time = target  # land exactly, never overshoot
                break
            v = assemble_velocity(field, kernel, eff_model, method=method)
            dt = cfl_timestep(v, field.grid, cfg.cfl)
            dt = min(dt, remaining)
            field, loss = advance(field, v, dt, cfg)
            tau = tau + dt
            field.time = t0 + direction * tau
            report.steps_taken += 1
            report.boundary_mass_lost += loss
            if report.steps_taken % 64 == 0 and not field.is_finite():
                raise FloatingPointError(
                    f"non-finite density at t={field.time:.6g} "
                    f"after {report.steps_taken} steps"
                )
        if not field.is_finite():
            raise FloatingPointError(f"non-finite density at t={field.time:.6g}")
        snapshots.append(field.copy())
        _record(report, field)
    return snapshots, report


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    margin: float
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def check_propagation_bound(report: RunReport, center, radius: float) -> CheckResult:
    """Verify supports stay inside the a-priori cone ``B(x0, r + W |t - t0|)``.

    The initial support must lie in the given ball.  Two spacings of slack
    absorb cell-extent rounding.  Returns the worst-case margin (allowed
    radius minus attained radius); negative margin means failure.
    """
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    slack = 2.0 * max(report.grid.spacing)
    worst = np.inf
    for t, boxes in zip(report.times, report.support_series):
        allowed = radius + report.velocity_bound_W * abs(t - report.t0) + slack
        for box in boxes:
            if box is None:
                continue
            reach = float(np.max(np.linalg.norm(box.corners() - center, axis=1)))
            worst = min(worst, allowed - reach)
    if worst is np.inf:
        worst = radius  # empty support at all times
    return CheckResult(worst >= 0.0, float(worst))


def check_cluster_independence(
    report: RunReport,
    balls,
    t_range: tuple[float, float],
    interaction_radius: float,
    mass_rtol: float = 1e-8,
) -> list[CheckResult]:
    """Per-ball mass constancy and support confinement for separated groups.

    Preconditions: the balls must be the ones the run recorded diagnostics
    for, and pairwise separated by strictly more than ``r_h + r_j + l``
    where ``l`` is the kernel interaction radius.
    """
    balls = tuple(b if isinstance(b, Ball) else Ball(*b) for b in balls)
    if balls != report.balls:
        raise ConfigError("balls differ from the ones recorded in the report")
    for h in range(len(balls)):
        for j in range(h + 1, len(balls)):
            d = float(np.linalg.norm(np.subtract(balls[h].center, balls[j].center)))
            need = balls[h].radius + balls[j].radius + interaction_radius
            if not d > need:
                raise ConfigError(
                    f"balls {h} and {j} violate separation: "
                    f"distance {d:.6g} <= r_h + r_j + l = {need:.6g}"
                )
    lo, hi = min(t_range), max(t_range)
    sel = [k for k, t in enumerate(report.times) if lo - 1e-12 <= t <= hi + 1e-12]
    if not sel:
        raise ConfigError("t_range contains no recorded snapshot times")

    out: list[CheckResult] = []
    confinement_ok = all(report.outside_balls_max[k] == 0.0 for k in sel)
    worst_outside = max(report.outside_balls_max[k] for k in sel)
    for b_idx in range(len(balls)):
        ref = report.region_mass_series[sel[0]][b_idx]
        scale = np.maximum(np.abs(ref), 1e-300)
        drift = max(
            float(np.max(np.abs(report.region_mass_series[k][b_idx] - ref) / scale))
            for k in sel
        )
        ok = drift <= mass_rtol and confinement_ok
        out.append(
            CheckResult(
                ok,
                mass_rtol - drift,
                f"mass drift {drift:.3e}, max density outside union {worst_outside:.3e}",
            )
        )
    return out


_SYMMETRIES_2D = ("rot90", "rot180", "rot270", "flip0", "flip1", "transpose")


def _require_centered(grid: Grid, axes):
    for a in axes:
        mid = grid.origin[a] + 0.5 * grid.extent[a]
        if abs(mid) > 1e-12 * max(1.0, abs(grid.extent[a])):
            raise ValueError(
                f"grid is not centered on axis {a}; symmetry would not map "
                "cell centers to cell centers"
            )


def check_symmetry(field: DensityField, symmetry: str) -> float:
    """Max pointwise deviation of the field from its image under a grid map.

    Supported maps: ``flip`` (1D), and in 2D ``flip0``, ``flip1``,
    ``rot90``, ``rot180``, ``rot270``, ``transpose``.  The grid must be
    centered about the coordinate origin (and square for the rotations and
    the transposition) so that cell centers map onto cell centers.
    """
    grid = field.grid
    if grid.dim == 1:
        if symmetry != "flip":
            raise ValueError(f"unknown 1D symmetry {symmetry!r}")
        _require_centered(grid, [0])
        mapped = field.values[:, ::-1]
    else:
        if symmetry not in _SYMMETRIES_2D:
            raise ValueError(f"unknown 2D symmetry {symmetry!r}")
        if symmetry in ("flip0",):
            _require_centered(grid, [0])
            mapped = field.values[:, ::-1, :]
        elif symmetry in ("flip1",):
            _require_centered(grid, [1])
            mapped = field.values[:, :, ::-1]
        else:
            _require_centered(grid, [0, 1])
            if grid.cells[0] != grid.cells[1] or grid.spacing[0] != grid.spacing[1]:
                raise ValueError(f"symmetry {symmetry!r} needs a square grid")
            if symmetry == "rot180":
                mapped = field.values[:, ::-1, ::-1]
            elif symmetry == "transpose":
                mapped = np.swapaxes(field.values, 1, 2)
            else:
                k = 1 if symmetry == "rot90" else 3
                mapped = np.rot90(field.values, k=k, axes=(1, 2))
    return float(np.max(np.abs(field.values - mapped)))
