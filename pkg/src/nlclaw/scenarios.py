"""Experiment descriptions: initial data, configs, presets, run orchestration.

A scenario bundles a grid, a kernel spec, a velocity closure, the scheme
config, an initial-datum spec, the time span with snapshot times, optional
diagnostic balls, and the checks the run must satisfy.  Scenario text is the
flat dotted key-value format; unknown keys are rejected.

Built-in presets cover the library's standard experiments at two sizes:
``desk`` (CI-scale) and ``paper`` (full resolution, long-running):

* ``clusters``     -- seven characteristic-function discs in four widely
                      separated corner groups; each group evolves on its own
                      and keeps its mass.
* ``v1``/``v2``/``v3`` -- the same multi-disc datum under the plain,
                      rotated, and repulsive saturating closures.
* ``stationary``   -- datum supported inside the kernel plateau, so the
                      induced velocity vanishes identically on the support.
* ``crypt1d``      -- scalar signal scrambling on an interval with the odd
                      bump kernel.
* ``crypt2d-a``/``crypt2d-b`` -- image scrambling with the cosine kernel and
                      a rotated saturating closure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .config import KVReader, parse_kv
from .errors import ConfigError, ParseError
from .grid import DensityField, Grid, l1_norm
from .kernels import Kernel, kernel_from_spec
from .nlcd import read_nlcd, write_nlcd
from .scheme import SchemeConfig
from .solver import (
    Ball,
    RunReport,
    check_cluster_independence,
    check_propagation_bound,
    check_symmetry,
    evolve,
)
from .velocity import VelocityModel

__all__ = [
    "Scenario",
    "parse_scenario",
    "preset_text",
    "preset_names",
    "run",
    "disc_sum_datum",
    "sine_box_datum",
    "theta_bumps_datum",
    "floor_rings_datum",
    "quadrants_datum",
]


# ---------------------------------------------------------------------------
# initial data


def disc_sum_datum(grid: Grid, discs) -> DensityField:
    """Sum of disc indicators ``h * 1_{|x - c| < r}`` sampled at cell centers.

    ``discs`` is a sequence of ``(height, center, radius)``; in 1D a disc is
    an interval of half-width ``radius``.
    """
    coords = grid.meshgrid()
    vals = np.zeros(grid.cells)
    for h, center, radius in discs:
        center = np.atleast_1d(np.asarray(center, dtype=np.float64))
        d2 = sum((c - center[a]) ** 2 for a, c in enumerate(coords))
        vals += h * (d2 < radius**2)
    return DensityField(grid, vals[np.newaxis])


def sine_box_datum(
    grid: Grid,
    half_width: float = 0.25,
    base: float = 2.0,
    amplitude: float = 1.0,
    frequency: float = 8.0,
    axis: int = 1,
) -> DensityField:
    """``(base + amplitude * sin(frequency * x_axis))`` on a centered box."""
    coords = grid.meshgrid()
    inside = np.ones(grid.cells, dtype=bool)
    for c in coords:
        inside &= np.abs(c) <= half_width
    vals = (base + amplitude * np.sin(frequency * coords[axis])) * inside
    return DensityField(grid, vals[np.newaxis])


def _theta_bump(x: np.ndarray, a: float, b: float) -> np.ndarray:
    inside = (x >= a) & (x <= b)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = (1 - xi / a) ** 2 * (1 - xi / b) ** 4
    return out


def theta_bumps_datum(grid: Grid, pairs) -> DensityField:
    """Sum of polynomial bumps ``(1 - x/a)^2 (1 - x/b)^4`` on ``[a, b]`` (1D)."""
    if grid.dim != 1:
        raise ValueError("theta_bumps is a 1D datum")
    x = grid.axis_centers(0)
    vals = np.zeros_like(x)
    for a, b in pairs:
        if not a < b:
            raise ValueError(f"need a < b in a bump pair, got ({a}, {b})")
        vals += _theta_bump(x, a, b)
    return DensityField(grid, vals[np.newaxis])


def floor_rings_datum(grid: Grid, radius: float = 4.0, coeffs=(4.0, 3.0)) -> DensityField:
    """Integer plateaus ``floor(c1 sin^2 x1) + floor(c2 sin^2 x2)`` on a disc (2D)."""
    if grid.dim != 2:
        raise ValueError("floor_rings is a 2D datum")
    x, y = grid.meshgrid()
    vals = np.floor(coeffs[0] * np.sin(x) ** 2) + np.floor(coeffs[1] * np.sin(y) ** 2)
    vals *= x**2 + y**2 < radius**2
    return DensityField(grid, vals[np.newaxis])


def quadrants_datum(grid: Grid, heights=(4.0, 1.0, 2.0, 3.0), radius: float = 3.0) -> DensityField:
    """Four-quadrant plateau datum: disc quadrants in I & III, squares in II & IV."""
    if grid.dim != 2:
        raise ValueError("quadrants is a 2D datum")
    x, y = grid.meshgrid()
    inside_disc = x**2 + y**2 < radius**2
    vals = (
        heights[0] * ((x > 0) & (y > 0) & inside_disc)
        + heights[1] * ((x >= -radius) & (x <= 0) & (y >= 0) & (y <= radius))
        + heights[2] * ((x < 0) & (y < 0) & inside_disc)
        + heights[3] * ((x >= 0) & (x <= radius) & (y >= -radius) & (y <= 0))
    )
    return DensityField(grid, vals[np.newaxis])


# ---------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    name: str
    grid: Grid
    kernel_family: str
    kernel_inner: float
    kernel_outer: float
    model: VelocityModel
    scheme: SchemeConfig
    datum: dict
    t_final: float
    snapshot_times: tuple[float, ...] = ()
    balls: tuple[Ball, ...] = ()
    support_threshold: float = 0.0
    checks: dict = dataclass_field(default_factory=dict)

    def build_kernel(self) -> Kernel:
        return kernel_from_spec(
            self.kernel_family, self.kernel_inner, self.kernel_outer, self.grid
        )

    def build_initial(self) -> DensityField:
        kind = self.datum["kind"]
        if kind == "disc_sum":
            return disc_sum_datum(self.grid, self.datum["discs"])
        if kind == "sine_box":
            return sine_box_datum(
                self.grid,
                half_width=self.datum.get("half_width", 0.25),
                base=self.datum.get("base", 2.0),
                amplitude=self.datum.get("amplitude", 1.0),
                frequency=self.datum.get("frequency", 8.0),
                axis=self.datum.get("axis", 1 if self.grid.dim == 2 else 0),
            )
        if kind == "theta_bumps":
            return theta_bumps_datum(self.grid, self.datum["pairs"])
        if kind == "floor_rings":
            return floor_rings_datum(
                self.grid,
                radius=self.datum.get("radius", 4.0),
                coeffs=self.datum.get("coeffs", (4.0, 3.0)),
            )
        if kind == "quadrants":
            return quadrants_datum(
                self.grid,
                heights=self.datum.get("heights", (4.0, 1.0, 2.0, 3.0)),
                radius=self.datum.get("radius", 3.0),
            )
        if kind == "file":
            field = read_nlcd(self.datum["path"])
            if field.grid != self.grid:
                raise ConfigError(
                    f"datum file grid {field.grid} does not match scenario grid"
                )
            return field
        raise ConfigError(f"unknown datum kind {kind!r}")


_DATUM_KINDS = ("disc_sum", "sine_box", "theta_bumps", "floor_rings", "quadrants", "file")


def _parse_groups(text: str, width: int, what: str):
    groups = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        toks = part.split()
        if len(toks) != width:
            raise ParseError(f"{what}: expected {width} numbers per group, got {part!r}")
        groups.append(tuple(float(t) for t in toks))
    if not groups:
        raise ParseError(f"{what}: no groups given")
    return groups


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; unknown keys are rejected."""
    r = KVReader(parse_kv(text))

    name = r.str("name", default="scenario")
    cells = r.ints("grid.cells", required=True)
    lo = r.floats("grid.lo", required=True)
    hi = r.floats("grid.hi", required=True)
    if not (len(cells) == len(lo) == len(hi)):
        raise ParseError("grid.cells, grid.lo, grid.hi must have equal length")
    grid = Grid.over_box(lo, hi, cells)

    family = r.str("kernel.family", required=True,
                   choices={"radial_poly", "bump_1d", "cosine_2d"})
    kernel_inner = r.float("kernel.r", default=0.0)
    kernel_outer = r.float("kernel.l", required=(family != "cosine_2d"),
                           default=1.0 if family == "cosine_2d" else None)

    rotation = r.floats("velocity.rotation")
    if rotation is not None:
        n = grid.dim
        if len(rotation) != n * n:
            raise ParseError(f"velocity.rotation needs {n * n} entries")
        rotation = tuple(tuple(rotation[i * n + j] for j in range(n)) for i in range(n))
    model = VelocityModel(
        variant=r.str("velocity.variant", default="saturating"),
        rotation=rotation,
        sign=r.float("velocity.sign", default=1.0),
    )

    scheme = SchemeConfig(
        flux=r.str("scheme.flux", default="upwind"),
        cfl=r.float("scheme.cfl", default=0.45),
        splitting=r.str("scheme.splitting", default="sequential"),
    )

    kind = r.str("datum.kind", required=True, choices=set(_DATUM_KINDS))
    datum: dict = {"kind": kind}
    if kind == "disc_sum":
        width = 2 + grid.dim
        groups = _parse_groups(r.str("datum.discs", required=True), width, "datum.discs")
        datum["discs"] = [(g[0], g[1:-1], g[-1]) for g in groups]
    elif kind == "theta_bumps":
        groups = _parse_groups(r.str("datum.pairs", required=True), 2, "datum.pairs")
        datum["pairs"] = groups
    elif kind == "sine_box":
        for key, cast in (
            ("half_width", r.float), ("base", r.float), ("amplitude", r.float),
            ("frequency", r.float), ("axis", r.int),
        ):
            val = cast(f"datum.{key}")
            if val is not None:
                datum[key] = val
    elif kind == "floor_rings":
        val = r.float("datum.radius")
        if val is not None:
            datum["radius"] = val
        coeffs = r.floats("datum.coeffs")
        if coeffs is not None:
            datum["coeffs"] = coeffs
    elif kind == "quadrants":
        val = r.float("datum.radius")
        if val is not None:
            datum["radius"] = val
        heights = r.floats("datum.heights")
        if heights is not None:
            datum["heights"] = heights
    elif kind == "file":
        datum["path"] = r.str("datum.path", required=True)

    t_final = r.float("t_final", required=True)
    snapshots = r.floats("snapshots", default=())
    support_threshold = r.float("support.threshold", default=0.0)

    balls = []
    idx = 1
    while r.has(f"ball.{idx}"):
        vals = r.floats(f"ball.{idx}")
        if len(vals) != grid.dim + 1:
            raise ParseError(f"ball.{idx}: expected center then radius")
        balls.append(Ball(tuple(vals[:-1]), vals[-1]))
        idx += 1

    checks: dict = {}
    if r.bool("check.mass", default=False):
        checks["mass"] = {"rtol": r.float("check.mass_rtol", default=1e-10)}
    if r.bool("check.stationary", default=False):
        checks["stationary"] = {"rtol": r.float("check.stationary_rtol", default=1e-12)}
    if r.bool("check.clusters", default=False):
        checks["clusters"] = {"rtol": r.float("check.clusters_rtol", default=1e-8)}
    if r.bool("check.propagation", default=False):
        center = r.floats("check.propagation_center", required=True)
        radius = r.float("check.propagation_radius", required=True)
        checks["propagation"] = {"center": center, "radius": radius}
    sym = r.str("check.symmetry")
    if sym is not None:
        checks["symmetry"] = {"map": sym, "tol": r.float("check.symmetry_tol", default=1e-10)}

    r.reject_unknown()

    scenario = Scenario(
        name=name,
        grid=grid,
        kernel_family=family,
        kernel_inner=kernel_inner,
        kernel_outer=kernel_outer,
        model=model,
        scheme=scheme,
        datum=datum,
        t_final=t_final,
        snapshot_times=tuple(snapshots),
        balls=tuple(balls),
        support_threshold=support_threshold,
        checks=checks,
    )
    if checks.get("clusters") and not balls:
        raise ParseError("check.clusters requires at least one ball.N entry")
    return scenario


# ---------------------------------------------------------------------------
# presets

# Seven-disc fragmentation datum: four groups, one per domain corner.
_CLUSTER_DISCS = (
    "1.0 -2.0 2.0 0.2 ; 1.0 -1.8 1.5 0.8 ; "
    "0.5 2.0 2.0 0.5 ; 0.75 1.0 1.5 0.5 ; 1.0 2.0 1.0 0.25 ; "
    "0.5 -1.0 -1.5 0.6 ; 2.5 2.0 -2.0 0.3"
)

# Multi-disc datum for the closure-comparison runs.
_VCOMP_DISCS = (
    "1.0 -1.5 1.5 0.7 ; 0.8 1.5 1.8 0.5 ; 1.2 1.8 -1.2 0.6 ; "
    "0.6 -1.6 -1.8 0.5 ; 1.0 0.0 0.0 0.4"
)


def _vcomp_preset(resolution: str, variant_line: str, name: str) -> str:
    n = 200 if resolution == "desk" else 3000
    return f"""
name = {name}
grid.cells = {n} {n}
grid.lo = -4 -4
grid.hi = 4 4
kernel.family = radial_poly
kernel.r = 0.6
kernel.l = 1.5
{variant_line}
scheme.flux = lax_friedrichs
scheme.cfl = 0.45
datum.kind = disc_sum
datum.discs = {_VCOMP_DISCS}
t_final = 1.0
snapshots = 0.5
"""


def _presets(resolution: str) -> dict[str, str]:
    if resolution not in ("desk", "paper"):
        raise ConfigError(f"resolution must be desk or paper, got {resolution!r}")
    n_cl = 500 if resolution == "desk" else 7000
    flux_cl = "upwind" if resolution == "desk" else "lax_friedrichs"
    n_st = 200 if resolution == "desk" else 1000
    n_c1 = 10_000 if resolution == "desk" else 100_000
    n_ca = 250 if resolution == "desk" else 8000
    n_cb = 200 if resolution == "desk" else 8000
    return {
        "clusters": f"""
name = clusters
grid.cells = {n_cl} {n_cl}
grid.lo = -3 -3
grid.hi = 3 3
kernel.family = radial_poly
kernel.r = 0.5
kernel.l = 0.8
velocity.variant = saturating
scheme.flux = {flux_cl}
scheme.cfl = 0.45
datum.kind = disc_sum
datum.discs = {_CLUSTER_DISCS}
t_final = 2.0
snapshots = 0.5 1.0 1.5
ball.1 = -1.8 1.5 0.8
ball.2 = 1.6 1.6 1.15
ball.3 = -1.0 -1.5 0.6
ball.4 = 2.0 -2.0 0.3
check.mass = true
check.clusters = true
check.propagation = true
check.propagation_center = 0 0
# covers the corners of the initial support bounding box
check.propagation_radius = 3.62
""",
        "v1": _vcomp_preset(resolution, "velocity.variant = saturating", "v1"),
        "v2": _vcomp_preset(
            resolution,
            "velocity.variant = rotated_saturating\nvelocity.rotation = 0 1 -1 0",
            "v2",
        ),
        "v3": _vcomp_preset(resolution, "velocity.variant = negated_saturating", "v3"),
        "stationary": f"""
name = stationary
grid.cells = {n_st} {n_st}
grid.lo = -0.5 -0.5
grid.hi = 0.5 0.5
kernel.family = radial_poly
kernel.r = 0.8
kernel.l = 1.5
velocity.variant = identity
scheme.flux = upwind
scheme.cfl = 0.45
datum.kind = sine_box
t_final = 1.0
snapshots = 0.5
check.stationary = true
check.mass = true
""",
        "crypt1d": f"""
name = crypt1d
grid.cells = {n_c1}
grid.lo = -1
grid.hi = 1
kernel.family = bump_1d
kernel.l = 0.25
velocity.variant = saturating
scheme.flux = upwind
scheme.cfl = 0.9
datum.kind = theta_bumps
datum.pairs = -0.8 -0.2 ; -0.4 0.4 ; 0.2 0.8
t_final = 3.0
check.mass = true
""",
        "crypt2d-a": f"""
name = crypt2d-a
grid.cells = {n_ca} {n_ca}
grid.lo = -5 -5
grid.hi = 5 5
kernel.family = cosine_2d
velocity.variant = rotated_saturating
velocity.rotation = 0 -1 1 0
scheme.flux = upwind
scheme.cfl = 0.9
datum.kind = floor_rings
datum.radius = 4.0
t_final = 0.25
check.mass = true
""",
        "crypt2d-b": f"""
name = crypt2d-b
grid.cells = {n_cb} {n_cb}
grid.lo = -4 -4
grid.hi = 4 4
kernel.family = cosine_2d
velocity.variant = rotated_saturating
velocity.rotation = 0 -1 1 0
scheme.flux = upwind
scheme.cfl = 0.9
datum.kind = quadrants
datum.radius = 3.0
t_final = 0.25
check.mass = true
""",
    }


def preset_names() -> list[str]:
    return sorted(_presets("desk"))


def preset_text(name: str, resolution: str = "desk") -> str:
    presets = _presets(resolution)
    if name not in presets:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(presets))}"
        )
    return presets[name]


# ---------------------------------------------------------------------------
# run orchestration


def _bbox_cols(boxes, dim: int):
    cols = []
    for box in boxes:
        if box is None:
            cols.extend([""] * (2 * dim))
        else:
            cols.extend(repr(float(v)) for v in box.lo)
            cols.extend(repr(float(v)) for v in box.hi)
    return cols


def write_report_csv(path, report: RunReport, populations: int) -> None:
    dim = report.grid.dim
    headers = ["time"]
    headers += [f"mass_{i}" for i in range(populations)]
    for i in range(populations):
        headers += [f"bbox{i}_lo{a}" for a in range(dim)]
        headers += [f"bbox{i}_hi{a}" for a in range(dim)]
    for b in range(len(report.balls)):
        headers += [f"ball{b}_mass_{i}" for i in range(populations)]
    headers += [f"boundary_loss_{i}" for i in range(populations)]
    lines = [",".join(headers)]
    for k, t in enumerate(report.times):
        row = [repr(float(t))]
        row += [repr(float(v)) for v in report.mass_series[k]]
        row += _bbox_cols(report.support_series[k], dim)
        if report.balls:
            row += [repr(float(v)) for v in report.region_mass_series[k].ravel()]
        row += [repr(float(v)) for v in report.boundary_loss_series[k]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def run(scenario: Scenario, output_dir, method: str = "auto") -> int:
    """Run a scenario: write NLCD snapshots, report CSV, check summary.

    Returns 0 exactly when every configured check passed.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    initial = scenario.build_initial()
    kernel = scenario.build_kernel()
    snapshots, report = evolve(
        initial,
        kernel,
        scenario.model,
        scenario.scheme,
        t_final=scenario.t_final,
        snapshot_times=scenario.snapshot_times,
        diagnostic_balls=scenario.balls,
        support_threshold=scenario.support_threshold,
        method=method,
    )

    for k, snap in enumerate(snapshots):
        write_nlcd(out / f"{scenario.name}_{k:03d}.nlcd", snap)
    write_report_csv(out / f"{scenario.name}_report.csv", report, initial.populations)

    results: dict[str, dict] = {}
    if "mass" in scenario.checks:
        drift = report.mass_drift()
        rtol = scenario.checks["mass"]["rtol"]
        results["mass"] = {"passed": drift <= rtol, "drift": drift, "rtol": rtol}
    if "stationary" in scenario.checks:
        rtol = scenario.checks["stationary"]["rtol"]
        scale = l1_norm(initial)
        dev = max(
            l1_norm(DensityField(initial.grid, s.values - initial.values))
            for s in snapshots
        )
        results["stationary"] = {
            "passed": dev <= rtol * scale,
            "deviation": dev,
            "bound": rtol * scale,
        }
    if "clusters" in scenario.checks:
        rtol = scenario.checks["clusters"]["rtol"]
        per_ball = check_cluster_independence(
            report,
            scenario.balls,
            (min(report.times), max(report.times)),
            scenario.kernel_outer,
            mass_rtol=rtol,
        )
        results["clusters"] = {
            "passed": all(c.passed for c in per_ball),
            "balls": [
                {"passed": c.passed, "margin": c.margin, "detail": c.detail}
                for c in per_ball
            ],
        }
    if "propagation" in scenario.checks:
        spec = scenario.checks["propagation"]
        res = check_propagation_bound(report, spec["center"], spec["radius"])
        results["propagation"] = {"passed": res.passed, "margin": res.margin}
    if "symmetry" in scenario.checks:
        spec = scenario.checks["symmetry"]
        worst = max(check_symmetry(s, spec["map"]) for s in snapshots)
        results["symmetry"] = {
            "passed": worst <= spec["tol"],
            "asymmetry": worst,
            "tol": spec["tol"],
        }

    summary = {
        "scenario": scenario.name,
        "steps_taken": report.steps_taken,
        "velocity_bound_W": report.velocity_bound_W,
        "boundary_mass_lost": [float(v) for v in report.boundary_mass_lost],
        "checks": results,
        "all_passed": all(res["passed"] for res in results.values()),
    }
    (out / f"{scenario.name}_checks.json").write_text(json.dumps(summary, indent=2))
    return 0 if summary["all_passed"] else 1
