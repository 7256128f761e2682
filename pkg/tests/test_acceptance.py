"""End-to-end acceptance checks, one test per criterion.

Each test prints one PASS/FAIL line (run with ``pytest -s`` or ``-v`` to see
them).  The full-resolution signal roundtrip is marked ``slow``; everything
else is desk-scale.
"""

import time

import numpy as np
import pytest

from nlclaw import (
    CryptKey,
    DensityField,
    Grid,
    SchemeConfig,
    VelocityModel,
    assemble_velocity,
    build_bump_kernel_1d,
    build_radial_kernel,
    check_cluster_independence,
    check_propagation_bound,
    check_symmetry,
    decrypt,
    encrypt,
    evolve,
    l1_norm,
    picard_solve,
    roundtrip_report,
    support_bbox,
)
from nlclaw.scenarios import parse_scenario, preset_text
from nlclaw.scheme import advance, cfl_timestep


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def signal_payload(grid: Grid) -> DensityField:
    x = grid.axis_centers(0)

    def theta(a, b):
        return np.where((x >= a) & (x <= b), (1 - x / a) ** 2 * (1 - x / b) ** 4, 0.0)

    vals = theta(-0.8, -0.2) + theta(-0.4, 0.4) + theta(0.2, 0.8)
    return DensityField(grid, vals[np.newaxis])


def signal_roundtrip(n_cells: int):
    grid = Grid.over_box([-1.0], [1.0], [n_cells])
    key = CryptKey(
        "bump_1d", 0.0, 0.25, VelocityModel("saturating"), 3.0, grid, cfl=0.9
    )
    payload = signal_payload(grid)
    cipher = encrypt(payload, key)
    return roundtrip_report(payload, decrypt(cipher, key), cipher)


@pytest.fixture(scope="module")
def clusters_run():
    scenario = parse_scenario(preset_text("clusters", "desk"))
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
    )
    return scenario, initial, snapshots, report


class TestCryptRoundtrip:
    def test_desk_scale_ladder(self):
        t0 = time.time()
        errors = {}
        for n in (2500, 5000, 10_000):
            t_run = time.time()
            errors[n] = (signal_roundtrip(n).relative_error, time.time() - t_run)
        err_ladder = [errors[n][0] for n in (2500, 5000, 10_000)]
        ok = (
            err_ladder[0] > err_ladder[1] > err_ladder[2]
            and err_ladder[2] <= 2e-2
            and errors[10_000][1] <= 60.0
        )
        verdict(
            "crypt roundtrip (desk)",
            ok,
            f"errors {['%.3e' % e for e in err_ladder]} monotone, "
            f"1e4-cell run {errors[10_000][1]:.1f}s, total {time.time() - t0:.1f}s",
        )

    @pytest.mark.slow
    def test_full_resolution(self):
        t0 = time.time()
        rep = signal_roundtrip(100_000)
        elapsed = time.time() - t0
        ok = 2e-4 <= rep.relative_error <= 5e-3 and elapsed <= 1800.0
        verdict(
            "crypt roundtrip (1e5 cells)",
            ok,
            f"relative L1 error {rep.relative_error:.4e} in [2e-4, 5e-3], "
            f"runtime {elapsed:.0f}s <= 1800s",
        )


class TestMassConservation:
    def test_interior_support_presets(self, clusters_run):
        _, _, _, clusters_report = clusters_run
        drifts = {"clusters": clusters_report.mass_drift()}

        stationary = parse_scenario(preset_text("stationary", "desk"))
        _, rep = evolve(
            stationary.build_initial(),
            stationary.build_kernel(),
            stationary.model,
            stationary.scheme,
            t_final=stationary.t_final,
        )
        drifts["stationary"] = rep.mass_drift()

        grid = Grid.over_box([-1.0], [1.0], [10_000])
        kernel = build_bump_kernel_1d(0.25).build_stencil(grid)
        _, rep = evolve(
            signal_payload(grid),
            kernel,
            VelocityModel("saturating"),
            SchemeConfig(cfl=0.9),
            t_final=3.0,
        )
        drifts["crypt1d"] = rep.mass_drift()

        ok = all(d <= 1e-10 for d in drifts.values())
        verdict(
            "mass conservation",
            ok,
            ", ".join(f"{k} drift {v:.2e}" for k, v in drifts.items()),
        )


class TestStationarity:
    def test_plateau_datum_stays_put(self):
        scenario = parse_scenario(preset_text("stationary", "desk"))
        assert scenario.grid.cells == (200, 200)
        initial = scenario.build_initial()
        snapshots, _ = evolve(
            initial,
            scenario.build_kernel(),
            scenario.model,
            scenario.scheme,
            t_final=1.0,
            snapshot_times=[0.25, 0.5, 0.75],
        )
        dev = max(
            l1_norm(DensityField(scenario.grid, s.values - initial.values))
            for s in snapshots
        )
        bound = 1e-12 * l1_norm(initial)
        verdict(
            "stationarity",
            dev <= bound,
            f"sup_t L1 deviation {dev:.2e} <= {bound:.2e}",
        )


class TestPositivity:
    def test_randomized_data_fifty_seeds(self):
        grid = Grid.over_box([-1.0], [1.0], [128])
        kernel = build_radial_kernel(0.1, 0.3, grid=grid)
        model = VelocityModel("saturating")
        cfg = SchemeConfig("upwind", cfl=0.45)
        worst = np.inf
        for seed in range(50):
            rng = np.random.default_rng(seed)
            field = DensityField(grid, rng.random((1, 128)))
            for _ in range(100):
                v = assemble_velocity(field, kernel, model)
                dt = cfl_timestep(v, grid, cfg.cfl)
                field, _ = advance(field, v, dt, cfg)
            worst = min(worst, float(field.values.min()))
        verdict(
            "positivity",
            worst >= 0.0,
            f"min value over 50 seeds x 100 steps = {worst!r}",
        )


class TestFiniteSpeed:
    def test_clusters_support_cone(self, clusters_run):
        scenario, initial, _, report = clusters_run
        box0 = support_bbox(initial, 0.0)[0]
        radius0 = float(np.max(np.linalg.norm(box0.corners(), axis=1)))
        res = check_propagation_bound(report, (0.0, 0.0), radius0)
        verdict(
            "finite propagation speed",
            res.passed,
            f"W = {report.velocity_bound_W:.2f}, worst margin {res.margin:.3f}",
        )


class TestClusterIndependence:
    def test_four_corner_groups(self, clusters_run):
        scenario, _, _, report = clusters_run
        results = check_cluster_independence(
            report,
            scenario.balls,
            (0.0, scenario.t_final),
            interaction_radius=scenario.kernel_outer,
            mass_rtol=1e-8,
        )
        ok = all(r.passed for r in results)
        verdict(
            "cluster independence",
            ok,
            "; ".join(f"ball {i}: {r.detail}" for i, r in enumerate(results)),
        )


class TestSymmetry:
    def test_quarter_turn_invariance(self):
        grid = Grid.centered([1.0, 1.0], [200, 200])
        xx, yy = grid.meshgrid()
        disc = (xx**2 + yy**2 < 0.45**2).astype(float)
        initial = DensityField(grid, disc[np.newaxis])
        kernel = build_radial_kernel(0.3, 0.6, grid=grid)
        snapshots, _ = evolve(
            initial,
            kernel,
            VelocityModel("saturating"),
            SchemeConfig(splitting="symmetrized"),
            t_final=0.5,
            snapshot_times=[0.25],
        )
        moved = l1_norm(DensityField(grid, snapshots[-1].values - initial.values))
        worst = max(check_symmetry(s, "rot90") for s in snapshots)
        ok = worst <= 1e-10 and moved > 0.1  # the field genuinely evolves
        verdict(
            "quarter-turn symmetry",
            ok,
            f"asymmetry {worst:.2e} <= 1e-10 while L1 change is {moved:.2f}",
        )


class TestOracleEquivalence:
    def test_fixed_point_vs_finite_volume_order(self):
        def datum(grid):
            x = grid.axis_centers(0)
            u = x / 0.6
            bump = np.where(
                np.abs(u) < 1, np.exp(-1.0 / (1.0 - np.minimum(u * u, 0.999999))), 0.0
            )
            return DensityField(grid, (4.0 * bump)[np.newaxis])

        model = VelocityModel("saturating")
        errs, dxs, gaps = [], [], []
        for n, samples in ((500, 16), (1000, 32), (2000, 64)):
            grid = Grid.over_box([-1.0], [1.0], [n])
            kernel = build_bump_kernel_1d(0.25).build_stencil(grid)
            rho0 = datum(grid)
            res = picard_solve(rho0, kernel, model, 0.2, 6, time_samples=samples)
            snaps, _ = evolve(rho0, kernel, model, SchemeConfig(cfl=0.9), 0.2)
            diff = float(
                np.abs(snaps[-1].values - res.field.values).sum() * grid.cell_volume
            )
            errs.append(diff)
            dxs.append(grid.spacing[0])
            gaps.append(res.gaps[-1])
        order = float(np.polyfit(np.log(dxs), np.log(errs), 1)[0])
        ok = (
            all(g <= 1e-6 for g in gaps)
            and errs[0] > errs[1] > errs[2]
            and order >= 0.8
        )
        verdict(
            "oracle equivalence",
            ok,
            f"L1 discrepancies {['%.3e' % e for e in errs]}, order {order:.2f}, "
            f"max fixed-point gap {max(gaps):.1e}",
        )


class TestDataStability:
    def test_nearby_data_stay_nearby(self):
        grid = Grid.over_box([-1.0], [1.0], [2500])
        x = grid.axis_centers(0)
        base = signal_payload(grid)
        pert = np.where(np.abs(x - 0.1) < 0.1, (1 - ((x - 0.1) / 0.1) ** 2) ** 2, 0.0)
        pert *= 1e-3 / (np.abs(pert).sum() * grid.spacing[0])
        other = DensityField(grid, base.values + pert[np.newaxis])
        delta0 = l1_norm(DensityField(grid, other.values - base.values))

        kernel = build_bump_kernel_1d(0.25).build_stencil(grid)
        model = VelocityModel("saturating")
        cfg = SchemeConfig(cfl=0.9)
        end_a, _ = evolve(base, kernel, model, cfg, t_final=1.0)
        end_b, _ = evolve(other, kernel, model, cfg, t_final=1.0)
        delta_t = l1_norm(
            DensityField(grid, end_b[-1].values - end_a[-1].values)
        )
        ok = delta_t <= 50.0 * delta0
        verdict(
            "data stability",
            ok,
            f"initial L1 gap {delta0:.2e} grows to {delta_t:.2e} "
            f"(factor {delta_t / delta0:.1f} <= 50)",
        )
