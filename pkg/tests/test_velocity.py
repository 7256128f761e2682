import numpy as np
import pytest

from nlclaw import (
    DensityField,
    Grid,
    VelocityModel,
    assemble_velocity,
    build_radial_kernel,
    convolve_gradient,
    eval_velocity,
    l1_norm,
)
from nlclaw.scenarios import sine_box_datum

ROT_CCW = ((0.0, -1.0), (1.0, 0.0))
ROT_CW = ((0.0, 1.0), (-1.0, 0.0))


class TestEvalVelocity:
    @pytest.mark.parametrize(
        "model",
        [
            VelocityModel("saturating"),
            VelocityModel("negated_saturating"),
            VelocityModel("identity"),
            VelocityModel("rotated_saturating", rotation=ROT_CW),
        ],
    )
    def test_zero_maps_to_zero(self, model):
        w = np.zeros((2, 3))
        assert np.all(eval_velocity(model, w) == 0.0)

    def test_saturating_unit_vector(self):
        v = eval_velocity(VelocityModel("saturating"), np.array([[1.0], [0.0]]))
        assert v[:, 0] == pytest.approx([1 / np.sqrt(2), 0.0])

    def test_rotated_saturating(self):
        model = VelocityModel("rotated_saturating", rotation=ROT_CW)
        v = eval_velocity(model, np.array([[1.0], [0.0]]))
        assert v[:, 0] == pytest.approx([0.0, -1 / np.sqrt(2)])

    def test_negated_is_minus_saturating(self):
        rng = np.random.default_rng(0)
        w = rng.standard_normal((2, 2, 5))
        plus = eval_velocity(VelocityModel("saturating"), w)
        minus = eval_velocity(VelocityModel("negated_saturating"), w)
        assert np.array_equal(minus, -plus)

    def test_identity(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((1, 1, 7))
        assert np.array_equal(eval_velocity(VelocityModel("identity"), w), w)

    def test_sign_flip(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal((2, 1))
        m = VelocityModel("saturating")
        assert np.array_equal(
            eval_velocity(m.negated(), w), -eval_velocity(m, w)
        )

    def test_saturating_norm_below_one(self):
        rng = np.random.default_rng(3)
        for scale in (0.1, 1.0, 100.0):
            w = scale * rng.standard_normal((2, 3))
            v = eval_velocity(VelocityModel("saturating"), w)
            assert np.linalg.norm(v) < 1.0

    def test_frobenius_norm_convention(self):
        # saturation uses the joint norm over axes and populations
        w = np.array([[3.0, 0.0], [0.0, 4.0]])  # Frobenius norm 5
        v = eval_velocity(VelocityModel("saturating"), w)
        assert v == pytest.approx(w / np.sqrt(26.0))

    def test_rotation_validation(self):
        with pytest.raises(ValueError, match="orthogonal"):
            VelocityModel("rotated_saturating", rotation=((1.0, 0.1), (0.0, 1.0)))
        with pytest.raises(ValueError):
            VelocityModel("rotated_saturating")  # rotation missing
        with pytest.raises(ValueError):
            VelocityModel("spiral")
        with pytest.raises(ValueError):
            VelocityModel("saturating", sign=0.5)

    def test_lipschitz_bound(self):
        assert VelocityModel("identity").lipschitz_bound == 1.0
        assert VelocityModel("saturating").lipschitz_bound == 1.0


class TestAssembleVelocity:
    def test_zero_density(self):
        g = Grid.centered([1.0, 1.0], [32, 32])
        kern = build_radial_kernel(0.1, 0.3, grid=g)
        v = assemble_velocity(DensityField.zeros(g), kern, VelocityModel("saturating"))
        assert np.all(v.values == 0.0)
        assert v.max_speed(0) == 0.0

    def test_constant_ball_center_velocity_vanishes(self):
        g = Grid.centered([1.0, 1.0], [100, 100])
        kern = build_radial_kernel(0.05, 0.2, grid=g)
        xx, yy = g.meshgrid()
        f = DensityField(g, (xx**2 + yy**2 < 0.64).astype(float)[None])
        v = assemble_velocity(f, kern, VelocityModel("saturating"), method="direct")
        assert np.max(np.abs(v.values[:, :, 50, 50])) < 1e-13

    def test_plateau_datum_velocity_exactly_zero_on_support(self):
        # datum diameter below the kernel plateau radius: zero velocity,
        # exactly, on every support cell (analytic gradient sampling)
        g = Grid.centered([0.5, 0.5], [100, 100])
        kern = build_radial_kernel(0.8, 1.5, grid=g)
        f = sine_box_datum(g)
        v = assemble_velocity(f, kern, VelocityModel("identity"), method="direct")
        support = f.values[0] != 0.0
        assert np.all(v.values[0, 0][support] == 0.0)
        assert np.all(v.values[1, 0][support] == 0.0)
        # but the flow is not trivial everywhere: off-support cells move
        assert np.max(np.abs(v.values)) > 0.0

    def test_uniform_bound(self):
        rng = np.random.default_rng(5)
        g = Grid.centered([1.0, 1.0], [40, 40])
        kern = build_radial_kernel(0.1, 0.4, grid=g)
        f = DensityField(g, rng.random((2,) + g.cells))
        for variant in ("saturating", "identity"):
            v = assemble_velocity(f, kern, VelocityModel(variant))
            vnorm = np.sqrt(np.sum(v.values**2, axis=(0, 1)))
            bound = 1.0 * kern.grad_sup() * l1_norm(f)
            assert np.max(vnorm) <= bound * (1 + 1e-12)

    def test_rotation_equivariance_quarter_turn(self):
        # rot90 of the density produces the rotated velocity field to 1e-12
        rng = np.random.default_rng(8)
        g = Grid.centered([1.0, 1.0], [64, 64])
        kern = build_radial_kernel(0.1, 0.35, grid=g)
        rho = rng.random(g.cells)
        model = VelocityModel("saturating")
        v = assemble_velocity(DensityField(g, rho[None]), kern, model).values
        v_rot = assemble_velocity(
            DensityField(g, np.rot90(rho)[None].copy()), kern, model
        ).values
        # np.rot90 realizes x -> (y, -x); velocities transform with the
        # inverse rotation applied to the components
        scale = np.max(np.abs(v))
        assert np.max(np.abs(v_rot[0] - (-np.rot90(v[1], axes=(1, 2))))) <= 1e-12 * scale
        assert np.max(np.abs(v_rot[1] - np.rot90(v[0], axes=(1, 2)))) <= 1e-12 * scale

    def test_velocity_field_shape_validation(self):
        g = Grid.centered([1.0], [16])
        from nlclaw import VelocityField

        with pytest.raises(ValueError):
            VelocityField(g, np.zeros((2, 1, 16)))  # wrong axis count for 1D
