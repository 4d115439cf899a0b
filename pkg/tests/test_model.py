import math

import numpy as np
import pytest

from wavekit.model import (
    Field3D,
    Grid,
    build_gaussian_sphere_model,
    constant_field,
    extend_model,
    fold_boundary,
    gardner_density,
    mass_term,
)

RNG = np.random.default_rng(7)


class TestGrid:
    def test_extended_counts(self):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0, nb=25)
        assert g.extended_shape == (75, 75, 75)
        assert g.offsets == (25, 25, 25)

    def test_free_surface_top_padding(self):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0, nb=25, nb_top=4)
        assert g.nze == 25 + 4 + 25

    def test_coordinate_index_roundtrip(self):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0, ox=5.0, nb=3)
        for idx in [(0, 0, 0), (12, 3, 24), (24, 24, 0)]:
            x = 5.0 + idx[0] * 10.0
            y = idx[1] * 10.0
            z = idx[2] * 10.0
            assert g.index_of(x, y, z) == idx

    def test_out_of_grid_coordinate_rejected(self):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0)
        with pytest.raises(ValueError, match="outside"):
            g.index_of(500.0, 0.0, 0.0)


class TestGaussianSphere:
    def test_center_value_on_even_grid(self):
        # nx/2 is a grid node for even counts; the exponent vanishes there
        g = Grid(24, 24, 24, 10.0, 10.0, 10.0)
        v = build_gaussian_sphere_model(g, 2500.0, 5.0)
        assert v.interior()[12, 12, 12] == pytest.approx(3500.0, abs=1e-9)

    def test_paper_grid_value_matches_direct_formula(self):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0, nb=25)
        v = build_gaussian_sphere_model(g, 2500.0, 5.0)
        i = j = k = 12
        d2 = 3 * (12 - 12.5) ** 2
        expected = 2500.0 + 1e3 * math.exp(-0.5 * d2 / 25.0)
        assert v.interior()[i, j, k] == pytest.approx(expected, rel=1e-14)

    def test_far_field_tends_to_base(self):
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0)
        v = build_gaussian_sphere_model(g, 2500.0, 2.0)
        assert v.interior()[0, 0, 0] == pytest.approx(2500.0, abs=1e-6)

    def test_symmetry_about_center_planes(self):
        # center sits at index nx/2 = 12.5, so node 0 has no mirror partner;
        # the sub-array from node 1 is symmetric under reflection
        g = Grid(25, 25, 25, 10.0, 10.0, 10.0)
        v = build_gaussian_sphere_model(g, 2500.0, 5.0).interior()
        for axis in range(3):
            trimmed = np.take(v, range(1, 25), axis=axis)
            assert np.array_equal(np.flip(trimmed, axis=axis), trimmed)

    def test_sigma_must_be_positive(self):
        g = Grid(9, 9, 9, 10.0, 10.0, 10.0)
        with pytest.raises(ValueError):
            build_gaussian_sphere_model(g, 2500.0, 0.0)


class TestGardner:
    def test_reference_value(self):
        g = Grid(3, 3, 3, 10.0, 10.0, 10.0)
        rho = gardner_density(constant_field(g, 2500.0, "m/s"))
        expected = 309.8 * 2500.0**0.25
        assert expected == pytest.approx(2190.6, abs=0.1)
        assert np.allclose(rho.values, expected)

    def test_constant_in_constant_out(self):
        g = Grid(4, 5, 6, 1.0, 1.0, 1.0)
        rho = gardner_density(constant_field(g, 1500.0, "m/s"))
        assert np.ptp(rho.values) == 0.0

    def test_monotone_in_velocity(self):
        g = Grid(2, 2, 2, 1.0, 1.0, 1.0)
        lo = gardner_density(constant_field(g, 1500.0)).values
        hi = gardner_density(constant_field(g, 4500.0)).values
        assert np.all(lo < hi)

    def test_commutes_with_permutation(self):
        g = Grid(4, 4, 4, 1.0, 1.0, 1.0)
        v = Field3D(g, RNG.uniform(1500.0, 4500.0, g.interior_shape))
        direct = gardner_density(v).values.transpose(2, 0, 1)
        permuted = gardner_density(Field3D(g, v.values.transpose(2, 0, 1))).values
        assert np.array_equal(direct, permuted)

    def test_nonpositive_velocity_rejected(self):
        g = Grid(2, 2, 2, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            gardner_density(Field3D(g, np.full(g.interior_shape, -1.0)))


class TestMassTerm:
    def test_constant_density_gives_zero(self):
        g = Grid(12, 12, 12, 5.0, 5.0, 5.0)
        m2 = mass_term(constant_field(g, 2200.0, "kg/m^3"))
        # the stencil annihilates constants up to float cancellation noise
        assert np.abs(m2.field.values).max() <= 1e-15

    def test_exponential_profile_matches_alpha_squared(self):
        # rho = exp(2*alpha*x) -> sqrt(rho) = exp(alpha*x) -> m^2 = alpha^2
        alpha = 0.005
        dx = 10.0  # alpha*dx = 0.05
        g = Grid(41, 9, 9, dx, dx, dx)
        x = np.arange(41) * dx
        rho = np.exp(2.0 * alpha * x)[:, None, None] * np.ones((1, 9, 9))
        m2 = mass_term(Field3D(g, rho, "kg/m^3"))
        core = m2.field.values[4:-4, 4:-4, 4:-4]
        assert np.max(np.abs(core - alpha**2)) <= 1e-4 * alpha**2

    def test_always_finite(self):
        g = Grid(8, 8, 8, 2.0, 2.0, 2.0)
        rho = Field3D(g, RNG.uniform(1000.0, 3000.0, g.interior_shape))
        assert np.all(np.isfinite(mass_term(rho).field.values))

    def test_nonpositive_density_rejected(self):
        g = Grid(2, 2, 2, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            mass_term(Field3D(g, np.zeros(g.interior_shape)))


class TestExtendFold:
    def test_zero_border_is_identity(self):
        g = Grid(5, 5, 5, 1.0, 1.0, 1.0, nb=0)
        f = Field3D(g, RNG.standard_normal(g.interior_shape))
        assert np.array_equal(extend_model(f).values, f.values)

    def test_constant_stays_constant(self):
        g = Grid(5, 5, 5, 1.0, 1.0, 1.0, nb=3)
        ext = extend_model(constant_field(g, 7.0))
        assert np.ptp(ext.values) == 0.0 and ext.values.shape == (11, 11, 11)

    def test_ramp_clamps_to_plateau(self):
        # 5-point ramp along x, border 2: hand-checkable clamp
        g = Grid(5, 1, 1, 1.0, 1.0, 1.0, nb=2)
        ramp = np.arange(5.0).reshape(5, 1, 1)
        ext = extend_model(Field3D(g, ramp))
        assert list(ext.values[:, 2, 2]) == [0, 0, 0, 1, 2, 3, 4, 4, 4]

    def test_extend_preserves_min_max(self):
        for _ in range(5):
            g = Grid(6, 4, 5, 1.0, 1.0, 1.0, nb=3, nb_top=2)
            f = Field3D(g, RNG.standard_normal(g.interior_shape))
            ext = extend_model(f)
            assert ext.values.min() == f.values.min()
            assert ext.values.max() == f.values.max()

    def test_fold_is_adjoint_of_extend(self):
        g = Grid(5, 4, 6, 1.0, 1.0, 1.0, nb=3, nb_top=2)
        for _ in range(10):
            a = Field3D(g, RNG.standard_normal(g.interior_shape))
            b = Field3D(g, RNG.standard_normal(g.extended_shape))
            lhs = float(np.sum(extend_model(a).values * b.values))
            rhs = float(np.sum(a.values * fold_boundary(b).values))
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestField3D:
    def test_shape_must_match_grid(self):
        g = Grid(4, 4, 4, 1.0, 1.0, 1.0, nb=2)
        with pytest.raises(ValueError, match="neither"):
            Field3D(g, np.zeros((5, 5, 5)))

    def test_non_finite_rejected(self):
        g = Grid(2, 2, 2, 1.0, 1.0, 1.0)
        bad = np.zeros(g.interior_shape)
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            Field3D(g, bad)
