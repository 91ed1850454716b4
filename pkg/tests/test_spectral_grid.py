"""Tests for spectral_grid.py: grids, multiplier tables and FFT convolution."""

import math

import numpy as np
import pytest
from scipy.special import erf

from spectral_grid import (
    CoulombTruncated,
    GridError,
    InverseSqrtLaplacian,
    KineticMassive,
    KineticMassless,
    MassGap,
    SpectralGrid,
    apply_multiplier,
    build_multiplier,
    convolve_coulomb,
    kinetic_kind,
    real_space_kernel,
    resolve_truncation,
)


class TestSpectralGrid:
    """Tests for SpectralGrid construction and geometry."""

    @pytest.mark.parametrize("n", [7, 6, 0, -8, 9])
    def test_rejects_bad_point_counts(self, n):
        with pytest.raises(GridError):
            SpectralGrid(n, 10.0)

    @pytest.mark.parametrize("box", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_box_lengths(self, box):
        with pytest.raises(GridError):
            SpectralGrid(8, box)

    def test_spacing_and_volume(self):
        grid = SpectralGrid(16, 8.0)
        assert grid.spacing == 0.5
        assert grid.cell_volume == 0.125
        assert grid.shape == (16, 16, 16)

    def test_center_index_is_origin(self, tiny_grid):
        x, y, z = tiny_grid.coordinates
        assert x[tiny_grid.center_index] == 0.0
        assert tiny_grid.radius[tiny_grid.center_index] == 0.0

    def test_frequency_table_is_fft_ordered(self, tiny_grid):
        table = tiny_grid.frequency_table
        assert table[0] == 0.0
        assert table[1] == pytest.approx(2 * math.pi / tiny_grid.box_length)
        assert table[4] == pytest.approx(-math.pi / tiny_grid.spacing)

    def test_padded_keeps_spacing(self, small_grid):
        big = small_grid.padded()
        assert big.n_points_per_axis == 24
        assert big.spacing == pytest.approx(small_grid.spacing)


class TestBuildMultiplier:
    """Tests for build_multiplier()."""

    def test_massless_is_frequency_norm(self, tiny_grid):
        np.testing.assert_array_equal(build_multiplier(tiny_grid, KineticMassless()), tiny_grid.frequency_norm)

    def test_massive_matches_direct_formula(self, small_grid):
        xi = small_grid.frequency_norm
        table = build_multiplier(small_grid, KineticMassive(2.0))
        np.testing.assert_allclose(table, np.sqrt(xi ** 2 + 4.0) - 2.0, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("mass", [0.5, 2.0])
    def test_massive_below_nonrelativistic(self, small_grid, mass):
        xi = small_grid.frequency_norm
        table = build_multiplier(small_grid, KineticMassive(mass))
        assert np.all(table <= xi ** 2 / (2.0 * mass) * (1 + 1e-12))

    def test_massive_with_zero_mass_is_massless(self, tiny_grid):
        np.testing.assert_array_equal(build_multiplier(tiny_grid, KineticMassive(0.0)), tiny_grid.frequency_norm)

    def test_negative_mass_rejected(self, tiny_grid):
        with pytest.raises(GridError):
            build_multiplier(tiny_grid, KineticMassive(-1.0))
        with pytest.raises(GridError):
            kinetic_kind(-0.5)

    def test_inverse_sqrt_drops_zero_mode(self, tiny_grid):
        table = build_multiplier(tiny_grid, InverseSqrtLaplacian())
        assert table[0, 0, 0] == 0.0
        assert table[1, 0, 0] == pytest.approx(tiny_grid.box_length / (2 * math.pi))

    def test_coulomb_zero_mode(self, tiny_grid):
        table = build_multiplier(tiny_grid, CoulombTruncated())
        radius = tiny_grid.box_length / 2
        assert table[0, 0, 0] == pytest.approx(2 * math.pi * radius ** 2)
        assert np.all(table >= 0)

    def test_mass_gap_at_zero_frequency_is_mass(self, tiny_grid):
        assert build_multiplier(tiny_grid, MassGap(1.5, 3.0))[0, 0, 0] == pytest.approx(1.5)

    def test_mass_gap_needs_positive_mass(self, tiny_grid):
        with pytest.raises(GridError):
            build_multiplier(tiny_grid, MassGap(0.0))

    def test_tables_are_cached_and_read_only(self, tiny_grid):
        first = build_multiplier(tiny_grid, KineticMassless())
        assert build_multiplier(SpectralGrid(8, 8.0), KineticMassless()) is first
        with pytest.raises(ValueError):
            first[0, 0, 0] = 1.0


class TestResolveTruncation:
    """Tests for resolve_truncation()."""

    def test_default_is_half_box(self, tiny_grid):
        assert resolve_truncation(tiny_grid, None) == 4.0

    def test_rejects_radius_beyond_half_box(self, tiny_grid):
        with pytest.raises(GridError):
            resolve_truncation(tiny_grid, 4.5)

    def test_rejects_nonpositive_radius(self, tiny_grid):
        with pytest.raises(GridError):
            resolve_truncation(tiny_grid, 0.0)


class TestConvolution:
    """Tests for apply_multiplier() and the Coulomb convolutions."""

    def test_unit_table_is_identity(self, tiny_grid, rng):
        field = rng.standard_normal(tiny_grid.shape) + 1j * rng.standard_normal(tiny_grid.shape)
        out = apply_multiplier(tiny_grid, np.ones(tiny_grid.shape), field)
        np.testing.assert_allclose(out, field, atol=1e-13)

    def test_shape_mismatch_rejected(self, tiny_grid):
        with pytest.raises(GridError):
            apply_multiplier(tiny_grid, np.ones(tiny_grid.shape), np.ones((4, 4, 4)))

    def test_coulomb_needs_real_density(self, tiny_grid):
        with pytest.raises(GridError):
            convolve_coulomb(tiny_grid, np.ones(tiny_grid.shape, dtype=complex))

    def test_gaussian_potential_matches_error_function(self):
        grid = SpectralGrid(32, 16.0)
        r = grid.radius
        rho = np.exp(-0.5 * r ** 2)
        rho /= grid.integrate(rho)
        potential = convolve_coulomb(grid, rho)
        c = grid.center_index[0]
        distance = 4.0
        expected = erf(distance / math.sqrt(2.0)) / distance
        assert potential[c + 8, c, c] == pytest.approx(expected, rel=1e-4)

    def test_truncated_potential_below_whole_space(self):
        grid = SpectralGrid(32, 16.0)
        rho = np.exp(-0.5 * grid.radius ** 2)
        rho /= grid.integrate(rho)
        c = grid.center_index[0]
        distances = grid.spacing * np.arange(1, 9)
        whole_space = np.concatenate([[math.sqrt(2.0 / math.pi)], erf(distances / math.sqrt(2.0)) / distances])
        default = convolve_coulomb(grid, rho)[c:c + 9, c, c]
        short = convolve_coulomb(grid, rho, truncation_radius=3.0)[c:c + 9, c, c]
        assert np.all(default <= whole_space * (1 + 1e-4))
        assert np.all(short <= default)
        assert short[-1] < 0.9 * whole_space[-1]

    def test_real_space_kernel_reproduces_convolution(self, tiny_grid, rng):
        table = build_multiplier(tiny_grid, CoulombTruncated())
        kernel = real_space_kernel(tiny_grid, table)
        field = rng.standard_normal(tiny_grid.shape)
        out = convolve_coulomb(tiny_grid, field)
        # h^3 sum_y K(0 - y) f(y)
        reflected = np.roll(kernel[::-1, ::-1, ::-1], 1, axis=(0, 1, 2))
        expected = tiny_grid.cell_volume * np.sum(reflected * field)
        assert out[0, 0, 0] == pytest.approx(expected, rel=1e-10)
