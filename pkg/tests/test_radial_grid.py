"""Tests for radial_grid.py: radial quadrature, shell-theorem Coulomb energy and profile normalization."""

import math

import numpy as np
import pytest

from functionals import tf_objective
from radial_grid import RadialGrid, normalize_profile, radial_coulomb_energy


@pytest.fixture
def radial():
    return RadialGrid()


class TestRadialGrid:
    """Tests for RadialGrid quadrature."""

    def test_rejects_single_node(self):
        with pytest.raises(ValueError):
            RadialGrid(1)

    def test_rejects_inverted_range(self):
        with pytest.raises(ValueError):
            RadialGrid(16, 1.0, 0.5)

    def test_constant_integrates_to_ball_volume(self):
        grid = RadialGrid(64, 1e-2, 10.0)
        assert grid.integrate(np.ones(64)) == pytest.approx(4 * math.pi / 3 * 10.0 ** 3, rel=1e-12)

    def test_gaussian_mass(self, radial):
        f = np.exp(-radial.radii ** 2)
        assert radial.integrate(f) == pytest.approx(math.pi ** 1.5, rel=1e-4)

    def test_refined_doubles_nodes(self):
        fine = RadialGrid(100).refined()
        assert fine.n_nodes == 200


class TestRadialCoulomb:
    """Tests for radial_coulomb_energy()."""

    def test_gaussian_self_energy(self, radial):
        f = np.exp(-radial.radii ** 2)
        mass = math.pi ** 1.5
        expected = mass ** 2 * math.sqrt(2.0) / math.sqrt(math.pi)
        assert radial_coulomb_energy(f, f, radial) == pytest.approx(expected, rel=1e-3)

    def test_symmetric(self, radial):
        f = np.exp(-radial.radii ** 2)
        g = np.exp(-radial.radii)
        assert radial_coulomb_energy(f, g, radial) == pytest.approx(radial_coulomb_energy(g, f, radial), rel=1e-10)

    def test_rejects_negative(self, radial):
        f = np.exp(-radial.radii)
        with pytest.raises(ValueError):
            radial_coulomb_energy(-f, f, radial)

    def test_rejects_shape_mismatch(self, radial):
        with pytest.raises(ValueError):
            radial_coulomb_energy(np.ones(3), np.ones(3), radial)


class TestNormalizeProfile:
    """Tests for normalize_profile()."""

    def test_unit_mass_and_power(self, radial):
        f = normalize_profile(5.0 * np.exp(-0.3 * radial.radii ** 2), radial)
        assert radial.integrate(f) == pytest.approx(1.0, rel=1e-3)
        assert radial.integrate(f ** (4.0 / 3.0)) == pytest.approx(1.0, rel=1e-3)

    def test_quotient_unchanged(self, radial):
        f = np.exp(-radial.radii ** 2)
        assert tf_objective(normalize_profile(f, radial), radial) == pytest.approx(tf_objective(f, radial), rel=1e-3)

    def test_rejects_zero_profile(self, radial):
        with pytest.raises(ValueError):
            normalize_profile(np.zeros(radial.n_nodes), radial)
