"""Tests for critical_analysis.py: fits, scan tables, classification and the HFB trajectory."""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from pydantic import ValidationError

from critical_analysis import (
    InvariantViolationError,
    RateFit,
    ScanRow,
    ScanTable,
    TableRangeError,
    blowup_scan,
    classify_kappa,
    decay_diagnostic,
    extract_d_star,
    fit_power_law,
    grid_refinement_study,
    hfb_quotient_scan,
    hfb_scaling_trajectory,
    zero_energy_coupling,
)
from functionals import gn_quotient, hfb_energy, inverse_sqrt_trace
from minimizer import MinimizeConfig, initial_frame, normalize_kinetic, solve_kappa_n
from quantum_states import OrbitalSet, dilate
from spectral_grid import SpectralGrid

KAPPA_TABLE = {2: 2.0, 3: 1.5, 4: 1.2}


class TestFitPowerLaw:
    """Tests for fit_power_law()."""

    def test_exact_power(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = fit_power_law(x, 3.0 * np.sqrt(x))
        assert fit.exponent == pytest.approx(0.5, abs=1e-12)
        assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.window == (1.0, 8.0)
        assert fit.points == 4

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            fit_power_law(np.array([1.0, 2.0]), np.array([1.0, -1.0]))

    def test_rejects_single_point(self):
        with pytest.raises(ValueError):
            fit_power_law(np.array([1.0]), np.array([1.0]))

    def test_empty_window_rejected(self):
        with pytest.raises(ValidationError):
            RateFit(exponent=1.0, prefactor=1.0, r_squared=1.0, window=(2.0, 1.0), points=2)


class TestScanTable:
    """Tests for ScanTable validation."""

    def test_increasing_and_decreasing_allowed(self):
        ScanTable(control_name="x", rows=[ScanRow(control=c) for c in (1.0, 2.0, 3.0)])
        ScanTable(control_name="x", rows=[ScanRow(control=c) for c in (3.0, 2.0, 1.0)])

    def test_non_monotone_rejected(self):
        with pytest.raises(ValidationError):
            ScanTable(control_name="x", rows=[ScanRow(control=c) for c in (1.0, 3.0, 2.0)])

    def test_repeated_control_rejected(self):
        with pytest.raises(ValidationError):
            ScanTable(control_name="x", rows=[ScanRow(control=c) for c in (1.0, 1.0)])

    def test_column(self):
        table = ScanTable(
            control_name="x",
            rows=[ScanRow(control=1.0, observables={"a": 5}), ScanRow(control=2.0, observables={})],
        )
        assert table.column("a") == [5, None]


class TestClassifyKappa:
    """Tests for classify_kappa()."""

    def test_above_kappa_two_has_no_minimizer(self):
        result = classify_kappa(2.5, KAPPA_TABLE)
        assert result.exists == "no"
        assert result.N == 1

    def test_between_kappas(self):
        result = classify_kappa(1.7, KAPPA_TABLE)
        assert result.exists == "yes"
        assert result.N == 2

    def test_between_three_and_four(self):
        assert classify_kappa(1.3, KAPPA_TABLE).N == 3

    def test_exact_critical_is_boundary(self):
        result = classify_kappa(1.5, KAPPA_TABLE)
        assert result.exists == "boundary"
        assert result.nearest == 3

    def test_confinement_error_widens_boundary(self):
        result = classify_kappa(1.52, KAPPA_TABLE, errors={3: 0.01})
        assert result.exists == "boundary"
        assert result.margin == pytest.approx(2.0)

    def test_below_table(self):
        with pytest.raises(TableRangeError):
            classify_kappa(1.0, KAPPA_TABLE)

    def test_table_with_gap(self):
        with pytest.raises(ValueError):
            classify_kappa(1.7, {2: 2.0, 4: 1.2})

    def test_empty_table(self):
        with pytest.raises(TableRangeError):
            classify_kappa(1.7, {})


class TestHFBScaling:
    """Tests for zero_energy_coupling() and hfb_scaling_trajectory()."""

    def test_zero_energy_coupling_zeroes_massless_energy(self, one_pair):
        coupling = zero_energy_coupling(one_pair)
        energy = hfb_energy(one_pair, 0.0, coupling)
        assert abs(energy.total) <= 1e-12 * energy.kinetic

    def test_zero_energy_coupling_for_frames(self, two_orbitals):
        assert zero_energy_coupling(two_orbitals) == gn_quotient(two_orbitals).value

    def test_identity_holds_along_trajectory(self, one_pair):
        betas = [0.5, 1.0, 2.0, 4.0]
        table = hfb_scaling_trajectory(one_pair, 1.0, 0.5, betas, slope_window=(1.0, 4.0))
        assert table.metadata["max_identity_residual"] < 1e-10
        assert not any(row.flagged for row in table.rows)

    def test_unit_dilation_row_is_the_energy(self, one_pair):
        table = hfb_scaling_trajectory(one_pair, 1.0, 0.5, [0.5, 1.0, 2.0], slope_window=(0.5, 2.0))
        row = table.rows[1]
        assert row.observables["energy"] == pytest.approx(hfb_energy(one_pair, 1.0, 0.5).total, rel=1e-13)

    def test_massless_part_scales_linearly(self, one_pair):
        table = hfb_scaling_trajectory(one_pair, 1.0, 0.5, [1.0, 3.0], slope_window=(1.0, 3.0))
        scaled = table.column("massless_scaled")
        assert scaled[1] == pytest.approx(3.0 * scaled[0], rel=1e-13)

    def test_mass_gap_slope_is_inverse(self, one_pair):
        betas = list(np.geomspace(4.0, 64.0, 6))
        table = hfb_scaling_trajectory(one_pair, 1.0, 0.5, betas, slope_window=(4.0, 64.0))
        fit = table.fits["mass_gap"]
        assert fit is not None
        assert fit.exponent == pytest.approx(-1.0, abs=0.1)

    def test_zero_energy_trajectory_falls_to_rest_mass(self, one_pair):
        coupling = zero_energy_coupling(one_pair)
        betas = list(np.geomspace(1.0, 64.0, 7))
        table = hfb_scaling_trajectory(one_pair, 1.0, coupling, betas, slope_window=(4.0, 64.0))
        energies = table.column("energy")
        assert table.metadata["nonincreasing"]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
        trace = one_pair.trace
        excess = energies[-1] / trace + 1.0
        nonzero = inverse_sqrt_trace(one_pair.gamma, pad=False).lattice_value
        gap_bound = table.metadata["zero_mode_weight"] + nonzero / (2 * 64.0)
        assert excess >= -1e-10
        assert excess <= gap_bound / trace + 1e-10

    def test_subcritical_coupling_trajectory_rises(self, one_pair):
        coupling = 0.5 * zero_energy_coupling(one_pair)
        table = hfb_scaling_trajectory(one_pair, 1.0, coupling, [1.0, 8.0, 64.0], slope_window=(8.0, 64.0))
        assert not table.metadata["nonincreasing"]

    def test_needs_positive_mass(self, one_pair):
        with pytest.raises(ValueError):
            hfb_scaling_trajectory(one_pair, 0.0, 0.5, [1.0, 2.0])

    def test_betas_must_increase(self, one_pair):
        with pytest.raises(ValueError):
            hfb_scaling_trajectory(one_pair, 1.0, 0.5, [2.0, 1.0])

    def test_dilated_state_shares_zero_energy_coupling(self, one_pair):
        assert zero_energy_coupling(dilate(one_pair, 2.5)) == pytest.approx(zero_energy_coupling(one_pair), rel=1e-12)


class TestDecayDiagnostic:
    """Tests for decay_diagnostic()."""

    def test_fields(self, two_orbitals):
        report = decay_diagnostic(two_orbitals)
        assert report.window == pytest.approx((10.0 / 8.0, 10.0 / 3.0))
        assert 0.0 <= report.outside_mass <= 1.0
        assert report.constant >= 0.0
        assert report.qualitative == (report.decades < 3.0)

    def test_gaussian_decays(self, two_orbitals):
        report = decay_diagnostic(two_orbitals)
        assert report.slope is not None
        assert report.slope < 0

    def test_plane_wave_is_qualitative(self, tiny_grid):
        n = tiny_grid.n_points_per_axis
        index = np.indices(tiny_grid.shape)[0]
        wave = np.exp(2j * np.pi * index / n) / math.sqrt(tiny_grid.size)
        report = decay_diagnostic(OrbitalSet.projection(tiny_grid, wave))
        assert report.qualitative
        assert report.decades < 1e-6
        assert report.outside_mass > 0.5


class TestExtractDStar:
    """Tests for extract_d_star() on hand-built critical results."""

    def test_minimum_over_survivors_in_window(self, small_grid):
        first = initial_frame(small_grid, 2, seed=0)
        second = initial_frame(small_grid, 2, seed=7)
        kappa = gn_quotient(first).value
        critical = SimpleNamespace(N=2, kappa=kappa, state=first, survivors=[first, second])
        report = extract_d_star(critical)
        expected = inverse_sqrt_trace(normalize_kinetic(first)).value
        assert report.candidates == [pytest.approx(expected, rel=1e-12)]
        assert report.value == pytest.approx(expected, rel=1e-12)
        assert report.lower_bound == 4.0
        assert report.value >= 4.0 * (1 - 1e-3)
        assert report.value == pytest.approx(report.lattice_value + report.correction, rel=1e-14)

    def test_falls_back_to_best_state(self, small_grid):
        state = initial_frame(small_grid, 2, seed=3)
        critical = SimpleNamespace(N=2, kappa=2.0 * gn_quotient(state).value, state=state, survivors=[state])
        assert len(extract_d_star(critical).candidates) == 1

    def test_below_particle_bound_raises(self, small_grid):
        state = initial_frame(small_grid, 2, seed=0)
        critical = SimpleNamespace(N=10, kappa=gn_quotient(state).value, state=state, survivors=[state])
        with pytest.raises(InvariantViolationError):
            extract_d_star(critical)


class TestScanArguments:
    """Argument validation for the scan drivers."""

    @pytest.mark.parametrize("fractions", [[], [0.5, 1.0], [0.9, 0.5], [0.0, 0.5]])
    def test_blowup_fractions(self, fractions):
        with pytest.raises(ValueError):
            blowup_scan(None, 1.0, fractions)

    def test_blowup_mass(self):
        with pytest.raises(ValueError):
            blowup_scan(None, 0.0, [0.5, 0.9])

    def test_hfb_quotient_lambdas(self):
        with pytest.raises(ValueError):
            hfb_quotient_scan([2.0, 1.0], grid=SpectralGrid(8, 8.0))
        with pytest.raises(ValueError):
            hfb_quotient_scan([0.0, 1.0], grid=SpectralGrid(8, 8.0))


@pytest.mark.slow
class TestHFBQuotientScan:
    """Short HFB quotient scan on a coarse grid."""

    def test_rows_and_pairing_gain(self):
        table = hfb_quotient_scan([1.0, 2.0], grid=SpectralGrid(16, 10.0))
        assert [row.observables["pairs"] for row in table.rows] == [1, 2]
        for row in table.rows:
            assert row.observables["kappa_pairing"] <= row.observables["kappa_no_pairing"] * (1 + 1e-6)
            assert row.observables["scaled"] == pytest.approx(
                row.observables["kappa_pairing"] * math.pow(row.control, 2.0 / 3.0)
            )


@pytest.mark.slow
class TestGridRefinementStudy:
    """kappa_2 at two coarse resolutions."""

    def test_rows_and_deltas(self):
        table = grid_refinement_study(2, sizes=(16, 24), box_length=10.0, seeds=1)
        assert [row.control for row in table.rows] == [16.0, 24.0]
        assert table.rows[0].observables["relative_delta"] is None
        assert table.rows[1].observables["relative_delta"] >= 0.0


@pytest.mark.slow
class TestBlowupScan:
    """Blow-up scan toward kappa_2 on a coarse grid."""

    def test_square_root_rates(self):
        critical = solve_kappa_n(2, SpectralGrid(16, 10.0), seeds=1, confinement=False)
        fractions = [0.85, 0.88, 0.9, 0.92, 0.94, 0.96, 0.97]
        table = blowup_scan(critical, 1.0, fractions, config=MinimizeConfig(max_iterations=3000))
        epsilons = table.column("epsilon")
        assert all(b < a for a, b in zip(epsilons, epsilons[1:]))
        assert all(gap > 0 for gap in table.column("gap"))
        assert table.fits["epsilon"].exponent == pytest.approx(0.5, abs=0.15)
        assert table.fits["gap"].exponent == pytest.approx(0.5, abs=0.15)
