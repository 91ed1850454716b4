"""Tests for functionals.py: energy terms, quotients and their oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from functionals import (
    CouplingOutOfRangeError,
    DegenerateDenominatorError,
    EnergyBreakdown,
    direct_term,
    exchange_term,
    frame_terms,
    gn_quotient,
    hf_energy,
    hfb_energy,
    inverse_sqrt_trace,
    kinetic_trace,
    pairing_term,
    reduced_energy,
    tf_gradient,
    tf_objective,
    virial_derivative,
)
from invariant_suite import dense_terms, random_frame
from minimizer import initial_frame, initial_pairing
from quantum_states import InadmissibleStateError, OrbitalSet, PairingState, density, dilate
from radial_grid import RadialGrid
from spectral_grid import InverseSqrtLaplacian, KineticMassive, SpectralGrid


class TestDenseOracles:
    """FFT terms against explicit double sums on 8^3 grids."""

    @pytest.mark.parametrize("mass", [0.0, 1.0])
    def test_hf_terms(self, tiny_grid, rng, mass):
        state = random_frame(tiny_grid, 2, rng)
        terms = frame_terms(state, KineticMassive(mass))
        expected = dense_terms(state, mass)
        assert terms.kinetic == pytest.approx(expected["kinetic"], rel=1e-10)
        assert terms.direct == pytest.approx(expected["direct"], rel=1e-10)
        assert terms.exchange == pytest.approx(expected["exchange"], rel=1e-10)

    def test_pairing_single_pair_at_quarter_turn(self, tiny_grid, rng):
        frame = random_frame(tiny_grid, 2, rng)
        state = PairingState.from_frame(frame, np.array([math.pi / 4]))
        assert pairing_term(state) == pytest.approx(dense_terms(state)["pairing"], rel=1e-10)

    def test_pairing_two_pairs(self, tiny_grid, rng):
        frame = random_frame(tiny_grid, 4, rng)
        state = PairingState.from_frame(frame, np.array([0.3, 1.1]))
        assert pairing_term(state) == pytest.approx(dense_terms(state)["pairing"], rel=1e-10)

    def test_hf_energy_matches_term_oracle(self, tiny_grid):
        state = initial_frame(tiny_grid, 2, seed=1, width=1.6)
        energy = hf_energy(state, 1.0, 0.5)
        expected = dense_terms(state, 1.0)
        total = expected["kinetic"] - 0.25 * (expected["direct"] - expected["exchange"])
        assert energy.total == pytest.approx(total, rel=1e-10)


class TestTerms:
    """Tests for the individual energy terms."""

    def test_rank_one_direct_equals_exchange(self, small_grid):
        state = initial_frame(small_grid, 1, seed=0)
        terms = frame_terms(state)
        assert abs(terms.direct - terms.exchange) <= 1e-12 * terms.direct

    def test_exchange_between_zero_and_direct(self, two_orbitals):
        mixed = two_orbitals.with_occupations(np.array([0.9, 0.4]))
        terms = frame_terms(mixed)
        assert 0.0 <= terms.exchange <= terms.direct

    def test_direct_term_matches_frame_terms(self, two_orbitals):
        rho = density(two_orbitals)
        assert direct_term(rho, rho) == pytest.approx(frame_terms(two_orbitals).direct, rel=1e-12)

    def test_exchange_term_matches_frame_terms(self, two_orbitals):
        assert exchange_term(two_orbitals) == pytest.approx(frame_terms(two_orbitals).exchange, rel=1e-12)

    def test_plane_wave_inverse_sqrt_trace(self, tiny_grid):
        n = tiny_grid.n_points_per_axis
        index = np.indices(tiny_grid.shape)[0]
        wave = np.exp(2j * np.pi * index / n) / math.sqrt(tiny_grid.size)
        state = OrbitalSet.projection(tiny_grid, wave)
        trace = inverse_sqrt_trace(state, pad=False)
        assert trace.value == pytest.approx(tiny_grid.box_length / (2 * math.pi), rel=1e-12)
        assert trace.zero_mode_weight == pytest.approx(0.0, abs=1e-20)
        assert trace.padding == 1

    def test_lattice_cauchy_schwarz_bound(self, two_orbitals):
        trace = inverse_sqrt_trace(two_orbitals, pad=False)
        nonzero = two_orbitals.trace - trace.zero_mode_weight
        assert trace.lattice_value * kinetic_trace(two_orbitals) >= nonzero ** 2 * (1 - 1e-12)

    def test_lattice_value_uses_kinetic_trace(self, two_orbitals):
        trace = inverse_sqrt_trace(two_orbitals, pad=False)
        assert trace.lattice_value == pytest.approx(kinetic_trace(two_orbitals, InverseSqrtLaplacian()), rel=1e-14)
        assert trace.value == pytest.approx(trace.lattice_value + trace.zero_mode_correction, rel=1e-14)

    def test_padding_shrinks_zero_mode(self, two_orbitals):
        bare = inverse_sqrt_trace(two_orbitals, pad=False)
        padded = inverse_sqrt_trace(two_orbitals)
        assert padded.padding in (1, 2, 4, 8)
        assert padded.zero_mode_weight <= bare.zero_mode_weight
        if padded.padding > 1:
            assert padded.zero_mode_weight < bare.zero_mode_weight / 4
            assert padded.zero_mode_correction < bare.zero_mode_correction

    def test_pairing_term_requires_admissibility(self, one_pair):
        theta = one_pair.pair_angles
        bad = PairingState(one_pair.base, theta, np.ones_like(theta))
        with pytest.raises(InadmissibleStateError):
            pairing_term(bad)


class TestEnergies:
    """Tests for hf_energy(), hfb_energy() and reduced_energy()."""

    def test_breakdown_total(self, two_orbitals):
        energy = hf_energy(two_orbitals, 1.0, 0.7)
        assert isinstance(energy, EnergyBreakdown)
        assert energy.total == pytest.approx(energy.kinetic - 0.35 * (energy.direct - energy.exchange), rel=1e-14)
        assert energy.pairing == 0.0

    def test_negative_parameters_rejected(self, two_orbitals):
        with pytest.raises(CouplingOutOfRangeError):
            hf_energy(two_orbitals, -1.0, 0.5)
        with pytest.raises(CouplingOutOfRangeError):
            hf_energy(two_orbitals, 1.0, -0.5)

    def test_hfb_adds_pairing(self, one_pair):
        energy = hfb_energy(one_pair, 1.0, 0.5)
        assert energy.pairing > 0
        hf_part = energy.kinetic - 0.25 * (energy.direct - energy.exchange)
        assert energy.total == pytest.approx(hf_part - 0.25 * energy.pairing, rel=1e-13)

    def test_hfb_without_pairing_equals_hf_of_gamma(self, one_pair):
        off = PairingState.from_frame(one_pair.base, one_pair.pair_angles, pairing=False)
        assert hfb_energy(off, 1.0, 0.5).total == pytest.approx(hf_energy(off.gamma, 1.0, 0.5).total, rel=1e-13)

    @pytest.mark.parametrize("coupling", [0.0, -0.1, 4 / math.pi, 2.0])
    def test_reduced_energy_coupling_range(self, two_orbitals, coupling):
        with pytest.raises(CouplingOutOfRangeError):
            reduced_energy(two_orbitals, coupling)

    def test_reduced_energy_value(self, two_orbitals):
        terms = frame_terms(two_orbitals)
        assert reduced_energy(two_orbitals, 1.0) == pytest.approx(terms.kinetic - 0.5 * terms.direct, rel=1e-14)

    def test_virial_derivative_matches_finite_difference(self, two_orbitals):
        eps = 1e-5
        plus = hf_energy(dilate(two_orbitals, 1 + eps), 1.0, 0.5).total
        minus = hf_energy(dilate(two_orbitals, 1 - eps), 1.0, 0.5).total
        numeric = (plus - minus) / (2 * eps)
        assert virial_derivative(two_orbitals, 1.0, 0.5) == pytest.approx(numeric, rel=1e-6)

    @settings(max_examples=15, deadline=None)
    @given(beta=st.floats(min_value=0.3, max_value=3.0))
    def test_massless_terms_scale_linearly(self, beta):
        state = initial_pairing(SpectralGrid(16, 10.0), 1, seed=5)
        base = hfb_energy(state, 0.0, 1.0)
        scaled = hfb_energy(dilate(state, beta), 0.0, 1.0)
        for name in ("kinetic", "direct", "exchange", "pairing", "total"):
            assert getattr(scaled, name) == pytest.approx(beta * getattr(base, name), rel=1e-12)


class TestQuotients:
    """Tests for gn_quotient()."""

    def test_rank_one_is_degenerate(self, small_grid):
        with pytest.raises(DegenerateDenominatorError):
            gn_quotient(initial_frame(small_grid, 1, seed=0))

    def test_hf_value(self, two_orbitals):
        terms = frame_terms(two_orbitals)
        quotient = gn_quotient(two_orbitals)
        assert quotient.value == pytest.approx(2 * terms.kinetic / (terms.direct - terms.exchange), rel=1e-14)
        assert quotient.variant == "HF"

    def test_relaxed_scales_by_operator_norm(self, two_orbitals):
        mixed = two_orbitals.with_occupations(np.array([0.5, 0.25]))
        relaxed = gn_quotient(mixed, "RelaxedRank")
        plain = gn_quotient(mixed, "HF")
        assert relaxed.value == pytest.approx(0.5 * plain.value, rel=1e-14)

    def test_relaxed_equals_hf_on_projections(self, two_orbitals):
        assert gn_quotient(two_orbitals, "RelaxedRank").value == gn_quotient(two_orbitals, "HF").value

    def test_hfb_needs_pairing_state(self, two_orbitals):
        with pytest.raises(TypeError):
            gn_quotient(two_orbitals, "HFB")

    def test_pairing_lowers_hfb_quotient(self, one_pair):
        off = PairingState.from_frame(one_pair.base, one_pair.pair_angles, pairing=False)
        assert gn_quotient(one_pair, "HFB").value < gn_quotient(off, "HFB").value

    @settings(max_examples=10, deadline=None)
    @given(beta=st.floats(min_value=0.25, max_value=4.0))
    def test_quotient_is_dilation_invariant(self, beta):
        state = initial_frame(SpectralGrid(16, 10.0), 2, seed=11)
        assert gn_quotient(dilate(state, beta)).value == pytest.approx(gn_quotient(state).value, rel=1e-12)


class TestThomasFermiObjective:
    """Tests for tf_objective() and tf_gradient()."""

    @pytest.fixture
    def radial(self):
        return RadialGrid(256)

    def test_rejects_negative_density(self, radial):
        f = np.exp(-radial.radii)
        f[3] = -1.0
        with pytest.raises(ValueError):
            tf_objective(f, radial)

    def test_rejects_zero_density(self, radial):
        with pytest.raises(ValueError):
            tf_objective(np.zeros(radial.n_nodes), radial)

    def test_amplitude_invariance(self, radial):
        f = np.exp(-radial.radii ** 2)
        assert tf_objective(7.0 * f, radial) == pytest.approx(tf_objective(f, radial), rel=1e-12)

    def test_gradient_value_matches_objective(self, radial):
        f = np.exp(-radial.radii)
        value, gradient = tf_gradient(f, radial)
        assert value == tf_objective(f, radial)
        assert gradient.shape == f.shape

    def test_gradient_orthogonal_to_amplitude(self, radial):
        f = np.exp(-radial.radii)
        _, gradient = tf_gradient(f, radial)
        value = tf_objective(f, radial)
        assert abs(np.dot(gradient, f)) <= 1e-9 * value
