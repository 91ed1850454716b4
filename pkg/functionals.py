#!/usr/bin/env python3
"""
Module: Energy functionals and Gagliardo-Nirenberg quotients for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Kinetic traces for any multiplier (massive, massless, inverse square root, mass gap)
- Direct term D, exchange X(gamma) and pairing X(alpha) through Coulomb-convolved pair densities
- HF, HFB and reduced energies with itemized breakdowns
- HF, relaxed-rank and HFB quotients, Thomas-Fermi objective, Tr((-Lap)^{-1/2} gamma)
- FrameTerms: shared evaluation of all terms and their Wirtinger gradients

UV ENVIRONMENT: Run with `uv run python functionals.py`

INSTALLATION:
uv add numpy scipy pydantic
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel

from config import (
    D_STAR_MAX_POINTS,
    D_STAR_TOLERANCE,
    D_STAR_ZERO_MODE_TARGET,
    DEGENERACY_TOLERANCE,
    worker_count,
)
from quantum_states import (
    DensityField,
    InadmissibleStateError,
    OrbitalSet,
    PairingState,
    check_admissibility,
    pad_state,
)
from radial_grid import TF_KINETIC_CONSTANT, RadialGrid, radial_coulomb_energy
from spectral_grid import (
    GridError,
    InverseSqrtLaplacian,
    KineticMassless,
    MultiplierKind,
    SpectralGrid,
    apply_multiplier,
    build_multiplier,
    convolve_coulomb,
    convolve_coulomb_complex,
    kinetic_kind,
    spectrum,
)

logger = logging.getLogger(__name__)

HARDY_KATO_CONSTANT = 0.5 * math.pi
REDUCED_COUPLING_LIMIT = 4.0 / math.pi


class DegenerateDenominatorError(ValueError):
    """The trial state carries no net attraction (D - X [+ X(alpha)] ~ 0)."""


class CouplingOutOfRangeError(ValueError):
    """Coupling or mass outside the range a functional is defined for."""


class EnergyBreakdown(BaseModel):
    """Itemized energy: total = kinetic - (k/2)(direct - exchange) - (k/2) pairing."""
    kinetic: float
    direct: float
    exchange: float
    pairing: float
    total: float
    coupling: float
    mass: float


class QuotientValue(BaseModel):
    numerator: float
    denominator: float
    value: float
    variant: Literal["HF", "RelaxedRank", "HFB"]


class InverseSqrtTrace(BaseModel):
    """
    Tr((-Lap)^{-1/2} gamma) on a padded grid: the lattice sum over xi != 0 plus
    the zero-mode cell's share, reported separately.
    """
    value: float
    lattice_value: float
    zero_mode_weight: float
    zero_mode_correction: float
    padding: int = 1

    @property
    def resolved(self) -> bool:
        return self.zero_mode_correction <= D_STAR_TOLERANCE * self.value


class FrameTerms:
    """
    All Coulomb contractions of one orbital frame.

    Pair potentials P[j, k] = W * (u_j conj(u_k)) are built once for j <= k
    (diagonal ones through the real convolution path) and shared by the
    direct, exchange and pairing terms and by the mean-field action. Gradients
    returned here are Wirtinger derivatives d/d conj(c) in coefficient space.
    """

    def __init__(
        self,
        grid: SpectralGrid,
        coefficients: np.ndarray,
        occupations: np.ndarray,
        amplitudes: Optional[np.ndarray] = None,
        kinetic: MultiplierKind = KineticMassless(),
        truncation_radius: Optional[float] = None,
    ):
        self.grid = grid
        self.coefficients = coefficients
        self.occupations = np.asarray(occupations, dtype=np.float64)
        self.amplitudes = None if amplitudes is None else np.asarray(amplitudes, dtype=np.float64)
        self.kinetic_table = build_multiplier(grid, kinetic)
        self.truncation_radius = truncation_radius

    @property
    def count(self) -> int:
        return self.coefficients.shape[0]

    # ── kinetic ──────────────────────────────────────────

    @cached_property
    def spectra(self) -> np.ndarray:
        return np.stack([spectrum(self.grid, c) for c in self.coefficients])

    @cached_property
    def kinetic_each(self) -> np.ndarray:
        weights = np.abs(self.spectra) ** 2
        return np.array([float(np.sum(self.kinetic_table * w)) for w in weights])

    @cached_property
    def kinetic(self) -> float:
        return float(np.dot(self.occupations, self.kinetic_each))

    def kinetic_action(self, j: int) -> np.ndarray:
        return apply_multiplier(self.grid, self.kinetic_table, self.coefficients[j])

    # ── direct ───────────────────────────────────────────

    @cached_property
    def density(self) -> np.ndarray:
        weights = self.occupations[:, None, None, None]
        return np.sum(weights * np.abs(self.coefficients) ** 2, axis=0) / self.grid.cell_volume

    @cached_property
    def direct_potential(self) -> np.ndarray:
        return convolve_coulomb(self.grid, self.density, self.truncation_radius)

    @cached_property
    def direct(self) -> float:
        return float(self.grid.integrate(self.density * self.direct_potential))

    @cached_property
    def direct_each(self) -> np.ndarray:
        """<u_j, V_rho u_j>."""
        return np.array([
            float(np.sum(self.direct_potential * np.abs(c) ** 2)) for c in self.coefficients
        ])

    # ── pair potentials and exchange ─────────────────────

    def _pair_potential(self, pair: tuple[int, int]) -> np.ndarray:
        j, k = pair
        volume = self.grid.cell_volume
        if j == k:
            rho = np.abs(self.coefficients[j]) ** 2 / volume
            return convolve_coulomb(self.grid, rho, self.truncation_radius)
        rho = self.coefficients[j] * self.coefficients[k].conj() / volume
        return convolve_coulomb_complex(self.grid, rho, self.truncation_radius)

    @cached_property
    def pair_potentials(self) -> dict[tuple[int, int], np.ndarray]:
        pairs = [(j, k) for j in range(self.count) for k in range(j, self.count)]
        workers = worker_count()
        if workers > 1 and len(pairs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                potentials = list(pool.map(self._pair_potential, pairs))
        else:
            potentials = [self._pair_potential(p) for p in pairs]
        return dict(zip(pairs, potentials))

    def pair_potential(self, j: int, k: int) -> np.ndarray:
        if j <= k:
            return self.pair_potentials[(j, k)]
        return self.pair_potentials[(k, j)].conj()

    @cached_property
    def exchange_matrix(self) -> np.ndarray:
        """X_jk = Re int conj(rho_jk) (W * rho_jk), symmetric, nonnegative diagonal."""
        volume = self.grid.cell_volume
        matrix = np.zeros((self.count, self.count))
        for (j, k), potential in self.pair_potentials.items():
            if j == k:
                rho = np.abs(self.coefficients[j]) ** 2 / volume
                matrix[j, j] = float(self.grid.integrate(rho * potential))
            else:
                rho = self.coefficients[j] * self.coefficients[k].conj() / volume
                value = float(np.real(self.grid.integrate(rho.conj() * potential)))
                matrix[j, k] = matrix[k, j] = value
        return matrix

    @cached_property
    def exchange_each(self) -> np.ndarray:
        """e_j = sum_k occ_k X_jk, so that X = sum_j occ_j e_j."""
        return np.array([
            sum(self.occupations[k] * self.exchange_matrix[j, k] for k in range(self.count))
            for j in range(self.count)
        ])

    @cached_property
    def exchange(self) -> float:
        total = 0.0
        for j in range(self.count):
            total += self.occupations[j] * self.exchange_each[j]
        return float(total)

    def direct_action(self, j: int) -> np.ndarray:
        return self.direct_potential * self.coefficients[j]

    def exchange_action(self, j: int) -> np.ndarray:
        """sum_k occ_k (W * (u_j conj(u_k))) u_k."""
        out = np.zeros(self.grid.shape, dtype=np.complex128)
        for k in range(self.count):
            out += self.occupations[k] * self.pair_potential(j, k) * self.coefficients[k]
        return out

    # ── pairing ──────────────────────────────────────────

    @property
    def has_pairing(self) -> bool:
        return self.amplitudes is not None and self.amplitudes.shape[0] > 0

    @cached_property
    def pairing_matrix(self) -> np.ndarray:
        """F with X(alpha) = c^T F c for pairs (2k, 2k+1)."""
        pairs = self.count // 2
        coeffs = self.coefficients
        matrix = np.zeros((pairs, pairs))
        for k in range(pairs):
            a_k, b_k = 2 * k, 2 * k + 1
            for l in range(pairs):
                a_l, b_l = 2 * l, 2 * l + 1
                same = np.sum(coeffs[a_k] * coeffs[a_l].conj() * self.pair_potential(b_k, b_l))
                crossed = np.sum(coeffs[a_k] * coeffs[b_l].conj() * self.pair_potential(b_k, a_l))
                matrix[k, l] = 2.0 * float(np.real(same - crossed))
        return 0.5 * (matrix + matrix.T)

    @cached_property
    def pairing(self) -> float:
        if not self.has_pairing:
            return 0.0
        c = self.amplitudes
        return float(c @ self.pairing_matrix @ c)

    def pairing_amplitude_gradient(self) -> np.ndarray:
        """dX(alpha)/dc_k."""
        return 2.0 * self.pairing_matrix @ self.amplitudes

    def pairing_frame_gradient(self) -> np.ndarray:
        """dX(alpha)/d conj(c_j) for every frame orbital."""
        coeffs = self.coefficients
        c = self.amplitudes
        grads = np.zeros_like(coeffs)
        for l in range(self.count // 2):
            a_l, b_l = 2 * l, 2 * l + 1
            g_a = np.zeros(self.grid.shape, dtype=np.complex128)
            g_b = np.zeros(self.grid.shape, dtype=np.complex128)
            for k in range(self.count // 2):
                a_k, b_k = 2 * k, 2 * k + 1
                g_a += c[k] * (self.pair_potential(b_k, b_l) * coeffs[a_k] - self.pair_potential(a_k, b_l) * coeffs[b_k])
                g_b -= c[k] * (self.pair_potential(b_k, a_l) * coeffs[a_k] - self.pair_potential(a_k, a_l) * coeffs[b_k])
            grads[a_l] = 2.0 * c[l] * g_a
            grads[b_l] = 2.0 * c[l] * g_b
        return grads

    # ── mean field ───────────────────────────────────────

    def meanfield_action(self, j: int, coupling: float) -> np.ndarray:
        """H_gamma u_j = T u_j - k V_rho u_j + k sum_k occ_k (W * u_j conj(u_k)) u_k."""
        return self.kinetic_action(j) - coupling * (self.direct_action(j) - self.exchange_action(j))

    def interaction_action(self, j: int) -> np.ndarray:
        """d(D - X)/d conj(c_j) divided by 2 occ_j."""
        return self.direct_action(j) - self.exchange_action(j)


def frame_terms(
    state: OrbitalSet | PairingState,
    kinetic: MultiplierKind = KineticMassless(),
    truncation_radius: Optional[float] = None,
) -> FrameTerms:
    if isinstance(state, PairingState):
        return FrameTerms(
            state.grid, state.base.coefficients, state.occupations, state.amplitudes, kinetic, truncation_radius
        )
    return FrameTerms(state.grid, state.coefficients, state.occupations, None, kinetic, truncation_radius)


def kinetic_trace(state: OrbitalSet | PairingState, kind: MultiplierKind = KineticMassless()) -> float:
    """Tr(M gamma) = sum_j occ_j <u_j, M u_j> for any multiplier M."""
    return frame_terms(state, kind).kinetic


def direct_term(first: DensityField, second: DensityField, truncation_radius: Optional[float] = None) -> float:
    """D(rho_1, rho_2) = int rho_1 (W * rho_2)."""
    if first.grid != second.grid:
        raise GridError("densities live on different grids")
    potential = convolve_coulomb(second.grid, second.values, truncation_radius)
    return float(first.grid.integrate(first.values * potential))


def exchange_term(state: OrbitalSet, truncation_radius: Optional[float] = None) -> float:
    """X(gamma) = int int |gamma(x, y)|^2 / |x - y|."""
    return frame_terms(state, truncation_radius=truncation_radius).exchange


def _require_admissible(state: PairingState) -> None:
    certificate = check_admissibility(state)
    if not certificate.ok:
        raise InadmissibleStateError(f"pairing state violates admissibility by {certificate.max_violation:.3e}")


def pairing_term(state: PairingState, truncation_radius: Optional[float] = None) -> float:
    """X(alpha) = int int |alpha(x, y)|^2 / |x - y| for the BCS kernel."""
    _require_admissible(state)
    return frame_terms(state, truncation_radius=truncation_radius).pairing


def _check_parameters(mass: float, coupling: float) -> None:
    if mass < 0:
        raise CouplingOutOfRangeError(f"mass must be nonnegative, got {mass}")
    if coupling < 0:
        raise CouplingOutOfRangeError(f"coupling must be nonnegative, got {coupling}")


def breakdown_from_terms(terms: FrameTerms, mass: float, coupling: float) -> EnergyBreakdown:
    pairing = terms.pairing
    total = terms.kinetic - 0.5 * coupling * (terms.direct - terms.exchange) - 0.5 * coupling * pairing
    return EnergyBreakdown(
        kinetic=terms.kinetic,
        direct=terms.direct,
        exchange=terms.exchange,
        pairing=pairing,
        total=total,
        coupling=coupling,
        mass=mass,
    )


def hf_energy(
    state: OrbitalSet,
    mass: float,
    coupling: float,
    truncation_radius: Optional[float] = None,
) -> EnergyBreakdown:
    """E^HF = Tr((sqrt(-Lap+m^2)-m) gamma) - (k/2)(D(rho, rho) - X(gamma))."""
    _check_parameters(mass, coupling)
    terms = FrameTerms(state.grid, state.coefficients, state.occupations, None, kinetic_kind(mass), truncation_radius)
    return breakdown_from_terms(terms, mass, coupling)


def hfb_energy(
    state: PairingState,
    mass: float,
    coupling: float,
    truncation_radius: Optional[float] = None,
) -> EnergyBreakdown:
    """E^HFB = E^HF(gamma) - (k/2) X(alpha)."""
    _check_parameters(mass, coupling)
    _require_admissible(state)
    return breakdown_from_terms(frame_terms(state, kinetic_kind(mass), truncation_radius), mass, coupling)


def reduced_energy(state: OrbitalSet, coupling: float, truncation_radius: Optional[float] = None) -> float:
    """E^red = Tr(sqrt(-Lap) gamma) - (k/2) D(rho, rho), for k in (0, 4/pi)."""
    if not 0 < coupling < REDUCED_COUPLING_LIMIT:
        raise CouplingOutOfRangeError(f"reduced energy needs coupling in (0, 4/pi), got {coupling}")
    terms = frame_terms(state, truncation_radius=truncation_radius)
    return terms.kinetic - 0.5 * coupling * terms.direct


def quotient_from_terms(terms: FrameTerms, variant: str) -> QuotientValue:
    """Shared by gn_quotient and the minimizer so converged values agree exactly."""
    scale = float(terms.occupations.max()) if variant == "RelaxedRank" else 1.0
    numerator = 2.0 * scale * terms.kinetic
    denominator = terms.direct - terms.exchange
    if variant == "HFB":
        denominator += terms.pairing
    if denominator <= DEGENERACY_TOLERANCE * abs(numerator):
        raise DegenerateDenominatorError(
            f"{variant} quotient denominator {denominator:.3e} is not positive relative to numerator {numerator:.3e}"
        )
    return QuotientValue(numerator=numerator, denominator=denominator, value=numerator / denominator, variant=variant)


def gn_quotient(
    state: OrbitalSet | PairingState,
    variant: Literal["HF", "RelaxedRank", "HFB"] = "HF",
    truncation_radius: Optional[float] = None,
) -> QuotientValue:
    """
    HF: 2 Tr(sqrt(-Lap) gamma) / (D - X)
    RelaxedRank: 2 ||gamma|| Tr(sqrt(-Lap) gamma) / (D - X)
    HFB: 2 Tr(sqrt(-Lap) gamma) / (D - X(gamma) + X(alpha))
    """
    if variant == "HFB":
        if not isinstance(state, PairingState):
            raise TypeError("HFB quotient needs a PairingState")
        _require_admissible(state)
    elif isinstance(state, PairingState):
        state = state.gamma
    return quotient_from_terms(frame_terms(state, truncation_radius=truncation_radius), variant)


def _zero_mode_share(terms: FrameTerms) -> float:
    return float(np.dot(terms.occupations, np.abs(terms.spectra[:, 0, 0, 0]) ** 2))


def inverse_sqrt_trace(state: OrbitalSet | PairingState, pad: bool = True) -> InverseSqrtTrace:
    """
    Tr((-Lap)^{-1/2} gamma).

    The state is zero-padded into boxes doubled per axis until its xi = 0 weight
    w0 drops below D_STAR_ZERO_MODE_TARGET * Tr gamma or the grid would exceed
    D_STAR_MAX_POINTS. The remaining zero-mode cell is integrated as
    w0 <1/|xi|> over the ball of the cell's volume and included in `value`.
    """
    terms = frame_terms(state, InverseSqrtLaplacian())
    weight = _zero_mode_share(terms)
    target = D_STAR_ZERO_MODE_TARGET * state.trace
    padding = 1
    while pad and weight > target and 2 * state.grid.n_points_per_axis <= D_STAR_MAX_POINTS:
        state = pad_state(state, 2.0)
        padding *= 2
        terms = frame_terms(state, InverseSqrtLaplacian())
        weight = _zero_mode_share(terms)
    cell = 2.0 * math.pi / state.grid.box_length
    ball_radius = cell * (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)
    correction = weight * 1.5 / ball_radius
    trace = InverseSqrtTrace(
        value=terms.kinetic + correction,
        lattice_value=terms.kinetic,
        zero_mode_weight=weight,
        zero_mode_correction=correction,
        padding=padding,
    )
    if pad and not trace.resolved:
        logger.warning(
            f"Zero-mode correction {correction:.3e} is {correction / trace.value:.2%} of "
            f"Tr((-Lap)^-1/2 gamma) at {state.grid.n_points_per_axis}^3 points"
        )
    return trace


def virial_derivative(
    state: OrbitalSet | PairingState,
    mass: float,
    coupling: float,
    truncation_radius: Optional[float] = None,
) -> float:
    """d/dbeta E(dilate(state, beta)) at beta = 1: Tr(p^2/sqrt(p^2+m^2) gamma) - (k/2)(D - X + X(alpha))."""
    terms = frame_terms(state, truncation_radius=truncation_radius)
    xi = state.grid.frequency_norm
    table = np.zeros_like(xi)
    np.divide(xi * xi, np.sqrt(xi * xi + mass * mass), out=table, where=xi > 0)
    weights = np.abs(terms.spectra) ** 2
    velocity = float(sum(o * np.sum(table * w) for o, w in zip(terms.occupations, weights)))
    return velocity - 0.5 * coupling * (terms.direct - terms.exchange + terms.pairing)


def tf_objective(f: np.ndarray, grid: RadialGrid) -> float:
    """
    2 c_TF (int f^{4/3}) (int f)^{2/3} / D(f, f) with c_TF = (3/4)(6 pi^2)^{1/3},
    the semiclassical constant of sqrt(-Lap); its infimum is tau_c.
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("Thomas-Fermi density must be nonnegative")
    if not np.any(f > 0):
        raise ValueError("Thomas-Fermi density vanishes identically")
    power = float(np.dot(grid.weights, f ** (4.0 / 3.0)))
    mass = float(np.dot(grid.weights, f))
    return 2.0 * TF_KINETIC_CONSTANT * power * mass ** (2.0 / 3.0) / radial_coulomb_energy(f, f, grid)


def tf_gradient(f: np.ndarray, grid: RadialGrid) -> tuple[float, np.ndarray]:
    """Objective value and its derivative with respect to the node values f_i."""
    f = np.asarray(f, dtype=np.float64)
    value = tf_objective(f, grid)
    power = float(np.dot(grid.weights, f ** (4.0 / 3.0)))
    mass = float(np.dot(grid.weights, f))
    potential = grid.newton_potential(f)
    coulomb = float(np.dot(grid.weights, f * potential))
    gradient = value * grid.weights * (
        (4.0 / 3.0) * np.cbrt(f) / power + (2.0 / 3.0) / mass - 2.0 * potential / coulomb
    )
    return value, gradient
