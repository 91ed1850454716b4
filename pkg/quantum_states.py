#!/usr/bin/env python3
"""
Module: One-body density matrices, orbital frames and BCS pairing states for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- OrbitalSet: N orthonormal orbitals with occupations (gamma = sum occ |u><u|)
- PairingState: BCS pair ansatz on a 2K-orbital frame with admissibility certificate
- Densities, pair densities, dilations (grid relabeling), Loewdin orthonormalization
- Centroid pinning and zero-padding onto larger boxes

UV ENVIRONMENT: Run with `uv run python quantum_states.py`

INSTALLATION:
uv add numpy scipy
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from config import ORTHONORMALITY_TOLERANCE
from spectral_grid import SpectralGrid

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
ADMISSIBILITY_TOLERANCE = 1e-12


class StateError(ValueError):
    """A state violates its structural invariants."""


class RankDeficientError(StateError):
    """Orbitals are (numerically) linearly dependent."""


class InadmissibleStateError(StateError):
    """Pairing amplitudes break 0 <= (gamma alpha; alpha* 1-gamma) <= 1."""


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class OrbitalSet:
    """
    Orbitals stored as grid coefficients c_j = h^{3/2} u_j(x_k), orthonormal in
    the plain l2 sense, so that relabeling the box leaves the arrays untouched
    while physical L2 norms are preserved.
    """
    grid: SpectralGrid
    coefficients: np.ndarray
    occupations: np.ndarray
    orthonormality_residual: float = field(init=False)

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=np.complex128, copy=True)
        if coefficients.ndim == 3:
            coefficients = coefficients[np.newaxis]
        if coefficients.shape[1:] != self.grid.shape:
            raise StateError(f"orbital shape {coefficients.shape[1:]} does not match grid {self.grid.shape}")
        occupations = np.array(self.occupations, dtype=np.float64, copy=True).reshape(-1)
        if occupations.shape[0] != coefficients.shape[0]:
            raise StateError(f"{occupations.shape[0]} occupations for {coefficients.shape[0]} orbitals")
        if np.any(occupations < 0.0) or np.any(occupations > 1.0):
            raise StateError(f"occupations must lie in [0, 1], got {occupations}")
        flat = coefficients.reshape(coefficients.shape[0], -1)
        gram = flat.conj() @ flat.T
        residual = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
        if residual > ORTHONORMALITY_TOLERANCE:
            raise StateError(f"orbitals are not orthonormal (residual {residual:.3e})")
        object.__setattr__(self, "coefficients", _readonly(coefficients))
        object.__setattr__(self, "occupations", _readonly(occupations))
        object.__setattr__(self, "orthonormality_residual", residual)

    @classmethod
    def projection(cls, grid: SpectralGrid, coefficients: np.ndarray) -> "OrbitalSet":
        """Rank-N projection: every occupation equal to 1."""
        count = 1 if np.ndim(coefficients) == 3 else np.shape(coefficients)[0]
        return cls(grid, coefficients, np.ones(count))

    @property
    def count(self) -> int:
        return self.coefficients.shape[0]

    @property
    def trace(self) -> float:
        return float(self.occupations.sum())

    @property
    def operator_norm(self) -> float:
        """||gamma||, the largest occupation."""
        return float(self.occupations.max())

    @property
    def is_projection(self) -> bool:
        return bool(np.all(self.occupations == 1.0))

    @property
    def flat(self) -> np.ndarray:
        return self.coefficients.reshape(self.count, -1)

    def fields(self) -> np.ndarray:
        """Physical orbital values u_j(x_k)."""
        return self.coefficients / self.grid.spacing ** 1.5

    def with_occupations(self, occupations: np.ndarray) -> "OrbitalSet":
        return OrbitalSet(self.grid, self.coefficients, occupations)

    def with_grid(self, grid: SpectralGrid) -> "OrbitalSet":
        return OrbitalSet(grid, self.coefficients, self.occupations)


@dataclass(frozen=True)
class DensityField:
    """rho_gamma(x) = gamma(x, x) sampled on the grid."""
    grid: SpectralGrid
    values: np.ndarray
    total_mass: float


@dataclass(frozen=True)
class AdmissibilityCertificate:
    ok: bool
    max_violation: float


@dataclass(frozen=True, eq=False)
class PairingState:
    """
    BCS pairs on the frame `base`: orbitals (2k, 2k+1) carry occupation
    sin^2(theta_k) and pairing amplitude c_k (default sin(theta_k) cos(theta_k)),
    alpha(x, y) = sum_k c_k (u_2k(x) u_2k+1(y) - u_2k+1(x) u_2k(y)).
    """
    base: OrbitalSet
    pair_angles: np.ndarray
    amplitudes: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.base.count % 2:
            raise StateError(f"pairing frame needs an even orbital count, got {self.base.count}")
        angles = np.array(self.pair_angles, dtype=np.float64, copy=True).reshape(-1)
        if angles.shape[0] != self.base.count // 2:
            raise StateError(f"{angles.shape[0]} pair angles for {self.base.count // 2} pairs")
        if np.any(angles < -1e-12) or np.any(angles > 0.5 * np.pi + 1e-12):
            raise StateError(f"pair angles must lie in [0, pi/2], got {angles}")
        angles = np.clip(angles, 0.0, 0.5 * np.pi)
        if self.amplitudes is None:
            amplitudes = np.sin(angles) * np.cos(angles)
        else:
            amplitudes = np.array(self.amplitudes, dtype=np.float64, copy=True).reshape(-1)
            if amplitudes.shape != angles.shape:
                raise StateError(f"{amplitudes.shape[0]} amplitudes for {angles.shape[0]} pairs")
        object.__setattr__(self, "pair_angles", _readonly(angles))
        object.__setattr__(self, "amplitudes", _readonly(amplitudes))

    @classmethod
    def from_frame(cls, frame: OrbitalSet, pair_angles: np.ndarray, pairing: bool = True) -> "PairingState":
        """BCS state on `frame`; with pairing off the amplitudes are fixed at 0."""
        angles = np.asarray(pair_angles, dtype=np.float64)
        return cls(frame, angles, None if pairing else np.zeros_like(angles))

    @property
    def grid(self) -> SpectralGrid:
        return self.base.grid

    @property
    def pair_count(self) -> int:
        return self.pair_angles.shape[0]

    @property
    def pair_occupations(self) -> np.ndarray:
        return np.sin(self.pair_angles) ** 2

    @property
    def occupations(self) -> np.ndarray:
        return np.repeat(self.pair_occupations, 2)

    @property
    def gamma(self) -> OrbitalSet:
        return self.base.with_occupations(self.occupations)

    @property
    def trace(self) -> float:
        return float(self.occupations.sum())

    def with_grid(self, grid: SpectralGrid) -> "PairingState":
        return PairingState(self.base.with_grid(grid), self.pair_angles, self.amplitudes)


def density(state: OrbitalSet) -> DensityField:
    """rho(x) = sum_j occ_j |u_j(x)|^2."""
    weights = state.occupations[:, None, None, None]
    values = np.sum(weights * np.abs(state.coefficients) ** 2, axis=0) / state.grid.cell_volume
    return DensityField(state.grid, values, float(state.grid.integrate(values)))


def pair_density(state: OrbitalSet, j: int, k: int) -> np.ndarray:
    """u_j(x) conj(u_k(x)) for 0-based orbital indices j, k."""
    if not (0 <= j < state.count and 0 <= k < state.count):
        raise IndexError(f"pair ({j}, {k}) out of range for {state.count} orbitals")
    return state.coefficients[j] * state.coefficients[k].conj() / state.grid.cell_volume


def dilate(state: OrbitalSet | PairingState, beta: float) -> OrbitalSet | PairingState:
    """
    gamma_beta(x, y) = beta^3 gamma(beta x, beta y), realized by dividing the
    box length by beta; coefficients and occupations are untouched.
    """
    if not beta > 0:
        raise StateError(f"dilation must be positive, got {beta}")
    if beta == 1:
        return state
    return state.with_grid(state.grid.with_box_length(state.grid.box_length / beta))


def orthonormalize(
    grid: SpectralGrid,
    raw: np.ndarray,
    occupations: Optional[np.ndarray] = None,
) -> OrbitalSet:
    """
    Loewdin symmetric orthonormalization S^{-1/2} C of raw grid coefficients.

    Spans the same subspace and is independent of orbital order.
    """
    coefficients = np.array(raw, dtype=np.complex128)
    if coefficients.ndim == 3:
        coefficients = coefficients[np.newaxis]
    count = coefficients.shape[0]
    flat = coefficients.reshape(count, -1)
    for _ in range(2):
        gram = flat.conj() @ flat.T
        eigenvalues, vectors = linalg.eigh(gram)
        if eigenvalues[0] <= 0 or eigenvalues[-1] / eigenvalues[0] > CONDITION_LIMIT:
            raise RankDeficientError(
                f"Gram matrix is singular or ill-conditioned (eigenvalues {eigenvalues[0]:.3e}..{eigenvalues[-1]:.3e})"
            )
        inverse_root = (vectors * eigenvalues ** -0.5) @ vectors.conj().T
        flat = inverse_root.T @ flat
        gram = flat.conj() @ flat.T
        if np.max(np.abs(gram - np.eye(count))) <= 1e-13:
            break
    if occupations is None:
        occupations = np.ones(count)
    return OrbitalSet(grid, flat.reshape(coefficients.shape), occupations)


def check_admissibility(state: PairingState) -> AdmissibilityCertificate:
    """Verify lambda_k in [0, 1] and c_k^2 <= lambda_k (1 - lambda_k) for every pair."""
    lam = state.pair_occupations
    c = state.amplitudes
    range_violation = np.maximum(np.maximum(-lam, lam - 1.0), 0.0)
    bound_violation = np.maximum(c * c - lam * (1.0 - lam), 0.0)
    violation = float(max(range_violation.max(initial=0.0), bound_violation.max(initial=0.0)))
    return AdmissibilityCertificate(ok=violation <= ADMISSIBILITY_TOLERANCE, max_violation=violation)


def _map_coefficients(state: OrbitalSet | PairingState, transform) -> OrbitalSet | PairingState:
    if isinstance(state, PairingState):
        base = state.base
        moved = OrbitalSet(base.grid, transform(base.coefficients), base.occupations)
        return PairingState(moved, state.pair_angles, state.amplitudes)
    return OrbitalSet(state.grid, transform(state.coefficients), state.occupations)


def centroid_shift(state: OrbitalSet | PairingState) -> tuple[int, int, int]:
    """Integer roll (per axis) bringing the periodic density centroid to the box center."""
    gamma = state.gamma if isinstance(state, PairingState) else state
    rho = density(gamma).values
    n = state.grid.n_points_per_axis
    phase = np.exp(2j * np.pi * np.arange(n) / n)
    shifts = []
    for axis in range(3):
        other = tuple(a for a in range(3) if a != axis)
        marginal = rho.sum(axis=other)
        mean_index = np.angle(np.dot(marginal, phase)) * n / (2.0 * np.pi)
        shifts.append(int(round(n // 2 - mean_index)) % n)
    return tuple(shifts)


def recenter(state: OrbitalSet | PairingState) -> OrbitalSet | PairingState:
    """Pin the density centroid to the box center with an exact periodic roll."""
    shift = centroid_shift(state)
    if not any(shift):
        return state
    return _map_coefficients(state, lambda c: np.roll(c, shift, axis=(1, 2, 3)))


def pad_state(state: OrbitalSet | PairingState, factor: float = 1.5) -> OrbitalSet | PairingState:
    """Embed the state, centered, into a larger box with the same spacing."""
    big = state.grid.padded(factor)
    offset = big.n_points_per_axis // 2 - state.grid.n_points_per_axis // 2
    n = state.grid.n_points_per_axis

    def embed(coefficients: np.ndarray) -> np.ndarray:
        out = np.zeros((coefficients.shape[0],) + big.shape, dtype=np.complex128)
        out[:, offset:offset + n, offset:offset + n, offset:offset + n] = coefficients
        return out

    if isinstance(state, PairingState):
        base = OrbitalSet(big, embed(state.base.coefficients), state.base.occupations)
        return PairingState(base, state.pair_angles, state.amplitudes)
    return OrbitalSet(big, embed(state.coefficients), state.occupations)
