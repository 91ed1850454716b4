#!/usr/bin/env python3
"""
Module: Periodic spectral grid and Fourier multipliers for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Cubic periodic discretization of R^3 (even n >= 8, box length L)
- Fourier multiplier tables: sqrt(-Lap+m^2)-m, sqrt(-Lap), (-Lap)^(-1/2),
  spherically truncated Coulomb kernel, mass-gap term B_{m,beta}
- Unitary FFT application (scipy.fft, worker count from config)
- Real-space image of any multiplier table for dense oracles

UV ENVIRONMENT: Run with `uv run python spectral_grid.py`

INSTALLATION:
uv add numpy scipy
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from scipy import fft

from config import MIN_GRID, worker_count

logger = logging.getLogger(__name__)


class GridError(ValueError):
    """Invalid grid, multiplier parameter, or field shape."""


@dataclass(frozen=True)
class SpectralGrid:
    """
    Periodic cube of edge `box_length` sampled with `n_points_per_axis` points.

    Grid index k on each axis sits at x_k = (k - n/2) h, so index n/2 is the
    origin. Frequencies are stored in FFT order, xi_k = 2 pi k / L with
    k in {-n/2, ..., n/2 - 1}.
    """
    n_points_per_axis: int
    box_length: float

    def __post_init__(self):
        n = self.n_points_per_axis
        if not isinstance(n, (int, np.integer)) or n < MIN_GRID or n % 2:
            raise GridError(f"n_points_per_axis must be an even integer >= {MIN_GRID}, got {n}")
        if not (math.isfinite(self.box_length) and self.box_length > 0):
            raise GridError(f"box_length must be positive and finite, got {self.box_length}")

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_points_per_axis
        return (n, n, n)

    @property
    def size(self) -> int:
        return self.n_points_per_axis ** 3

    @cached_property
    def frequency_table(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points_per_axis, d=self.spacing)

    @cached_property
    def frequency_norm(self) -> np.ndarray:
        k = self.frequency_table
        kx, ky, kz = np.meshgrid(k, k, k, indexing="ij")
        return np.sqrt(kx * kx + ky * ky + kz * kz)

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        n = self.n_points_per_axis
        return (np.arange(n) - n // 2) * self.spacing

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.axis_coordinates
        return tuple(np.meshgrid(x, x, x, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        x, y, z = self.coordinates
        return np.sqrt(x * x + y * y + z * z)

    @property
    def center_index(self) -> tuple[int, int, int]:
        c = self.n_points_per_axis // 2
        return (c, c, c)

    def integrate(self, values: np.ndarray) -> float | complex:
        """Riemann sum h^3 * sum(values); exact for trigonometric polynomials on the grid."""
        return self.cell_volume * values.sum()

    def with_box_length(self, box_length: float) -> "SpectralGrid":
        return SpectralGrid(self.n_points_per_axis, box_length)

    def padded(self, factor: float = 1.5) -> "SpectralGrid":
        """Larger grid with the same spacing and at least `factor` times the points."""
        n_new = int(math.ceil(self.n_points_per_axis * factor))
        n_new += n_new % 2
        return SpectralGrid(n_new, self.spacing * n_new)


@dataclass(frozen=True)
class KineticMassive:
    """sqrt(|xi|^2 + m^2) - m."""
    mass: float


@dataclass(frozen=True)
class KineticMassless:
    """|xi|."""


@dataclass(frozen=True)
class InverseSqrtLaplacian:
    """1/|xi| with the zero mode set to 0."""


@dataclass(frozen=True)
class CoulombTruncated:
    """Fourier transform of 1/|x| restricted to |x| < R; None means R = L/2."""
    truncation_radius: Optional[float] = None


@dataclass(frozen=True)
class MassGap:
    """B_{m,beta}(xi) = m^2 / (sqrt(beta^2 |xi|^2 + m^2) + beta |xi|)."""
    mass: float
    dilation: float = 1.0


MultiplierKind = KineticMassive | KineticMassless | InverseSqrtLaplacian | CoulombTruncated | MassGap


def kinetic_kind(mass: float) -> MultiplierKind:
    """Kinetic multiplier for rest mass `mass` (massless when mass == 0)."""
    if mass < 0:
        raise GridError(f"mass must be nonnegative, got {mass}")
    return KineticMassless() if mass == 0 else KineticMassive(mass)


def resolve_truncation(grid: SpectralGrid, truncation_radius: Optional[float]) -> float:
    """Default truncation radius L/2; rejects radii that would see periodic images."""
    half_box = 0.5 * grid.box_length
    if truncation_radius is None:
        return half_box
    if not truncation_radius > 0:
        raise GridError(f"truncation radius must be positive, got {truncation_radius}")
    if truncation_radius > half_box * (1.0 + 1e-12):
        raise GridError(f"truncation radius {truncation_radius} exceeds L/2 = {half_box}")
    return float(truncation_radius)


@lru_cache(maxsize=64)
def build_multiplier(grid: SpectralGrid, kind: MultiplierKind) -> np.ndarray:
    """
    Real multiplier table M(xi) over the grid's frequency space (FFT order).

    Tables are cached per (grid, kind) and returned read-only so they can be
    shared across workers.
    """
    xi = grid.frequency_norm
    match kind:
        case KineticMassless():
            table = xi.copy()
        case KineticMassive(mass=m):
            if m < 0:
                raise GridError(f"mass must be nonnegative, got {m}")
            if m == 0:
                table = xi.copy()
            else:
                # xi^2 / (sqrt(xi^2 + m^2) + m), free of cancellation at small xi
                table = xi * xi / (np.sqrt(xi * xi + m * m) + m)
        case InverseSqrtLaplacian():
            table = np.zeros_like(xi)
            np.divide(1.0, xi, out=table, where=xi > 0)
        case CoulombTruncated(truncation_radius=r):
            radius = resolve_truncation(grid, r)
            table = np.full_like(xi, 2.0 * np.pi * radius * radius)
            nonzero = xi > 0
            half = 0.5 * xi[nonzero] * radius
            # 4 pi (1 - cos(xi R)) / xi^2 written as 8 pi sin^2(xi R / 2) / xi^2
            table[nonzero] = 8.0 * np.pi * np.sin(half) ** 2 / xi[nonzero] ** 2
        case MassGap(mass=m, dilation=beta):
            if not m > 0:
                raise GridError(f"mass gap needs m > 0, got {m}")
            if not beta > 0:
                raise GridError(f"dilation must be positive, got {beta}")
            scaled = beta * xi
            table = m * m / (np.sqrt(scaled * scaled + m * m) + scaled)
        case _:
            raise GridError(f"unknown multiplier kind: {kind!r}")
    table.setflags(write=False)
    return table


def _check_field(grid: SpectralGrid, field: np.ndarray) -> None:
    if field.shape != grid.shape:
        raise GridError(f"field shape {field.shape} does not match grid {grid.shape}")


def apply_multiplier(grid: SpectralGrid, table: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Forward unitary FFT, pointwise multiply, inverse unitary FFT."""
    _check_field(grid, field)
    if table.shape != grid.shape:
        raise GridError(f"table shape {table.shape} does not match grid {grid.shape}")
    workers = worker_count()
    spectrum = fft.fftn(field, norm="ortho", workers=workers)
    return fft.ifftn(table * spectrum, norm="ortho", workers=workers)


def spectrum(grid: SpectralGrid, field: np.ndarray) -> np.ndarray:
    """Unitary Fourier coefficients of a field."""
    _check_field(grid, field)
    return fft.fftn(field, norm="ortho", workers=worker_count())


def convolve_coulomb(
    grid: SpectralGrid,
    density: np.ndarray,
    truncation_radius: Optional[float] = None,
) -> np.ndarray:
    """Truncated Coulomb potential (rho * |.|^-1 restricted to |x| < R) of a real density."""
    if np.iscomplexobj(density):
        raise GridError("convolve_coulomb expects a real density")
    table = build_multiplier(grid, CoulombTruncated(truncation_radius))
    return apply_multiplier(grid, table, density).real


def convolve_coulomb_complex(
    grid: SpectralGrid,
    pair_density: np.ndarray,
    truncation_radius: Optional[float] = None,
) -> np.ndarray:
    """Truncated Coulomb convolution of a complex pair density u_j conj(u_k)."""
    table = build_multiplier(grid, CoulombTruncated(truncation_radius))
    return apply_multiplier(grid, table, pair_density)


def real_space_kernel(grid: SpectralGrid, table: np.ndarray) -> np.ndarray:
    """
    Kernel K(x) whose quadrature h^3 sum_y K(x - y) f(y) reproduces the
    multiplier; index 0 along each axis is zero displacement.
    """
    return fft.ifftn(table).real / grid.cell_volume
