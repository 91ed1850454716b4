#!/usr/bin/env python3
"""
Module: Radial quadrature for RelStar
Version: 1.0.0
Development Iteration: v2

Project: RelStar
Created: 2026-10-18

Enhancement: Split out of the Thomas-Fermi module so the functionals and the
minimizer can share the radial grid without importing the tau_c drivers

Features:
- Logarithmic radial grid with exact hat-function weights for int 4 pi r^2 dr
- Radial Coulomb energy through Newton's shell theorem (cumulative sums, O(M))
- (mass, L^{4/3}) normalization of radial profiles

UV ENVIRONMENT: Run with `uv run python radial_grid.py`

INSTALLATION:
uv add numpy
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from config import RADIAL_MAX, RADIAL_MIN, RADIAL_NODES

# Semiclassical constant of sqrt(-Lap): Tr sqrt(-Lap) gamma ~ c_TF int rho^{4/3}
TF_KINETIC_CONSTANT = 0.75 * (6.0 * math.pi ** 2) ** (1.0 / 3.0)


@dataclass(frozen=True)
class RadialGrid:
    """
    Log-spaced nodes r_1 < ... < r_M with weights for int_0^inf 4 pi r^2 f(r) dr.

    f is read as the piecewise-linear interpolant of its node values, constant
    on [0, r_1] and zero beyond r_M, so the weights integrate it exactly.
    """
    n_nodes: int = RADIAL_NODES
    r_min: float = RADIAL_MIN
    r_max: float = RADIAL_MAX

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError(f"radial grid needs at least 2 nodes, got {self.n_nodes}")
        if not 0 < self.r_min < self.r_max:
            raise ValueError(f"radial range must satisfy 0 < r_min < r_max, got [{self.r_min}, {self.r_max}]")

    @cached_property
    def radii(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.n_nodes)

    @cached_property
    def weights(self) -> np.ndarray:
        r = self.radii
        a, b = r[:-1], r[1:]
        width = b - a
        quartic = (b ** 4 - a ** 4) / 4.0
        cubic = (b ** 3 - a ** 3) / 3.0
        rising = (quartic - a * cubic) / width
        falling = (b * cubic - quartic) / width
        w = np.zeros_like(r)
        w[1:] += rising
        w[:-1] += falling
        w[0] += r[0] ** 3 / 3.0
        return 4.0 * math.pi * w

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.weights, f))

    def newton_potential(self, g: np.ndarray) -> np.ndarray:
        """V_i = (1/r_i) sum_{j<=i} w_j g_j + sum_{j>i} w_j g_j / r_j."""
        charge = self.weights * np.asarray(g, dtype=np.float64)
        inner = np.cumsum(charge)
        outer_terms = charge / self.radii
        outer = np.cumsum(outer_terms[::-1])[::-1] - outer_terms
        return inner / self.radii + outer

    def refined(self) -> "RadialGrid":
        return RadialGrid(2 * self.n_nodes, self.r_min, self.r_max)


def radial_coulomb_energy(f: np.ndarray, g: np.ndarray, grid: RadialGrid) -> float:
    """D(f, g) = int int f(x) g(y) / |x - y| for radial f, g via the shell theorem."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != grid.radii.shape or g.shape != grid.radii.shape:
        raise ValueError("radial samples do not match the grid")
    if np.any(f < 0) or np.any(g < 0):
        raise ValueError("radial Coulomb energy needs nonnegative densities")
    return float(np.dot(grid.weights * f, grid.newton_potential(g)))


def normalize_profile(f: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """
    Rescale f -> a f(r / b) so that int f = int f^{4/3} = 1.

    Amplitude a = (M/A)^3; then b^3 = 1 / (a M). The dilation is applied by
    interpolation in log r, so it is exact only up to the grid resolution.
    """
    mass = grid.integrate(f)
    power = grid.integrate(f ** (4.0 / 3.0))
    if not (mass > 0 and power > 0):
        raise ValueError("cannot normalize a vanishing profile")
    amplitude = (mass / power) ** 3
    dilation = (1.0 / (amplitude * mass)) ** (1.0 / 3.0)
    log_r = np.log(grid.radii)
    shifted = np.interp(log_r - math.log(dilation), log_r, f, left=f[0], right=0.0)
    return amplitude * shifted
