#!/usr/bin/env python3
"""
Module: Invariant and oracle suite for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Dense real-space oracles (O(n^6)) for kinetic, direct, exchange, pairing and the mean-field operator
- Hardy-Kato sampling over random smooth states, with an injectable kinetic table
- Central finite-difference checks of every objective's analytic gradient
- Parseval, multiplier, projection, ordering, pairing-bound and dilation checks
- Thomas-Fermi sanity bound and the finite-rank GN inequality for computed couplings
- Machine-readable failure list (SuiteReport) for `relstar check`

UV ENVIRONMENT: Run with `uv run python invariant_suite.py`

INSTALLATION:
uv add numpy scipy pydantic
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, Field

from config import ORACLE_GRID
from functionals import (
    HARDY_KATO_CONSTANT,
    frame_terms,
    gn_quotient,
    hfb_energy,
    tf_gradient,
    tf_objective,
)
from minimizer import (
    HFBEnergy,
    HFEnergy,
    QuotientHF,
    QuotientHFB,
    QuotientRelaxed,
    apply_meanfield,
    evaluate_objective,
    initial_frame,
    initial_pairing,
)
from quantum_states import OrbitalSet, PairingState, dilate, orthonormalize
from radial_grid import RadialGrid
from spectral_grid import (
    CoulombTruncated,
    InverseSqrtLaplacian,
    KineticMassive,
    KineticMassless,
    MassGap,
    SpectralGrid,
    build_multiplier,
    convolve_coulomb,
    kinetic_kind,
    real_space_kernel,
    spectrum,
)
from thomas_fermi import lane_emden_reference

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-10
PARSEVAL_TOLERANCE = 1e-12
GRADIENT_TOLERANCE = 1e-5
FD_STEP = 1e-5
DILATION_TOLERANCE = 1e-12
ORDERING_TOLERANCE = 1e-12


class Failure(BaseModel):
    """One violated check."""
    check: str
    detail: str
    value: Optional[float] = None


class SuiteReport(BaseModel):
    checks_run: list[str] = Field(default_factory=list)
    failures: list[Failure] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _relative(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


# ── random states ────────────────────────────────────────


def random_frame(grid: SpectralGrid, count: int, rng: np.random.Generator, occupations=None) -> OrbitalSet:
    """Orthonormalized complex Gaussian noise; rough, for algebraic oracles."""
    raw = rng.standard_normal((count,) + grid.shape) + 1j * rng.standard_normal((count,) + grid.shape)
    return orthonormalize(grid, raw, occupations)


def smooth_field(grid: SpectralGrid, rng: np.random.Generator) -> np.ndarray:
    """l2-normalized Gaussian bump with random center, width, tilt and phase."""
    x, y, z = grid.coordinates
    h = grid.spacing
    center = rng.uniform(-grid.box_length / 8, grid.box_length / 8, 3)
    width = rng.uniform(3.0 * h, grid.box_length / 8)
    dx, dy, dz = x - center[0], y - center[1], z - center[2]
    envelope = np.exp(-0.5 * (dx * dx + dy * dy + dz * dz) / width ** 2)
    tilt = rng.normal(0.0, 0.5, 3) / width
    wave = rng.normal(0.0, 0.5, 3) / width
    field = envelope * (1.0 + tilt[0] * dx + tilt[1] * dy + tilt[2] * dz)
    field = field * np.exp(1j * (wave[0] * dx + wave[1] * dy + wave[2] * dz))
    return field / np.linalg.norm(field)


# ── dense oracles ────────────────────────────────────────


def dense_kernel(grid: SpectralGrid, table: np.ndarray) -> np.ndarray:
    """Matrix K[x, y] = K(x - y) of a multiplier's real-space kernel."""
    kernel = real_space_kernel(grid, table)
    index = np.indices(grid.shape).reshape(3, -1)
    diff = (index[:, :, None] - index[:, None, :]) % grid.n_points_per_axis
    return kernel[diff[0], diff[1], diff[2]]


def dense_terms(state: OrbitalSet | PairingState, mass: float = 0.0) -> dict[str, float]:
    """Kinetic, direct, exchange and pairing terms by explicit double sums over the grid."""
    grid = state.grid
    h3 = grid.cell_volume
    gamma = state.gamma if isinstance(state, PairingState) else state
    occ = gamma.occupations
    flat = gamma.flat
    kinetic_matrix = h3 * dense_kernel(grid, build_multiplier(grid, kinetic_kind(mass)))
    coulomb = dense_kernel(grid, build_multiplier(grid, CoulombTruncated()))

    kinetic = sum(o * float(np.real(c.conj() @ kinetic_matrix @ c)) for o, c in zip(occ, flat))
    u = flat / math.sqrt(h3)
    rho = occ @ (np.abs(u) ** 2)
    direct = h3 * h3 * float(rho @ coulomb @ rho)
    kernel = (u.T * occ) @ u.conj()
    exchange = h3 * h3 * float(np.sum(np.abs(kernel) ** 2 * coulomb))
    pairing = 0.0
    if isinstance(state, PairingState):
        alpha = np.zeros_like(kernel)
        for k, amplitude in enumerate(state.amplitudes):
            a, b = u[2 * k], u[2 * k + 1]
            alpha += amplitude * (np.outer(a, b) - np.outer(b, a))
        pairing = h3 * h3 * float(np.sum(np.abs(alpha) ** 2 * coulomb))
    return {"kinetic": kinetic, "direct": direct, "exchange": exchange, "pairing": pairing}


def dense_meanfield(state: OrbitalSet, coupling: float, mass: float = 0.0) -> np.ndarray:
    """H_gamma as an explicit matrix on grid coefficients."""
    grid = state.grid
    kinetic_matrix = grid.cell_volume * dense_kernel(grid, build_multiplier(grid, kinetic_kind(mass)))
    coulomb = dense_kernel(grid, build_multiplier(grid, CoulombTruncated()))
    flat = state.flat
    weights = state.occupations @ (np.abs(flat) ** 2)
    potential = coulomb @ weights
    projector = (flat.T * state.occupations) @ flat.conj()
    return kinetic_matrix - coupling * np.diag(potential) + coupling * projector * coulomb


def check_oracles(states: int = 20, seed: int = 0, grid_points: int = ORACLE_GRID) -> list[Failure]:
    """FFT functionals against dense double sums on random states."""
    rng = np.random.default_rng(seed)
    failures = []
    for index in range(states):
        grid = SpectralGrid(grid_points, rng.uniform(4.0, 12.0))
        mass = [0.0, 1.0][index % 2]
        if index % 3 == 2:
            frame = random_frame(grid, 4, rng)
            state = PairingState.from_frame(frame, rng.uniform(0.2, 1.3, 2))
            terms = frame_terms(state, kinetic_kind(mass))
        else:
            occ = rng.uniform(0.3, 1.0, 2) if index % 3 else None
            state = random_frame(grid, 2, rng, occ)
            terms = frame_terms(state, kinetic_kind(mass))
        expected = dense_terms(state, mass)
        fast = {"kinetic": terms.kinetic, "direct": terms.direct, "exchange": terms.exchange, "pairing": terms.pairing}
        for name, value in fast.items():
            error = _relative(value, expected[name])
            if error > ORACLE_TOLERANCE and abs(expected[name]) > 0:
                failures.append(Failure(check=f"oracle_{name}", detail=f"state {index}", value=error))

    grid = SpectralGrid(grid_points, 8.0)
    state = random_frame(grid, 2, rng)
    for mass in (0.0, 1.0):
        matrix = dense_meanfield(state, 0.5, mass)
        fast = apply_meanfield(state, 0.5, mass).reshape(state.count, -1)
        dense = (matrix @ state.flat.T).T
        error = float(np.max(np.abs(fast - dense)) / np.max(np.abs(dense)))
        if error > ORACLE_TOLERANCE:
            failures.append(Failure(check="oracle_meanfield", detail=f"mass {mass}", value=error))
    return failures


# ── Hardy-Kato ───────────────────────────────────────────


def point_potential(grid: SpectralGrid) -> np.ndarray:
    """Truncated Coulomb potential of a unit point mass at the box center."""
    delta = np.zeros(grid.shape)
    delta[grid.center_index] = 1.0 / grid.cell_volume
    return convolve_coulomb(grid, delta)


def check_hardy_kato(
    samples: int = 200,
    grid_points: int = 32,
    seed: int = 0,
    kinetic_table: Optional[np.ndarray] = None,
) -> list[Failure]:
    """<u, V u> <= (pi/2) <u, sqrt(-Lap) u> on random smooth states."""
    grid = SpectralGrid(grid_points, 16.0)
    table = build_multiplier(grid, KineticMassless()) if kinetic_table is None else kinetic_table
    potential = point_potential(grid)
    rng = np.random.default_rng(seed)
    failures = []
    for index in range(samples):
        c = smooth_field(grid, rng)
        lhs = float(np.sum(np.abs(c) ** 2 * potential))
        rhs = HARDY_KATO_CONSTANT * float(np.sum(table * np.abs(spectrum(grid, c)) ** 2))
        if lhs > rhs * (1.0 + 1e-12):
            failures.append(Failure(check="hardy_kato", detail=f"sample {index}: {lhs:.6g} > {rhs:.6g}", value=lhs / rhs))
    return failures


# ── gradients ────────────────────────────────────────────


def _directional_failures(
    name: str,
    value_of: Callable[[np.ndarray, np.ndarray], float],
    coefficients: np.ndarray,
    parameters: np.ndarray,
    frame_gradient: np.ndarray,
    parameter_gradient: np.ndarray,
    directions: int,
    rng: np.random.Generator,
) -> list[Failure]:
    failures = []
    for index in range(directions):
        delta = rng.standard_normal(coefficients.shape) + 1j * rng.standard_normal(coefficients.shape)
        delta /= np.linalg.norm(delta)
        step = rng.standard_normal(parameters.shape)
        if parameters.size:
            step /= np.linalg.norm(step)
        analytic = 2.0 * float(np.real(np.vdot(frame_gradient, delta))) + float(np.dot(parameter_gradient, step))
        plus = value_of(coefficients + FD_STEP * delta, parameters + FD_STEP * step)
        minus = value_of(coefficients - FD_STEP * delta, parameters - FD_STEP * step)
        numeric = (plus - minus) / (2.0 * FD_STEP)
        error = _relative(analytic, numeric)
        if error > GRADIENT_TOLERANCE:
            failures.append(Failure(
                check="gradient",
                detail=f"{name} direction {index}: analytic {analytic:.10g}, finite difference {numeric:.10g}",
                value=error,
            ))
    return failures


def check_gradients(directions: int = 20, seed: int = 0, grid_points: int = ORACLE_GRID) -> list[Failure]:
    """Analytic gradients of the six objectives against central differences."""
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(grid_points, 8.0)
    width = grid.box_length / 5.0

    def frame(count: int) -> OrbitalSet:
        return initial_frame(grid, count, int(rng.integers(1 << 16)), width)

    cases = [
        (HFEnergy(mass=1.0, coupling=0.5), frame(2).coefficients, np.zeros(0)),
        (HFBEnergy(mass=1.0, coupling=0.5), frame(4).coefficients, rng.uniform(0.4, 1.1, 2)),
        (QuotientHF(), frame(2).coefficients, np.zeros(0)),
        (QuotientRelaxed(), frame(3).coefficients, np.array([1.0, 0.7, 0.4])),
        (QuotientHFB(), frame(4).coefficients, rng.uniform(0.4, 1.1, 2)),
    ]
    failures = []
    for objective, coefficients, parameters in cases:
        evaluation = evaluate_objective(objective, grid, coefficients, parameters)

        def value_of(c, p, objective=objective):
            return evaluate_objective(objective, grid, c, p).value

        failures.extend(_directional_failures(
            objective.kind, value_of, np.array(coefficients), parameters,
            evaluation.frame_gradient, evaluation.parameter_gradient, directions, rng,
        ))

    radial = RadialGrid(64, 1e-2, 1e2)
    r = radial.radii
    profile = np.exp(-r) * (1.0 + 0.1 * rng.uniform(size=r.shape))
    _, gradient = tf_gradient(profile, radial)
    for index in range(directions):
        direction = profile * rng.uniform(-1.0, 1.0, r.shape)
        direction /= np.linalg.norm(direction)
        analytic = float(np.dot(gradient, direction))
        numeric = (
            tf_objective(profile + FD_STEP * direction, radial) - tf_objective(profile - FD_STEP * direction, radial)
        ) / (2.0 * FD_STEP)
        error = _relative(analytic, numeric)
        if error > GRADIENT_TOLERANCE:
            failures.append(Failure(check="gradient", detail=f"tf direction {index}", value=error))
    return failures


# ── structural checks ────────────────────────────────────


def check_parseval(samples: int = 5, seed: int = 0) -> list[Failure]:
    """<u, T_m u> through the multiplier equals sum (sqrt(xi^2+m^2)-m)|u_hat|^2."""
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(16, 10.0)
    xi = grid.frequency_norm
    failures = []
    for index in range(samples):
        c = smooth_field(grid, rng)
        u_hat = spectrum(grid, c)
        norm_error = abs(float(np.sum(np.abs(c) ** 2)) - float(np.sum(np.abs(u_hat) ** 2)))
        if norm_error > PARSEVAL_TOLERANCE:
            failures.append(Failure(check="parseval_norm", detail=f"sample {index}", value=norm_error))
        mass = 1.0
        state = OrbitalSet.projection(grid, c)
        via_multiplier = frame_terms(state, KineticMassive(mass)).kinetic
        direct = float(np.sum((np.sqrt(xi * xi + mass * mass) - mass) * np.abs(u_hat) ** 2))
        error = _relative(via_multiplier, direct)
        if error > PARSEVAL_TOLERANCE:
            failures.append(Failure(check="parseval_kinetic", detail=f"sample {index}", value=error))
    return failures


def check_multipliers() -> list[Failure]:
    """Positivity, zero modes and the decomposition T_m = |xi| + B_m - m."""
    grid = SpectralGrid(16, 10.0)
    xi = grid.frequency_norm
    nonzero = xi > 0
    failures = []
    massless = build_multiplier(grid, KineticMassless())
    if massless[0, 0, 0] != 0 or np.any(massless < 0):
        failures.append(Failure(check="multiplier_massless", detail="negative entry or nonzero zero mode"))
    for mass in (0.5, 1.0, 3.0):
        kinetic = build_multiplier(grid, KineticMassive(mass))
        gap = build_multiplier(grid, MassGap(mass))
        error = float(np.max(np.abs(kinetic - (xi + gap - mass)) / (xi + mass)))
        if error > PARSEVAL_TOLERANCE:
            failures.append(Failure(check="multiplier_decomposition", detail=f"mass {mass}", value=error))
        if kinetic[0, 0, 0] != 0 or np.any(kinetic < 0):
            failures.append(Failure(check="multiplier_massive", detail=f"mass {mass}"))
    inverse = build_multiplier(grid, InverseSqrtLaplacian())
    error = float(np.max(np.abs(inverse[nonzero] * xi[nonzero] - 1.0)))
    if inverse[0, 0, 0] != 0 or error > PARSEVAL_TOLERANCE:
        failures.append(Failure(check="multiplier_inverse_sqrt", detail="1/|xi| mismatch", value=error))
    if np.any(build_multiplier(grid, CoulombTruncated()) < 0):
        failures.append(Failure(check="multiplier_coulomb", detail="negative Coulomb table entry"))
    return failures


def check_projection(seed: int = 0) -> list[Failure]:
    """gamma^2 = gamma for an assembled rank-N projection on the oracle grid."""
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(ORACLE_GRID, 8.0)
    state = random_frame(grid, 3, rng)
    kernel = state.flat.T @ state.flat.conj()
    error = float(np.linalg.norm(kernel @ kernel - kernel, 2))
    if error > ORACLE_TOLERANCE:
        return [Failure(check="projection", detail="gamma^2 != gamma", value=error)]
    return []


def check_orderings(states: int = 10, seed: int = 0) -> list[Failure]:
    """0 <= X <= D on generated states; X(alpha) <= (pi/2) Tr(sqrt(-Lap) gamma) on admissible ones."""
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(16, 10.0)
    failures = []
    for index in range(states):
        occupations = rng.uniform(0.0, 1.0, 3) if index % 2 else None
        state = orthonormalize(grid, np.stack([smooth_field(grid, rng) for _ in range(3)]), occupations)
        terms = frame_terms(state)
        slack = ORDERING_TOLERANCE * terms.direct
        if terms.exchange < -slack or terms.exchange > terms.direct + slack:
            failures.append(Failure(
                check="exchange_direct_ordering",
                detail=f"state {index}: X={terms.exchange:.6g}, D={terms.direct:.6g}",
            ))
        pairing = initial_pairing(grid, 2, int(rng.integers(1 << 16)))
        pair_terms = frame_terms(pairing)
        bound = HARDY_KATO_CONSTANT * pair_terms.kinetic
        if pair_terms.pairing > bound:
            failures.append(Failure(
                check="pairing_bound",
                detail=f"state {index}: X(alpha)={pair_terms.pairing:.6g} > {bound:.6g}",
            ))
    return failures


def check_dilation(seed: int = 0) -> list[Failure]:
    """Every massless energy term scales exactly linearly under dilation."""
    rng = np.random.default_rng(seed)
    grid = SpectralGrid(16, 10.0)
    state = initial_pairing(grid, 1, int(rng.integers(1 << 16)))
    base = hfb_energy(state, 0.0, 1.0)
    failures = []
    for beta in (0.5, 1.7, 3.0):
        scaled = hfb_energy(dilate(state, beta), 0.0, 1.0)
        for name in ("kinetic", "direct", "exchange", "pairing", "total"):
            error = _relative(getattr(scaled, name), beta * getattr(base, name))
            if error > DILATION_TOLERANCE:
                failures.append(Failure(check="dilation", detail=f"{name} at beta {beta}", value=error))
    return failures


def check_thomas_fermi(samples: int = 100, seed: int = 0) -> list[Failure]:
    """Random feasible radial densities never undercut tau_c (2% slack for the grid)."""
    rng = np.random.default_rng(seed)
    grid = RadialGrid(512)
    floor = 0.98 * lane_emden_reference().tau_c
    r = grid.radii
    failures = []
    for index in range(samples):
        scale = rng.uniform(0.1, 10.0)
        power = rng.uniform(0.5, 3.0)
        profile = np.exp(-(r / scale) ** power) * (1.0 + 0.2 * rng.uniform(size=r.shape))
        value = tf_objective(profile, grid)
        if value < floor:
            failures.append(Failure(check="tf_lower_bound", detail=f"sample {index}", value=value))
    return failures


def check_finite_rank_gn(
    states: list[OrbitalSet],
    kappa_star: float,
    tolerance: float = 1e-9,
) -> list[Failure]:
    """||gamma|| Tr(sqrt(-Lap) gamma) >= (kappa*/2)(D - X) on the given states."""
    failures = []
    for index, state in enumerate(states):
        quotient = gn_quotient(state, "RelaxedRank")
        lhs = 0.5 * quotient.numerator
        rhs = 0.5 * kappa_star * quotient.denominator
        if lhs < rhs - tolerance * max(lhs, 1.0):
            failures.append(Failure(check="finite_rank_gn", detail=f"state {index}", value=lhs - rhs))
    return failures


def run_invariant_suite(
    seed: int = 0,
    kinetic_table: Optional[np.ndarray] = None,
    hardy_kato_samples: int = 200,
    hardy_kato_points: int = 32,
    oracle_states: int = 20,
    directions: int = 20,
    kappa_table: Optional[dict[int, float]] = None,
) -> SuiteReport:
    """
    Run every check; `kinetic_table` replaces |xi| in the Hardy-Kato check and
    `kappa_table` enables the finite-rank GN inequality on seeded frames.
    """
    report = SuiteReport()
    checks: list[tuple[str, Callable[[], list[Failure]]]] = [
        ("multipliers", check_multipliers),
        ("parseval", lambda: check_parseval(seed=seed)),
        ("projection", lambda: check_projection(seed)),
        ("oracles", lambda: check_oracles(oracle_states, seed)),
        ("hardy_kato", lambda: check_hardy_kato(hardy_kato_samples, hardy_kato_points, seed, kinetic_table)),
        ("orderings", lambda: check_orderings(seed=seed)),
        ("dilation", lambda: check_dilation(seed)),
        ("gradients", lambda: check_gradients(directions, seed)),
        ("thomas_fermi", lambda: check_thomas_fermi(seed=seed)),
    ]
    if kappa_table:
        grid = SpectralGrid(16, 10.0)
        for n, kappa in sorted(kappa_table.items()):
            if n <= 16:
                frames = [initial_frame(grid, n, seed + s, grid.box_length / 6.0) for s in range(3)]
                checks.append((f"finite_rank_gn_{n}", lambda frames=frames, kappa=kappa: check_finite_rank_gn(frames, kappa)))

    for name, check in checks:
        logger.info(f"Running check: {name}")
        failures = check()
        report.checks_run.append(name)
        for failure in failures:
            logger.error(f"Check {failure.check} failed: {failure.detail}")
        report.failures.extend(failures)
    logger.info(f"Invariant suite: {len(report.checks_run)} checks, {len(report.failures)} failures")
    return report
