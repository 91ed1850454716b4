#!/usr/bin/env python3
"""
Module: Variational minimizer for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Riemannian preconditioned gradient descent on orthonormal frames (Armijo + Loewdin retraction)
- Joint descent over occupations (relaxed rank) or BCS pair angles (HFB), optional trace constraint
- Quotient normalization Tr(sqrt(-Lap) gamma) = 1 by box relabeling, centroid pinning
- Virial box adaptation and zero-padding for energy objectives
- Multistart kappa_N solves with eigen extraction, virial/Pohozaev residuals and d_N*
- Mean-field action, commutator norm, radial Thomas-Fermi solver

UV ENVIRONMENT: Run with `uv run python minimizer.py`

INSTALLATION:
uv add numpy scipy pydantic
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg
from scipy.optimize import brentq, minimize_scalar

from config import (
    ARMIJO_CONSTANT,
    BACKTRACK_FACTOR,
    DEFAULT_BOX,
    DEFAULT_GRID,
    DEFAULT_SEEDS,
    GRADIENT_TOLERANCE,
    INITIAL_STEP,
    LOG_EVERY,
    MAX_BOX_RESTARTS,
    MAX_ITERATIONS,
    MAX_LINE_SEARCH,
    RECENTER_EVERY,
    STAGNATION_TOLERANCE,
    STAGNATION_WINDOW,
    TF_MAX_ITERATIONS,
    TF_TOLERANCE,
)
from functionals import (
    CouplingOutOfRangeError,
    DegenerateDenominatorError,
    EnergyBreakdown,
    FrameTerms,
    breakdown_from_terms,
    frame_terms,
    gn_quotient,
    hf_energy,
    hfb_energy,
    inverse_sqrt_trace,
    quotient_from_terms,
    tf_gradient,
    tf_objective,
)
from quantum_states import (
    OrbitalSet,
    PairingState,
    RankDeficientError,
    StateError,
    density,
    dilate,
    orthonormalize,
    pad_state,
    recenter,
)
from radial_grid import RadialGrid, normalize_profile
from spectral_grid import SpectralGrid, apply_multiplier, kinetic_kind

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9
VIRIAL_TOLERANCE = 1e-3
OUTSIDE_MASS_LIMIT = 1e-6
MAX_STEP = 1e3
TF_DIVERGENCE_STREAK = 100
TF_RENORMALIZE_EVERY = 200
CONVERGED_STATUSES = ("converged", "stagnated")


class NonConvergenceError(RuntimeError):
    """No run reached the gradient tolerance."""


# ── objectives ───────────────────────────────────────────


class HFEnergy(BaseModel):
    kind: Literal["hf_energy"] = "hf_energy"
    mass: float = Field(ge=0)
    coupling: float = Field(ge=0)
    truncation_radius: Optional[float] = None


class HFBEnergy(BaseModel):
    kind: Literal["hfb_energy"] = "hfb_energy"
    mass: float = Field(ge=0)
    coupling: float = Field(ge=0)
    pairing: bool = True
    truncation_radius: Optional[float] = None


class QuotientHF(BaseModel):
    kind: Literal["quotient_hf"] = "quotient_hf"


class QuotientRelaxed(BaseModel):
    kind: Literal["quotient_relaxed"] = "quotient_relaxed"


class QuotientHFB(BaseModel):
    kind: Literal["quotient_hfb"] = "quotient_hfb"
    pairing: bool = True
    trace: Optional[float] = Field(default=None, gt=0)


class TFObjective(BaseModel):
    kind: Literal["tf"] = "tf"


Objective = Annotated[
    Union[HFEnergy, HFBEnergy, QuotientHF, QuotientRelaxed, QuotientHFB, TFObjective],
    Field(discriminator="kind"),
]

QUOTIENTS = (QuotientHF, QuotientRelaxed, QuotientHFB)
ENERGIES = (HFEnergy, HFBEnergy)


class MinimizeConfig(BaseModel):
    """
    Descent settings; gradient_tolerance is relative to the objective scale.

    A run whose objective drops by less than stagnation_tolerance * |value| over
    stagnation_window accepted steps stops with status "stagnated", which counts
    as converged.
    """
    objective: Objective = Field(default_factory=QuotientHF)
    max_iterations: int = Field(default=MAX_ITERATIONS, ge=1)
    gradient_tolerance: float = Field(default=GRADIENT_TOLERANCE, gt=0)
    step: float = Field(default=INITIAL_STEP, gt=0)
    backtrack_factor: float = Field(default=BACKTRACK_FACTOR, gt=0, lt=1)
    armijo_constant: float = Field(default=ARMIJO_CONSTANT, gt=0, lt=1)
    box_adaptation: Literal["off", "virial"] = "virial"
    seed: int = 0
    preconditioner_shift: float = Field(default=1.0, gt=0)
    log_every: int = Field(default=LOG_EVERY, ge=1)
    stagnation_window: int = Field(default=STAGNATION_WINDOW, ge=1)
    stagnation_tolerance: float = Field(default=STAGNATION_TOLERANCE, ge=0)

    def with_objective(self, objective: Objective) -> "MinimizeConfig":
        return self.model_copy(update={"objective": objective})


# ── results ──────────────────────────────────────────────


@dataclass(frozen=True)
class IterateRecord:
    iteration: int
    objective: float
    gradient_norm: float
    step: float
    restart: int = 0


@dataclass
class MinimizeResult:
    state: OrbitalSet | PairingState
    value: float
    converged: bool
    status: str
    iterations: int
    log: list[IterateRecord] = field(default_factory=list)
    restarts: int = 0


class EigenReport(BaseModel):
    """Mean-field eigenvalues nu_1 <= ... <= nu_N with residuals ||H u_j - nu_j u_j||."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    eigenvalues: list[float]
    residuals: list[float]
    sum: float
    stationary: bool
    rotated: Any = Field(default=None, exclude=True)


class StartRecord(BaseModel):
    seed: int
    value: Optional[float]
    converged: bool
    iterations: int
    status: str


class CriticalCouplingResult(BaseModel):
    """
    Converged kappa_N^HF with stationarity diagnostics; `state` is not serialized.

    With kappa equal to the state's own quotient the virial and Pohozaev
    residuals vanish identically: they are consistency identities between the
    functional terms and the assembled mean field. Optimality is certified by
    commutator_residual = ||[H_gamma, gamma]||_F / Tr(sqrt(-Lap) gamma).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    N: int
    kappa: float
    eigen: EigenReport
    pohozaev_residual: float
    virial_residual: float
    commutator_residual: float
    d_star: float
    d_star_correction: float
    confinement_error: Optional[float]
    grid_points: int
    box_length: float
    best_seed: int
    starts: list[StartRecord]
    optimizer: Optional[str] = None
    state: Any = Field(default=None, exclude=True)
    survivors: list[Any] = Field(default_factory=list, exclude=True)
    iterate_log: list[Any] = Field(default_factory=list, exclude=True)


@dataclass
class HFEnergySolution:
    state: OrbitalSet
    energy: EnergyBreakdown
    result: MinimizeResult


@dataclass
class TFSolution:
    value: float
    profile: np.ndarray
    iterations: int
    converged: bool
    monotone: bool
    status: str


# ── initial states ───────────────────────────────────────

# Real solid harmonics up to degree 3
SOLID_HARMONICS = (
    lambda x, y, z: np.ones_like(x),
    lambda x, y, z: x,
    lambda x, y, z: y,
    lambda x, y, z: z,
    lambda x, y, z: x * y,
    lambda x, y, z: y * z,
    lambda x, y, z: z * x,
    lambda x, y, z: x * x - y * y,
    lambda x, y, z: 2 * z * z - x * x - y * y,
    lambda x, y, z: x * y * z,
    lambda x, y, z: x * (x * x - 3 * y * y),
    lambda x, y, z: y * (3 * x * x - y * y),
    lambda x, y, z: z * (x * x - y * y),
    lambda x, y, z: x * (4 * z * z - x * x - y * y),
    lambda x, y, z: y * (4 * z * z - x * x - y * y),
    lambda x, y, z: z * (2 * z * z - 3 * x * x - 3 * y * y),
)


def initial_frame(grid: SpectralGrid, count: int, seed: int, width: Optional[float] = None) -> OrbitalSet:
    """Seeded Gaussians times solid harmonics, each orbital dominated by its own sector."""
    if not 1 <= count <= len(SOLID_HARMONICS):
        raise StateError(f"initial frames support 1..{len(SOLID_HARMONICS)} orbitals, got {count}")
    rng = np.random.default_rng(seed)
    x, y, z = grid.coordinates
    base_width = width or grid.box_length / 10.0
    orbitals = []
    for j in range(count):
        sigma = base_width * rng.uniform(0.8, 1.2)
        xs, ys, zs = x / sigma, y / sigma, z / sigma
        envelope = np.exp(-0.5 * (xs * xs + ys * ys + zs * zs))
        poly = SOLID_HARMONICS[j](xs, ys, zs).astype(np.float64)
        mixing = 0.1 * rng.standard_normal(count)
        for l in range(count):
            if l != j:
                poly = poly + mixing[l] * SOLID_HARMONICS[l](xs, ys, zs)
        orbitals.append(envelope * poly)
    return orthonormalize(grid, np.stack(orbitals))


def initial_pairing(
    grid: SpectralGrid,
    pairs: int,
    seed: int,
    trace: Optional[float] = None,
    pairing: bool = True,
) -> PairingState:
    """BCS start on a 2K frame; with a trace target the pair occupations share it evenly."""
    frame = initial_frame(grid, 2 * pairs, seed)
    if trace is not None:
        if not 0 < trace < 2 * pairs:
            raise StateError(f"trace {trace} not reachable with {pairs} pairs")
        angles = np.full(pairs, np.arcsin(np.sqrt(trace / (2 * pairs))))
    else:
        angles = np.random.default_rng(seed + 10_000).uniform(np.pi / 8, 3 * np.pi / 8, pairs)
    return PairingState.from_frame(frame, angles, pairing)


# ── objective evaluation ─────────────────────────────────


@dataclass
class Evaluation:
    """Objective value with Wirtinger frame gradient d/d conj(c) and parameter gradient."""
    value: float
    frame_gradient: np.ndarray
    parameter_gradient: np.ndarray
    scale: float


def _bcs(angles: np.ndarray, pairing: bool) -> tuple[np.ndarray, np.ndarray]:
    occupations = np.repeat(np.sin(angles) ** 2, 2)
    amplitudes = np.sin(angles) * np.cos(angles) if pairing else np.zeros_like(angles)
    return occupations, amplitudes


def _angle_gradient(angles: np.ndarray, occupation_gradient: np.ndarray, amplitude_gradient: Optional[np.ndarray]) -> np.ndarray:
    """Chain rule through lambda = sin^2(theta), c = sin(theta) cos(theta)."""
    per_pair = occupation_gradient[0::2] + occupation_gradient[1::2]
    gradient = per_pair * np.sin(2.0 * angles)
    if amplitude_gradient is not None:
        gradient = gradient + amplitude_gradient * np.cos(2.0 * angles)
    return gradient


def _occupations(objective: Objective, parameters: np.ndarray, count: int) -> np.ndarray:
    match objective:
        case QuotientRelaxed():
            return parameters
        case HFBEnergy() | QuotientHFB():
            return np.repeat(np.sin(parameters) ** 2, 2)
        case _:
            return np.ones(count)


def evaluate_objective(
    objective: Objective,
    grid: SpectralGrid,
    coefficients: np.ndarray,
    parameters: np.ndarray,
) -> Evaluation:
    """
    Value and gradients of `objective` at raw coefficients (orthonormality not required).

    parameters: occupations for QuotientRelaxed, pair angles for the HFB
    objectives, empty otherwise.
    """
    count = coefficients.shape[0]
    no_parameters = np.zeros(0)
    match objective:
        case HFEnergy(mass=m, coupling=k, truncation_radius=r):
            occ = np.ones(count)
            terms = FrameTerms(grid, coefficients, occ, None, kinetic_kind(m), r)
            value = breakdown_from_terms(terms, m, k).total
            frame = np.stack([occ[j] * terms.meanfield_action(j, k) for j in range(count)])
            return Evaluation(value, frame, no_parameters, max(abs(value), terms.kinetic))

        case HFBEnergy(mass=m, coupling=k, pairing=pairing, truncation_radius=r):
            occ, amplitudes = _bcs(parameters, pairing)
            terms = FrameTerms(grid, coefficients, occ, amplitudes, kinetic_kind(m), r)
            value = breakdown_from_terms(terms, m, k).total
            frame = np.stack([occ[j] * terms.meanfield_action(j, k) for j in range(count)])
            occupation_gradient = terms.kinetic_each - k * (terms.direct_each - terms.exchange_each)
            amplitude_gradient = None
            if pairing:
                frame = frame - 0.5 * k * terms.pairing_frame_gradient()
                amplitude_gradient = -0.5 * k * terms.pairing_amplitude_gradient()
            gradient = _angle_gradient(parameters, occupation_gradient, amplitude_gradient)
            return Evaluation(value, frame, gradient, max(abs(value), terms.kinetic))

        case QuotientHF() | QuotientRelaxed():
            relaxed = isinstance(objective, QuotientRelaxed)
            occ = parameters if relaxed else np.ones(count)
            terms = FrameTerms(grid, coefficients, occ)
            quotient = quotient_from_terms(terms, "RelaxedRank" if relaxed else "HF")
            q, kinetic, denominator = quotient.value, terms.kinetic, quotient.denominator
            frame = np.stack([
                q * occ[j] * (terms.kinetic_action(j) / kinetic - 2.0 * terms.interaction_action(j) / denominator)
                for j in range(count)
            ])
            gradient = no_parameters
            if relaxed:
                gradient = q * (terms.kinetic_each / kinetic - 2.0 * (terms.direct_each - terms.exchange_each) / denominator)
                top = occ.max()
                leaders = np.flatnonzero(occ == top)
                if leaders.size == 1:
                    gradient[leaders[0]] += q / top
            return Evaluation(q, frame, gradient, max(abs(q), kinetic))

        case QuotientHFB(pairing=pairing):
            occ, amplitudes = _bcs(parameters, pairing)
            terms = FrameTerms(grid, coefficients, occ, amplitudes)
            quotient = quotient_from_terms(terms, "HFB")
            q, kinetic, denominator = quotient.value, terms.kinetic, quotient.denominator
            frame = np.stack([
                q * occ[j] * (terms.kinetic_action(j) / kinetic - 2.0 * terms.interaction_action(j) / denominator)
                for j in range(count)
            ])
            occupation_gradient = q * (
                terms.kinetic_each / kinetic - 2.0 * (terms.direct_each - terms.exchange_each) / denominator
            )
            amplitude_gradient = None
            if pairing:
                frame = frame - (q / denominator) * terms.pairing_frame_gradient()
                amplitude_gradient = -(q / denominator) * terms.pairing_amplitude_gradient()
            gradient = _angle_gradient(parameters, occupation_gradient, amplitude_gradient)
            return Evaluation(q, frame, gradient, max(abs(q), kinetic))

    raise ValueError(f"objective {objective.kind} is not evaluated on orbital frames")


def objective_value(state: OrbitalSet | PairingState, objective: Objective) -> float:
    """Objective of a state through the public functionals."""
    match objective:
        case HFEnergy(mass=m, coupling=k, truncation_radius=r):
            return hf_energy(state, m, k, r).total
        case HFBEnergy(mass=m, coupling=k, truncation_radius=r):
            return hfb_energy(state, m, k, r).total
        case QuotientHF():
            return gn_quotient(state, "HF").value
        case QuotientRelaxed():
            return gn_quotient(state, "RelaxedRank").value
        case QuotientHFB():
            return gn_quotient(state, "HFB").value
    raise ValueError(f"objective {objective.kind} has no state value")


# ── descent machinery ────────────────────────────────────


@dataclass
class _Point:
    grid: SpectralGrid
    coefficients: np.ndarray
    parameters: np.ndarray


def _to_point(state: OrbitalSet | PairingState, objective: Objective) -> _Point:
    match objective:
        case HFEnergy() | QuotientHF():
            if not isinstance(state, OrbitalSet):
                raise StateError(f"{objective.kind} needs an OrbitalSet")
            return _Point(state.grid, np.array(state.coefficients), np.zeros(0))
        case QuotientRelaxed():
            if not isinstance(state, OrbitalSet):
                raise StateError("relaxed-rank quotient needs an OrbitalSet")
            return _Point(state.grid, np.array(state.coefficients), np.array(state.occupations))
        case HFBEnergy() | QuotientHFB():
            if not isinstance(state, PairingState):
                raise StateError(f"{objective.kind} needs a PairingState")
            return _Point(state.grid, np.array(state.base.coefficients), np.array(state.pair_angles))
    raise ValueError(f"objective {objective.kind} is not minimized over frames")


def _to_state(point: _Point, objective: Objective) -> OrbitalSet | PairingState:
    match objective:
        case QuotientRelaxed():
            return OrbitalSet(point.grid, point.coefficients, point.parameters)
        case HFBEnergy(pairing=pairing) | QuotientHFB(pairing=pairing):
            frame = OrbitalSet.projection(point.grid, point.coefficients)
            return PairingState.from_frame(frame, point.parameters, pairing)
        case _:
            return OrbitalSet.projection(point.grid, point.coefficients)


def project_pair_occupations(occupations: np.ndarray, trace: float) -> np.ndarray:
    """Euclidean projection onto {0 <= lambda_k <= 1, 2 sum lambda_k = trace}."""
    if not 0 < trace < 2 * occupations.shape[0]:
        raise StateError(f"trace {trace} not reachable with {occupations.shape[0]} pairs")

    def excess(shift: float) -> float:
        return 2.0 * float(np.clip(occupations - shift, 0.0, 1.0).sum()) - trace

    shift = brentq(excess, occupations.min() - 1.0, occupations.max(), xtol=1e-15)
    return np.clip(occupations - shift, 0.0, 1.0)


def _project_parameters(objective: Objective, parameters: np.ndarray) -> np.ndarray:
    match objective:
        case QuotientRelaxed():
            return np.clip(parameters, 0.0, 1.0)
        case HFBEnergy() | QuotientHFB():
            angles = np.clip(parameters, 0.0, 0.5 * np.pi)
            trace = getattr(objective, "trace", None)
            if trace is not None:
                occupations = project_pair_occupations(np.sin(angles) ** 2, trace)
                angles = np.arcsin(np.sqrt(occupations))
            return angles
    return parameters


def _tangent(gradient: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Projection G - sym(G C^H) C onto the tangent space of orthonormal frames."""
    overlap = gradient @ frame.conj().T
    return gradient - 0.5 * (overlap + overlap.conj().T) @ frame


@lru_cache(maxsize=16)
def _preconditioner(grid: SpectralGrid, shift: float) -> np.ndarray:
    table = 1.0 / (grid.frequency_norm + shift)
    table.setflags(write=False)
    return table


def _normalize_point(point: _Point, objective: Objective) -> _Point:
    """Quotients: relabel the box so that Tr(sqrt(-Lap) gamma) = 1."""
    if not isinstance(objective, QUOTIENTS):
        return point
    occ = _occupations(objective, point.parameters, point.coefficients.shape[0])
    kinetic = FrameTerms(point.grid, point.coefficients, occ).kinetic
    return _Point(point.grid.with_box_length(point.grid.box_length * kinetic), point.coefficients, point.parameters)


def _recentered(point: _Point, objective: Objective) -> _Point:
    state = recenter(_to_state(point, objective))
    return _to_point(state, objective)


def _descend(state: OrbitalSet | PairingState, config: MinimizeConfig, restart: int = 0) -> MinimizeResult:
    objective = config.objective
    point = _normalize_point(_to_point(state, objective), objective)
    point.parameters = _project_parameters(objective, point.parameters)
    current = evaluate_objective(objective, point.grid, point.coefficients, point.parameters)
    shift = config.preconditioner_shift
    if isinstance(objective, ENERGIES):
        shift = max(shift, objective.mass)
    step = config.step
    log: list[IterateRecord] = []
    status = "max_iterations"
    iteration = 0
    count = point.coefficients.shape[0]

    for iteration in range(1, config.max_iterations + 1):
        frame = point.coefficients.reshape(count, -1)
        projected = _tangent(current.frame_gradient.reshape(count, -1), frame)
        table = _preconditioner(point.grid, shift)
        conditioned = np.stack([
            apply_multiplier(point.grid, table, row.reshape(point.grid.shape)).reshape(-1) for row in projected
        ])
        direction = -_tangent(conditioned, frame)
        parameter_gradient = current.parameter_gradient
        projected_parameters = point.parameters - _project_parameters(objective, point.parameters - parameter_gradient)
        gradient_norm = math.sqrt(
            4.0 * float(np.vdot(projected, projected).real) + float(np.dot(projected_parameters, projected_parameters))
        )
        if gradient_norm <= config.gradient_tolerance * current.scale:
            status = "converged"
            iteration -= 1
            break

        accepted = None
        for _ in range(MAX_LINE_SEARCH):
            try:
                moved = orthonormalize(point.grid, (frame + step * direction).reshape(point.coefficients.shape))
                trial = _Point(
                    point.grid,
                    np.array(moved.coefficients),
                    _project_parameters(objective, point.parameters - step * parameter_gradient),
                )
                trial = _normalize_point(trial, objective)
                evaluation = evaluate_objective(objective, trial.grid, trial.coefficients, trial.parameters)
            except (RankDeficientError, DegenerateDenominatorError):
                step *= config.backtrack_factor
                continue
            predicted = 2.0 * float(np.vdot(current.frame_gradient, trial.coefficients - point.coefficients).real)
            predicted += float(np.dot(parameter_gradient, trial.parameters - point.parameters))
            if predicted < 0 and evaluation.value <= current.value + config.armijo_constant * predicted:
                accepted = (trial, evaluation)
                break
            step *= config.backtrack_factor

        if accepted is None:
            status = "non_decreasing_step"
            logger.warning(f"Line search failed after {MAX_LINE_SEARCH} backtracks at iteration {iteration}")
            iteration -= 1
            break

        point, current = accepted
        if iteration % RECENTER_EVERY == 0:
            point = _recentered(point, objective)
            current = evaluate_objective(objective, point.grid, point.coefficients, point.parameters)
        log.append(IterateRecord(iteration, current.value, gradient_norm, step, restart))
        if iteration % config.log_every == 0:
            logger.info(f"{objective.kind} iteration {iteration}: objective {current.value:.12g}, gradient {gradient_norm:.3e}")
        window = config.stagnation_window
        if len(log) > window:
            drop = log[-window - 1].objective - current.value
            if drop <= config.stagnation_tolerance * abs(current.value):
                status = "stagnated"
                logger.info(f"{objective.kind} stagnated at iteration {iteration}: gradient {gradient_norm:.3e}")
                break
        step = min(step * 2.0, MAX_STEP)

    final = _to_state(point, objective)
    return MinimizeResult(
        state=final,
        value=objective_value(final, objective),
        converged=status in CONVERGED_STATUSES,
        status=status,
        iterations=iteration,
        log=log,
    )


def outside_mass_fraction(state: OrbitalSet | PairingState) -> float:
    """Share of the density beyond radius L/4 from the box center."""
    gamma = state.gamma if isinstance(state, PairingState) else state
    rho = density(gamma).values
    outside = state.grid.radius > 0.25 * state.grid.box_length
    total = float(rho.sum())
    return float(rho[outside].sum()) / total if total > 0 else 0.0


def optimal_dilation(state: OrbitalSet | PairingState, objective: Objective) -> float:
    """beta* = argmin E(dilate(state, beta)), bounded to [1/4, 4]."""
    result = minimize_scalar(
        lambda beta: objective_value(dilate(state, beta), objective),
        bounds=(0.25, 4.0),
        method="bounded",
        options={"xatol": 1e-6},
    )
    return float(result.x)


def _adapt_box(state: OrbitalSet | PairingState, objective: Objective) -> Optional[OrbitalSet | PairingState]:
    state = recenter(state)
    fraction = outside_mass_fraction(state)
    if fraction > OUTSIDE_MASS_LIMIT:
        logger.info(f"Mass fraction {fraction:.2e} outside L/4; padding to 1.5 n")
        return pad_state(state)
    if objective.mass == 0:
        return None
    beta = optimal_dilation(state, objective)
    if abs(beta - 1.0) > VIRIAL_TOLERANCE:
        logger.info(f"Virial box adaptation: dilation {beta:.6f}")
        return dilate(state, beta)
    return None


def minimize(initial: OrbitalSet | PairingState, config: MinimizeConfig) -> MinimizeResult:
    """
    Minimize config.objective from `initial`.

    Energy objectives with box_adaptation='virial' restart (at most
    MAX_BOX_RESTARTS times) after padding or dilating the converged state.
    """
    objective = config.objective
    if isinstance(objective, TFObjective):
        raise ValueError("Thomas-Fermi objective is minimized by solve_tf")
    result = _descend(initial, config)
    log = list(result.log)
    restarts = 0
    while (
        config.box_adaptation == "virial"
        and isinstance(objective, ENERGIES)
        and restarts < MAX_BOX_RESTARTS
    ):
        adjusted = _adapt_box(result.state, objective)
        if adjusted is None:
            break
        restarts += 1
        result = _descend(adjusted, config, restart=restarts)
        log.extend(result.log)
    result.log = log
    result.restarts = restarts
    if not result.converged:
        logger.warning(f"{objective.kind} stopped unconverged ({result.status}) at {result.value:.12g}")
    return result


# ── mean field and eigenvalues ───────────────────────────


def apply_meanfield(state: OrbitalSet, coupling: float, mass: float = 0.0) -> np.ndarray:
    """H_gamma applied to every orbital, returned as grid coefficients (N, n, n, n)."""
    terms = FrameTerms(state.grid, state.coefficients, state.occupations, None, kinetic_kind(mass))
    return np.stack([terms.meanfield_action(j, coupling) for j in range(state.count)])


def eigen_extract(
    state: OrbitalSet,
    coupling: float,
    mass: float = 0.0,
    residual_tolerance: float = 1e-3,
) -> EigenReport:
    """
    Diagonalize <u_i, H_gamma u_j> and rotate the orbitals to its eigenbasis.

    Needs equal occupations so that gamma is unchanged by the rotation.
    """
    if not np.all(state.occupations == state.occupations[0]):
        raise StateError("eigen extraction needs equal occupations")
    count = state.count
    frame = state.flat
    actions = apply_meanfield(state, coupling, mass).reshape(count, -1)
    matrix = frame.conj() @ actions.T
    matrix = 0.5 * (matrix + matrix.conj().T)
    eigenvalues, vectors = linalg.eigh(matrix)
    rotated = vectors.T @ frame
    rotated_actions = vectors.T @ actions
    residuals = np.linalg.norm(rotated_actions - eigenvalues[:, None] * rotated, axis=1)
    stationary = bool(residuals.max() <= residual_tolerance * abs(eigenvalues[-1]))
    if not stationary:
        logger.warning(f"Eigen residual {residuals.max():.3e} exceeds {residual_tolerance:g} |nu_N|")
    rotated_state = OrbitalSet(state.grid, rotated.reshape(state.coefficients.shape), state.occupations)
    return EigenReport(
        eigenvalues=eigenvalues.tolist(),
        residuals=residuals.tolist(),
        sum=float(eigenvalues.sum()),
        stationary=stationary,
        rotated=rotated_state,
    )


def commutator_norm(state: OrbitalSet, coupling: float, mass: float = 0.0) -> float:
    """||[H_gamma, gamma]||_F = (2 sum_j ||(1 - P) H u_j||^2)^{1/2} for a projection gamma."""
    if not state.is_projection:
        raise StateError("commutator norm is defined here for projections")
    frame = state.flat
    actions = apply_meanfield(state, coupling, mass).reshape(state.count, -1)
    matrix = frame.conj() @ actions.T
    residual = actions - matrix.T @ frame
    return math.sqrt(2.0 * float(np.vdot(residual, residual).real))


# ── multistart drivers ───────────────────────────────────


def select_best(runs: list[tuple[int, MinimizeResult]]) -> tuple[int, MinimizeResult]:
    """Lowest objective; values within TIE_TOLERANCE go to the lowest seed."""
    lowest = min(result.value for _, result in runs)
    tied = [(seed, result) for seed, result in runs if result.value <= lowest + TIE_TOLERANCE]
    return min(tied, key=lambda item: item[0])


def normalize_kinetic(state: OrbitalSet | PairingState) -> OrbitalSet | PairingState:
    """Dilate so that Tr(sqrt(-Lap) gamma) = 1."""
    kinetic = frame_terms(state).kinetic
    return dilate(state, 1.0 / kinetic)


def solve_kappa_n(
    N: int,
    grid: Optional[SpectralGrid] = None,
    seeds: int = DEFAULT_SEEDS,
    config: Optional[MinimizeConfig] = None,
    confinement: bool = True,
) -> CriticalCouplingResult:
    """Multistart minimization of the HF quotient over rank-N projections."""
    if N < 2:
        raise CouplingOutOfRangeError(f"kappa_N needs N >= 2 (kappa_1 is infinite), got {N}")
    if seeds < 1:
        raise ValueError(f"seeds must be >= 1, got {seeds}")
    grid = grid or SpectralGrid(DEFAULT_GRID, DEFAULT_BOX)
    base = (config or MinimizeConfig()).with_objective(QuotientHF())

    runs = []
    for seed in range(seeds):
        result = minimize(initial_frame(grid, N, seed), base.model_copy(update={"seed": seed}))
        logger.info(f"kappa_{N} seed {seed}: {result.value:.12g} ({result.status}, {result.iterations} iterations)")
        runs.append((seed, result))
    starts = [
        StartRecord(seed=s, value=r.value, converged=r.converged, iterations=r.iterations, status=r.status)
        for s, r in runs
    ]
    survivors = [(s, r) for s, r in runs if r.converged]
    if not survivors:
        summary = ", ".join(f"seed {s}: {r.value:.6g} ({r.status})" for s, r in runs)
        raise NonConvergenceError(f"no kappa_{N} start converged: {summary}")

    best_seed, best = select_best(survivors)
    kappa = best.value
    eigen = eigen_extract(normalize_kinetic(best.state), kappa)
    state = eigen.rotated
    terms = frame_terms(state)
    kinetic = terms.kinetic
    interaction = terms.direct - terms.exchange
    pohozaev = abs(kinetic - 1.25 * kappa * interaction - 1.5 * eigen.sum) / kinetic
    virial = abs(kinetic - 0.5 * kappa * interaction) / kinetic
    commutator = commutator_norm(state, kappa) / kinetic
    trace = inverse_sqrt_trace(state)

    confinement_error = None
    if confinement:
        padded = minimize(pad_state(state), base.model_copy(update={"seed": best_seed}))
        confinement_error = abs(padded.value - kappa)
        logger.info(f"kappa_{N} confinement error {confinement_error:.3e}")

    return CriticalCouplingResult(
        N=N,
        kappa=kappa,
        eigen=eigen,
        pohozaev_residual=pohozaev,
        virial_residual=virial,
        commutator_residual=commutator,
        d_star=trace.value,
        d_star_correction=trace.zero_mode_correction,
        confinement_error=confinement_error,
        grid_points=state.grid.n_points_per_axis,
        box_length=state.grid.box_length,
        best_seed=best_seed,
        starts=starts,
        state=state,
        survivors=[normalize_kinetic(r.state) for _, r in survivors],
        iterate_log=best.log,
    )


def solve_hf_energy(
    N: int,
    mass: float,
    coupling: float,
    critical_coupling: float,
    grid: Optional[SpectralGrid] = None,
    config: Optional[MinimizeConfig] = None,
    initial: Optional[OrbitalSet] = None,
    seed: int = 0,
) -> HFEnergySolution:
    """
    Minimize E^HF_{m,k} over rank-N projections for k below the computed kappa_N.

    For k >= kappa_N the infimum is -mN and not attained, so the request is refused.
    """
    if not mass > 0:
        raise CouplingOutOfRangeError(f"HF energy minimization needs m > 0, got {mass}")
    if coupling >= critical_coupling:
        raise CouplingOutOfRangeError(
            f"coupling {coupling} >= kappa_{N} = {critical_coupling}: no minimizer exists (HF existence classification)"
        )
    grid = grid or SpectralGrid(DEFAULT_GRID, DEFAULT_BOX)
    cfg = (config or MinimizeConfig()).with_objective(HFEnergy(mass=mass, coupling=coupling))
    start = initial if initial is not None else initial_frame(grid, N, seed)
    result = minimize(start, cfg.model_copy(update={"seed": seed}))
    energy = hf_energy(result.state, mass, coupling)
    if not -mass * N < energy.total < 0:
        logger.warning(f"HF energy {energy.total:.12g} outside (-mN, 0) = ({-mass * N}, 0)")
    return HFEnergySolution(state=result.state, energy=energy, result=result)


# ── Thomas-Fermi ─────────────────────────────────────────


def _is_monotone_tail(profile: np.ndarray) -> bool:
    peak = int(np.argmax(profile))
    tail = profile[peak:]
    return bool(np.all(np.diff(tail) <= 1e-9 * profile[peak]))


def solve_tf(
    grid: Optional[RadialGrid] = None,
    config: Optional[MinimizeConfig] = None,
    max_iterations: Optional[int] = None,
    tolerance: float = TF_TOLERANCE,
) -> TFSolution:
    """
    Projected gradient descent of the Thomas-Fermi quotient over f >= 0.

    The step follows the functional derivative (gradient / weights); amplitude
    is fixed at int f = 1 every step and the full (mass, L^{4/3}) normalization
    is applied periodically. Raises NonConvergenceError when the objective
    rises TF_DIVERGENCE_STREAK times in a row.
    """
    grid = grid or RadialGrid()
    cfg = config or MinimizeConfig(objective=TFObjective())
    if not isinstance(cfg.objective, TFObjective):
        raise ValueError("solve_tf needs a TFObjective config")
    limit = max_iterations or TF_MAX_ITERATIONS
    r = grid.radii
    f = np.exp(-r * r)
    f = normalize_profile(f, grid)
    value, gradient = tf_gradient(f, grid)
    step = cfg.step
    status = "max_iterations"
    rising = 0
    iteration = 0

    for iteration in range(1, limit + 1):
        derivative = gradient / grid.weights
        projected = f - np.maximum(f - derivative, 0.0)
        residual = math.sqrt(float(np.dot(grid.weights, projected * projected)))
        if residual <= tolerance * value:
            status = "converged"
            iteration -= 1
            break
        accepted = False
        for _ in range(MAX_LINE_SEARCH):
            trial = np.maximum(f - step * derivative, 0.0)
            if np.any(trial > 0):
                predicted = float(np.dot(gradient, trial - f))
                trial_value = tf_objective(trial, grid)
                if predicted < 0 and trial_value <= value + cfg.armijo_constant * predicted:
                    accepted = True
                    break
            step *= cfg.backtrack_factor
        if not accepted:
            status = "non_decreasing_step"
            logger.warning(f"Thomas-Fermi line search failed at iteration {iteration}")
            iteration -= 1
            break
        f = trial / grid.integrate(trial)
        if iteration % TF_RENORMALIZE_EVERY == 0:
            f = normalize_profile(f, grid)
        new_value, gradient = tf_gradient(f, grid)
        rising = rising + 1 if new_value > value else 0
        if rising >= TF_DIVERGENCE_STREAK:
            raise NonConvergenceError(f"Thomas-Fermi objective rose {rising} consecutive steps")
        value = new_value
        step = min(step * 2.0, MAX_STEP)
        if iteration % cfg.log_every == 0:
            logger.info(f"tf iteration {iteration}: objective {value:.12g}, residual {residual:.3e}")

    f = normalize_profile(f, grid)
    value = tf_objective(f, grid)
    monotone = _is_monotone_tail(f)
    if not monotone:
        logger.warning("Thomas-Fermi minimizer is not nonincreasing beyond its peak")
    return TFSolution(
        value=value,
        profile=f,
        iterations=iteration,
        converged=status == "converged",
        monotone=monotone,
        status=status,
    )
