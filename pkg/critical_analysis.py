#!/usr/bin/env python3
"""
Module: Critical-coupling experiments for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- ScanTable / RateFit containers with strictly monotone control parameters
- HFB scaling trajectories E_m(beta) = beta E_0 - m lambda + Tr(B_{m,beta} gamma)
- Blow-up scans kappa -> kappa_N with square-root rate fits and warm starts
- d_N* extraction, density decay diagnostic, existence classification
- HFB quotient scans over the particle number lambda, grid refinement study

UV ENVIRONMENT: Run with `uv run python critical_analysis.py`

INSTALLATION:
uv add numpy scipy pydantic
"""

import logging
import math
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import stats

from config import D_STAR_TOLERANCE, DEFAULT_BOX, DEFAULT_SEEDS, TAU_C_REFERENCE
from functionals import frame_terms, gn_quotient, hfb_energy, inverse_sqrt_trace, kinetic_trace
from minimizer import (
    CriticalCouplingResult,
    MinimizeConfig,
    QuotientHFB,
    initial_pairing,
    minimize,
    normalize_kinetic,
    outside_mass_fraction,
    solve_hf_energy,
    solve_kappa_n,
)
from quantum_states import OrbitalSet, PairingState, density, dilate
from spectral_grid import MassGap, SpectralGrid

logger = logging.getLogger(__name__)

FIT_EXCLUDED_ROWS = 2
BOUNDARY_MARGIN = 3.0


class TableRangeError(ValueError):
    """Coupling below the smallest computed kappa_N; the table needs a larger N_max."""


class InvariantViolationError(AssertionError):
    """A property that must hold for every state was violated."""


class ScanRow(BaseModel):
    control: float
    observables: dict[str, Any] = Field(default_factory=dict)
    flagged: bool = False
    note: str = ""


class RateFit(BaseModel):
    """log y = exponent log x + log prefactor over the window of x."""
    exponent: float
    prefactor: float
    r_squared: float = Field(ge=0.0, le=1.0)
    window: tuple[float, float]
    points: int

    @field_validator("window")
    @classmethod
    def window_nonempty(cls, window: tuple[float, float]) -> tuple[float, float]:
        if not window[0] <= window[1]:
            raise ValueError(f"empty fit window {window}")
        return window


class ScanTable(BaseModel):
    """Rows keyed by a strictly monotone control parameter, plus fits and run metadata."""
    control_name: str
    rows: list[ScanRow]
    metadata: dict[str, Any] = Field(default_factory=dict)
    fits: dict[str, Optional[RateFit]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def strictly_monotone(self) -> "ScanTable":
        controls = [row.control for row in self.rows]
        steps = np.diff(controls)
        if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"{self.control_name} is not strictly monotone across rows: {controls}")
        return self

    def column(self, name: str) -> list[Any]:
        return [row.observables.get(name) for row in self.rows]


def fit_power_law(x: np.ndarray, y: np.ndarray) -> RateFit:
    """Least-squares line through (log x, log y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs at least two positive points")
    fit = stats.linregress(np.log(x), np.log(y))
    r_squared = min(1.0, max(0.0, float(fit.rvalue) ** 2))
    return RateFit(
        exponent=float(fit.slope),
        prefactor=float(math.exp(fit.intercept)),
        r_squared=r_squared,
        window=(float(x.min()), float(x.max())),
        points=int(x.size),
    )


# ── HFB scaling ──────────────────────────────────────────


def zero_energy_coupling(state: OrbitalSet | PairingState) -> float:
    """Coupling at which the massless energy of `state` vanishes: 2T / (D - X + X(alpha))."""
    if isinstance(state, PairingState):
        return gn_quotient(state, "HFB").value
    return gn_quotient(state, "HF").value


def _zero_mode_weight(state: PairingState) -> float:
    terms = frame_terms(state)
    return float(np.dot(terms.occupations, np.abs(terms.spectra[:, 0, 0, 0]) ** 2))


def hfb_scaling_trajectory(
    state: PairingState,
    mass: float,
    coupling: float,
    betas: list[float],
    slope_window: tuple[float, float] = (4.0, 64.0),
) -> ScanTable:
    """
    Massive HFB energy along the dilation orbit of `state`.

    Each row checks E_m(beta) = beta E_0 - m lambda + Tr(B_{m,beta} gamma); the
    mass-gap trace slope in beta is fitted on its nonzero-frequency part (the
    zero mode carries B(0) = m for every beta).
    """
    if not mass > 0:
        raise ValueError(f"scaling trajectory needs m > 0, got {mass}")
    if any(b <= a for a, b in zip(betas, betas[1:])) or min(betas) <= 0:
        raise ValueError("betas must be positive and strictly increasing")
    massless = hfb_energy(state, 0.0, coupling).total
    if massless > 0:
        logger.warning(f"Massless HFB energy {massless:.6g} > 0; the trajectory rises")
    trace = state.trace
    zero_mode = mass * _zero_mode_weight(state)
    gamma = state.gamma

    rows = []
    worst = 0.0
    for beta in betas:
        massive = hfb_energy(dilate(state, beta), mass, coupling).total
        gap = kinetic_trace(gamma, MassGap(mass, beta))
        predicted = beta * massless - mass * trace + gap
        residual = abs(massive - predicted) / max(abs(massive), mass * trace)
        worst = max(worst, residual)
        rows.append(ScanRow(
            control=beta,
            observables={
                "energy": massive,
                "massless_scaled": beta * massless,
                "mass_gap": gap,
                "mass_gap_nonzero": gap - zero_mode,
                "shifted_energy": massive + mass * trace,
                "identity_residual": residual,
                "above_floor": massive + mass * trace > 0,
            },
            flagged=residual > 1e-12,
        ))

    in_window = [
        (row.control, row.observables["mass_gap_nonzero"])
        for row in rows
        if slope_window[0] <= row.control <= slope_window[1] and row.observables["mass_gap_nonzero"] > 0
    ]
    energies = [row.observables["energy"] for row in rows]
    nonincreasing = all(b <= a + 1e-12 * abs(a) for a, b in zip(energies, energies[1:]))
    fit = None
    if len(in_window) >= 2:
        xs, ys = zip(*in_window)
        fit = fit_power_law(np.array(xs), np.array(ys))
    else:
        logger.warning("Too few trajectory rows inside the slope window")
    return ScanTable(
        control_name="beta",
        rows=rows,
        metadata={
            "mass": mass,
            "coupling": coupling,
            "trace": trace,
            "massless_energy": massless,
            "max_identity_residual": worst,
            "nonincreasing": nonincreasing,
            "zero_mode_weight": zero_mode / mass,
            "grid": state.grid.n_points_per_axis,
            "box_length": state.grid.box_length,
        },
        fits={"mass_gap": fit},
    )


# ── blow-up ──────────────────────────────────────────────


def blowup_scan(
    critical: CriticalCouplingResult,
    mass: float,
    fractions: list[float],
    config: Optional[MinimizeConfig] = None,
) -> ScanTable:
    """
    Solve E^HF_{m,k} for k = fraction * kappa_N, warm-starting each solve from
    the previous optimizer dilated by the predicted epsilon ratio, and fit
    epsilon = 1/Tr(sqrt(-Lap) gamma) and I + mN against kappa_N - k.
    """
    if not fractions or any(not 0 < f < 1 for f in fractions):
        raise ValueError("fractions must lie in (0, 1)")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fractions must be strictly increasing")
    if not mass > 0:
        raise ValueError(f"blow-up scan needs m > 0, got {mass}")
    N, kappa_n, d_star = critical.N, critical.kappa, critical.d_star

    def predicted_epsilon(distance: float) -> float:
        return math.sqrt(2.0 * distance / (mass * mass * kappa_n * d_star))

    warm = dilate(critical.state, 1.0 / predicted_epsilon(kappa_n * (1.0 - fractions[0])))
    previous_distance = None
    previous_epsilon = math.inf
    rows = []
    for fraction in fractions:
        coupling = fraction * kappa_n
        distance = kappa_n - coupling
        if previous_distance is not None:
            warm = dilate(warm, math.sqrt(previous_distance / distance))
        solution = solve_hf_energy(N, mass, coupling, kappa_n, config=config, initial=warm)
        state = solution.state
        epsilon = 1.0 / kinetic_trace(state)
        gap = solution.energy.total + mass * N
        rescaled = inverse_sqrt_trace(normalize_kinetic(state)).value
        flagged = not solution.result.converged
        note = "" if not flagged else solution.result.status
        if epsilon >= previous_epsilon:
            flagged = True
            note = "epsilon not decreasing"
        rows.append(ScanRow(
            control=fraction,
            observables={
                "kappa": coupling,
                "distance": distance,
                "epsilon": epsilon,
                "gap": gap,
                "energy": solution.energy.total,
                "ratio": gap / (mass * mass * d_star * epsilon),
                "d_star_rescaled": rescaled,
                "excluded": False,
            },
            flagged=flagged,
            note=note,
        ))
        logger.info(f"blowup fraction {fraction}: epsilon {epsilon:.6g}, gap {gap:.6g}")
        warm = state
        previous_distance = distance
        previous_epsilon = min(previous_epsilon, epsilon)

    for row in rows[-FIT_EXCLUDED_ROWS:]:
        row.observables["excluded"] = True
    usable = [row for row in rows if not row.flagged and not row.observables["excluded"]]
    fits: dict[str, Optional[RateFit]] = {"epsilon": None, "gap": None}
    if len(usable) >= 2:
        x = np.array([row.observables["distance"] for row in usable])
        fits["epsilon"] = fit_power_law(x, np.array([row.observables["epsilon"] for row in usable]))
        fits["gap"] = fit_power_law(x, np.array([row.observables["gap"] for row in usable]))
    else:
        logger.warning(f"Only {len(usable)} usable blow-up rows; fits skipped")
    return ScanTable(
        control_name="fraction",
        rows=rows,
        metadata={
            "N": N,
            "mass": mass,
            "kappa_n": kappa_n,
            "d_star": d_star,
            "excluded_rows": FIT_EXCLUDED_ROWS,
            "grid": critical.grid_points,
        },
        fits=fits,
    )


# ── d_N* and decay ───────────────────────────────────────


class DStarReport(BaseModel):
    N: int
    value: float
    lattice_value: float
    correction: float
    zero_mode_weight: float
    padding: int
    candidates: list[float]
    lower_bound: float


def extract_d_star(critical: CriticalCouplingResult, relative_window: float = 1e-6) -> DStarReport:
    """
    Minimum of Tr((-Lap)^{-1/2} gamma) over the normalized multistart optimizers
    (survivors whose quotient is within `relative_window` of kappa_N).

    Raises InvariantViolationError when the minimum falls below
    N^2 (1 - D_STAR_TOLERANCE).
    """
    states = critical.survivors or [critical.state]
    candidates = []
    best = None
    for state in states:
        if abs(gn_quotient(state).value - critical.kappa) > relative_window * critical.kappa:
            continue
        trace = inverse_sqrt_trace(normalize_kinetic(state))
        candidates.append(trace.value)
        if best is None or trace.value < best.value:
            best = trace
    if best is None:
        best = inverse_sqrt_trace(normalize_kinetic(critical.state))
        candidates.append(best.value)
    bound = float(critical.N ** 2)
    if best.value < bound * (1.0 - D_STAR_TOLERANCE):
        raise InvariantViolationError(
            f"d_{critical.N}* = {best.value:.9g} is below N^2 = {bound:g} "
            f"(zero-mode correction {best.zero_mode_correction:.3e}, padding x{best.padding})"
        )
    return DStarReport(
        N=critical.N,
        value=best.value,
        lattice_value=best.lattice_value,
        correction=best.zero_mode_correction,
        zero_mode_weight=best.zero_mode_weight,
        padding=best.padding,
        candidates=candidates,
        lower_bound=bound,
    )


class DecayReport(BaseModel):
    slope: Optional[float]
    constant: float
    window: tuple[float, float]
    decades: float
    qualitative: bool
    outside_mass: float


def decay_diagnostic(state: OrbitalSet | PairingState, min_decades: float = 3.0) -> DecayReport:
    """Shell-averaged density over L/8 <= r <= L/3 fitted as a power of r."""
    gamma = state.gamma if isinstance(state, PairingState) else state
    rho = density(gamma).values
    grid = state.grid
    radius = grid.radius
    inner, outer = grid.box_length / 8.0, grid.box_length / 3.0
    outside = outside_mass_fraction(state)
    if outside > 1e-6:
        logger.warning(f"Decay diagnostic on a state with {outside:.2e} of its mass beyond L/4")

    mask = (radius >= inner) & (radius <= outer)
    constant = float(np.max(rho[mask] * (1.0 + radius[mask]) ** 8)) if np.any(mask) else 0.0
    edges = np.arange(inner, outer + grid.spacing, grid.spacing)
    shells_r, shells_rho = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        shell = (radius >= lo) & (radius < hi)
        if np.any(shell):
            shells_r.append(float(radius[shell].mean()))
            shells_rho.append(float(rho[shell].mean()))
    shells_r = np.array(shells_r)
    shells_rho = np.array(shells_rho)
    positive = shells_rho > 0
    decades = 0.0
    if np.count_nonzero(positive) >= 2:
        decades = float(np.log10(shells_rho[positive].max() / shells_rho[positive].min()))
    slope = None
    if np.count_nonzero(positive) >= 2 and decades > 0:
        slope = fit_power_law(shells_r[positive], shells_rho[positive]).exponent
    qualitative = decades < min_decades
    if qualitative:
        logger.info(f"Decay window spans {decades:.2f} decades; report is qualitative")
    return DecayReport(
        slope=slope,
        constant=constant,
        window=(inner, outer),
        decades=decades,
        qualitative=qualitative,
        outside_mass=outside,
    )


# ── classification ───────────────────────────────────────


class Classification(BaseModel):
    kappa: float
    N: int
    exists: Literal["yes", "no", "boundary"]
    margin: float
    nearest: int


def classify_kappa(
    kappa: float,
    table: dict[int, float],
    errors: Optional[dict[int, float]] = None,
) -> Classification:
    """
    Existence of an HF minimizer at coupling kappa from computed criticals.

    kappa > kappa_2: N = 1, none; within 3 confinement errors of some kappa_N:
    boundary (the infimum -mN is not attained); kappa in (kappa_{N+1}, kappa_N):
    N, a minimizer exists.
    """
    if not table:
        raise TableRangeError("empty critical-coupling table")
    errors = errors or {}
    numbers = sorted(table)
    if numbers[0] != 2 or numbers != list(range(2, numbers[-1] + 1)):
        raise ValueError(f"table must hold consecutive N from 2, got {numbers}")

    def tolerance(n: int) -> float:
        return max(errors.get(n) or 0.0, 1e-12 * table[n])

    nearest = min(numbers, key=lambda n: (abs(kappa - table[n]), n))
    distance = abs(kappa - table[nearest])
    margin = distance / tolerance(nearest)
    if margin <= BOUNDARY_MARGIN:
        return Classification(kappa=kappa, N=nearest, exists="boundary", margin=margin, nearest=nearest)
    if kappa > table[2]:
        return Classification(kappa=kappa, N=1, exists="no", margin=margin, nearest=nearest)
    for n in numbers[:-1]:
        if table[n + 1] < kappa < table[n]:
            return Classification(kappa=kappa, N=n, exists="yes", margin=margin, nearest=nearest)
    raise TableRangeError(f"kappa {kappa} is below kappa_{numbers[-1]} = {table[numbers[-1]]}; increase N_max")


# ── scans ────────────────────────────────────────────────


def hfb_quotient_scan(
    lambdas: list[float],
    grid: Optional[SpectralGrid] = None,
    config: Optional[MinimizeConfig] = None,
    seed: int = 0,
) -> ScanTable:
    """Upper bounds on kappa_lambda^HFB from BCS states with Tr gamma = lambda, pairing on and off."""
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])) or min(lambdas) <= 0:
        raise ValueError("lambdas must be positive and strictly increasing")
    grid = grid or SpectralGrid(32, DEFAULT_BOX)
    base = config or MinimizeConfig()
    rows = []
    for lam in lambdas:
        pairs = int(math.floor(lam / 2.0)) + 1
        values = {}
        flagged = False
        for pairing in (True, False):
            start = initial_pairing(grid, pairs, seed, trace=lam, pairing=pairing)
            result = minimize(start, base.with_objective(QuotientHFB(pairing=pairing, trace=lam)))
            values[pairing] = result.value
            flagged = flagged or not result.converged
        rows.append(ScanRow(
            control=lam,
            observables={
                "pairs": pairs,
                "kappa_pairing": values[True],
                "kappa_no_pairing": values[False],
                "scaled": values[True] * lam ** (2.0 / 3.0),
                "tau_deviation": abs(values[True] * lam ** (2.0 / 3.0) - TAU_C_REFERENCE) / TAU_C_REFERENCE,
            },
            flagged=flagged,
        ))
        logger.info(f"HFB quotient at lambda={lam}: {values[True]:.6g} (pairing), {values[False]:.6g} (none)")
    kappas = [row.observables["kappa_pairing"] for row in rows]
    nonincreasing = all(b <= a for a, b in zip(kappas, kappas[1:]))
    if not nonincreasing:
        logger.warning("HFB quotient estimates are not nonincreasing in lambda")
    return ScanTable(
        control_name="lambda",
        rows=rows,
        metadata={"grid": grid.n_points_per_axis, "box_length": grid.box_length, "seed": seed, "nonincreasing": nonincreasing},
    )


def grid_refinement_study(
    N: int,
    sizes: tuple[int, ...] = (32, 48, 64),
    box_length: float = DEFAULT_BOX,
    seeds: int = DEFAULT_SEEDS,
    config: Optional[MinimizeConfig] = None,
) -> ScanTable:
    """kappa_N and d_N* at several resolutions of the same box; deltas only, no rate claimed."""
    rows = []
    previous = None
    for size in sizes:
        result = solve_kappa_n(N, SpectralGrid(size, box_length), seeds, config, confinement=False)
        delta = None if previous is None else abs(result.kappa - previous) / previous
        rows.append(ScanRow(
            control=float(size),
            observables={"kappa": result.kappa, "d_star": result.d_star, "relative_delta": delta},
        ))
        previous = result.kappa
    return ScanTable(control_name="grid", rows=rows, metadata={"N": N, "box_length": box_length, "seeds": seeds})
