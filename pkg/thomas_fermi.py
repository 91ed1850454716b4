#!/usr/bin/env python3
"""
Module: Thomas-Fermi constant for RelStar
Version: 1.1.0
Development Iteration: v2

Project: RelStar
Created: 2026-10-17

Enhancement: Radial quadrature moved to radial_grid.py; solver and scan types
imported at module level

Features:
- tau_c from the radial minimizer with a doubled-resolution refinement delta
- Independent n = 3 Lane-Emden reference for tau_c (scipy solve_ivp)
- Chandrasekhar scaling comparison of kappa_N^{3/2} N against tau_c^{3/2}

UV ENVIRONMENT: Run with `uv run python thomas_fermi.py`

INSTALLATION:
uv add numpy scipy pydantic
"""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel
from scipy.integrate import solve_ivp

from config import RADIAL_NODES, TAU_C_REFERENCE
from critical_analysis import ScanRow, ScanTable
from minimizer import solve_tf
from radial_grid import TF_KINETIC_CONSTANT, RadialGrid

logger = logging.getLogger(__name__)


class LaneEmdenReference(BaseModel):
    """n = 3 Lane-Emden constants and the tau_c they imply."""
    first_zero: float
    mass_constant: float
    tau_c: float


def lane_emden_reference(rtol: float = 1e-12) -> LaneEmdenReference:
    """
    Solve theta'' + (2/xi) theta' + theta^3 = 0, theta(0) = 1, theta'(0) = 0.

    The Thomas-Fermi optimizer is a rescaled theta^3, which gives
    tau_c = (4/3) c_TF (4 pi)^{-1/3} omega_3^{2/3}, omega_3 = -xi_1^2 theta'(xi_1).
    """
    start = 1e-4
    # series start: theta = 1 - xi^2/6 + xi^4/40
    y0 = [1.0 - start ** 2 / 6.0 + start ** 4 / 40.0, -start / 3.0 + start ** 3 / 10.0]

    def rhs(xi, y):
        return [y[1], -2.0 * y[1] / xi - np.sign(y[0]) * abs(y[0]) ** 3]

    def crossing(xi, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    sol = solve_ivp(rhs, (start, 20.0), y0, events=crossing, rtol=rtol, atol=1e-14, method="DOP853")
    if not sol.success or len(sol.t_events[0]) == 0:
        raise RuntimeError(f"Lane-Emden integration failed: {sol.message}")
    first_zero = float(sol.t_events[0][0])
    slope = float(sol.y_events[0][0][1])
    mass_constant = -first_zero ** 2 * slope
    tau = (4.0 / 3.0) * TF_KINETIC_CONSTANT * (4.0 * math.pi) ** (-1.0 / 3.0) * mass_constant ** (2.0 / 3.0)
    return LaneEmdenReference(first_zero=first_zero, mass_constant=mass_constant, tau_c=tau)


class TauCReport(BaseModel):
    """tau_c estimate with its radial minimizer."""
    value: float
    nodes: int
    iterations: int
    converged: bool
    monotone: bool
    radii: list[float]
    profile: list[float]
    refined_value: Optional[float] = None
    refinement_delta: Optional[float] = None
    reference: float = TAU_C_REFERENCE


def tau_c(
    n_nodes: int = RADIAL_NODES,
    refine: bool = True,
    max_iterations: Optional[int] = None,
) -> TauCReport:
    """
    Minimize the Thomas-Fermi quotient on a radial grid; optionally repeat on
    the doubled grid and report the relative change.
    """
    grid = RadialGrid(n_nodes)
    solution = solve_tf(grid, max_iterations=max_iterations)
    report = TauCReport(
        value=solution.value,
        nodes=n_nodes,
        iterations=solution.iterations,
        converged=solution.converged,
        monotone=solution.monotone,
        radii=grid.radii.tolist(),
        profile=solution.profile.tolist(),
    )
    if refine:
        fine = solve_tf(grid.refined(), max_iterations=max_iterations)
        report.refined_value = fine.value
        report.refinement_delta = abs(fine.value - solution.value) / solution.value
        logger.info(f"tau_c {solution.value:.6f} at M={n_nodes}, {fine.value:.6f} at M={2 * n_nodes}")
    else:
        logger.info(f"tau_c {solution.value:.6f} at M={n_nodes}")
    return report


def chandrasekhar_scaling_check(kappa_table: dict[int, float], tau: float = TAU_C_REFERENCE) -> ScanTable:
    """
    Tabulate kappa_N^{3/2} N against tau_c^{3/2} for each computed critical coupling.

    Returns a ScanTable over N; metadata 'trend' is 'decreasing', 'not decreasing'
    or 'inconclusive' (fewer than three rows or N_max < 4).
    """
    target = tau ** 1.5
    rows = []
    for n in sorted(kappa_table):
        kappa = kappa_table[n]
        scaled = kappa ** 1.5 * n
        rows.append(ScanRow(
            control=float(n),
            observables={
                "kappa": kappa,
                "scaled": scaled,
                "target": target,
                "deviation": abs(scaled - target) / target,
            },
        ))
    deviations = [row.observables["deviation"] for row in rows]
    if len(rows) < 3 or max(kappa_table, default=0) < 4:
        trend = "inconclusive"
    elif all(b < a for a, b in zip(deviations, deviations[1:])):
        trend = "decreasing"
    else:
        trend = "not decreasing"
    if trend != "decreasing":
        logger.warning(f"Chandrasekhar scaling trend: {trend}")
    return ScanTable(control_name="N", rows=rows, metadata={"trend": trend, "tau_c": tau})
