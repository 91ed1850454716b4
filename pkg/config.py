#!/usr/bin/env python3
"""
Module: Configuration and run provenance for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Environment loading from .env (threads, output directory, log level)
- Numeric defaults shared by the solvers and the CLI
- Flat key-value run-config files (keys are the CLI flag names)
- RunConfig with a stable config hash for provenance

UV ENVIRONMENT: Run with `uv run python config.py`

INSTALLATION:
uv add python-dotenv pydantic
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field

# Load .env from project directory
load_dotenv(Path(__file__).parent / ".env")

logger = logging.getLogger(__name__)

VERSION = "0.1.0"

# Environment
OUTPUT_DIR = Path(os.getenv("RELSTAR_OUTPUT_DIR", "runs"))
LOG_LEVEL = os.getenv("RELSTAR_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Spectral grid
DEFAULT_GRID = 48
ORACLE_GRID = 8
MIN_GRID = 8
DEFAULT_BOX = 12.0

# Minimizer
DEFAULT_SEEDS = 4
MAX_ITERATIONS = 5000
GRADIENT_TOLERANCE = 1e-6
INITIAL_STEP = 0.1
BACKTRACK_FACTOR = 0.5
ARMIJO_CONSTANT = 1e-4
MAX_LINE_SEARCH = 60
MAX_BOX_RESTARTS = 3
RECENTER_EVERY = 25
# Descent stops as "stagnated" when the objective falls by less than
# STAGNATION_TOLERANCE (relative) over STAGNATION_WINDOW accepted steps
STAGNATION_WINDOW = 200
STAGNATION_TOLERANCE = 1e-9
LOG_EVERY = 100
ORTHONORMALITY_TOLERANCE = 1e-10
DEGENERACY_TOLERANCE = 1e-12

# Tr((-Lap)^{-1/2} gamma): zero-mode weight per unit trace at which padding stops,
# the padded grid cap, and the relative slack on d_N* >= N^2
D_STAR_ZERO_MODE_TARGET = 1e-4
D_STAR_MAX_POINTS = 128
D_STAR_TOLERANCE = 1e-3

# Thomas-Fermi radial problem
RADIAL_NODES = 2048
RADIAL_MIN = 1e-3
RADIAL_MAX = 1e3
TAU_C_REFERENCE = 2.677
TF_MAX_ITERATIONS = 20000
TF_TOLERANCE = 1e-7

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2
EXIT_INVARIANT = 3

_threads: Optional[int] = None


def set_threads(count: Optional[int]) -> int:
    """Cap the worker count (CLI --threads); None falls back to RELSTAR_THREADS."""
    global _threads
    if count is not None and count < 1:
        raise ValueError(f"threads must be >= 1, got {count}")
    _threads = count
    return worker_count()


def worker_count() -> int:
    """Current worker cap: --threads, then RELSTAR_THREADS, then 1."""
    if _threads is not None:
        return _threads
    try:
        return max(1, int(os.getenv("RELSTAR_THREADS", "1")))
    except ValueError:
        logger.warning("Ignoring non-integer RELSTAR_THREADS")
        return 1


def load_run_file(path: str) -> dict[str, str]:
    """
    Read a flat key-value run-config file.

    Keys are CLI flag names without leading dashes; dashes and underscores are
    interchangeable. Returns an empty dict when the file is missing.
    """
    file_path = Path(path)
    if not file_path.exists():
        logger.error(f"Run config not found: {path}")
        return {}
    values = dotenv_values(file_path)
    return {key.strip().lstrip("-").replace("-", "_"): value for key, value in values.items() if value is not None}


class RunConfig(BaseModel):
    """Parameters of one CLI run plus provenance."""
    command: str
    parameters: dict[str, Any] = Field(default_factory=dict)
    version: str = VERSION

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(
            {"command": self.command, "parameters": self.parameters, "version": self.version},
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def provenance(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "version": self.version,
            "config_hash": self.config_hash,
        }
