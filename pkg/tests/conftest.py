"""Shared fixtures for RelStar tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure project root is importable
sys.path.insert(0, str(Path(__file__).parent.parent))

from minimizer import initial_frame, initial_pairing  # noqa: E402
from spectral_grid import SpectralGrid  # noqa: E402


@pytest.fixture
def tmp_output_dir(tmp_path, monkeypatch):
    """Temporary directory patched over config.OUTPUT_DIR."""
    output = tmp_path / "runs"
    output.mkdir()
    monkeypatch.setattr("config.OUTPUT_DIR", output)
    return output


@pytest.fixture
def tiny_grid():
    """8^3 oracle grid with unit spacing."""
    return SpectralGrid(8, 8.0)


@pytest.fixture
def small_grid():
    """16^3 grid for smooth-state checks."""
    return SpectralGrid(16, 10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_orbitals(small_grid):
    """Seeded rank-2 projection on the 16^3 grid."""
    return initial_frame(small_grid, 2, seed=7)


@pytest.fixture
def one_pair(small_grid):
    """Seeded single BCS pair on the 16^3 grid."""
    return initial_pairing(small_grid, 1, seed=3)
