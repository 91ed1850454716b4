#!/usr/bin/env python3
"""
Module: Checkpoint save/load for RelStar
Version: 1.1.0
Development Iteration: v2

Project: RelStar
Created: 2026-10-17

Enhancement: Format v2 - pairing amplitudes and the run's config hash

Features:
- Save converged states (HF frames or BCS pairing states) as little-endian binaries
- Load them back, rejecting unknown magic/versions (v1 files still load)
- List checkpoints in an output directory

Format (little-endian):
    magic "RSTR", version u32, grid n u32, box_length f64, orbital count u32,
    mass f64, coupling f64, then (v2 only) pair count K u32 and the config
    hash as 64 ASCII bytes (NUL-padded), occupations f64 x N, pair_angles
    f64 x K (K = 0 for pure HF), (v2 only) pair amplitudes f64 x K, then N
    complex orbital arrays as interleaved f64 pairs, x-fastest. Orbital
    arrays hold the l2-normalized grid coefficients c = h^{3/2} u. In v1
    files K is recovered from the file length and the amplitudes default to
    sin(theta) cos(theta).

UV ENVIRONMENT: Run with `uv run python state_storage.py`

INSTALLATION:
uv add numpy
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

import config
from quantum_states import OrbitalSet, PairingState
from spectral_grid import SpectralGrid

logger = logging.getLogger(__name__)

MAGIC = b"RSTR"
FORMAT_VERSION = 2
SUPPORTED_VERSIONS = (1, 2)
_HEADER = struct.Struct("<4sIIdIdd")
_EXTENSION = struct.Struct("<I64s")


@dataclass(frozen=True)
class Checkpoint:
    """A loaded checkpoint."""
    state: OrbitalSet | PairingState
    mass: float
    coupling: float
    filepath: str
    config_hash: str = ""


def encode_checkpoint(
    state: OrbitalSet | PairingState,
    mass: float,
    coupling: float,
    config_hash: str = "",
) -> bytes:
    """Serialize a state to the RSTR v2 byte layout."""
    if isinstance(state, PairingState):
        frame, angles, amplitudes = state.base, state.pair_angles, state.amplitudes
    else:
        frame, angles, amplitudes = state, np.zeros(0), np.zeros(0)
    hash_bytes = config_hash.encode("ascii")
    if len(hash_bytes) > 64:
        raise ValueError(f"config hash longer than 64 bytes: {config_hash!r}")
    grid = frame.grid
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, grid.n_points_per_axis, grid.box_length, frame.count, mass, coupling),
        _EXTENSION.pack(len(angles), hash_bytes),
        np.asarray(state.occupations, dtype="<f8").tobytes(),
        np.asarray(angles, dtype="<f8").tobytes(),
        np.asarray(amplitudes, dtype="<f8").tobytes(),
    ]
    for orbital in frame.coefficients:
        parts.append(np.asarray(orbital, dtype="<c16").ravel(order="F").tobytes())
    return b"".join(parts)


def _read_f8(payload: bytes, count: int, offset: int) -> tuple[np.ndarray, int]:
    values = np.frombuffer(payload, dtype="<f8", count=count, offset=offset).astype(np.float64)
    return values, offset + 8 * count


def decode_checkpoint(payload: bytes) -> tuple[OrbitalSet | PairingState, float, float, str]:
    """Parse RSTR bytes into (state, mass, coupling, config_hash); raises ValueError on bad magic, version or length."""
    if len(payload) < _HEADER.size:
        raise ValueError("checkpoint truncated before header end")
    magic, version, n, box_length, count, mass, coupling = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version not in SUPPORTED_VERSIONS:
        raise ValueError(f"unsupported checkpoint version {version}")
    grid = SpectralGrid(n, box_length)
    orbital_bytes = count * grid.size * 16
    offset = _HEADER.size
    config_hash = ""
    if version == 1:
        remaining = len(payload) - offset - 8 * count - orbital_bytes
        if remaining < 0 or remaining % 8:
            raise ValueError("checkpoint length does not match its header")
        pair_count = remaining // 8
    else:
        if len(payload) < offset + _EXTENSION.size:
            raise ValueError("checkpoint truncated before header end")
        pair_count, raw_hash = _EXTENSION.unpack_from(payload, offset)
        config_hash = raw_hash.rstrip(b"\0").decode("ascii")
        offset += _EXTENSION.size
        if len(payload) != offset + 8 * (count + 2 * pair_count) + orbital_bytes:
            raise ValueError("checkpoint length does not match its header")

    occupations, offset = _read_f8(payload, count, offset)
    angles, offset = _read_f8(payload, pair_count, offset)
    amplitudes = None
    if version > 1:
        amplitudes, offset = _read_f8(payload, pair_count, offset)
    flat = np.frombuffer(payload, dtype="<c16", count=count * grid.size, offset=offset)
    coefficients = np.stack([
        flat[j * grid.size:(j + 1) * grid.size].reshape(grid.shape, order="F") for j in range(count)
    ]) if count else np.zeros((0,) + grid.shape, dtype=np.complex128)
    if pair_count:
        frame = OrbitalSet(grid, coefficients, np.ones(count))
        return PairingState(frame, angles, amplitudes), mass, coupling, config_hash
    return OrbitalSet(grid, coefficients, occupations), mass, coupling, config_hash


def save_checkpoint(
    state: OrbitalSet | PairingState,
    mass: float,
    coupling: float,
    output_path: Optional[str] = None,
    name: str = "state",
    config_hash: str = "",
) -> Optional[str]:
    """
    Write a checkpoint file.

    Returns:
        Path to saved file, or None on error
    """
    try:
        if output_path is None:
            clean_name = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)[:40] or "state"
            output_path = str(config.OUTPUT_DIR / f"{clean_name}.rstr")
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(state, mass, coupling, config_hash))
        logger.info(f"Checkpoint saved: {path}")
        return str(path)
    except Exception as e:
        logger.error(f"Failed to save checkpoint: {e}")
        return None


def load_checkpoint(filepath: str) -> Optional[Checkpoint]:
    """Load a checkpoint; unknown versions and malformed files give None."""
    try:
        path = Path(filepath)
        if not path.exists():
            logger.error(f"Checkpoint not found: {filepath}")
            return None
        state, mass, coupling, config_hash = decode_checkpoint(path.read_bytes())
        return Checkpoint(state=state, mass=mass, coupling=coupling, filepath=str(path), config_hash=config_hash)
    except Exception as e:
        logger.error(f"Failed to load checkpoint {filepath}: {e}")
        return None


def list_checkpoints(directory: Optional[str] = None) -> list[dict]:
    """
    List checkpoints in a directory, sorted by name.

    Returns:
        List of dicts with 'filename', 'filepath', 'grid', 'orbitals', 'coupling', 'config_hash'
    """
    folder = Path(directory) if directory else config.OUTPUT_DIR
    found = []
    try:
        for f in sorted(folder.glob("*.rstr")):
            try:
                with f.open("rb") as handle:
                    magic, version, n, box_length, count, mass, coupling = _HEADER.unpack(handle.read(_HEADER.size))
                    if magic != MAGIC:
                        continue
                    config_hash = ""
                    if version > 1:
                        _, raw_hash = _EXTENSION.unpack(handle.read(_EXTENSION.size))
                        config_hash = raw_hash.rstrip(b"\0").decode("ascii")
                found.append({
                    "filename": f.name,
                    "filepath": str(f),
                    "grid": n,
                    "orbitals": count,
                    "coupling": coupling,
                    "config_hash": config_hash,
                })
            except Exception:
                continue
    except Exception as e:
        logger.error(f"Failed to list checkpoints: {e}")
    return found
