"""Tests for state_storage.py: checkpoint files in temporary directories."""

import struct
from pathlib import Path

import numpy as np
import pytest

from quantum_states import OrbitalSet, PairingState
from state_storage import (
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    list_checkpoints,
    load_checkpoint,
    save_checkpoint,
)


@pytest.fixture
def saved_state_path(tmp_output_dir, two_orbitals):
    """Save a rank-2 state and return the file path."""
    return save_checkpoint(two_orbitals, 1.0, 0.5, name="kappa two")


class TestSaveCheckpoint:
    """Tests for save_checkpoint()."""

    def test_creates_file_in_output_dir(self, tmp_output_dir, saved_state_path):
        assert saved_state_path is not None
        assert Path(saved_state_path).parent == tmp_output_dir
        assert saved_state_path.endswith(".rstr")

    def test_sanitizes_name(self, tmp_output_dir, saved_state_path):
        assert Path(saved_state_path).name == "kappa_two.rstr"

    def test_header_layout(self, tmp_output_dir, saved_state_path):
        payload = Path(saved_state_path).read_bytes()
        magic, version, n, box, count, mass, coupling = struct.unpack_from("<4sIIdIdd", payload)
        assert magic == MAGIC
        assert version == 2
        assert (n, count, mass, coupling) == (16, 2, 1.0, 0.5)
        assert box == 10.0

    def test_custom_output_path(self, tmp_output_dir, two_orbitals):
        target = str(tmp_output_dir / "nested" / "custom.rstr")
        assert save_checkpoint(two_orbitals, 0.0, 1.0, output_path=target) == target

    def test_returns_none_on_unwritable_path(self, tmp_output_dir, two_orbitals):
        assert save_checkpoint(two_orbitals, 0.0, 1.0, output_path=str(tmp_output_dir)) is None


class TestLoadCheckpoint:
    """Tests for load_checkpoint()."""

    def test_restores_orbital_set(self, tmp_output_dir, saved_state_path, two_orbitals):
        checkpoint = load_checkpoint(saved_state_path)
        assert isinstance(checkpoint, Checkpoint)
        assert isinstance(checkpoint.state, OrbitalSet)
        np.testing.assert_array_equal(checkpoint.state.coefficients, two_orbitals.coefficients)
        np.testing.assert_array_equal(checkpoint.state.occupations, two_orbitals.occupations)
        assert (checkpoint.mass, checkpoint.coupling) == (1.0, 0.5)

    def test_restores_pairing_state(self, tmp_output_dir, one_pair):
        path = save_checkpoint(one_pair, 2.0, 0.25, name="pair")
        state = load_checkpoint(path).state
        assert isinstance(state, PairingState)
        np.testing.assert_array_equal(state.pair_angles, one_pair.pair_angles)
        np.testing.assert_array_equal(state.base.coefficients, one_pair.base.coefficients)
        np.testing.assert_array_equal(state.amplitudes, one_pair.amplitudes)

    def test_pairing_off_amplitudes_survive(self, tmp_output_dir, one_pair):
        off = PairingState.from_frame(one_pair.base, one_pair.pair_angles, pairing=False)
        state = load_checkpoint(save_checkpoint(off, 0.0, 1.0, name="off")).state
        np.testing.assert_array_equal(state.amplitudes, np.zeros(off.pair_count))
        np.testing.assert_array_equal(state.pair_angles, off.pair_angles)

    def test_config_hash_round_trip(self, tmp_output_dir, two_orbitals):
        digest = "ab" * 32
        checkpoint = load_checkpoint(save_checkpoint(two_orbitals, 0.0, 1.0, name="hashed", config_hash=digest))
        assert checkpoint.config_hash == digest

    def test_reads_version_one_files(self, tmp_output_dir, one_pair):
        grid = one_pair.grid
        header = struct.pack("<4sIIdIdd", MAGIC, 1, grid.n_points_per_axis, grid.box_length, one_pair.base.count, 0.0, 1.0)
        body = [np.asarray(one_pair.occupations, "<f8").tobytes(), np.asarray(one_pair.pair_angles, "<f8").tobytes()]
        body += [np.asarray(c, "<c16").ravel(order="F").tobytes() for c in one_pair.base.coefficients]
        path = tmp_output_dir / "legacy.rstr"
        path.write_bytes(header + b"".join(body))
        checkpoint = load_checkpoint(str(path))
        assert checkpoint.config_hash == ""
        np.testing.assert_allclose(checkpoint.state.amplitudes, np.sin(one_pair.pair_angles) * np.cos(one_pair.pair_angles))
        np.testing.assert_array_equal(checkpoint.state.base.coefficients, one_pair.base.coefficients)

    def test_returns_none_for_missing_file(self, tmp_output_dir):
        assert load_checkpoint("/nonexistent/state.rstr") is None

    def test_returns_none_for_bad_magic(self, tmp_output_dir, saved_state_path):
        path = Path(saved_state_path)
        path.write_bytes(b"XXXX" + path.read_bytes()[4:])
        assert load_checkpoint(str(path)) is None

    def test_returns_none_for_unknown_version(self, tmp_output_dir, saved_state_path):
        path = Path(saved_state_path)
        payload = bytearray(path.read_bytes())
        struct.pack_into("<I", payload, 4, 99)
        path.write_bytes(bytes(payload))
        assert load_checkpoint(str(path)) is None

    def test_returns_none_for_truncated_file(self, tmp_output_dir, saved_state_path):
        path = Path(saved_state_path)
        path.write_bytes(path.read_bytes()[:-5])
        assert load_checkpoint(str(path)) is None


class TestCodec:
    """Tests for encode_checkpoint() / decode_checkpoint()."""

    def test_decode_rejects_short_payload(self):
        with pytest.raises(ValueError):
            decode_checkpoint(b"RSTR")

    def test_encoding_is_deterministic(self, two_orbitals):
        assert encode_checkpoint(two_orbitals, 0.0, 1.0) == encode_checkpoint(two_orbitals, 0.0, 1.0)

    def test_rejects_oversized_hash(self, two_orbitals):
        with pytest.raises(ValueError):
            encode_checkpoint(two_orbitals, 0.0, 1.0, config_hash="x" * 65)

    def test_decode_returns_hash(self, two_orbitals):
        *_, digest = decode_checkpoint(encode_checkpoint(two_orbitals, 0.0, 1.0, config_hash="cafe"))
        assert digest == "cafe"


class TestListCheckpoints:
    """Tests for list_checkpoints()."""

    def test_lists_saved_files(self, tmp_output_dir, saved_state_path):
        found = list_checkpoints()
        assert len(found) == 1
        assert found[0]["filename"] == "kappa_two.rstr"
        assert found[0]["orbitals"] == 2
        assert found[0]["coupling"] == 0.5
        assert found[0]["config_hash"] == ""

    def test_skips_foreign_files(self, tmp_output_dir, saved_state_path):
        (tmp_output_dir / "other.rstr").write_bytes(b"not a checkpoint at all, just bytes" * 2)
        assert [f["filename"] for f in list_checkpoints()] == ["kappa_two.rstr"]

    def test_empty_directory(self, tmp_output_dir):
        assert list_checkpoints() == []
