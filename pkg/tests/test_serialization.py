"""Weight snapshot round trips and format checks."""

import numpy as np
import pytest

from ancsim.errors import DataError
from ancsim.serialization import (
    FilterSnapshot,
    GridSnapshot,
    load_weights_binary,
    load_weights_json,
    save_weights_binary,
    save_weights_json,
)


def random_single(seed=0):
    rng = np.random.default_rng(seed)
    return FilterSnapshot(rng.standard_normal(17), rng.standard_normal(9))


def random_grid(seed=1):
    rng = np.random.default_rng(seed)
    return GridSnapshot(rng.standard_normal((2, 3, 5)), rng.standard_normal((3, 2, 4)))


class TestBinary:
    def test_single_round_trip(self, tmp_path):
        snap = random_single()
        path = tmp_path / "w.anw"
        save_weights_binary(path, snap)
        back = load_weights_binary(path)
        assert np.array_equal(back.weights, snap.weights)
        assert np.array_equal(back.sec_path_estimate, snap.sec_path_estimate)

    def test_grid_round_trip(self, tmp_path):
        snap = random_grid()
        path = tmp_path / "g.anw"
        save_weights_binary(path, snap)
        back = load_weights_binary(path)
        assert np.array_equal(back.weights, snap.weights)
        assert np.array_equal(back.sec_path_estimates, snap.sec_path_estimates)

    def test_empty_estimate_allowed(self, tmp_path):
        snap = FilterSnapshot(np.arange(4, dtype=float), np.zeros(0))
        path = tmp_path / "e.anw"
        save_weights_binary(path, snap)
        assert load_weights_binary(path).sec_path_estimate.size == 0

    def test_layout_is_little_endian_f64(self, tmp_path):
        snap = FilterSnapshot(np.array([1.5]), np.array([-2.0]))
        path = tmp_path / "l.anw"
        save_weights_binary(path, snap)
        blob = path.read_bytes()
        assert blob[:4] == b"ANCW"
        assert blob[4:6] == (1).to_bytes(2, "little")  # version
        assert blob[6] == 1                            # single kind
        assert np.frombuffer(blob, "<f8", count=1, offset=15)[0] == 1.5

    def test_corrupt_rejected(self, tmp_path):
        path = tmp_path / "c.anw"
        path.write_bytes(b"ANCWxxxx")
        with pytest.raises(DataError):
            load_weights_binary(path)
        path.write_bytes(b"NOPE")
        with pytest.raises(DataError):
            load_weights_binary(path)

    def test_truncated_payload_rejected(self, tmp_path):
        snap = random_single()
        path = tmp_path / "t.anw"
        save_weights_binary(path, snap)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataError):
            load_weights_binary(path)


class TestJson:
    def test_single_round_trip_exact(self, tmp_path):
        snap = random_single(5)
        path = tmp_path / "w.json"
        save_weights_json(path, snap)
        back = load_weights_json(path)
        assert np.array_equal(back.weights, snap.weights)
        assert np.array_equal(back.sec_path_estimate, snap.sec_path_estimate)

    def test_grid_round_trip_exact(self, tmp_path):
        snap = random_grid(6)
        path = tmp_path / "g.json"
        save_weights_json(path, snap)
        back = load_weights_json(path)
        assert np.array_equal(back.weights, snap.weights)
        assert np.array_equal(back.sec_path_estimates, snap.sec_path_estimates)

    def test_binary_and_json_agree(self, tmp_path):
        snap = random_single(7)
        save_weights_binary(tmp_path / "a.anw", snap)
        save_weights_json(tmp_path / "a.json", snap)
        a = load_weights_binary(tmp_path / "a.anw")
        b = load_weights_json(tmp_path / "a.json")
        assert np.array_equal(a.weights, b.weights)

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(DataError):
            load_weights_json(path)
