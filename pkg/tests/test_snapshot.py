# tests/test_snapshot.py
import numpy as np
import pytest

from qssmix.curve import NormalPerturbation
from qssmix.field import GridField
from qssmix.harness.snapshot import HEADER, Snapshot, SnapshotKind, read_snapshot, write_snapshot


def test_header_layout():
    assert HEADER.itemsize == 23


def test_scalar_field_round_trip(tmp_path, rng):
    f = GridField.scalar(rng.standard_normal((8, 8)), time=0.25, level=2)
    path = write_snapshot(tmp_path / "theta.qssf", f)
    assert path.stat().st_size == 23 + 8 * 64
    snap = read_snapshot(path)
    assert snap.kind is SnapshotKind.SCALAR
    back = snap.to_field()
    assert np.array_equal(back.values, f.values)
    assert back.time == 0.25 and back.level == 2 and not back.is_vector


def test_vector_field_round_trip(tmp_path, rng):
    v = GridField.vector(rng.standard_normal((2, 6, 6)), time=0.5)
    back = read_snapshot(write_snapshot(tmp_path / "nested" / "v.qssf", v)).to_field()
    assert back.is_vector
    assert np.array_equal(back.values, v.values)


def test_spectral_fields_are_stored_physically(tmp_path, rng):
    f = GridField.scalar(rng.standard_normal((8, 8)))
    back = read_snapshot(write_snapshot(tmp_path / "s.qssf", f.to_spectral())).to_field()
    assert np.allclose(back.values, f.values, atol=1e-14)


def test_curve_round_trip(tmp_path, circle):
    back = read_snapshot(write_snapshot(tmp_path / "c.qssf", circle)).to_curve()
    assert np.array_equal(back.samples, circle.samples)
    assert back.length == circle.length
    assert back.param_speed == circle.param_speed
    assert back.closed and back.constant_speed


def test_perturbation_without_time_round_trip(tmp_path, rng):
    h = NormalPerturbation(rng.standard_normal(64), 1.5, True, None)
    snap = read_snapshot(write_snapshot(tmp_path / "h.qssf", h))
    assert np.isnan(snap.time)
    back = snap.to_perturbation()
    assert back.time_label is None
    assert np.array_equal(back.values, h.values)
    assert back.length == 1.5 and back.closed


def test_perturbation_with_time_round_trip(tmp_path, rng):
    h = NormalPerturbation(rng.standard_normal(64), 0.6, False, 0.5)
    back = read_snapshot(write_snapshot(tmp_path / "h.qssf", h)).to_perturbation()
    assert back.time_label == 0.5 and not back.closed


def test_corrupt_buffers_are_rejected(rng):
    data = Snapshot.from_field(GridField.scalar(rng.standard_normal((4, 4)))).to_bytes()
    with pytest.raises(ValueError):
        Snapshot.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        Snapshot.from_bytes(data[:-8])
    with pytest.raises(ValueError):
        Snapshot.from_bytes(data[:10])


def test_payload_size_is_checked_on_write():
    snap = Snapshot(SnapshotKind.SCALAR, 4, 0.0, -1, np.zeros(15))
    with pytest.raises(ValueError):
        snap.to_bytes()


def test_kind_mismatch(tmp_path, rng):
    snap = Snapshot.from_field(GridField.scalar(rng.standard_normal((4, 4))))
    with pytest.raises(TypeError):
        snap.to_curve()
    with pytest.raises(TypeError):
        snap.to_perturbation()
    with pytest.raises(TypeError):
        write_snapshot(tmp_path / "x.qssf", [1.0, 2.0])
