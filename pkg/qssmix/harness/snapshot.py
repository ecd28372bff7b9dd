# qssmix/harness/snapshot.py
"""
Binary snapshots: a packed little-endian header followed by row-major float64 data.

    magic "QSSF" | version u16 | kind u8 | resolution u32 | time f64 | level i32 | data <f8 ...
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from ..curve import Curve, NormalPerturbation
from ..field import GridField

logger = logging.getLogger(__name__)

MAGIC = b"QSSF"
VERSION = 1
HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u2"),
    ("kind", "u1"),
    ("resolution", "<u4"),
    ("time", "<f8"),
    ("level", "<i4"),
])
DATA = np.dtype("<f8")


class SnapshotKind(IntEnum):
    SCALAR = 0
    VECTOR = 1
    CURVE = 2
    PERTURBATION = 3


@dataclass
class Snapshot:
    kind: SnapshotKind
    resolution: int
    time: float
    level: int
    data: np.ndarray

    # ---------- constructors ----------
    @classmethod
    def from_field(cls, f: GridField) -> "Snapshot":
        phys = f.to_physical()
        kind = SnapshotKind.VECTOR if phys.is_vector else SnapshotKind.SCALAR
        return cls(kind, phys.resolution, phys.time, phys.level, np.ascontiguousarray(phys.values, dtype=DATA))

    @classmethod
    def from_curve(cls, curve: Curve, level: int = -1) -> "Snapshot":
        """Samples, then L, l, the closed flag and the constant-speed flag."""
        data = np.concatenate([curve.samples.ravel(),
                               [curve.length, curve.param_speed, float(curve.closed), float(curve.constant_speed)]])
        return cls(SnapshotKind.CURVE, curve.n, curve.time_label or 0.0, level, data.astype(DATA))

    @classmethod
    def from_perturbation(cls, h: NormalPerturbation, level: int = -1) -> "Snapshot":
        time = np.nan if h.time_label is None else h.time_label
        return cls(SnapshotKind.PERTURBATION, h.n, time, level,
                   np.concatenate([h.values, [h.length, float(h.closed)]]).astype(DATA))

    # ---------- conversions ----------
    def to_field(self) -> GridField:
        n = self.resolution
        if self.kind is SnapshotKind.SCALAR:
            return GridField.scalar(self.data.reshape(n, n), time=self.time, level=self.level)
        if self.kind is SnapshotKind.VECTOR:
            return GridField.vector(self.data.reshape(2, n, n), time=self.time, level=self.level)
        raise TypeError(f"a {self.kind.name.lower()} snapshot is not a grid field")

    def to_curve(self) -> Curve:
        if self.kind is not SnapshotKind.CURVE:
            raise TypeError(f"a {self.kind.name.lower()} snapshot is not a curve")
        n = self.resolution
        samples = self.data[:2 * n].reshape(n, 2)
        length, speed, closed, constant = self.data[2 * n:]
        return Curve(samples, float(length), float(speed), time_label=self.time, closed=bool(closed),
                     constant_speed=bool(constant))

    def to_perturbation(self) -> NormalPerturbation:
        if self.kind is not SnapshotKind.PERTURBATION:
            raise TypeError(f"a {self.kind.name.lower()} snapshot is not a perturbation")
        n = self.resolution
        time = None if np.isnan(self.time) else self.time
        return NormalPerturbation(self.data[:n], float(self.data[n]), bool(self.data[n + 1]), time)

    # ---------- bytes ----------
    def expected_size(self) -> int:
        n = self.resolution
        return {
            SnapshotKind.SCALAR: n * n,
            SnapshotKind.VECTOR: 2 * n * n,
            SnapshotKind.CURVE: 2 * n + 4,
            SnapshotKind.PERTURBATION: n + 2,
        }[self.kind]

    def to_bytes(self) -> bytes:
        if self.data.size != self.expected_size():
            raise ValueError(f"{self.kind.name.lower()} snapshot of resolution {self.resolution} "
                             f"needs {self.expected_size()} values, has {self.data.size}")
        header = np.array([(MAGIC, VERSION, int(self.kind), self.resolution, self.time, self.level)], dtype=HEADER)
        return header.tobytes() + np.ascontiguousarray(self.data, dtype=DATA).tobytes()

    @classmethod
    def from_bytes(cls, buffer: bytes) -> "Snapshot":
        if len(buffer) < HEADER.itemsize:
            raise ValueError(f"snapshot too short: {len(buffer)} bytes")
        header = np.frombuffer(buffer, dtype=HEADER, count=1)[0]
        if header["magic"] != MAGIC:
            raise ValueError(f"bad magic {bytes(header['magic'])!r}")
        if header["version"] != VERSION:
            raise ValueError(f"unsupported snapshot version {int(header['version'])}")
        data = np.frombuffer(buffer, dtype=DATA, offset=HEADER.itemsize).copy()
        snap = cls(SnapshotKind(int(header["kind"])), int(header["resolution"]), float(header["time"]),
                   int(header["level"]), data)
        if data.size != snap.expected_size():
            raise ValueError(f"snapshot payload has {data.size} values, expected {snap.expected_size()}")
        return snap


def write_snapshot(path: str | Path, obj: GridField | Curve | NormalPerturbation | Snapshot) -> Path:
    if isinstance(obj, Snapshot):
        snap = obj
    elif isinstance(obj, GridField):
        snap = Snapshot.from_field(obj)
    elif isinstance(obj, Curve):
        snap = Snapshot.from_curve(obj)
    elif isinstance(obj, NormalPerturbation):
        snap = Snapshot.from_perturbation(obj)
    else:
        raise TypeError(f"cannot snapshot {type(obj).__name__}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(snap.to_bytes())
    logger.debug("wrote %s snapshot %s", snap.kind.name.lower(), path)
    return path


def read_snapshot(path: str | Path) -> Snapshot:
    return Snapshot.from_bytes(Path(path).read_bytes())
