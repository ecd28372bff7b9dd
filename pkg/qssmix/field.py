# qssmix/field.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BaseField, FieldKind, Representation, cell_centres
from .mixins import spectral, norms


@dataclass(eq=False)
class GridField(BaseField,
                spectral.SpectralMixin,
                norms.NormsMixin):
    """Scalar or 2-vector field on the periodic unit square, physical or spectral."""

    values: np.ndarray
    kind: FieldKind = FieldKind.SCALAR
    representation: Representation = Representation.PHYSICAL
    time: float = 0.0
    level: int = -1
    real: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if not isinstance(self.kind, FieldKind):
            raise TypeError(f"kind must be a FieldKind, got {self.kind!r}")
        self._check_shape()

    # ---------- constructors ----------
    @classmethod
    def scalar(cls, values, **kwargs) -> "GridField":
        return cls(np.asarray(values), kind=FieldKind.SCALAR, **kwargs)

    @classmethod
    def vector(cls, values, **kwargs) -> "GridField":
        return cls(np.asarray(values), kind=FieldKind.VECTOR, **kwargs)

    @classmethod
    def zeros(cls, resolution: int, kind: FieldKind = FieldKind.SCALAR, **kwargs) -> "GridField":
        shape = (resolution, resolution) if kind is FieldKind.SCALAR else (2, resolution, resolution)
        return cls(np.zeros(shape), kind=kind, **kwargs)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray, np.ndarray], np.ndarray], resolution: int,
                      kind: FieldKind = FieldKind.SCALAR, **kwargs) -> "GridField":
        x1, x2 = cell_centres(resolution)
        return cls(np.asarray(func(x1, x2)), kind=kind, **kwargs)

    # ---------- arithmetic on physical values ----------
    def _check_compatible(self, other: "GridField") -> None:
        if other.kind is not self.kind or other.resolution != self.resolution:
            raise ValueError(f"incompatible fields: {self.kind.value}@{self.resolution} "
                             f"vs {other.kind.value}@{other.resolution}")

    def __add__(self, other: "GridField") -> "GridField":
        self._check_compatible(other)
        return self._new(self.to_physical().values + other.to_physical().values,
                         representation=Representation.PHYSICAL)

    def __sub__(self, other: "GridField") -> "GridField":
        self._check_compatible(other)
        return self._new(self.to_physical().values - other.to_physical().values,
                         representation=Representation.PHYSICAL)

    def scale(self, factor: float) -> "GridField":
        return self._new(self.values * factor)

    def __repr__(self) -> str:
        return (f"GridField({self.kind.value}, {self.representation.value}, "
                f"n={self.resolution}, t={self.time:g}, level={self.level})")
