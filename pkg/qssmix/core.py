# qssmix/core.py
from __future__ import annotations

from enum import Enum

import numpy as np


class QssmixError(Exception):
    """Root of every error raised by the package."""


class GeometryError(QssmixError, ValueError):
    """Degenerate curve, mismatched grids, or a tube that crosses the focal radius."""

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class InversionError(QssmixError, RuntimeError):
    """Newton inversion stalled at a point that lies inside the tube."""


class ConvergenceError(QssmixError, RuntimeError):
    def __init__(self, message: str, iterations: int, increment: float):
        super().__init__(message)
        self.iterations = iterations
        self.increment = increment


class ResolutionError(QssmixError, ValueError):
    """Grid resolution not divisible by the tile count of a level."""


class SolverAbort(QssmixError, RuntimeError):
    """A trajectory cannot be (or could not be) advanced."""


class CFLViolation(SolverAbort):
    pass


class ConfigError(QssmixError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class FieldKind(Enum):
    SCALAR = "scalar"
    VECTOR = "vector"


class Representation(Enum):
    PHYSICAL = "physical"
    SPECTRAL = "spectral"


def cell_centres(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centred coordinates of the uniform grid on [0,1)^2, ``ij`` indexing."""
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    c = (np.arange(resolution) + 0.5) / resolution
    return np.meshgrid(c, c, indexing="ij")


class BaseField:
    """
    Container for values sampled at the cell centres of a periodic square grid.

    Scalars have shape (n, n); vectors have shape (2, n, n).
    """

    values: np.ndarray
    kind: FieldKind
    representation: Representation
    time: float
    level: int
    real: bool

    @property
    def resolution(self) -> int:
        return self.values.shape[-1]

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    @property
    def is_vector(self) -> bool:
        return self.kind is FieldKind.VECTOR

    def _check_shape(self) -> None:
        v = self.values
        if self.kind is FieldKind.SCALAR and v.ndim != 2:
            raise ValueError(f"scalar field needs a 2-d array, got shape {v.shape}")
        if self.kind is FieldKind.VECTOR and (v.ndim != 3 or v.shape[0] != 2):
            raise ValueError(f"vector field needs shape (2, n, n), got {v.shape}")
        if v.shape[-1] != v.shape[-2]:
            raise ValueError(f"grid must be square, got {v.shape[-2]}x{v.shape[-1]}")

    def _new(self, values: np.ndarray, **changes) -> "BaseField":
        params = dict(kind=self.kind, representation=self.representation,
                      time=self.time, level=self.level, real=self.real)
        params.update(changes)
        return type(self)(values, **params)
