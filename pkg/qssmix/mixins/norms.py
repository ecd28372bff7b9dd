# qssmix/mixins/norms.py
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ..numerics import derivative, holder_seminorm

if TYPE_CHECKING:
    from ..field import GridField


class NormsMixin:
    values: np.ndarray

    @property
    def resolution(self) -> int: ...  # 型別提示
    @property
    def spacing(self) -> float: ...  # 型別提示
    @property
    def is_vector(self) -> bool: ...  # 型別提示
    def to_physical(self) -> "GridField": ...  # 型別提示

    def _physical(self) -> np.ndarray:
        return self.to_physical().values

    def _magnitude(self, data: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(data) ** 2, axis=0)) if self.is_vector else np.abs(data)

    def mean(self):
        return self._physical().mean(axis=(-2, -1))

    def l2_norm(self) -> float:
        data = self._physical()
        return float(np.sqrt(np.mean(np.abs(data) ** 2) * (2 if self.is_vector else 1)))

    def sup_norm(self) -> float:
        return float(np.max(self._magnitude(self._physical())))

    def fd_jacobian(self) -> np.ndarray:
        """Sixth-order periodic differences; shape (2, n, n) for scalars, (2, 2, n, n) for vectors."""
        data = self._physical()
        h = self.spacing
        return np.stack([derivative(data, h, 1, periodic=True, axis=data.ndim - 2),
                         derivative(data, h, 1, periodic=True, axis=data.ndim - 1)], axis=-3)

    def gradient_sup(self) -> float:
        jac = self.fd_jacobian()
        flat = jac.reshape(-1, *jac.shape[-2:])
        return float(np.max(np.sqrt(np.sum(np.abs(flat) ** 2, axis=0))))

    def c1_norm(self) -> float:
        return max(self.sup_norm(), self.gradient_sup())

    def holder_seminorm(self, alpha: float) -> float:
        return holder_seminorm(self._physical(), self.spacing, alpha,
                               component_axis=0 if self.is_vector else None)

    def holder_norm(self, alpha: float) -> float:
        return self.sup_norm() + self.holder_seminorm(alpha)

    def support_mask(self, threshold: float = 0.0) -> np.ndarray:
        return self._magnitude(self._physical()) > threshold
