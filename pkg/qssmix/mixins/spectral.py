# qssmix/mixins/spectral.py
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from scipy import fft

from ..core import FieldKind, Representation

if TYPE_CHECKING:
    from ..field import GridField


def wavenumbers(resolution: int, *, derivative: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Angular wavenumbers 2*pi*m in fft order (``ij`` indexing); Nyquist zeroed for derivatives."""
    m = fft.fftfreq(resolution, d=1.0 / resolution)
    if derivative and resolution % 2 == 0:
        m = m.copy()
        m[resolution // 2] = 0.0
    k = 2.0 * np.pi * m
    return np.meshgrid(k, k, indexing="ij")


def integer_radius(resolution: int) -> np.ndarray:
    """|m| for the integer frequency vector of every fft slot."""
    m = fft.fftfreq(resolution, d=1.0 / resolution)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    return np.hypot(m1, m2)


def dealias_mask(resolution: int) -> np.ndarray:
    """Two-thirds rule: keep |m_j| < n/3 in both directions."""
    m = np.abs(fft.fftfreq(resolution, d=1.0 / resolution))
    keep = m < resolution / 3.0
    return keep[:, None] & keep[None, :]


class SpectralMixin:
    values: np.ndarray
    kind: FieldKind
    representation: Representation
    real: bool

    @property
    def resolution(self) -> int: ...  # 型別提示
    @property
    def is_vector(self) -> bool: ...  # 型別提示
    def _new(self, values: np.ndarray, **changes) -> "GridField": ...  # 型別提示

    # ---------- representation ----------
    def to_spectral(self) -> "GridField":
        if self.representation is Representation.SPECTRAL:
            return self
        n = self.resolution
        hat = fft.fft2(self.values, axes=(-2, -1)) / n ** 2
        return self._new(hat, representation=Representation.SPECTRAL)

    def to_physical(self) -> "GridField":
        if self.representation is Representation.PHYSICAL:
            return self
        return self._new(self._synthesize(self.values), representation=Representation.PHYSICAL)

    def coefficients(self) -> np.ndarray:
        return self.to_spectral().values

    def _synthesize(self, hat: np.ndarray) -> np.ndarray:
        n = hat.shape[-1]
        data = fft.ifft2(hat * n ** 2, axes=(-2, -1))
        return data.real if self.real else data

    # ---------- differential operators ----------
    def gradient(self) -> "GridField":
        if self.is_vector:
            raise TypeError("gradient() is defined for scalar fields; use jacobian() on vectors")
        k1, k2 = wavenumbers(self.resolution, derivative=True)
        hat = self.coefficients()
        g = np.stack([self._synthesize(1j * k1 * hat), self._synthesize(1j * k2 * hat)])
        return self._new(g, kind=FieldKind.VECTOR, representation=Representation.PHYSICAL)

    def perp_gradient(self) -> "GridField":
        """(-d2, d1) of a scalar stream function."""
        g = self.gradient().values
        return self._new(np.stack([-g[1], g[0]]), kind=FieldKind.VECTOR,
                         representation=Representation.PHYSICAL)

    def divergence(self) -> "GridField":
        if not self.is_vector:
            raise TypeError("divergence() needs a vector field")
        k1, k2 = wavenumbers(self.resolution, derivative=True)
        hat = self.coefficients()
        div = self._synthesize(1j * k1 * hat[0] + 1j * k2 * hat[1])
        return self._new(div, kind=FieldKind.SCALAR, representation=Representation.PHYSICAL)

    def laplacian(self) -> "GridField":
        k1, k2 = wavenumbers(self.resolution)
        hat = self.coefficients()
        return self._new(self._synthesize(-(k1 ** 2 + k2 ** 2) * hat),
                         representation=Representation.PHYSICAL)

    def advect(self, other: "GridField") -> "GridField":
        """Pseudo-spectral convective term self . grad(other); self must be a velocity."""
        if not self.is_vector:
            raise TypeError("advect() is called on the velocity field")
        v = self.to_physical().values
        if other.is_vector:
            out = np.stack([v[0] * g.values[0] + v[1] * g.values[1]
                            for g in (other._component(0).gradient(), other._component(1).gradient())])
            return other._new(out, representation=Representation.PHYSICAL)
        g = other.gradient().values
        return other._new(v[0] * g[0] + v[1] * g[1], representation=Representation.PHYSICAL)

    def _component(self, i: int) -> "GridField":
        phys = self.to_physical()
        return phys._new(phys.values[i], kind=FieldKind.SCALAR)

    # ---------- spectral norms ----------
    def gradient_energy(self) -> float:
        """||grad f||_{L^2}^2 summed over components, by Parseval."""
        k1, k2 = wavenumbers(self.resolution)
        hat = self.coefficients()
        return float(np.sum((k1 ** 2 + k2 ** 2) * np.abs(hat) ** 2))

    def dealias(self) -> "GridField":
        hat = self.coefficients() * dealias_mask(self.resolution)
        return self._new(hat, representation=Representation.SPECTRAL)

    def _band(self, cutoff: float, angular: bool) -> np.ndarray:
        if angular:
            k1, k2 = wavenumbers(self.resolution)
            return np.hypot(k1, k2) <= cutoff
        return integer_radius(self.resolution) <= cutoff

    def low_pass(self, cutoff: float, *, angular: bool = False) -> "GridField":
        """Sharp Fourier truncation to |m| <= cutoff (|k| <= cutoff when ``angular``)."""
        hat = self.coefficients() * self._band(cutoff, angular)
        return self._new(hat, representation=Representation.SPECTRAL)

    def high_pass(self, cutoff: float, *, angular: bool = False) -> "GridField":
        hat = self.coefficients() * ~self._band(cutoff, angular)
        return self._new(hat, representation=Representation.SPECTRAL)

    def h_minus1_norm(self, *, mean_tol: float = 1e-8) -> float:
        """(sum_{k != 0} |k|^-2 |f_k|^2)^{1/2}; rejects fields with a mean."""
        if self.is_vector:
            raise TypeError("the H^-1 norm is computed for scalar fields")
        hat = self.coefficients()
        if abs(hat[0, 0]) > mean_tol:
            raise ValueError(f"H^-1 norm needs a zero-mean field, mean is {abs(hat[0, 0]):.3e}")
        k1, k2 = wavenumbers(self.resolution)
        k_sq = k1 ** 2 + k2 ** 2
        k_sq[0, 0] = 1.0
        weight = 1.0 / k_sq
        weight[0, 0] = 0.0
        return float(np.sqrt(np.sum(weight * np.abs(hat) ** 2)))
