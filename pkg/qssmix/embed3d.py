# qssmix/embed3d.py
"""
Lift of the 2D pair (v, theta) to an x3-independent 3D flow u = (v1, v2, theta)
with forcing f = (g1, g2, 0) and pressure p = 0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import fft
from scipy.integrate import simpson

from .core import FieldKind
from .field import GridField

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 4


@dataclass(frozen=True)
class Lifted3DField:
    """
    u(x1, x2, x3) = (v1, v2, theta)(x1, x2). The x3 axis is a broadcast view
    of ``depth`` planes, never a copy.
    """

    velocity: GridField
    theta: GridField
    forcing: GridField | None = None
    time: float = 0.0
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if not self.velocity.is_vector or self.theta.is_vector:
            raise TypeError("lift() takes a vector velocity and a scalar theta")
        if self.velocity.resolution != self.theta.resolution:
            raise ValueError(f"grid mismatch: velocity {self.velocity.resolution}, "
                             f"theta {self.theta.resolution}")
        if self.forcing is not None and self.forcing.resolution != self.theta.resolution:
            raise ValueError("forcing and fields must share a grid")

    @property
    def resolution(self) -> int:
        return self.theta.resolution

    def _broadcast(self, plane: np.ndarray) -> np.ndarray:
        return np.broadcast_to(plane[..., None], plane.shape + (self.depth,))

    def components(self) -> np.ndarray:
        """(3, n, n, depth) view of u."""
        v = self.velocity.to_physical().values
        planes = np.concatenate([v, self.theta.to_physical().values[None]])
        return self._broadcast(planes)

    def forcing_components(self) -> np.ndarray:
        n = self.resolution
        g = np.zeros((2, n, n)) if self.forcing is None else self.forcing.to_physical().values
        return self._broadcast(np.concatenate([g, np.zeros((1, n, n))]))

    def _wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = 2 * np.pi * fft.fftfreq(self.resolution, d=1.0 / self.resolution)
        k3 = 2 * np.pi * fft.fftfreq(self.depth, d=1.0 / self.depth)
        return np.meshgrid(k, k, k3, indexing="ij")

    def gradient_energy(self) -> float:
        """|grad u|^2_{L^2(T^3)} from the 3D transform of every component."""
        k1, k2, k3 = self._wavenumbers()
        k_sq = k1 ** 2 + k2 ** 2 + k3 ** 2
        size = self.resolution ** 2 * self.depth
        total = 0.0
        for comp in self.components():
            hat = fft.fftn(comp) / size
            total += float(np.sum(k_sq * np.abs(hat) ** 2))
        return total

    def divergence(self) -> np.ndarray:
        k1, k2, k3 = self._wavenumbers()
        u = self.components()
        hat = [fft.fftn(c) for c in u]
        return fft.ifftn(1j * (k1 * hat[0] + k2 * hat[1] + k3 * hat[2])).real

    def forcing_divergence_sup(self) -> float:
        """|div f|_inf; f carries no pressure correction, so this is a diagnostic only."""
        if self.forcing is None:
            return 0.0
        return float(np.max(np.abs(self.forcing.divergence().values)))


def lift(velocity: GridField, theta: GridField, forcing: GridField | None = None, *,
         depth: int = DEFAULT_DEPTH) -> Lifted3DField:
    return Lifted3DField(velocity, theta, forcing, time=theta.time, depth=depth)


@dataclass
class ResidualReport:
    time: float
    horizontal: float
    vertical: float
    forcing_vertical: float
    forcing_divergence: float

    @property
    def worst(self) -> float:
        return max(self.horizontal, self.vertical)

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def ns_residual(lifted_at: Callable[[float], Lifted3DField], mu: float, t: float, *,
                time_step: float = 1e-5) -> ResidualReport:
    """
    Sup norms of d_t u + u . grad u - mu lap u - f with p = 0, split into the
    horizontal pair and the vertical component. Time derivatives by centred differences.
    """
    u = lifted_at(t)
    ahead, behind = lifted_at(t + time_step), lifted_at(t - time_step)
    v, theta = u.velocity, u.theta
    dv = (ahead.velocity.to_physical().values - behind.velocity.to_physical().values) / (2 * time_step)
    dtheta = (ahead.theta.to_physical().values - behind.theta.to_physical().values) / (2 * time_step)
    g = np.zeros_like(dv) if u.forcing is None else u.forcing.to_physical().values
    horizontal = dv + v.advect(v).values - mu * v.laplacian().values - g
    vertical = dtheta + v.advect(theta).values - mu * theta.laplacian().values
    report = ResidualReport(
        time=t,
        horizontal=float(np.max(np.hypot(horizontal[0], horizontal[1]))),
        vertical=float(np.max(np.abs(vertical))),
        forcing_vertical=float(np.max(np.abs(u.forcing_components()[2]))),
        forcing_divergence=u.forcing_divergence_sup(),
    )
    logger.debug("residual at t=%.6g: horizontal %.3e, vertical %.3e", t, report.horizontal, report.vertical)
    return report


@dataclass
class DissipationAggregate:
    mu: float
    total: float
    horizontal: float
    vertical: float

    def bounds(self, measured: float, rtol: float = 1e-10) -> bool:
        """mu int |grad u|^2 >= mu int |grad theta|^2 >= measured D_m."""
        return self.total >= self.vertical * (1 - rtol) and self.vertical >= measured * (1 - rtol)

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def dissipation_aggregate(fields: Sequence[Lifted3DField], times: Sequence[float], mu: float) -> DissipationAggregate:
    times = np.asarray(times, dtype=float)
    total = np.array([f.gradient_energy() for f in fields])
    vertical = np.array([f.theta.gradient_energy() for f in fields])
    horizontal = np.array([f.velocity.gradient_energy() for f in fields])
    return DissipationAggregate(
        mu=mu,
        total=float(mu * simpson(total, x=times)),
        horizontal=float(mu * simpson(horizontal, x=times)),
        vertical=float(mu * simpson(vertical, x=times)),
    )


def zero_forcing(resolution: int, t: float = 0.0) -> GridField:
    return GridField.zeros(resolution, FieldKind.VECTOR, time=t)
