# qssmix/time_smoothing.py
"""
Time reparametrisation eta, the smoothed family (v^m, rho^m) and the forcing g^m.

On [t_n, t_{n+1}) with t_n = 1 - (n + 1)^-2 the level-n fields run at local time
S((t - t_n) / dt_n), where S is a boundary-flat monotone step, so every level
starts and stops at rest.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .core import FieldKind, ResolutionError
from .field import GridField
from .qss_family import DEFAULT_CYCLE, MAX_LEVEL, BlockSource, LevelFields, assemble, tiles_per_side

logger = logging.getLogger(__name__)

MIN_BLOCK_CELLS = 64


def junction(n: int) -> float:
    return 1.0 - (n + 1.0) ** -2


def _bump(u: float) -> float:
    if u <= 0.0 or u >= 1.0:
        return 0.0
    return math.exp(-1.0 / (u * (1.0 - u)))


@dataclass(frozen=True)
class TimeSchedule:
    """Junctions t_n, interval lengths and the viscosity mu_m = m^10 5^(-2m)."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"cutoff level m must be at least 1, got {self.m}")

    @property
    def mu(self) -> float:
        return self.m ** 10 * 5.0 ** (-2 * self.m)

    def junction(self, n: int) -> float:
        return junction(n)

    def interval_length(self, n: int) -> float:
        return junction(n + 1) - junction(n)

    def interval(self, t: float) -> int:
        """n with t_n <= t < t_{n+1}."""
        if not 0.0 <= t < 1.0:
            raise ValueError(f"t must lie in [0, 1), got {t}")
        n = max(int(math.floor((1.0 - t) ** -0.5)) - 1, 0)
        while junction(n) > t:
            n -= 1
        while junction(n + 1) <= t:
            n += 1
        return n

    def local_time(self, t: float) -> tuple[int, float]:
        n = self.interval(t)
        return n, (t - junction(n)) / self.interval_length(n)

    @property
    def freeze_time(self) -> float:
        return junction(self.m + 1)


class Reparametrisation:
    """eta(t) = t_n + dt_n S((t - t_n) / dt_n) on every interval."""

    def __init__(self, schedule: TimeSchedule):
        self.schedule = schedule
        self.norm = integrate.quad(_bump, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]

    @lru_cache(maxsize=4096)
    def step(self, x: float) -> float:
        """S(x) with S(0) = 0, S(1) = 1."""
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        return integrate.quad(_bump, 0.0, x, epsabs=1e-15, epsrel=1e-13)[0] / self.norm

    def step_derivative(self, x: float, order: int = 1) -> float:
        if order == 1:
            return _bump(x) / self.norm
        if order == 2:
            if x <= 0.0 or x >= 1.0:
                return 0.0
            return _bump(x) * (1.0 - 2.0 * x) / (x * (1.0 - x)) ** 2 / self.norm
        raise ValueError(f"step derivatives of order {order} are not provided")

    def __call__(self, t: float) -> float:
        if t >= 1.0:
            return 1.0
        n, x = self.schedule.local_time(t)
        return junction(n) + self.schedule.interval_length(n) * self.step(x)

    def derivative(self, t: float, order: int = 1) -> float:
        if t >= 1.0:
            return 0.0
        n, x = self.schedule.local_time(t)
        return self.step_derivative(x, order) / self.schedule.interval_length(n) ** (order - 1)


def build_eta(schedule: TimeSchedule) -> Reparametrisation:
    return Reparametrisation(schedule)


class SmoothedFamily:
    """v^m and rho^m on a fixed global grid."""

    def __init__(self, blocks: BlockSource, m: int, resolution: int, *, cycle: Sequence[int] = DEFAULT_CYCLE,
                 min_block_cells: int = MIN_BLOCK_CELLS, supersample: int = 1):
        if m > MAX_LEVEL:
            raise ValueError(f"m must not exceed {MAX_LEVEL}, got {m}")
        if resolution % tiles_per_side(m):
            raise ResolutionError(f"resolution {resolution} is not a multiple of {tiles_per_side(m)}")
        self.blocks = blocks
        self.schedule = TimeSchedule(m)
        self.eta = build_eta(self.schedule)
        self.resolution = resolution
        self.cycle = tuple(cycle)
        self.min_block_cells = min_block_cells
        self.supersample = supersample
        self._levels = lru_cache(maxsize=64)(self._level)
        radius = getattr(blocks, "radius", None)
        for n in range(m + 1):
            cells = self.cells_per_tile(n)[0]
            if radius is not None and radius * cells < 1.0:
                logger.warning("level %d: the tube radius spans %.2f cells of the %d grid; "
                               "cell averages do not resolve it", n, radius * cells, resolution)

    @property
    def m(self) -> int:
        return self.schedule.m

    def cells_per_tile(self, n: int) -> tuple[int, int]:
        """(cells per tile on the global grid, block sample resolution)."""
        k = self.resolution // tiles_per_side(n)
        q = max(1, math.ceil(self.min_block_cells / k))
        return k, k * q

    def _level(self, n: int, tau: float) -> LevelFields:
        _, sample = self.cells_per_tile(n)
        return assemble(n, self.blocks, tau, tile_resolution=sample, cycle=self.cycle, supersample=self.supersample)

    def level(self, n: int, tau: float) -> LevelFields:
        if n > self.m:
            raise ValueError(f"level {n} is beyond the cutoff m = {self.m}")
        return self._levels(n, float(tau))

    def level_scalar(self, n: int, tau: float) -> GridField:
        k, _ = self.cells_per_tile(n)
        return self.level(n, tau).rho.materialize(k)

    def level_velocity(self, n: int, tau: float) -> GridField:
        k, _ = self.cells_per_tile(n)
        return self.level(n, tau).velocity_field(k)

    def velocity(self, t: float) -> GridField:
        zero = GridField.zeros(self.resolution, FieldKind.VECTOR, time=t)
        if t < 0.0 or t >= self.schedule.freeze_time:
            return zero
        n, x = self.schedule.local_time(t)
        factor = self.eta.step_derivative(x) / self.schedule.interval_length(n)
        if factor == 0.0:
            return zero
        v = self.level_velocity(n, self.eta.step(x))
        return GridField.vector(factor * v.values, time=t, level=n)

    def scalar(self, t: float) -> GridField:
        if t >= self.schedule.freeze_time:
            rho = self.level_scalar(self.m, 1.0)
        else:
            n, x = self.schedule.local_time(max(t, 0.0))
            rho = self.level_scalar(n, self.eta.step(x))
        return GridField.scalar(rho.values, time=t, level=rho.level)

    def time_step(self, t: float) -> float:
        """Centred-difference step 1e-5 dt_n of the interval containing t."""
        n = self.schedule.interval(min(t, np.nextafter(1.0, 0.0)))
        return 1e-5 * self.schedule.interval_length(n)

    def forcing(self, t: float) -> GridField:
        return forcing(self.velocity, self.schedule.mu, t, time_step=self.time_step(t))


def smoothed_fields(family: SmoothedFamily, t: float) -> tuple[GridField, GridField]:
    """(v^m, rho^m) at time t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return family.velocity(t), family.scalar(t)


def forcing(velocity_at: Callable[[float], GridField], mu: float, t: float, *,
            time_step: float = 1e-5) -> GridField:
    """g = dv/dt + v . grad v - mu lap v; time derivative by centred differences, space spectral."""
    v = velocity_at(t)
    dv = (velocity_at(t + time_step).values - velocity_at(t - time_step).values) / (2 * time_step)
    g = dv + v.advect(v).values - mu * v.laplacian().values
    return GridField.vector(g, time=t)


# ---------- tile-local forcing bounds ----------

@dataclass
class ForcingComponents:
    m: int
    mu: float
    total: float
    time: float
    nonlinear: float
    viscous: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


@dataclass
class _BlockDynamics:
    velocity: np.ndarray
    rate: np.ndarray
    nonlinear: np.ndarray
    laplacian: np.ndarray


def _block_dynamics(blocks: BlockSource, index: int, tau: float, resolution: int,
                    step: float = 1e-4) -> _BlockDynamics:
    v = GridField.vector(blocks.sample(index, tau, resolution).velocity)
    ahead = blocks.sample(index, tau + step, resolution).velocity
    behind = blocks.sample(index, tau - step, resolution).velocity
    return _BlockDynamics(v.values, (ahead - behind) / (2 * step), v.advect(v).values, v.laplacian().values)


def forcing_components(blocks: BlockSource, m: int, alpha: float = 0.5, *, samples: int = 5,
                       tile_resolution: int = 64, cycle: Sequence[int] = DEFAULT_CYCLE) -> ForcingComponents:
    """
    C^alpha norms of g^m and of its three parts, read tile-locally.

    On interval n with A = S'/dt_n and lambda = 2 5^n:
    dv/dt = lambda^-1 [(S''/dt_n^2) V + A^2 dV/dtau], v . grad v = lambda^-1 A^2 V . grad V,
    mu lap v = mu A lambda lap V, all composed with lambda (x - r_Q).
    """
    schedule = TimeSchedule(m)
    eta = build_eta(schedule)
    mu = schedule.mu
    used = sorted({c % blocks.count for c in cycle})
    best = dict(total=0.0, time=0.0, nonlinear=0.0, viscous=0.0)

    def holder(values: np.ndarray, dilation: float) -> float:
        f = GridField.vector(values)
        return f.sup_norm() + dilation ** alpha * f.holder_seminorm(alpha)

    for n in range(m + 1):
        lam = float(tiles_per_side(n))
        dt = schedule.interval_length(n)
        for x in np.linspace(0.0, 1.0, samples + 2)[1:-1]:
            tau = eta.step(x)
            A = eta.step_derivative(x) / dt
            accel = eta.step_derivative(x, 2) / dt ** 2
            for i in used:
                d = _block_dynamics(blocks, i, tau, tile_resolution)
                time_part = (accel * d.velocity + A ** 2 * d.rate) / lam
                nonlinear_part = A ** 2 * d.nonlinear / lam
                viscous_part = mu * A * lam * d.laplacian
                parts = {
                    "total": time_part + nonlinear_part - viscous_part,
                    "time": time_part,
                    "nonlinear": nonlinear_part,
                    "viscous": viscous_part,
                }
                for key, values in parts.items():
                    best[key] = max(best[key], holder(values, lam))
        logger.debug("forcing m=%d: interval %d done", m, n)
    return ForcingComponents(m, mu, **best)
