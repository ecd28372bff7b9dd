# qssmix/local_fields.py
"""
Block fields (V_i, Theta_i) carried by the area-preserving maps of a curve family.

Theta is constant along the chart, Theta(t, Phi(t, s, y)) = c Thetabar(y / r) Xi(s).
The velocity is the perp-gradient of W psi, where psi is the chart stream function of
dPhi/dt and W a boundary-flat cut-off equal to one wherever Theta is non-zero; there
V coincides with dPhi/dt o Psi.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .area_map import InverseMap, TubularMap
from .core import cell_centres
from .curve import SweepResult, frenet
from .families import CurveFamily, default_families, perturb_families
from .field import GridField
from .numerics import cell_average, plateau, smooth_step, smooth_step_derivative

logger = logging.getLogger(__name__)

COMPACT_SQUARE = (0.05, 0.95)
WINDOW_RAMP = 0.45


@dataclass(frozen=True)
class CutoffProfile:
    """Thetabar(z) = c sin(2 pi z) exp(-1 / (1/4 - z^2)) on (-1/2, 1/2), zero outside."""

    constant: float
    order: int = 6

    @staticmethod
    def _shape(z):
        z = np.asarray(z, dtype=float)
        inside = np.abs(z) < 0.5
        zi = np.where(inside, z, 0.0)
        with np.errstate(under="ignore"):
            bump = np.exp(-1.0 / (0.25 - zi ** 2))
        return inside, zi, bump

    def __call__(self, z) -> np.ndarray:
        inside, zi, bump = self._shape(z)
        return np.where(inside, self.constant * np.sin(2 * np.pi * zi) * bump, 0.0)

    def derivative(self, z) -> np.ndarray:
        inside, zi, bump = self._shape(z)
        d = (2 * np.pi * np.cos(2 * np.pi * zi) - np.sin(2 * np.pi * zi) * 2 * zi / (0.25 - zi ** 2) ** 2) * bump
        return np.where(inside, self.constant * d, 0.0)

    def moments(self) -> tuple[float, float]:
        """(int Thetabar, int Thetabar^2) over (-1/2, 1/2) by adaptive quadrature."""
        first = integrate.quad(self, -0.5, 0.5, epsabs=1e-14)[0]
        second = integrate.quad(lambda z: self(z) ** 2, -0.5, 0.5, epsabs=1e-14, epsrel=1e-13)[0]
        return first, second


def build_cutoff(smoothness_order: int = 6) -> CutoffProfile:
    if smoothness_order < 6:
        raise ValueError(f"the cut-off must be at least C^6, got order {smoothness_order}")
    unit = CutoffProfile(1.0, smoothness_order)
    norm_sq = integrate.quad(lambda z: unit(z) ** 2, -0.5, 0.5, epsabs=1e-16, epsrel=1e-13)[0]
    return CutoffProfile(1.0 / np.sqrt(norm_sq), smoothness_order)


@dataclass
class BlockSample:
    """One block at one time on the cell centres of an m x m grid of the unit square."""

    theta: np.ndarray
    velocity: np.ndarray
    stream: np.ndarray | None = None
    moments: tuple[float, float] | None = None  # (int theta, int theta^2) on the fine grid

    @property
    def resolution(self) -> int:
        return self.theta.shape[-1]


@dataclass
class LocalValues:
    theta: np.ndarray
    velocity: np.ndarray
    stream: np.ndarray
    inside: np.ndarray


class ChartStream:
    """psi(s, y) with psi_s = b and psi_y = -a, where (a, b) = (DPhi)^-1 dPhi/dt."""

    def __init__(self, s: np.ndarray, y: np.ndarray, values: np.ndarray, length: float, closed: bool):
        self.length = length
        self.closed = closed
        self.values = values
        if closed:
            pad = 4
            s = np.concatenate([s[-pad:] - length, s, s[:pad] + length])
            values = np.concatenate([values[-pad:], values, values[:pad]], axis=0)
        self._spline = RectBivariateSpline(s, y, values, kx=3, ky=3)

    def __call__(self, s, y) -> np.ndarray:
        s = np.mod(s, self.length) if self.closed else s
        return self._spline.ev(s, y)


class LocalField:
    """V_i and Theta_i for one block family on the unit square."""

    def __init__(self, family: CurveFamily, cutoff: CutoffProfile | None = None,
                 radius: float | None = None, *, time_step: float = 1e-4, chart_rows: int = 65,
                 seeds: tuple[int, int] = (256, 64), modulation: float = 0.0):
        if chart_rows % 2 == 0:
            raise ValueError(f"chart_rows must be odd so that y = 0 is a grid row, got {chart_rows}")
        self.family = family
        self.cutoff = build_cutoff() if cutoff is None else cutoff
        self.radius = family.tube_radius() if radius is None else float(radius)
        self.time_step = time_step
        self.chart_rows = chart_rows
        self.seeds = seeds
        if not 0.0 <= modulation < 1.0:
            raise ValueError(f"modulation must lie in [0, 1), got {modulation}")
        self.modulation = float(modulation)
        base = family.curve(0.0)
        self.length = base.length
        self.closed = base.closed
        profile_sq = integrate.quad(lambda s: self.s_profile(s) ** 2, 0.0, self.length,
                                    epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        self.normalisation = 1.0 / np.sqrt(self.radius * profile_sq)
        self.map = lru_cache(maxsize=32)(self._build_map)
        self.inverse = lru_cache(maxsize=8)(self._build_inverse)
        self.stream = lru_cache(maxsize=8)(self._build_stream)

    # ---------- chart profiles ----------
    def s_profile(self, s) -> np.ndarray:
        """Xi(s): 1 + modulation cos(2 pi s / L) on closed curves, a flat-ended window on open ones."""
        L = self.length
        s = np.asarray(s, dtype=float)
        if self.closed:
            return 1.0 + self.modulation * np.cos(2 * np.pi * s / L)
        return plateau(s, 0.05 * L, 0.95 * L, 0.15 * L)

    def theta_chart(self, s, y) -> np.ndarray:
        return self.normalisation * self.cutoff(np.asarray(y) / self.radius) * self.s_profile(s)

    def window(self, s, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """W(s, y) = Ws(s) chi(y / r) with its s and y derivatives."""
        s = np.asarray(s, dtype=float)
        z = np.asarray(y, dtype=float) / self.radius
        arg = (1.0 - np.abs(z)) / WINDOW_RAMP
        chi = smooth_step(arg)
        chi_y = smooth_step_derivative(arg) * (-np.sign(z) / WINDOW_RAMP) / self.radius
        if self.closed:
            ws, ws_s = np.ones_like(s), np.zeros_like(s)
        else:
            ramp = 0.05 * self.length
            left, right = s / ramp, (self.length - s) / ramp
            ws = smooth_step(left) * smooth_step(right)
            ws_s = (smooth_step_derivative(left) * smooth_step(right)
                    - smooth_step(left) * smooth_step_derivative(right)) / ramp
        return ws * chi, ws_s * chi, ws * chi_y

    # ---------- time-indexed maps ----------
    def _build_map(self, t: float) -> TubularMap:
        curve = self.family.curve(t)
        return TubularMap(curve, frenet(curve), self.radius)

    def _build_inverse(self, t: float) -> InverseMap:
        return InverseMap(self.map(t), seeds=self.seeds)

    def map_velocity(self, t: float, s, y) -> np.ndarray:
        """dPhi/dt at fixed (s, y) by a centred difference."""
        d = self.time_step
        return (self.map(t + d).evaluate(s, y) - self.map(t - d).evaluate(s, y)) / (2 * d)

    def _build_stream(self, t: float) -> ChartStream:
        phi = self.map(t)
        curve = phi.curve
        s = curve.nodes
        y = np.linspace(-self.radius, self.radius, self.chart_rows)
        centre = self.chart_rows // 2
        S, Y = np.meshgrid(s, y, indexing="ij")
        flux = np.linalg.solve(phi.jacobian(S, Y), self.map_velocity(t, S, Y)[..., None])[..., 0]
        a, b = flux[..., 0], flux[..., 1]

        along = b[:, centre]
        if self.closed:
            mean = float(np.mean(along))
            if abs(mean) > 1e-8 * max(1.0, float(np.max(np.abs(along)))):
                logger.debug("closed-chart flux mean %.3e removed at t=%g", mean, t)
            along = along - mean
            spline = CubicSpline(np.append(s, self.length), np.append(along, along[0]), bc_type="periodic")
        else:
            spline = CubicSpline(s, along)
        base = spline.antiderivative()(s)
        across = CubicSpline(y, a, axis=1).antiderivative()(y)
        psi = base[:, None] - (across - across[:, centre:centre + 1])
        return ChartStream(s, y, psi, self.length, self.closed)

    # ---------- evaluation ----------
    def evaluate(self, t: float, points) -> LocalValues:
        """Pointwise Theta, V and W psi; zero outside the tube."""
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        inv = self.inverse(t)(pts)
        inside = inv.inside
        theta = np.zeros(shape)
        stream = np.zeros(shape)
        velocity = np.zeros(shape + (2,))
        if np.any(inside):
            s, y = inv.s[inside], inv.y[inside]
            theta[inside] = self.theta_chart(s, y)
            w, w_s, w_y = self.window(s, y)
            psi = self.stream(t)(s, y)
            jac = self.map(t).jacobian(s, y)
            phi_s, phi_y = jac[..., 0], jac[..., 1]
            velocity[inside] = (w[:, None] * self.map_velocity(t, s, y)
                                + psi[:, None] * (w_s[:, None] * phi_y - w_y[:, None] * phi_s))
            stream[inside] = w * psi
        return LocalValues(theta, velocity, stream, inside)

    def sample(self, t: float, resolution: int, supersample: int = 1) -> BlockSample:
        """
        Cell averages of Theta and W psi over supersample^2 points per cell; the velocity
        is the spectral perp-gradient of the averaged stream. The moments are the
        midpoint sums on the fine grid.
        """
        if supersample < 1:
            raise ValueError(f"supersample must be positive, got {supersample}")
        x1, x2 = cell_centres(resolution * supersample)
        values = self.evaluate(t, np.stack([x1, x2], axis=-1))
        theta = cell_average(values.theta, supersample)
        stream = cell_average(values.stream, supersample)
        velocity = GridField.scalar(stream).perp_gradient().values
        moments = (float(np.mean(values.theta)), float(np.mean(values.theta ** 2)))
        return BlockSample(theta, velocity, stream, moments)

    def chart_moments(self, t: float = 0.0, order: int = 64) -> tuple[float, float]:
        """(int Theta dx, int Theta^2 dx) in (s, y) coordinates, using det DPhi = 1."""
        z, wz = np.polynomial.legendre.leggauss(order)
        y = 0.5 * z * self.radius
        wy = 0.5 * wz * self.radius
        curve = self.map(t).curve
        s = curve.nodes
        ws = curve.weights()
        F = self.theta_chart(s[:, None], y[None, :])
        W = ws[:, None] * wy[None, :]
        return float(np.sum(W * F)), float(np.sum(W * F ** 2))

    def __repr__(self) -> str:
        return f"LocalField({self.family.name}, r={self.radius:.4g})"


class LocalFieldSet:
    """The N blocks sharing one tube radius and one cut-off."""

    def __init__(self, families: Sequence[CurveFamily], cutoff: CutoffProfile | None = None,
                 radius: float | None = None, **options):
        if not families:
            raise ValueError("a field set needs at least one block family")
        self.families = list(families)
        self.cutoff = build_cutoff() if cutoff is None else cutoff
        self.radius = min(f.tube_radius() for f in self.families) if radius is None else float(radius)
        self.options = options
        self.blocks = [LocalField(f, self.cutoff, self.radius, **options) for f in self.families]
        self._samples = lru_cache(maxsize=256)(self._sample)

    @classmethod
    def from_registry(cls, name: str, blocks: int = 6, n: int = 512, **params) -> "LocalFieldSet":
        return cls(default_families.build(name, blocks, n, **params))

    def perturbed(self, epsilon: float, **kwargs) -> "LocalFieldSet":
        """Same cut-off and radius, curves replaced by their projected perturbations."""
        return LocalFieldSet(perturb_families(self.families, epsilon, **kwargs), self.cutoff,
                             self.radius, **self.options)

    @property
    def count(self) -> int:
        return len(self.blocks)

    @property
    def epsilon(self) -> float:
        """Perturbation size the families were built with; 0 for unperturbed families."""
        return max(float(f.params.get("epsilon", 0.0)) for f in self.families)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, index: int) -> LocalField:
        return self.blocks[index]

    def _sample(self, index: int, t: float, resolution: int, supersample: int) -> BlockSample:
        return self.blocks[index].sample(t, resolution, supersample)

    def sample(self, index: int, t: float, resolution: int, supersample: int = 1) -> BlockSample:
        return self._samples(index, float(t), int(resolution), int(supersample))

    def __repr__(self) -> str:
        return f"LocalFieldSet({self.count} blocks, r={self.radius:.4g})"


# ---------- grid operations ----------

def evaluate_fields(block: LocalField, resolution: int, t: float, *,
                    divergence_free: bool = False) -> tuple[GridField, GridField]:
    """(V, Theta) on the cell centres; ``divergence_free`` takes V from the sampled stream."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if divergence_free:
        sample = block.sample(t, resolution)
        return GridField.vector(sample.velocity, time=t), GridField.scalar(sample.theta, time=t)
    return _pointwise_fields(block, resolution, t)


def _pointwise_fields(block: LocalField, resolution: int, t: float) -> tuple[GridField, GridField]:
    x1, x2 = cell_centres(resolution)
    values = block.evaluate(t, np.stack([x1, x2], axis=-1))
    return (GridField.vector(np.moveaxis(values.velocity, -1, 0), time=t),
            GridField.scalar(values.theta, time=t))


def transport_residual(block: LocalField, resolution: int, t: float, *, time_step: float = 1e-5) -> float:
    """sup |dTheta/dt + V . grad Theta| / sup |grad Theta| on the grid."""
    velocity, theta = evaluate_fields(block, resolution, t)
    ahead = _pointwise_fields(block, resolution, t + time_step)[1]
    behind = _pointwise_fields(block, resolution, t - time_step)[1]
    d_theta = (ahead.values - behind.values) / (2 * time_step)
    grad = theta.fd_jacobian()
    v = velocity.values
    residual = d_theta + v[0] * grad[0] + v[1] * grad[1]
    scale = float(np.max(np.hypot(grad[0], grad[1])))
    if scale == 0.0:
        return float(np.max(np.abs(residual)))
    return float(np.max(np.abs(residual))) / scale


@dataclass
class FieldStabilityReport:
    velocity_c1: float
    theta_c1: float

    def as_dict(self) -> dict[str, float]:
        return {"velocity_c1": self.velocity_c1, "theta_c1": self.theta_c1}


def _c1_distance(a: GridField, b: GridField) -> float:
    return (b - a).c1_norm()


def field_stability_report(block: LocalField, block_t: LocalField, resolution: int,
                           t: float = 0.5) -> FieldStabilityReport:
    """Discrete C^1 distances of the pointwise fields on a common grid."""
    v, th = evaluate_fields(block, resolution, t)
    vt, tht = evaluate_fields(block_t, resolution, t)
    return FieldStabilityReport(_c1_distance(v, vt), _c1_distance(th, tht))


def field_stability_sweep(families: Sequence[CurveFamily], epsilons: Sequence[float], *,
                          resolution: int = 128, t: float = 0.5, index: int = 0,
                          scale: float = 0.05) -> SweepResult:
    base = LocalFieldSet(families)
    result = SweepResult(np.asarray(epsilons, dtype=float))
    rows: dict[str, list[float]] = {"velocity_c1": [], "theta_c1": []}
    for eps in result.epsilons:
        pert = base.perturbed(eps, scale=scale)
        report = field_stability_report(base[index], pert[index], resolution, t)
        for k, v in report.as_dict().items():
            rows[k].append(v)
        logger.info("field stability eps=%g: |dV|=%.3e |dTheta|=%.3e", eps, report.velocity_c1, report.theta_c1)
    result.distances = {k: np.asarray(v) for k, v in rows.items()}
    return result


def support_inclusion(block: LocalField, resolution: int, t: float,
                      compact: tuple[float, float] = COMPACT_SQUARE) -> bool:
    """True when V and Theta vanish at every cell centre outside the square compact^2."""
    velocity, theta = evaluate_fields(block, resolution, t)
    x1, x2 = cell_centres(resolution)
    lo, hi = compact
    outside = (x1 < lo) | (x1 > hi) | (x2 < lo) | (x2 > hi)
    return bool(np.all(theta.values[outside] == 0.0) and np.all(velocity.values[:, outside] == 0.0))
