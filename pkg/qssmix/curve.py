# qssmix/curve.py
"""
Central curves, their Frenet data, and pure normal perturbations.

Conventions: the normal is the left rotation of the tangent and the curvature is
det(g', g'') / |g'|^3. Closed curves built here run clockwise, so the normal points
outward and a positive normal displacement grows the enclosed area.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .core import GeometryError
from .numerics import derivative, loglog_slope, plateau

logger = logging.getLogger(__name__)

MIN_NODES = 64
SPEED_TOLERANCE = 1e-6
DEGENERATE_SPEED = 1e-12


@dataclass(frozen=True, eq=False)
class Curve:
    """Samples of a planar curve at uniform parameter nodes s_j in [0, L]."""

    samples: np.ndarray
    length: float
    param_speed: float
    time_label: float = 0.0
    closed: bool = False
    constant_speed: bool = True

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise GeometryError(f"curve samples must have shape (n, 2), got {samples.shape}")
        if samples.shape[0] < MIN_NODES:
            raise GeometryError(f"a curve needs at least {MIN_NODES} nodes, got {samples.shape[0]}")
        if self.length <= 0 or self.param_speed <= 0:
            raise GeometryError(f"length and speed must be positive, got L={self.length}, l={self.param_speed}")
        if self.constant_speed:
            speed = np.linalg.norm(self.derivative(1), axis=1)
            if np.min(speed) < DEGENERATE_SPEED:
                raise GeometryError("degenerate parametrisation", node=int(np.argmin(speed)))
            deviation = np.abs(speed - np.mean(speed)) / np.mean(speed)
            if np.max(deviation) > SPEED_TOLERANCE:
                node = int(np.argmax(deviation))
                raise GeometryError(f"parametrisation is not constant speed: relative deviation "
                                    f"{deviation[node]:.2e} at node {node}", node=node)

    # ---------- grid ----------
    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def spacing(self) -> float:
        return self.length / (self.n if self.closed else self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        if self.closed:
            return np.arange(self.n) * self.spacing
        return np.linspace(0.0, self.length, self.n)

    def weights(self) -> np.ndarray:
        """Trapezoid weights in s (periodic rule for closed curves)."""
        w = np.full(self.n, self.spacing)
        if not self.closed:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def derivative(self, order: int = 1, values: np.ndarray | None = None) -> np.ndarray:
        data = self.samples if values is None else values
        return derivative(data, self.spacing, order, periodic=self.closed, axis=0)

    def with_samples(self, samples: np.ndarray, *, constant_speed: bool = False) -> "Curve":
        speed = float(np.mean(np.linalg.norm(
            derivative(samples, self.spacing, 1, periodic=self.closed, axis=0), axis=1)))
        return Curve(samples, self.length, speed, self.time_label, self.closed, constant_speed)

    # ---------- constructors ----------
    @classmethod
    def circle(cls, radius: float, center: Sequence[float] = (0.5, 0.5), n: int = 512, *,
               clockwise: bool = True, length: float | None = None, phase: float = 0.0,
               time_label: float = 0.0) -> "Curve":
        if radius <= 0:
            raise GeometryError(f"circle radius must be positive, got {radius}")
        L = 2 * np.pi * radius if length is None else float(length)
        speed = 2 * np.pi * radius / L
        u = phase + speed * (np.arange(n) * L / n) / radius
        sign = -1.0 if clockwise else 1.0
        samples = np.asarray(center, dtype=float) + radius * np.stack([np.cos(u), sign * np.sin(u)], axis=1)
        return cls(samples, L, speed, time_label, closed=True)

    @classmethod
    def segment(cls, start: Sequence[float], end: Sequence[float], n: int = 512,
                time_label: float = 0.0) -> "Curve":
        a = np.asarray(start, dtype=float)
        b = np.asarray(end, dtype=float)
        L = float(np.linalg.norm(b - a))
        if L <= 0:
            raise GeometryError("segment endpoints coincide")
        t = np.linspace(0.0, 1.0, n)[:, None]
        return cls(a + t * (b - a), L, 1.0, time_label, closed=False)

    @classmethod
    def ellipse(cls, a: float, b: float, center: Sequence[float] = (0.0, 0.0), n: int = 512, *,
                clockwise: bool = True, time_label: float = 0.0) -> "Curve":
        c = np.asarray(center, dtype=float)
        sign = -1.0 if clockwise else 1.0
        return cls.from_function(lambda u: (c[0] + a * np.cos(u), c[1] + sign * b * np.sin(u)),
                                 n, closed=True, u_range=(0.0, 2 * np.pi), time_label=time_label)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]], n: int = 512, *,
                      closed: bool, u_range: tuple[float, float] = (0.0, 1.0), length: float | None = None,
                      time_label: float = 0.0, table: int = 8192) -> "Curve":
        """
        Resample an arbitrary smooth parametrisation at constant speed.

        The arclength is integrated from a fine table, inverted through the
        table and refined by Newton steps on the spline antiderivative.
        """
        u0, u1 = u_range
        u = np.linspace(u0, u1, table + 1)
        du = (u1 - u0) / table
        pts = np.stack(func(u), axis=-1)
        if closed:
            d = derivative(pts[:-1], du, 1, periodic=True, axis=0)
            d = np.vstack([d, d[:1]])
        else:
            d = derivative(pts, du, 1, periodic=False, axis=0)
        speed_table = np.linalg.norm(d, axis=1)
        if np.min(speed_table) < DEGENERATE_SPEED:
            raise GeometryError("degenerate parametrisation", node=int(np.argmin(speed_table)))
        speed_fn = CubicSpline(u, speed_table, bc_type="periodic" if closed else "not-a-knot")
        arc = speed_fn.antiderivative()
        total = float(arc(u1) - arc(u0))
        L = total if length is None else float(length)
        speed = total / L

        s = np.arange(n) * L / n if closed else np.linspace(0.0, L, n)
        target = speed * s
        arc_table = arc(u) - arc(u0)
        ui = np.interp(target, arc_table, u)
        for _ in range(8):
            ui = ui - (arc(ui) - arc(u0) - target) / speed_fn(ui)
        ui = np.clip(ui, u0, u1)
        samples = np.stack(func(ui), axis=-1)
        return cls(samples, L, speed, time_label, closed=closed)

    def __repr__(self) -> str:
        kind = "closed" if self.closed else "open"
        return f"Curve({kind}, n={self.n}, L={self.length:.6g}, l={self.param_speed:.6g}, t={self.time_label:g})"


@dataclass(frozen=True, eq=False)
class FrenetData:
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    speed: np.ndarray


def frenet(curve: Curve) -> FrenetData:
    d1 = curve.derivative(1)
    d2 = curve.derivative(2)
    speed = np.linalg.norm(d1, axis=1)
    if np.min(speed) < DEGENERATE_SPEED:
        raise GeometryError("degenerate parametrisation", node=int(np.argmin(speed)))
    tau = d1 / speed[:, None]
    eta = np.stack([-tau[:, 1], tau[:, 0]], axis=1)
    kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3
    return FrenetData(tau, eta, kappa, speed)


@dataclass(frozen=True, eq=False)
class NormalPerturbation:
    """Values h(s_j) of a normal displacement on a curve's node grid at one time slice."""

    values: np.ndarray
    length: float
    closed: bool
    time_label: float | None = None
    boundary_order: int = 6

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ValueError(f"perturbation values must be 1-d, got shape {values.shape}")
        if self.time_label == 0.0 and np.any(values != 0.0):
            raise ValueError("a perturbation at t = 0 must vanish identically")

    @classmethod
    def on(cls, curve: Curve, values, *, time_label: float | None = None,
           boundary_order: int = 6) -> "NormalPerturbation":
        values = np.broadcast_to(np.asarray(values, dtype=float), (curve.n,))
        return cls(values, curve.length, curve.closed, time_label, boundary_order)

    @classmethod
    def zero(cls, curve: Curve) -> "NormalPerturbation":
        return cls(np.zeros(curve.n), curve.length, curve.closed)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return self.length / (self.n if self.closed else self.n - 1)

    def derivative(self, order: int) -> np.ndarray:
        return derivative(self.values, self.spacing, order, periodic=self.closed)

    @property
    def amplitude(self) -> float:
        """Dimensionless discrete C^6 norm: max over k of L^(k-1) sup|d^k h|."""
        return max(self.length ** (k - 1) * float(np.max(np.abs(self.derivative(k))))
                   for k in range(7))

    def boundary_defect(self) -> float:
        """Largest |d^k h| at s = 0, L for k <= boundary_order (0 for closed curves)."""
        if self.closed:
            return 0.0
        return max(float(max(abs(d[0]), abs(d[-1])))
                   for d in (self.derivative(k) for k in range(self.boundary_order + 1)))

    def is_admissible(self, tol: float = 1e-8) -> bool:
        return self.boundary_defect() <= tol

    def scaled(self, factor: float) -> "NormalPerturbation":
        return NormalPerturbation(self.values * factor, self.length, self.closed,
                                  self.time_label, self.boundary_order)

    def __add__(self, other: "NormalPerturbation") -> "NormalPerturbation":
        if other.n != self.n:
            raise GeometryError(f"perturbation grids differ: {self.n} vs {other.n}")
        return NormalPerturbation(self.values + other.values, self.length, self.closed,
                                  self.time_label, self.boundary_order)


def perturbation_values(curve: Curve, h) -> np.ndarray:
    values = h.values if isinstance(h, NormalPerturbation) else np.asarray(h, dtype=float)
    values = np.broadcast_to(values, (curve.n,)) if values.ndim == 0 else values
    if values.shape != (curve.n,):
        raise GeometryError(f"perturbation grid ({values.shape[0]} nodes) does not match curve ({curve.n} nodes)")
    return values


def perturb(curve: Curve, h, frame: FrenetData | None = None) -> Curve:
    """Pure normal perturbation g + h * eta; the result is flagged as not constant speed."""
    values = perturbation_values(curve, h)
    frame = frenet(curve) if frame is None else frame
    return curve.with_samples(curve.samples + values[:, None] * frame.normal)


@dataclass(frozen=True, eq=False)
class StretchCurvature:
    stretch: np.ndarray
    curvature: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    stretch_first_order: np.ndarray
    curvature_first_order: np.ndarray
    tangent_first_order: np.ndarray
    normal_first_order: np.ndarray

    def defects(self) -> dict[str, float]:
        return {
            "stretch": float(np.max(np.abs(self.stretch - self.stretch_first_order))),
            "curvature": float(np.max(np.abs(self.curvature - self.curvature_first_order))),
            "tangent": float(np.max(np.linalg.norm(self.tangent - self.tangent_first_order, axis=1))),
            "normal": float(np.max(np.linalg.norm(self.normal - self.normal_first_order, axis=1))),
        }


def stretch_and_curvature(curve: Curve, h) -> StretchCurvature:
    """Exact perturbed frame next to its perturbative expansion."""
    values = perturbation_values(curve, h)
    base = frenet(curve)
    exact = frenet(perturb(curve, values, base))
    l = base.speed
    dh = curve.derivative(1, values)
    d2h = curve.derivative(2, values)
    kappa = base.curvature
    return StretchCurvature(
        stretch=exact.speed / l,
        curvature=exact.curvature,
        tangent=exact.tangent,
        normal=exact.normal,
        stretch_first_order=1.0 - kappa * values + 0.5 * (dh / l) ** 2,
        curvature_first_order=kappa + kappa ** 2 * values + d2h / l ** 2,
        tangent_first_order=base.tangent + (dh / l)[:, None] * base.normal,
        normal_first_order=base.normal - (dh / l)[:, None] * base.tangent,
    )


def integrate(curve: Curve, values, frame: FrenetData | None = None) -> float:
    """Quadrature of values against d(sigma) = l ds."""
    frame = frenet(curve) if frame is None else frame
    return float(np.sum(curve.weights() * frame.speed * np.asarray(values)))


def area_difference(curve: Curve, h, frame: FrenetData | None = None) -> float:
    """Enclosed-area change of the normal perturbation: int h - (1/2) int kappa h^2."""
    values = perturbation_values(curve, h)
    if not curve.closed:
        scale = max(1.0, float(np.max(np.abs(values))))
        if abs(values[0]) > 1e-10 * scale or abs(values[-1]) > 1e-10 * scale:
            raise ValueError("open curves need h to vanish at both endpoints")
    frame = frenet(curve) if frame is None else frame
    return integrate(curve, values - 0.5 * frame.curvature * values ** 2, frame)


def shoelace_area(curve: Curve) -> float:
    """Signed polygon area of a closed curve (negative for clockwise curves)."""
    if not curve.closed:
        raise ValueError("shoelace area needs a closed curve")
    x, y = curve.samples[:, 0], curve.samples[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def curve_length(curve: Curve, h=None, frame: FrenetData | None = None) -> float:
    """Length of g + h eta from sqrt((l(1 - kappa h))^2 + (dh/ds)^2)."""
    frame = frenet(curve) if frame is None else frame
    if h is None:
        return float(np.sum(curve.weights() * frame.speed))
    values = perturbation_values(curve, h)
    dh = curve.derivative(1, values)
    integrand = np.sqrt((frame.speed * (1.0 - frame.curvature * values)) ** 2 + dh ** 2)
    return float(np.sum(curve.weights() * integrand))


# ---------- admissible profiles ----------

def flat_window(curve: Curve, margin: float = 0.05, ramp: float = 0.15) -> np.ndarray:
    """1 on closed curves; on open curves 0 within margin*L of the ends, 1 in the middle."""
    if curve.closed:
        return np.ones(curve.n)
    L = curve.length
    return plateau(curve.nodes, margin * L, (1 - margin) * L, ramp * L)


def polynomial_bump(curve: Curve, margin: float = 0.05, frame: FrenetData | None = None) -> np.ndarray:
    """phi_0 ~ sigma^7 (1 - sigma)^7 on the inset support, with discrete int phi_0 d(sigma) = 1."""
    L = curve.length
    a = margin * L
    sigma = np.clip((curve.nodes - a) / (L - 2 * a), 0.0, 1.0)
    bump = sigma ** 7 * (1.0 - sigma) ** 7
    return bump / integrate(curve, bump, frame)


def kernel_projection(curve: Curve, u, basis: np.ndarray | None = None,
                      frame: FrenetData | None = None) -> np.ndarray:
    """Remove the component of u along phi_0 so that int u d(sigma) = 0."""
    frame = frenet(curve) if frame is None else frame
    basis = polynomial_bump(curve, frame=frame) if basis is None else basis
    values = perturbation_values(curve, u)
    return values - integrate(curve, values, frame) * basis


def mode_profile(curve: Curve, mode: int, *, phase: float = 0.0) -> np.ndarray:
    """Windowed sine mode with unit sup norm."""
    s = curve.nodes / curve.length
    profile = flat_window(curve) * np.sin(2 * np.pi * mode * s + phase)
    return profile / np.max(np.abs(profile))


# ---------- stability sweep ----------

@dataclass
class SweepResult:
    epsilons: np.ndarray
    distances: dict[str, np.ndarray] = field(default_factory=dict)

    def slopes(self) -> dict[str, float]:
        return {name: loglog_slope(self.epsilons, d) for name, d in self.distances.items()}

    def rows(self) -> list[dict]:
        return [{"epsilon": float(e), **{k: float(v[i]) for k, v in self.distances.items()}}
                for i, e in enumerate(self.epsilons)]


def perturbation_sweep(curve: Curve, profile: np.ndarray, epsilons: Sequence[float],
                       scale: float = 0.05) -> SweepResult:
    """Speed, normal and curvature distances (with two s-derivatives) against epsilon."""
    base = frenet(curve)
    names = ("speed", "normal", "curvature")
    result = SweepResult(np.asarray(epsilons, dtype=float))
    collected: dict[str, list[float]] = {f"{q}_d{k}": [] for q in names for k in range(3)}
    for eps in result.epsilons:
        h = eps * scale * curve.length * np.asarray(profile)
        pert = frenet(perturb(curve, h, base))
        diffs = {"speed": pert.speed - base.speed,
                 "normal": pert.normal - base.normal,
                 "curvature": pert.curvature - base.curvature}
        for q, d in diffs.items():
            for k in range(3):
                dk = curve.derivative(k, d)
                mag = np.linalg.norm(dk, axis=1) if dk.ndim == 2 else np.abs(dk)
                collected[f"{q}_d{k}"].append(float(np.max(mag)))
        logger.debug("perturbation sweep eps=%g done", eps)
    result.distances = {k: np.asarray(v) for k, v in collected.items()}
    return result
