# qssmix/families.py
"""
Time-indexed families of central curves used as building blocks.

Provides:
- CurveFamily: t -> Curve for t in [0, 1], with cached slices
- factory functions for the built-in families (circles, ellipses, the snake family)
- perturb_families: area-preserving (and equal-length) perturbations of a block set
- FamilyRegistry with the module-level default instance ``default_families``
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .area_map import default_tube_radius
from .constraints import project_area_preserving, project_equal_length
from .curve import Curve, frenet, kernel_projection, mode_profile, perturb, polynomial_bump
from .numerics import smooth_step

logger = logging.getLogger(__name__)

CENTRE = (0.5, 0.5)


class FamilyKind(Enum):
    """Built-in block families"""
    CIRCLE = "circle"                            # static circle
    ROTATING_CIRCLE = "rotating_circle"          # rigid rotation about the centre
    TRANSLATING_CIRCLE = "translating_circle"    # rigid translation
    ELLIPSE = "ellipse"                          # ellipse, optionally rotating
    SNAKE = "snake"                              # open graph curves, six dihedral copies
    PERTURBED = "perturbed"                      # projected normal perturbation of another family


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _moved(curve: Curve, matrix: np.ndarray, centre, t: float, shift=(0.0, 0.0)) -> Curve:
    c = np.asarray(centre, dtype=float)
    samples = (curve.samples - c) @ matrix.T + c + np.asarray(shift, dtype=float)
    return dataclasses.replace(curve, samples=samples, time_label=float(t))


@dataclass(eq=False)
class CurveFamily:
    """
    A block curve gamma(t, .) for t in [0, 1].

    The builder is called once per distinct t; slices are cached.
    """

    name: str
    kind: FamilyKind
    builder: Callable[[float], Curve]
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def curve(self, t: float) -> Curve:
        t = float(t)
        if t not in self._cache:
            self._cache[t] = self.builder(t)
        return self._cache[t]

    @property
    def closed(self) -> bool:
        return self.curve(0.0).closed

    @property
    def n(self) -> int:
        return self.curve(0.0).n

    def tube_radius(self, samples: int = 9) -> float:
        """Smallest default tube radius over evenly spaced time slices."""
        return min(default_tube_radius(self.curve(t)) for t in np.linspace(0.0, 1.0, samples))

    # ---------- constructors ----------
    @classmethod
    def circle(cls, radius: float = 0.25, center=CENTRE, n: int = 512) -> "CurveFamily":
        base = Curve.circle(radius, center, n)
        return cls(f"circle(R={radius:g})", FamilyKind.CIRCLE,
                   lambda t: dataclasses.replace(base, time_label=float(t)),
                   {"radius": radius, "center": tuple(center)})

    @classmethod
    def rotating_circle(cls, radius: float = 0.25, center=CENTRE, rate: float = 1.0,
                        n: int = 512) -> "CurveFamily":
        """gamma(t) = c + R(2 pi rate t)(gamma(0) - c); the map moves with angular speed 2 pi rate."""
        base = Curve.circle(radius, center, n)
        omega = 2 * np.pi * rate
        return cls(f"rotating_circle(R={radius:g}, rate={rate:g})", FamilyKind.ROTATING_CIRCLE,
                   lambda t: _moved(base, _rotation(omega * t), center, t),
                   {"radius": radius, "center": tuple(center), "rate": rate, "omega": omega})

    @classmethod
    def translating_circle(cls, radius: float = 0.2, center=CENTRE, velocity=(0.05, 0.0),
                           n: int = 512) -> "CurveFamily":
        base = Curve.circle(radius, center, n)
        w = np.asarray(velocity, dtype=float)
        return cls(f"translating_circle(R={radius:g})", FamilyKind.TRANSLATING_CIRCLE,
                   lambda t: _moved(base, np.eye(2), center, t, shift=t * w),
                   {"radius": radius, "center": tuple(center), "velocity": tuple(w)})

    @classmethod
    def ellipse(cls, a: float = 0.3, b: float = 0.15, center=CENTRE, rate: float = 0.0,
                n: int = 512) -> "CurveFamily":
        base = Curve.ellipse(a, b, center, n)
        omega = 2 * np.pi * rate
        return cls(f"ellipse(a={a:g}, b={b:g})", FamilyKind.ELLIPSE,
                   lambda t: _moved(base, _rotation(omega * t), center, t),
                   {"a": a, "b": b, "center": tuple(center), "rate": rate})

    @classmethod
    def snake(cls, copy: int = 0, amplitude: float = 0.08, n: int = 512) -> "CurveFamily":
        """
        Graph y = 1/2 + A cos(pi t) g(x) over x in [0.2, 0.8] with
        g = (4 sigma (1 - sigma))^3 sin(2 pi sigma), mapped by one of six
        dihedral symmetries of the square. Parameter length is 0.6 at every t.
        """
        matrix = SNAKE_SYMMETRIES[copy % len(SNAKE_SYMMETRIES)]

        def build(t: float) -> Curve:
            a = amplitude * np.cos(np.pi * t)

            def graph(u):
                g = (4 * u * (1 - u)) ** 3 * np.sin(2 * np.pi * u)
                return 0.2 + 0.6 * u, 0.5 + a * g

            curve = Curve.from_function(graph, n, closed=False, length=0.6, time_label=t)
            return _moved(curve, matrix, CENTRE, t)

        return cls(f"snake[{copy}]", FamilyKind.SNAKE, build, {"copy": copy, "amplitude": amplitude})


SNAKE_SYMMETRIES = (
    np.eye(2),
    _rotation(np.pi / 2),
    _rotation(np.pi),
    _rotation(3 * np.pi / 2),
    np.array([[1.0, 0.0], [0.0, -1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
)


# ---------- block-set factories ----------

def circle_blocks(blocks: int = 6, n: int = 512, radius: float = 0.25) -> list[CurveFamily]:
    return [CurveFamily.circle(radius, n=n) for _ in range(blocks)]


def rotating_circle_blocks(blocks: int = 6, n: int = 512, radius: float = 0.25,
                           rate: float = 1.0) -> list[CurveFamily]:
    """Alternating rotation sense from block to block."""
    return [CurveFamily.rotating_circle(radius, rate=rate * (-1) ** i, n=n) for i in range(blocks)]


def translating_circle_blocks(blocks: int = 6, n: int = 512, radius: float = 0.2,
                              speed: float = 0.05) -> list[CurveFamily]:
    angles = 2 * np.pi * np.arange(blocks) / blocks
    return [CurveFamily.translating_circle(radius, velocity=(speed * np.cos(a), speed * np.sin(a)), n=n)
            for a in angles]


def ellipse_blocks(blocks: int = 6, n: int = 512, a: float = 0.3, b: float = 0.15,
                   rate: float = 0.25) -> list[CurveFamily]:
    return [CurveFamily.ellipse(a, b, rate=rate * (-1) ** i, n=n) for i in range(blocks)]


def snake_blocks(blocks: int = 6, n: int = 512, amplitude: float = 0.08) -> list[CurveFamily]:
    return [CurveFamily.snake(i, amplitude, n) for i in range(blocks)]


# ---------- perturbation ----------

class _SlicePerturbation:
    """Projected perturbations of all blocks at one t, shared by the perturbed families."""

    def __init__(self, families: Sequence[CurveFamily], epsilon: float, scale: float, mode: int,
                 equal_length: bool):
        self.families = list(families)
        self.epsilon = epsilon
        self.scale = scale
        self.mode = mode
        self.equal_length = equal_length
        self._cache: dict[float, list[Curve]] = {}

    def profile(self, curve: Curve, index: int, frame) -> np.ndarray:
        phase = index * np.pi / 3
        u = kernel_projection(curve, mode_profile(curve, self.mode, phase=phase),
                              polynomial_bump(curve, frame=frame), frame)
        return u / np.max(np.abs(u))

    def curves(self, t: float) -> list[Curve]:
        t = float(t)
        if t in self._cache:
            return self._cache[t]
        base = [f.curve(t) for f in self.families]
        weight = float(smooth_step(t))
        if weight == 0.0 or self.epsilon == 0.0:
            self._cache[t] = base
            return base
        frames = [frenet(c) for c in base]
        hs = []
        for i, (c, fr) in enumerate(zip(base, frames)):
            u = weight * self.epsilon * self.scale * c.length * self.profile(c, i, fr)
            h, report = project_area_preserving(c, u, frame=fr)
            hs.append(h.values)
        if self.equal_length:
            projected, report = project_equal_length(base, hs)
            hs = [h.values for h in projected]
            logger.debug("t=%g: equal-length defect %.2e, area defect %.2e",
                         t, report.length_defect, report.area_defect)
        out = [dataclasses.replace(perturb(c, h, fr), time_label=t) for c, h, fr in zip(base, hs, frames)]
        self._cache[t] = out
        return out


def perturb_families(families: Sequence[CurveFamily], epsilon: float, *, scale: float = 0.05,
                     mode: int = 2, equal_length: bool = True) -> list[CurveFamily]:
    """
    Perturb every block by u(t) = S(t) eps scale L z_i projected onto the constraint
    manifolds, with S a boundary-flat step so the perturbation vanishes to all orders at t = 0.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    shared = _SlicePerturbation(families, epsilon, scale, mode, equal_length)
    return [CurveFamily(f"{f.name}+eps={epsilon:g}", FamilyKind.PERTURBED,
                        (lambda i: lambda t: shared.curves(t)[i])(i),
                        {**f.params, "base": f.name, "epsilon": epsilon, "scale": scale})
            for i, f in enumerate(families)]


# ---------- registry ----------

class FamilyRegistry:
    """
    Named block-set factories. Each factory is called as factory(blocks=..., n=..., **params).
    """

    def __init__(self):
        self._factories: dict[str, Callable[..., list[CurveFamily]]] = {}

    def register(self, name: str, factory: Callable[..., list[CurveFamily]]) -> None:
        if name in self._factories:
            raise ValueError(f"family {name!r} already registered")
        self._factories[name] = factory

    def build(self, name: str, blocks: int = 6, n: int = 512, **params) -> list[CurveFamily]:
        if name not in self._factories:
            raise ValueError(f"unknown family {name!r}; known: {', '.join(self.names())}")
        if blocks <= 0:
            raise ValueError(f"blocks must be positive, got {blocks}")
        return self._factories[name](blocks=blocks, n=n, **params)

    def names(self) -> list[str]:
        return sorted(self._factories)

    def __contains__(self, name: str) -> bool:
        return name in self._factories

    def __len__(self) -> int:
        return len(self._factories)

    def __str__(self) -> str:
        return f"FamilyRegistry({', '.join(self.names())})"


default_families = FamilyRegistry()
default_families.register(FamilyKind.CIRCLE.value, circle_blocks)
default_families.register(FamilyKind.ROTATING_CIRCLE.value, rotating_circle_blocks)
default_families.register(FamilyKind.TRANSLATING_CIRCLE.value, translating_circle_blocks)
default_families.register(FamilyKind.ELLIPSE.value, ellipse_blocks)
default_families.register(FamilyKind.SNAKE.value, snake_blocks)
