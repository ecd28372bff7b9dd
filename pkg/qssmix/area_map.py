# qssmix/area_map.py
"""
Area-preserving tubular maps Phi(s, y) = g(s) + beta(s, y) eta(s) and their inverses.

beta solves beta - (kappa/2) beta^2 = y / l, which makes det(dPhi/ds, dPhi/dy) = 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .core import ConvergenceError, GeometryError, InversionError
from .curve import Curve, FrenetData, SweepResult, frenet, perturb
from .numerics import derivative

logger = logging.getLogger(__name__)

FLAT_CURVATURE = 1e-8


def beta_closed_form(kappa, l, y) -> np.ndarray:
    """beta = (1 - sqrt(1 - 2 kappa y / l)) / kappa, evaluated in cancellation-free form."""
    kappa = np.asarray(kappa, dtype=float)
    l = np.asarray(l, dtype=float)
    y = np.asarray(y, dtype=float)
    disc = 1.0 - 2.0 * kappa * y / l
    if np.any(disc <= 0):
        bad = np.argwhere(np.broadcast_to(disc, np.broadcast(kappa, l, y).shape) <= 0)[0]
        raise GeometryError(f"tube too wide: 1 - 2 kappa y / l <= 0 at index {tuple(int(i) for i in bad)}",
                            node=int(bad[0]))
    flat = np.abs(kappa) < FLAT_CURVATURE
    series = y / l + kappa * y ** 2 / (2 * l ** 2)
    closed = (2.0 * y / l) / (1.0 + np.sqrt(disc))
    return np.where(flat, series, closed)


def beta_fixed_point(kappa_t, kappa, beta, l_t, l, y, *, max_iter: int = 100) -> tuple[np.ndarray, int]:
    """
    beta~ = beta + delta with delta the fixed point of
    delta = [y (1/l~ - 1/l) + (kappa~ - kappa) beta^2 / 2 + kappa~ delta^2 / 2] / (1 - kappa~ beta).
    """
    kappa_t, kappa, beta, l_t, l, y = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                                             for a in (kappa_t, kappa, beta, l_t, l, y)))
    source = y * (1.0 / l_t - 1.0 / l) + 0.5 * (kappa_t - kappa) * beta ** 2
    denom = 1.0 - kappa_t * beta
    tol = 1e-14 * max(float(np.max(np.abs(beta))), 1e-300)
    delta = np.zeros_like(beta)
    for it in range(1, max_iter + 1):
        new = (source + 0.5 * kappa_t * delta ** 2) / denom
        increment = float(np.max(np.abs(new - delta)))
        delta = new
        if increment <= tol:
            logger.debug("beta fixed point converged in %d iterations", it)
            return beta + delta, it
    raise ConvergenceError(f"beta fixed point did not contract in {max_iter} iterations", max_iter, increment)


def default_tube_radius(curve: Curve, frame: FrenetData | None = None) -> float:
    """r = min(1 / (4 sup|kappa|), 0.1 L), expressed in y units (scaled by min l)."""
    frame = frenet(curve) if frame is None else frame
    peak = float(np.max(np.abs(frame.curvature)))
    focal = np.inf if peak == 0 else 1.0 / (4.0 * peak)
    return float(min(focal, 0.1 * curve.length) * np.min(frame.speed))


class TubularMap:
    """Phi on [0, L] x (-r, r); cubic splines interpolate the node data between nodes."""

    def __init__(self, curve: Curve, frame: FrenetData, radius: float):
        if radius <= 0:
            raise GeometryError(f"tube radius must be positive, got {radius}")
        margin = 2.0 * np.abs(frame.curvature) * radius / frame.speed
        if np.any(margin >= 1.0):
            node = int(np.argmax(margin))
            raise GeometryError(f"tube radius {radius:.4g} crosses the focal radius at node {node}", node=node)
        self.curve = curve
        self.frame = frame
        self.radius = float(radius)

        s = curve.nodes
        data = {"gamma": curve.samples, "normal": frame.normal,
                "kappa": frame.curvature, "speed": frame.speed}
        if curve.closed:
            s = np.append(s, curve.length)
            data = {k: np.concatenate([v, v[:1]], axis=0) for k, v in data.items()}
        bc = "periodic" if curve.closed else "not-a-knot"
        self._spline = {k: CubicSpline(s, v, bc_type=bc, axis=0) for k, v in data.items()}
        self._dspline = {k: sp.derivative() for k, sp in self._spline.items()}

    # ---------- pointwise evaluation ----------
    def _wrap(self, s: np.ndarray) -> np.ndarray:
        return np.mod(s, self.curve.length) if self.curve.closed else s

    def beta(self, s, y) -> np.ndarray:
        s = self._wrap(np.asarray(s, dtype=float))
        return beta_closed_form(self._spline["kappa"](s), self._spline["speed"](s), y)

    def evaluate(self, s, y) -> np.ndarray:
        s = self._wrap(np.asarray(s, dtype=float))
        y = np.asarray(y, dtype=float)
        b = beta_closed_form(self._spline["kappa"](s), self._spline["speed"](s), y)
        return self._spline["gamma"](s) + b[..., None] * self._spline["normal"](s)

    def jacobian(self, s, y) -> np.ndarray:
        """Columns dPhi/ds and dPhi/dy, shape (..., 2, 2)."""
        s = self._wrap(np.asarray(s, dtype=float))
        y = np.asarray(y, dtype=float)
        kappa = self._spline["kappa"](s)
        l = self._spline["speed"](s)
        b = beta_closed_form(kappa, l, y)
        focal = 1.0 - kappa * b
        b_y = 1.0 / (l * focal)
        b_s = (self._dspline["kappa"](s) * b ** 2 / 2 - y * self._dspline["speed"](s) / l ** 2) / focal
        eta = self._spline["normal"](s)
        phi_s = self._dspline["gamma"](s) + b_s[..., None] * eta + b[..., None] * self._dspline["normal"](s)
        phi_y = b_y[..., None] * eta
        return np.stack([phi_s, phi_y], axis=-1)

    # ---------- node-grid evaluation ----------
    def y_grid(self, n_y: int = 64) -> np.ndarray:
        r = self.radius
        return -r + (np.arange(n_y) + 0.5) * (2 * r / n_y)

    def node_images(self, y: np.ndarray) -> np.ndarray:
        """Phi(s_j, y_k) from the node data, shape (n_s, n_y, 2)."""
        f = self.frame
        b = beta_closed_form(f.curvature[:, None], f.speed[:, None], np.asarray(y)[None, :])
        return self.curve.samples[:, None, :] + b[..., None] * f.normal[:, None, :]

    def jacobian_determinant(self, n_y: int = 64) -> np.ndarray:
        y = self.y_grid(n_y)
        img = self.node_images(y)
        phi_s = derivative(img, self.curve.spacing, 1, periodic=self.curve.closed, axis=0)
        phi_y = derivative(img, y[1] - y[0], 1, periodic=False, axis=1)
        return phi_s[..., 0] * phi_y[..., 1] - phi_s[..., 1] * phi_y[..., 0]

    def boundary_samples(self, n_cap: int = 32) -> np.ndarray:
        r = self.radius
        edges = [self.node_images(np.array([-r, r])).reshape(-1, 2)]
        if not self.curve.closed:
            y = np.linspace(-r, r, n_cap)
            img = self.node_images(y)
            edges += [img[0], img[-1]]
        return np.concatenate(edges, axis=0)

    def __repr__(self) -> str:
        return f"TubularMap({self.curve!r}, r={self.radius:.4g})"


def build_map(curve: Curve, frame: FrenetData | None = None, radius: float | None = None) -> TubularMap:
    frame = frenet(curve) if frame is None else frame
    radius = default_tube_radius(curve, frame) if radius is None else radius
    return TubularMap(curve, frame, radius)


@dataclass
class InversionResult:
    s: np.ndarray
    y: np.ndarray
    inside: np.ndarray


class InverseMap:
    """Psi = Phi^-1 by Newton iteration from the nearest precomputed image point."""

    def __init__(self, tmap: TubularMap, seeds: tuple[int, int] = (256, 64),
                 max_iter: int = 30, tol: float = 1e-12):
        self.map = tmap
        self.max_iter = max_iter
        self.tol = tol
        curve = tmap.curve
        n_s, n_y = seeds
        s = np.arange(n_s) * curve.length / n_s if curve.closed else np.linspace(0.0, curve.length, n_s)
        y = tmap.radius * np.linspace(-1.0, 1.0, n_y)
        S, Y = np.meshgrid(s, y, indexing="ij")
        images = tmap.evaluate(S, Y)
        gap_s = np.max(np.linalg.norm(np.diff(images, axis=0), axis=-1))
        gap_y = np.max(np.linalg.norm(np.diff(images, axis=1), axis=-1))
        self._gap = float(max(gap_s, gap_y))
        self._seed_s = S.ravel()
        self._seed_y = Y.ravel()
        self._tree = cKDTree(images.reshape(-1, 2))

    def __call__(self, points) -> InversionResult:
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        x = pts.reshape(-1, 2)
        tmap = self.map
        curve = tmap.curve
        r = tmap.radius

        s = np.full(x.shape[0], np.nan)
        y = np.full(x.shape[0], np.nan)
        inside = np.zeros(x.shape[0], dtype=bool)
        dist, idx = self._tree.query(x)
        active = np.flatnonzero(dist <= 2.0 * self._gap)
        if active.size:
            sa, ya, conv = self._newton(x[active], self._seed_s[idx[active]], self._seed_y[idx[active]])
            in_range = (np.abs(ya) < r) & (curve.closed | ((sa >= 0.0) & (sa <= curve.length)))
            stalled = ~conv & in_range
            if np.any(stalled):
                raise InversionError(f"Newton inversion stalled for {int(stalled.sum())} points inside the tube")
            s[active] = sa
            y[active] = ya
            inside[active] = conv & in_range
        return InversionResult(s.reshape(shape), y.reshape(shape), inside.reshape(shape))

    def _newton(self, x, s, y):
        tmap = self.map
        curve = tmap.curve
        r = tmap.radius
        s = s.copy()
        y = y.copy()
        done = np.zeros(x.shape[0], dtype=bool)
        for it in range(self.max_iter):
            todo = np.flatnonzero(~done)
            if todo.size == 0:
                break
            residual = tmap.evaluate(s[todo], y[todo]) - x[todo]
            small = np.linalg.norm(residual, axis=-1) <= self.tol
            done[todo[small]] = True
            todo, residual = todo[~small], residual[~small]
            if todo.size == 0:
                break
            step = np.linalg.solve(tmap.jacobian(s[todo], y[todo]), residual[..., None])[..., 0]
            s[todo] -= step[:, 0]
            y[todo] = np.clip(y[todo] - step[:, 1], -1.5 * r, 1.5 * r)
            if curve.closed:
                s[todo] = np.mod(s[todo], curve.length)
            else:
                s[todo] = np.clip(s[todo], -0.1 * curve.length, 1.1 * curve.length)
        else:
            residual = tmap.evaluate(s, y) - x
            done |= np.linalg.norm(residual, axis=-1) <= self.tol
        logger.debug("inverse map: %d/%d points converged", int(done.sum()), done.size)
        return s, y, done

    def jacobian(self, s, y) -> np.ndarray:
        """D(Psi) at Phi(s, y), i.e. the inverse of D(Phi)(s, y)."""
        return np.linalg.inv(self.map.jacobian(s, y))


def invert(tmap: TubularMap, points, inverse: InverseMap | None = None) -> InversionResult:
    return (InverseMap(tmap) if inverse is None else inverse)(points)


# ---------- stability ----------

@dataclass
class MapStabilityReport:
    c0: float
    c1: float
    c2: float
    inverse_c0: float
    inverse_c1: float
    hausdorff: float
    inverse_lipschitz_ok: bool
    inverse_lipschitz_ratio: float

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.__dict__.items()}


def inverse_lipschitz_check(phi: TubularMap, phi_t: TubularMap, n_points: int = 1000,
                            rng: np.random.Generator | None = None) -> tuple[bool, float]:
    """Check |A^-1 - B^-1| <= K^2 |A - B| with K = max(|A^-1|, |B^-1|) at random chart points."""
    rng = np.random.default_rng(0) if rng is None else rng
    s = rng.uniform(0.0, phi.curve.length, n_points)
    y = rng.uniform(-0.9, 0.9, n_points) * phi.radius
    A = phi.jacobian(s, y)
    B = phi_t.jacobian(s, y)
    inv_a, inv_b = np.linalg.inv(A), np.linalg.inv(B)
    norm = lambda m: np.linalg.norm(m, ord=2, axis=(-2, -1))
    K = np.maximum(norm(inv_a), norm(inv_b))
    lhs = norm(inv_a - inv_b)
    rhs = K ** 2 * norm(A - B)
    ok = bool(np.all(lhs <= rhs * (1 + 1e-9) + 1e-14))
    positive = rhs > 0
    ratio = float(np.max(lhs[positive] / rhs[positive])) if np.any(positive) else 0.0
    return ok, ratio


def map_stability_report(phi: TubularMap, phi_t: TubularMap, *, n_y: int = 64, inverse_stride: int = 2,
                         rng: np.random.Generator | None = None) -> MapStabilityReport:
    """Sampled C^0..C^2 distance of the maps, C^0/C^1 distance of the inverses, Hausdorff distance."""
    c, ct = phi.curve, phi_t.curve
    if c.n != ct.n or c.closed != ct.closed or abs(c.length - ct.length) > 1e-14 * c.length \
            or abs(phi.radius - phi_t.radius) > 1e-14 * phi.radius:
        raise GeometryError("stability report needs maps on the same (s, y) sample grid")

    y = phi.y_grid(n_y)
    dy = y[1] - y[0]
    diff = phi_t.node_images(y) - phi.node_images(y)
    ds = c.spacing
    mag = lambda a: float(np.max(np.linalg.norm(a, axis=-1)))
    d_s = derivative(diff, ds, 1, periodic=c.closed, axis=0)
    d_y = derivative(diff, dy, 1, periodic=False, axis=1)
    c0 = mag(diff)
    c1 = max(c0, mag(d_s), mag(d_y))
    c2 = max(c1,
             mag(derivative(diff, ds, 2, periodic=c.closed, axis=0)),
             mag(derivative(d_s, dy, 1, periodic=False, axis=1)),
             mag(derivative(diff, dy, 2, periodic=False, axis=1)))

    # inverses on images of the inner part of the tube
    inner = y[np.abs(y) <= 0.8 * phi.radius]
    S, Y = np.meshgrid(c.nodes[::inverse_stride], inner, indexing="ij")
    points = phi.node_images(inner)[::inverse_stride].reshape(-1, 2)
    psi, psi_t = InverseMap(phi)(points), InverseMap(phi_t)(points)
    both = psi.inside & psi_t.inside
    inverse_c0 = inverse_c1 = 0.0
    if np.any(both):
        d_param = psi_t.s[both] - psi.s[both]
        if c.closed:
            d_param = (d_param + 0.5 * c.length) % c.length - 0.5 * c.length
        inverse_c0 = float(np.max(np.hypot(d_param, psi_t.y[both] - psi.y[both])))
        j = np.linalg.inv(phi.jacobian(psi.s[both], psi.y[both]))
        jt = np.linalg.inv(phi_t.jacobian(psi_t.s[both], psi_t.y[both]))
        inverse_c1 = max(inverse_c0, float(np.max(np.linalg.norm(jt - j, ord=2, axis=(-2, -1)))))

    a, b = phi.boundary_samples(), phi_t.boundary_samples()
    hausdorff = float(max(cKDTree(a).query(b)[0].max(), cKDTree(b).query(a)[0].max()))
    ok, ratio = inverse_lipschitz_check(phi, phi_t, rng=rng)
    return MapStabilityReport(c0, c1, c2, inverse_c0, inverse_c1, hausdorff, ok, ratio)


def map_stability_sweep(curve: Curve, profile: np.ndarray, epsilons: Sequence[float], *,
                        scale: float = 0.05, radius: float | None = None) -> SweepResult:
    """Map, inverse, Hausdorff and beta-increment distances against epsilon."""
    frame = frenet(curve)
    phi = build_map(curve, frame, radius)
    y = phi.y_grid()
    beta = beta_closed_form(frame.curvature[:, None], frame.speed[:, None], y[None, :])
    result = SweepResult(np.asarray(epsilons, dtype=float))
    rows: dict[str, list[float]] = {}
    for eps in result.epsilons:
        h = eps * scale * curve.length * np.asarray(profile)
        curve_t = perturb(curve, h, frame)
        frame_t = frenet(curve_t)
        phi_t = TubularMap(curve_t, frame_t, phi.radius)
        report = map_stability_report(phi, phi_t)
        beta_t, _ = beta_fixed_point(frame_t.curvature[:, None], frame.curvature[:, None], beta,
                                     frame_t.speed[:, None], frame.speed[:, None], y[None, :])
        values = {**{k: v for k, v in report.as_dict().items() if not k.startswith("inverse_lipschitz")},
                  "delta_beta": float(np.max(np.abs(beta_t - beta)))}
        for k, v in values.items():
            rows.setdefault(k, []).append(v)
        logger.info("map stability eps=%g: c2=%.3e hausdorff=%.3e", eps, report.c2, report.hausdorff)
    result.distances = {k: np.asarray(v) for k, v in rows.items()}
    return result
