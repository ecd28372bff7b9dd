# qssmix/constraints.py
"""
Area-preserving and equal-length projections of normal perturbations.

Both solvers return ``(perturbations, ConstraintReport)``; non-convergence is
reported, never raised.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .curve import (Curve, FrenetData, NormalPerturbation, area_difference, curve_length, flat_window,
                    frenet, integrate, kernel_projection, perturbation_values, polynomial_bump)

logger = logging.getLogger(__name__)

AREA_TOLERANCE = 1e-12
REPORT_TOLERANCE = 1e-10


@dataclass
class ConstraintReport:
    area_defects: np.ndarray
    length_defects: np.ndarray = field(default_factory=lambda: np.zeros(0))
    newton_iterations: int = 0
    converged: bool = True
    lengths: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def area_defect(self) -> float:
        return float(np.max(np.abs(self.area_defects))) if self.area_defects.size else 0.0

    @property
    def length_defect(self) -> float:
        return float(np.max(np.abs(self.length_defects))) if self.length_defects.size else 0.0

    def satisfied(self, length_scale: float, tol: float = REPORT_TOLERANCE) -> bool:
        return (self.area_defect <= tol * length_scale ** 2
                and self.length_defect <= tol * length_scale)


def _time_label(u) -> float | None:
    return u.time_label if isinstance(u, NormalPerturbation) else None


def project_area_preserving(curve: Curve, u, basis: np.ndarray | None = None, *,
                            frame: FrenetData | None = None, max_iter: int = 50,
                            tol: float = AREA_TOLERANCE) -> tuple[NormalPerturbation, ConstraintReport]:
    """
    Solve F(alpha) = area_difference(alpha * phi_0 + u) = 0 by 1-d Newton from alpha = 0.

    ``u`` must lie in the kernel (int u d(sigma) = 0) and ``basis`` must integrate to one.
    """
    frame = frenet(curve) if frame is None else frame
    phi0 = polynomial_bump(curve, frame=frame) if basis is None else np.asarray(basis, dtype=float)
    u_vals = perturbation_values(curve, u)
    if abs(integrate(curve, phi0, frame) - 1.0) > 1e-10:
        raise ValueError(f"basis must satisfy int phi_0 d(sigma) = 1, got {integrate(curve, phi0, frame)}")
    mean = integrate(curve, u_vals, frame)
    if abs(mean) > 1e-8 * integrate(curve, np.abs(u_vals), frame):
        raise ValueError(f"u must lie in the kernel of the area variation, int u d(sigma) = {mean:.3e}")

    scale = curve_length(curve, frame=frame) ** 2
    kappa = frame.curvature
    alpha = 0.0
    iterations = 0
    polished = False
    residual = area_difference(curve, u_vals, frame)
    while iterations < max_iter:
        if abs(residual) <= tol * scale:
            if polished or residual == 0.0:
                break
            polished = True
        h = alpha * phi0 + u_vals
        slope = integrate(curve, phi0 - kappa * phi0 * h, frame)
        alpha -= residual / slope
        iterations += 1
        residual = area_difference(curve, alpha * phi0 + u_vals, frame)
        logger.debug("area projection: iteration %d, alpha=%.3e, F=%.3e", iterations, alpha, residual)

    converged = abs(residual) <= tol * scale
    if not converged:
        logger.warning("area projection did not converge in %d iterations (F=%.3e)", max_iter, residual)
    h = NormalPerturbation.on(curve, alpha * phi0 + u_vals, time_label=_time_label(u))
    return h, ConstraintReport(np.array([residual]), newton_iterations=iterations, converged=converged)


def area_quadratic_root(curve: Curve, u, basis: np.ndarray | None = None,
                        frame: FrenetData | None = None) -> float:
    """Closed-form alpha for constant curvature: a alpha^2 + b alpha + c = 0, root nearest zero."""
    frame = frenet(curve) if frame is None else frame
    kappa = float(np.mean(frame.curvature))
    if np.max(np.abs(frame.curvature - kappa)) > 1e-8 * max(1.0, abs(kappa)):
        raise ValueError("the quadratic root needs constant curvature")
    phi0 = polynomial_bump(curve, frame=frame) if basis is None else np.asarray(basis, dtype=float)
    u_vals = perturbation_values(curve, u)
    a = -0.5 * kappa * integrate(curve, phi0 ** 2, frame)
    b = 1.0 - kappa * integrate(curve, phi0 * u_vals, frame)
    c = -0.5 * kappa * integrate(curve, u_vals ** 2, frame)
    if a == 0.0:
        return -c / b
    disc = np.sqrt(b * b - 4 * a * c)
    return float(-2 * c / (b + np.copysign(disc, b)))


def correction_direction(curve: Curve, frame: FrenetData | None = None, mode: int = 3) -> np.ndarray:
    """Unit-sup kernel direction whose length response does not vanish."""
    frame = frenet(curve) if frame is None else frame
    s = curve.nodes / curve.length
    z = np.cos(2 * np.pi * mode * s)
    kappa = frame.curvature
    peak = float(np.max(np.abs(kappa)))
    if peak > 0 and np.std(kappa) > 1e-8 * peak:
        z = z + kappa / peak
    z = kernel_projection(curve, flat_window(curve) * z, frame=frame)
    return z / np.max(np.abs(z))


def project_equal_length(curves: Sequence[Curve], hs: Sequence, *,
                         directions: Sequence[np.ndarray] | None = None, max_iter: int = 100,
                         tol: float = REPORT_TOLERANCE) -> tuple[list[NormalPerturbation], ConstraintReport]:
    """
    Equalise the perturbed lengths of N curves inside the area-preserving manifold.

    Every curve shorter than the longest one moves along a kernel direction z_i; the
    scalar c_i solves L~_i(c_i) = max_j L~_j by bracketing and Brent's method, with the
    area constraint re-imposed at every evaluation.
    """
    if len(curves) != len(hs):
        raise ValueError(f"{len(curves)} curves but {len(hs)} perturbations")
    frames = [frenet(c) for c in curves]
    bases = [polynomial_bump(c, frame=f) for c, f in zip(curves, frames)]
    values = [perturbation_values(c, h) for c, h in zip(curves, hs)]
    scale = max(curve_length(c, frame=f) for c, f in zip(curves, frames))
    lengths = np.array([curve_length(c, v, f) for c, v, f in zip(curves, values, frames)])
    target = float(np.max(lengths))
    iterations = 0
    converged = True
    out: list[np.ndarray] = []

    for i, (curve, frame, phi0, h) in enumerate(zip(curves, frames, bases, values)):
        if target - lengths[i] <= tol * scale:
            out.append(h)
            continue
        z = correction_direction(curve, frame) if directions is None else np.asarray(directions[i])
        kernel_part = kernel_projection(curve, h, phi0, frame)

        def residual(c: float) -> float:
            nonlocal iterations
            hc, rep = project_area_preserving(curve, kernel_part + c * z, phi0, frame=frame)
            iterations += rep.newton_iterations
            return curve_length(curve, hc.values, frame) - target

        bracket = _bracket(residual, step=1e-6 * scale, limit=0.5 * scale)
        if bracket is None:
            logger.warning("equal-length projection: no bracket found for curve %d", i)
            converged = False
            out.append(h)
            continue
        root, info = brentq(residual, *bracket, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps,
                            maxiter=max_iter, full_output=True, disp=False)
        iterations += info.iterations
        converged &= bool(info.converged)
        hc, _ = project_area_preserving(curve, kernel_part + root * z, phi0, frame=frame)
        out.append(hc.values)
        logger.debug("equal-length projection: curve %d, c=%.6e after %d Brent steps", i, root, info.iterations)

    results = [NormalPerturbation.on(c, v, time_label=_time_label(h)) for c, v, h in zip(curves, out, hs)]
    final_lengths = np.array([curve_length(c, r.values, f) for c, r, f in zip(curves, results, frames)])
    areas = np.array([area_difference(c, r.values, f) for c, r, f in zip(curves, results, frames)])
    report = ConstraintReport(areas, final_lengths[1:] - final_lengths[0], iterations, converged, final_lengths)
    report.converged = converged and report.satisfied(scale, tol)
    if not report.converged:
        logger.warning("equal-length projection: area defect %.3e, length defect %.3e",
                       report.area_defect, report.length_defect)
    return results, report


def _bracket(residual, step: float, limit: float) -> tuple[float, float] | None:
    """Expand |c| geometrically on both sides of 0 until the residual changes sign."""
    g0 = residual(0.0)
    if g0 == 0.0:
        return (0.0, 0.0)
    previous = {1.0: 0.0, -1.0: 0.0}
    c = step
    while c <= limit:
        for sign in (1.0, -1.0):
            if residual(sign * c) * g0 <= 0.0:
                lo, hi = sorted((previous[sign], sign * c))
                return lo, hi
            previous[sign] = sign * c
        c *= 2.0
    return None
