# tests/test_constraints.py
import numpy as np
import pytest

from qssmix.constraints import (area_quadratic_root, correction_direction, project_area_preserving,
                                project_equal_length)
from qssmix.curve import (Curve, area_difference, curve_length, frenet, integrate, kernel_projection,
                          mode_profile, polynomial_bump)
from qssmix.families import CurveFamily


def _kernel_profile(curve, amplitude, mode=2, phase=0.0):
    frame = frenet(curve)
    u = kernel_projection(curve, mode_profile(curve, mode, phase=phase), frame=frame)
    return amplitude * u / np.max(np.abs(u))


def test_area_projection_on_circle(circle):
    u = _kernel_profile(circle, 0.01)
    h, report = project_area_preserving(circle, u)
    assert report.converged
    assert abs(area_difference(circle, h.values)) <= 1e-12 * curve_length(circle) ** 2
    assert report.newton_iterations <= 10


def test_area_projection_matches_quadratic_root(circle):
    u = _kernel_profile(circle, 0.01)
    phi0 = polynomial_bump(circle)
    h, _ = project_area_preserving(circle, u, phi0)
    alpha = area_quadratic_root(circle, u, phi0)
    assert np.allclose(h.values, alpha * phi0 + u, atol=1e-10)


def test_area_projection_on_open_curve(snake_curve):
    u = _kernel_profile(snake_curve, 0.005)
    h, report = project_area_preserving(snake_curve, u)
    assert report.satisfied(snake_curve.length, 1e-10)
    assert h.is_admissible(1e-8)


def test_area_projection_rejects_mean(circle):
    with pytest.raises(ValueError):
        project_area_preserving(circle, np.full(circle.n, 0.01))


def test_correction_direction_is_in_kernel(ellipse):
    frame = frenet(ellipse)
    z = correction_direction(ellipse, frame)
    assert np.max(np.abs(z)) == pytest.approx(1.0)
    assert abs(integrate(ellipse, z, frame)) < 1e-12


def test_equal_length_projection():
    curves = [Curve.circle(0.23, n=256), Curve.ellipse(0.3, 0.15, center=(0.5, 0.5), n=256)]
    hs = [_kernel_profile(c, 0.004, phase=i) for i, c in enumerate(curves)]
    hs = [project_area_preserving(c, u)[0] for c, u in zip(curves, hs)]
    out, report = project_equal_length(curves, hs)
    lengths = [curve_length(c, h.values) for c, h in zip(curves, out)]
    assert report.converged
    assert abs(lengths[0] - lengths[1]) <= 1e-10 * max(lengths)
    assert report.area_defect <= 1e-10 * max(lengths) ** 2


def test_equal_length_needs_matching_inputs(circle):
    with pytest.raises(ValueError):
        project_equal_length([circle, circle], [np.zeros(circle.n)])


def test_equal_length_projection_of_six_snakes(rng):
    curves = [CurveFamily.snake(i, n=256).curve(1.0) for i in range(6)]
    hs = []
    for c in curves:
        frame = frenet(c)
        modes = rng.integers(2, 6, size=3)
        phases = rng.uniform(0.0, 2 * np.pi, size=3)
        weights = rng.standard_normal(3)
        u = sum(w * mode_profile(c, int(k), phase=p) for w, k, p in zip(weights, modes, phases))
        u = kernel_projection(c, u, polynomial_bump(c, frame=frame), frame)
        u = 1e-3 * 0.05 * c.length * u / np.max(np.abs(u))
        hs.append(project_area_preserving(c, u, frame=frame)[0])
    out, report = project_equal_length(curves, hs)
    lengths = [curve_length(c, h.values) for c, h in zip(curves, out)]
    scale = max(lengths)
    assert report.converged
    assert max(lengths) - min(lengths) <= 1e-10 * scale
    assert report.area_defect <= 1e-10 * scale ** 2
    assert all(h.is_admissible() for h in out)
