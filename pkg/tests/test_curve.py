# tests/test_curve.py
import numpy as np
import pytest

from qssmix.core import GeometryError
from qssmix.curve import (Curve, NormalPerturbation, area_difference, curve_length, frenet, integrate,
                          kernel_projection, mode_profile, perturb, perturbation_sweep, polynomial_bump,
                          shoelace_area, stretch_and_curvature)


def test_clockwise_circle_frame(circle):
    frame = frenet(circle)
    assert np.allclose(frame.curvature, -4.0, atol=1e-8)
    assert np.allclose(frame.speed, 1.0, atol=1e-10)
    outward = circle.samples - 0.5
    assert np.all(np.sum(frame.normal * outward, axis=1) > 0)


def test_circle_area_difference_is_exact(circle):
    R, c = 0.25, 0.01
    exact = np.pi * ((R + c) ** 2 - R ** 2)
    assert area_difference(circle, np.full(circle.n, c)) == pytest.approx(exact, rel=1e-10)


def test_area_difference_agrees_with_shoelace(circle):
    h = 0.01 * np.cos(3 * 2 * np.pi * circle.nodes / circle.length)
    grown = perturb(circle, h)
    delta = shoelace_area(circle) - shoelace_area(grown)
    assert area_difference(circle, h) == pytest.approx(delta, abs=5e-6)


def test_shoelace_area_sign(circle):
    assert shoelace_area(circle) == pytest.approx(-np.pi * 0.25 ** 2, rel=1e-3)


def test_curve_length_of_grown_circle(circle):
    assert curve_length(circle) == pytest.approx(2 * np.pi * 0.25, rel=1e-9)
    assert curve_length(circle, np.full(circle.n, 0.02)) == pytest.approx(2 * np.pi * 0.27, rel=1e-10)


def test_open_area_difference_needs_vanishing_ends(snake_curve):
    with pytest.raises(ValueError):
        area_difference(snake_curve, np.ones(snake_curve.n))


def test_constant_speed_is_enforced():
    s = np.linspace(0.0, 1.0, 100)
    with pytest.raises(GeometryError):
        Curve(np.stack([s ** 2, np.zeros_like(s)], axis=1), 1.0, 1.0)


def test_too_few_nodes():
    with pytest.raises(GeometryError):
        Curve.segment((0.0, 0.0), (1.0, 0.0), n=10)


def test_from_function_resamples_at_constant_speed(ellipse):
    speed = np.linalg.norm(ellipse.derivative(1), axis=1)
    assert np.max(np.abs(speed - speed.mean())) / speed.mean() < 1e-6
    assert ellipse.closed and ellipse.constant_speed


def test_perturbation_vanishes_at_time_zero(circle):
    with pytest.raises(ValueError):
        NormalPerturbation.on(circle, 1e-3, time_label=0.0)
    assert NormalPerturbation.zero(circle).amplitude == 0.0


def test_open_perturbation_admissibility(snake_curve):
    bump = NormalPerturbation.on(snake_curve, polynomial_bump(snake_curve) * 1e-3)
    assert bump.is_admissible(1e-6)
    flat = NormalPerturbation.on(snake_curve, 1e-3)
    assert not flat.is_admissible()


def test_kernel_projection_has_zero_mean(circle):
    frame = frenet(circle)
    u = kernel_projection(circle, mode_profile(circle, 2) + 0.3, frame=frame)
    assert abs(integrate(circle, u, frame)) < 1e-12


def test_polynomial_bump_integrates_to_one(snake_curve):
    assert integrate(snake_curve, polynomial_bump(snake_curve)) == pytest.approx(1.0, rel=1e-12)


def test_first_order_expansion_is_second_order_accurate(circle):
    base = 0.002 * np.sin(2 * np.pi * 2 * circle.nodes / circle.length)
    defects = [stretch_and_curvature(circle, eps * base).defects()["normal"] for eps in (1.0, 0.5)]
    assert defects[0] / defects[1] == pytest.approx(4.0, rel=0.1)


def test_perturbation_sweep_is_linear_in_epsilon(circle):
    profile = mode_profile(circle, 2)
    sweep = perturbation_sweep(circle, profile, [1e-2, 1e-3, 1e-4])
    slopes = sweep.slopes()
    assert slopes["speed_d0"] == pytest.approx(1.0, abs=0.05)
    assert slopes["curvature_d2"] == pytest.approx(1.0, abs=0.05)
    assert len(sweep.rows()) == 3
