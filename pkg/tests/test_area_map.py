# tests/test_area_map.py
import numpy as np
import pytest

from qssmix.area_map import (InverseMap, TubularMap, beta_closed_form, beta_fixed_point, build_map, invert,
                             map_stability_report, map_stability_sweep)
from qssmix.core import GeometryError
from qssmix.curve import Curve, frenet, mode_profile, perturb


def test_beta_closed_form_solves_its_quadratic():
    kappa, l = -4.0, 1.0
    y = np.linspace(-0.05, 0.05, 11)
    beta = beta_closed_form(kappa, l, y)
    assert np.allclose(beta - 0.5 * kappa * beta ** 2, y / l, atol=1e-15)
    assert np.allclose(beta_closed_form(0.0, 2.0, y), y / 2.0)


def test_beta_closed_form_rejects_wide_tube():
    with pytest.raises(GeometryError):
        beta_closed_form(-4.0, 1.0, np.array([0.0, -0.2]))


def test_beta_fixed_point_matches_closed_form():
    y = np.linspace(-0.05, 0.05, 21)
    beta = beta_closed_form(-4.0, 1.0, y)
    beta_t, iterations = beta_fixed_point(-3.5, -4.0, beta, 1.05, 1.0, y)
    assert np.allclose(beta_t, beta_closed_form(-3.5, 1.05, y), atol=1e-13)
    assert iterations < 100


@pytest.mark.parametrize("name, tol", [("circle", 1e-6), ("ellipse", 1e-5)])
def test_jacobian_determinant_is_one(name, tol, request):
    curve = request.getfixturevalue(name)
    det = build_map(curve).jacobian_determinant()
    assert np.max(np.abs(det - 1.0)) < tol


def test_spline_jacobian_determinant(circle, rng):
    tmap = build_map(circle)
    s = rng.uniform(0.0, circle.length, 200)
    y = rng.uniform(-0.9, 0.9, 200) * tmap.radius
    assert np.max(np.abs(np.linalg.det(tmap.jacobian(s, y)) - 1.0)) < 1e-5


def test_focal_radius_is_rejected(circle):
    with pytest.raises(GeometryError):
        TubularMap(circle, frenet(circle), 0.2)


def test_inverse_round_trip(ellipse, rng):
    tmap = build_map(ellipse)
    s = rng.uniform(0.1, 0.9, 300) * ellipse.length
    y = rng.uniform(-0.8, 0.8, 300) * tmap.radius
    result = invert(tmap, tmap.evaluate(s, y))
    assert np.all(result.inside)
    assert np.allclose(result.s, s, atol=1e-9)
    assert np.allclose(result.y, y, atol=1e-9)


def test_points_outside_the_tube(circle):
    inverse = InverseMap(build_map(circle))
    result = inverse(np.array([[0.5, 0.5], [0.0, 0.0]]))
    assert not result.inside.any()
    assert np.all(np.isnan(result.s))


def test_stability_report_of_identical_maps(circle):
    tmap = build_map(circle)
    report = map_stability_report(tmap, tmap)
    assert report.c2 == 0.0 and report.hausdorff == 0.0
    assert report.inverse_c0 < 1e-9


def test_stability_report_needs_common_grid(circle):
    other = build_map(circle, radius=0.5 * build_map(circle).radius)
    with pytest.raises(GeometryError):
        map_stability_report(build_map(circle), other)


def test_map_stability_is_linear_in_epsilon():
    curve = Curve.circle(0.25, n=128)
    profile = mode_profile(curve, 2)
    sweep = map_stability_sweep(curve, profile, [1e-2, 1e-3])
    assert {"c0", "c1", "c2", "inverse_c0", "inverse_c1", "hausdorff", "delta_beta"} <= set(sweep.distances)
    slopes = sweep.slopes()
    assert slopes["c0"] == pytest.approx(1.0, abs=0.1)
    assert slopes["delta_beta"] == pytest.approx(1.0, abs=0.1)


def test_inverse_lipschitz_bound(circle):
    tmap = build_map(circle)
    h = 1e-3 * mode_profile(circle, 3)
    curve_t = perturb(circle, h)
    report = map_stability_report(tmap, TubularMap(curve_t, frenet(curve_t), tmap.radius))
    assert report.inverse_lipschitz_ok
    assert report.inverse_lipschitz_ratio <= 1.0 + 1e-9
