# tests/test_time_smoothing.py
import logging

import numpy as np
import pytest

from qssmix.core import FieldKind, ResolutionError
from qssmix.field import GridField
from qssmix.qss_family import FunctionBlocks
from qssmix.time_smoothing import (SmoothedFamily, TimeSchedule, build_eta, forcing, forcing_components, junction,
                                   smoothed_fields)


def test_junctions():
    assert [junction(n) for n in range(3)] == pytest.approx([0.0, 0.75, 8.0 / 9.0])


def test_viscosity_schedule():
    assert TimeSchedule(1).mu == pytest.approx(1.0 / 25.0)
    assert TimeSchedule(2).mu == pytest.approx(1024.0 / 625.0)
    with pytest.raises(ValueError):
        TimeSchedule(0)


def test_interval_lookup():
    schedule = TimeSchedule(2)
    assert schedule.interval(0.0) == 0
    assert schedule.interval(0.75) == 1
    assert schedule.interval(0.8) == 1
    assert schedule.interval(0.95) == 3
    n, x = schedule.local_time(0.375)
    assert n == 0 and x == pytest.approx(0.5)
    assert schedule.freeze_time == pytest.approx(junction(3))
    with pytest.raises(ValueError):
        schedule.interval(1.0)


def test_step_endpoints_and_symmetry():
    eta = build_eta(TimeSchedule(1))
    assert eta.step(0.0) == 0.0 and eta.step(1.0) == 1.0
    assert eta.step(0.5) == pytest.approx(0.5, abs=1e-12)
    assert eta.step(0.3) + eta.step(0.7) == pytest.approx(1.0, abs=1e-12)
    assert eta.step_derivative(0.0) == 0.0 and eta.step_derivative(1.0) == 0.0
    with pytest.raises(ValueError):
        eta.step_derivative(0.5, 3)


def test_step_derivatives_match_differences():
    eta = build_eta(TimeSchedule(1))
    h = 1e-5
    for x in (0.2, 0.5, 0.8):
        assert eta.step_derivative(x) == pytest.approx((eta.step(x + h) - eta.step(x - h)) / (2 * h), rel=1e-6)
        fd2 = (eta.step_derivative(x + h) - eta.step_derivative(x - h)) / (2 * h)
        assert eta.step_derivative(x, 2) == pytest.approx(fd2, rel=1e-5, abs=1e-8)


def test_eta_fixes_junctions_and_is_monotone():
    eta = build_eta(TimeSchedule(2))
    for n in range(3):
        assert eta(junction(n)) == pytest.approx(junction(n), abs=1e-15)
        assert eta.derivative(junction(n)) == 0.0
    t = np.linspace(0.0, 0.999, 400)
    assert np.all(np.diff([eta(s) for s in t]) >= 0.0)
    assert eta(1.0) == 1.0


def test_resolution_must_fit_the_finest_tiling():
    with pytest.raises(ResolutionError):
        SmoothedFamily(FunctionBlocks.patching(), 1, 15)
    with pytest.raises(ValueError):
        SmoothedFamily(FunctionBlocks.patching(), 5, 2 * 5 ** 5)


def test_scalar_is_continuous_across_junctions():
    family = SmoothedFamily(FunctionBlocks.patching(), 1, 640)
    before = family.level_scalar(0, 1.0).values
    after = family.level_scalar(1, 0.0).values
    assert np.max(np.abs(before - after)) < 1e-10
    assert np.allclose(family.scalar(0.75).values, after)


def test_velocity_stops_at_junctions_and_after_freeze():
    family = SmoothedFamily(FunctionBlocks.translation(), 1, 20)
    for t in (0.0, 0.75, family.schedule.freeze_time, 0.99):
        assert family.velocity(t).sup_norm() == 0.0
    assert family.velocity(0.3).sup_norm() > 0.0


def test_forcing_of_a_uniform_flow_is_its_acceleration():
    w = np.array([1.0, 0.5])
    family = SmoothedFamily(FunctionBlocks.translation(tuple(w)), 1, 20)
    t = 0.3
    n, x = family.schedule.local_time(t)
    dt = family.schedule.interval_length(n)
    expected = family.eta.step_derivative(x, 2) / dt ** 2 * w / 2.0
    g = family.forcing(t).values
    assert np.allclose(g[0], expected[0], rtol=1e-5)
    assert np.allclose(g[1], expected[1], rtol=1e-5)


def test_forcing_components_of_a_uniform_flow():
    comp = forcing_components(FunctionBlocks.translation(), 1, samples=3, tile_resolution=16)
    assert comp.nonlinear < 1e-9 and comp.viscous < 1e-9
    assert comp.total == pytest.approx(comp.time, rel=1e-9)
    assert set(comp.as_dict()) == {"m", "mu", "total", "time", "nonlinear", "viscous"}


def test_smoothed_fields_pair():
    family = SmoothedFamily(FunctionBlocks.translation(), 1, 20)
    v, rho = smoothed_fields(family, 0.3)
    assert v.is_vector and not rho.is_vector
    assert np.array_equal(v.values, family.velocity(0.3).values)
    assert np.array_equal(rho.values, family.scalar(0.3).values)
    v_end, rho_end = smoothed_fields(family, 1.0)
    assert not np.any(v_end.values)
    assert np.array_equal(rho_end.values, family.scalar(family.schedule.freeze_time).values)
    with pytest.raises(ValueError):
        smoothed_fields(family, 1.5)


def _shear(n: int) -> GridField:
    return GridField.from_function(lambda x1, x2: np.stack([np.sin(2 * np.pi * x2), 0 * x2]), n,
                                   kind=FieldKind.VECTOR)


def test_forcing_of_a_static_shear_is_viscous():
    shear, mu = _shear(32), 0.01
    g = forcing(lambda t: shear, mu, 0.4)
    assert np.allclose(g.values, mu * 4 * np.pi ** 2 * shear.values, atol=1e-10)


def test_forcing_of_a_growing_shear():
    shear, mu, t = _shear(32), 0.01, 0.4
    g = forcing(lambda s: shear.scale(s ** 2), mu, t)
    expected = (2 * t + mu * 4 * np.pi ** 2 * t ** 2) * shear.values
    assert np.allclose(g.values, expected, atol=1e-8)


def test_under_resolved_tubes_are_reported(caplog):
    blocks = FunctionBlocks.translation()
    blocks.radius = 0.06
    with caplog.at_level(logging.WARNING, logger="qssmix.time_smoothing"):
        SmoothedFamily(blocks, 1, 20)
    assert "level 0: the tube radius spans 0.60 cells" in caplog.text
    assert "level 1" in caplog.text
