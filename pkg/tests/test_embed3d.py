# tests/test_embed3d.py
import numpy as np
import pytest

from qssmix.core import FieldKind
from qssmix.embed3d import DEFAULT_DEPTH, dissipation_aggregate, lift, ns_residual, zero_forcing
from qssmix.field import GridField


def sine(n: int, m1: int = 1, m2: int = 0) -> GridField:
    return GridField.from_function(lambda x1, x2: np.sin(2 * np.pi * (m1 * x1 + m2 * x2)), n)


def shear(n: int) -> GridField:
    return GridField.from_function(lambda x1, x2: np.stack([np.sin(2 * np.pi * x2), 0 * x2]), n,
                                   kind=FieldKind.VECTOR)


def test_components_are_an_x3_independent_view():
    u = lift(shear(16), sine(16))
    comps = u.components()
    assert comps.shape == (3, 16, 16, DEFAULT_DEPTH)
    assert not comps.flags.writeable
    assert np.array_equal(comps[2, ..., 0], comps[2, ..., -1])
    assert np.array_equal(comps[2, ..., 1], sine(16).values)


def test_gradient_energy_splits_into_velocity_and_theta():
    u = lift(shear(32), sine(32, 2, 1))
    total = u.gradient_energy()
    assert total == pytest.approx(u.theta.gradient_energy() + u.velocity.gradient_energy(), rel=1e-10)
    assert u.theta.gradient_energy() == pytest.approx(2 * np.pi ** 2 * 5, rel=1e-10)


def test_divergence_free_lift():
    stream = GridField.from_function(lambda x1, x2: np.sin(2 * np.pi * x1) * np.cos(4 * np.pi * x2), 32)
    u = lift(stream.perp_gradient(), sine(32))
    assert np.max(np.abs(u.divergence())) < 1e-10


def test_zero_forcing_has_no_vertical_component():
    g = zero_forcing(16, t=0.5)
    assert g.is_vector and g.time == 0.5
    u = lift(shear(16), sine(16), g)
    assert not np.any(u.forcing_components()[2])
    assert u.forcing_divergence_sup() == 0.0


def test_forcing_divergence_is_reported():
    gradient = sine(32).gradient()
    u = lift(shear(32), sine(32), gradient)
    assert u.forcing_divergence_sup() == pytest.approx(4 * np.pi ** 2, rel=1e-2)


def test_lift_argument_errors():
    with pytest.raises(TypeError):
        lift(sine(16), sine(16))
    with pytest.raises(ValueError):
        lift(shear(16), sine(32))
    with pytest.raises(ValueError):
        lift(shear(16), sine(16), zero_forcing(32))


def test_residual_of_an_exact_inviscid_shear_solution():
    n = 64
    v = shear(n)

    def lifted_at(t):
        theta = GridField.from_function(lambda x1, x2: np.sin(2 * np.pi * (x1 - t * np.sin(2 * np.pi * x2))), n,
                                        time=t)
        return lift(v, theta, zero_forcing(n, t))

    report = ns_residual(lifted_at, 0.0, 0.3)
    assert report.horizontal < 1e-10
    assert report.vertical < 1e-7
    assert report.forcing_vertical == 0.0
    assert report.worst == report.vertical
    assert set(report.as_dict()) == {"time", "horizontal", "vertical", "forcing_vertical", "forcing_divergence"}


def test_viscous_residual_sees_the_missing_diffusion():
    n, mu = 32, 0.1
    u = lift(shear(n), sine(n))
    report = ns_residual(lambda t: u, mu, 0.5)
    # a frozen field misses mu lap v and mu lap theta
    assert report.horizontal == pytest.approx(mu * 4 * np.pi ** 2, rel=1e-2)
    assert report.vertical > 0


def test_dissipation_aggregate_bounds():
    n, mu = 32, 0.01
    times = [0.0, 0.5, 1.0]
    fields = [lift(shear(n), sine(n)) for _ in times]
    agg = dissipation_aggregate(fields, times, mu)
    assert agg.vertical == pytest.approx(mu * 2 * np.pi ** 2, rel=1e-10)
    assert agg.horizontal == pytest.approx(mu * 2 * np.pi ** 2, rel=1e-10)
    assert agg.total == pytest.approx(agg.vertical + agg.horizontal, rel=1e-10)
    assert agg.bounds(agg.vertical)
    assert not agg.bounds(2 * agg.vertical)
    assert agg.as_dict()["mu"] == mu
