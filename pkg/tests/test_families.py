# tests/test_families.py
import numpy as np
import pytest

from qssmix.curve import curve_length
from qssmix.families import (CurveFamily, FamilyKind, FamilyRegistry, default_families, perturb_families,
                             rotating_circle_blocks, snake_blocks)


def test_default_registry_names():
    assert default_families.names() == ["circle", "ellipse", "rotating_circle", "snake", "translating_circle"]
    assert "snake" in default_families and len(default_families) == 5


def test_registry_errors():
    registry = FamilyRegistry()
    registry.register("snake", snake_blocks)
    with pytest.raises(ValueError):
        registry.register("snake", snake_blocks)
    with pytest.raises(ValueError):
        registry.build("spiral")
    with pytest.raises(ValueError):
        registry.build("snake", blocks=0)


def test_build_passes_parameters():
    families = default_families.build("rotating_circle", blocks=3, n=128, radius=0.2)
    assert len(families) == 3
    assert all(f.kind is FamilyKind.ROTATING_CIRCLE and f.params["radius"] == 0.2 for f in families)
    assert families[0].params["rate"] == -families[1].params["rate"]


def test_rotating_circle_is_a_rigid_rotation():
    family = CurveFamily.rotating_circle(0.25, n=128)
    base, quarter = family.curve(0.0), family.curve(0.25)
    rel = base.samples - 0.5
    rotated = np.stack([-rel[:, 1], rel[:, 0]], axis=1) + 0.5
    assert np.allclose(quarter.samples, rotated, atol=1e-14)
    assert quarter.time_label == 0.25
    assert family.curve(0.25) is quarter


def test_translating_circle_moves_its_centre():
    family = CurveFamily.translating_circle(0.2, velocity=(0.05, 0.0), n=128)
    shift = family.curve(1.0).samples.mean(axis=0) - family.curve(0.0).samples.mean(axis=0)
    assert np.allclose(shift, [0.05, 0.0], atol=1e-14)


def test_snake_blocks_are_open_graphs():
    families = snake_blocks(6, n=256)
    curves = [f.curve(0.5) for f in families]
    assert all(not c.closed and c.length == pytest.approx(0.6) for c in curves)
    assert not np.allclose(curves[0].samples, curves[1].samples)
    # the six copies stay inside the unit square
    assert all(np.all((c.samples > 0.0) & (c.samples < 1.0)) for c in curves)


def test_tube_radius_is_positive():
    assert 0.0 < CurveFamily.ellipse(n=256).tube_radius() < 0.1


def test_perturbation_vanishes_at_time_zero():
    families = rotating_circle_blocks(2, n=256)
    perturbed = perturb_families(families, 1e-2)
    for f, p in zip(families, perturbed):
        assert p.kind is FamilyKind.PERTURBED
        assert np.array_equal(p.curve(0.0).samples, f.curve(0.0).samples)


def test_perturbed_blocks_have_equal_length():
    families = rotating_circle_blocks(2, n=256)
    perturbed = perturb_families(families, 1e-2)
    curves = [p.curve(0.5) for p in perturbed]
    lengths = [curve_length(c) for c in curves]
    assert abs(lengths[0] - lengths[1]) <= 1e-8 * max(lengths)
    assert not np.allclose(curves[0].samples, families[0].curve(0.5).samples)
    assert all(c.time_label == 0.5 for c in curves)


def test_negative_epsilon():
    with pytest.raises(ValueError):
        perturb_families(snake_blocks(1, n=128), -1.0)
