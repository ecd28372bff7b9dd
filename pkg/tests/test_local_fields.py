# tests/test_local_fields.py
import numpy as np
import pytest
from scipy import integrate

from qssmix.core import cell_centres
from qssmix.families import CurveFamily, rotating_circle_blocks
from qssmix.field import GridField
from qssmix.local_fields import (LocalField, LocalFieldSet, build_cutoff, evaluate_fields, field_stability_sweep,
                                 field_stability_report, support_inclusion, transport_residual)


@pytest.fixture(scope="module")
def rotating_block() -> LocalField:
    return LocalField(CurveFamily.rotating_circle(0.25, n=256))


@pytest.fixture(scope="module")
def modulated_block() -> LocalField:
    return LocalField(CurveFamily.rotating_circle(0.25, n=256), modulation=0.5)


def test_cutoff_is_normalised_and_odd():
    cutoff = build_cutoff()
    first, second = cutoff.moments()
    assert abs(first) < 1e-12
    assert second == pytest.approx(1.0, rel=1e-10)
    assert cutoff(np.array([-0.5, 0.5, 0.7])).tolist() == [0.0, 0.0, 0.0]


def test_cutoff_derivative():
    cutoff = build_cutoff()
    z = np.linspace(-0.4, 0.4, 17)
    h = 1e-6
    fd = (cutoff(z + h) - cutoff(z - h)) / (2 * h)
    assert np.allclose(cutoff.derivative(z), fd, atol=1e-6)


def test_cutoff_smoothness_order():
    with pytest.raises(ValueError):
        build_cutoff(5)


def test_chart_moments():
    block = LocalField(CurveFamily.circle(0.25, n=256))
    first, second = block.chart_moments()
    assert abs(first) < 1e-10
    assert second == pytest.approx(1.0, abs=1e-6)


def test_chart_rows_must_be_odd():
    with pytest.raises(ValueError):
        LocalField(CurveFamily.circle(0.25, n=128), chart_rows=64)


def test_support_inclusion(rotating_block):
    assert support_inclusion(rotating_block, 64, 0.5)
    _, theta = evaluate_fields(rotating_block, 64, 0.5)
    assert theta.sup_norm() > 0


def test_evaluate_fields_needs_unit_time(rotating_block):
    with pytest.raises(ValueError):
        evaluate_fields(rotating_block, 32, 1.5)


def test_theta_is_transported(rotating_block):
    assert transport_residual(rotating_block, 256, 0.3) < 0.05


def test_transport_residual_falls_with_refinement(modulated_block):
    residuals = [transport_residual(modulated_block, n, 0.3) for n in (128, 256, 512)]
    assert residuals[2] < 1e-3
    assert residuals[0] / residuals[1] > 4.0
    assert residuals[1] / residuals[2] > 4.0


def test_rotating_circle_moves_rigidly(rotating_block):
    velocity, theta = evaluate_fields(rotating_block, 128, 0.3)
    x1, x2 = cell_centres(128)
    omega = rotating_block.family.params["omega"]
    rigid = omega * np.stack([-(x2 - 0.5), x1 - 0.5])
    carried = theta.values != 0.0
    assert np.count_nonzero(carried) > 0
    assert np.max(np.abs(velocity.values[:, carried] - rigid[:, carried])) < 1e-6


def test_closed_profile_is_flat_by_default(rotating_block, modulated_block):
    s = np.linspace(0.0, rotating_block.length, 7)
    assert np.all(rotating_block.s_profile(s) == 1.0)
    assert modulated_block.s_profile(0.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        LocalField(CurveFamily.circle(0.25, n=128), modulation=1.0)


def test_sampled_velocity_is_divergence_free():
    blocks = LocalFieldSet(rotating_circle_blocks(2, n=256))
    sample = blocks.sample(1, 0.5, 64)
    assert sample is blocks.sample(1, 0.5, 64)
    v = GridField.vector(sample.velocity)
    assert v.sup_norm() > 0
    assert v.divergence().sup_norm() <= 1e-8 * v.sup_norm() * 64


def test_field_set_shares_radius_and_cutoff():
    blocks = LocalFieldSet.from_registry("circle", blocks=2, n=128)
    assert blocks.count == len(blocks) == 2
    assert blocks[0].radius == blocks[1].radius == blocks.radius
    assert blocks[0].cutoff is blocks.cutoff
    with pytest.raises(ValueError):
        LocalFieldSet([])


def test_field_stability_is_linear_in_epsilon():
    sweep = field_stability_sweep(rotating_circle_blocks(2, n=256), [1e-2, 1e-3], resolution=64)
    slopes = sweep.slopes()
    assert slopes["velocity_c1"] == pytest.approx(1.0, abs=0.2)
    assert slopes["theta_c1"] == pytest.approx(1.0, abs=0.2)


def test_theta_profile_integral(modulated_block):
    # (s, y) integral of Theta^2 is one by construction
    profile = integrate.quad(lambda s: modulated_block.s_profile(s) ** 2, 0.0, modulated_block.length)[0]
    assert modulated_block.normalisation ** 2 * modulated_block.radius * profile == pytest.approx(1.0)


def test_identical_blocks_have_zero_field_distance(rotating_block):
    report = field_stability_report(rotating_block, rotating_block, 64)
    assert report.velocity_c1 == 0.0
    assert report.theta_c1 == 0.0
    assert set(report.as_dict()) == {"velocity_c1", "theta_c1"}


def test_supersampled_sample_carries_moments(rotating_block):
    coarse = rotating_block.sample(0.5, 32)
    fine = rotating_block.sample(0.5, 32, supersample=16)
    assert fine.theta.shape == coarse.theta.shape == (32, 32)
    mean, mean_sq = fine.moments
    assert abs(mean) < 1e-6
    assert mean_sq == pytest.approx(1.0, abs=1e-4)
    # coarse point samples alone do not integrate Theta^2 to one
    assert abs(np.mean(coarse.theta ** 2) - 1.0) > abs(mean_sq - 1.0)


def test_field_set_reports_its_perturbation_size():
    blocks = LocalFieldSet(rotating_circle_blocks(2, n=128))
    assert blocks.epsilon == 0.0
    assert blocks.perturbed(1e-3).epsilon == pytest.approx(1e-3)
