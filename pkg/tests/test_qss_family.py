# tests/test_qss_family.py
import numpy as np
import pytest

from qssmix.core import FieldKind, ResolutionError
from qssmix.families import rotating_circle_blocks
from qssmix.field import GridField
from qssmix.local_fields import LocalFieldSet
from qssmix.qss_family import (FunctionBlocks, MAX_LEVEL, Tiling, assemble, nonlinear_term, peano_order,
                               scaling_diagnostics, tiles_per_side, verify_recursion)


@pytest.mark.parametrize("level", [1, 2])
def test_peano_order_is_a_path(level):
    rank = peano_order(level)
    side = 5 ** level
    assert sorted(rank.ravel().tolist()) == list(range(side * side))
    cells = np.argsort(rank.ravel())
    i, j = np.divmod(cells, side)
    steps = np.abs(np.diff(i)) + np.abs(np.diff(j))
    assert np.all(steps == 1)


def test_tiling_assignment_follows_cycle():
    tiling = Tiling.build(1, cycle=(0, 1, 2))
    assert tiling.tiles_per_side == tiles_per_side(1) == 10
    assert np.array_equal(tiling.assignment, np.asarray((0, 1, 2))[tiling.ranks % 3])
    assert tiling.counts(3).sum() == 100


def test_tiling_rejects_bad_levels_and_cycles():
    with pytest.raises(ValueError):
        Tiling.build(MAX_LEVEL + 1)
    with pytest.raises(ValueError):
        Tiling.build(1, cycle=(0, 7), blocks=2)


def test_patching_blocks_satisfy_the_recursion():
    report = verify_recursion(FunctionBlocks.patching(), 0, tile_resolution=250)
    assert report.nested
    assert report.mismatch < 1e-10
    assert report.passed


def test_mismatched_blocks_fail_the_recursion():
    report = verify_recursion(FunctionBlocks.mismatched(), 0, tile_resolution=250)
    assert report.mismatch == pytest.approx(2 * np.sqrt(12 / 25), rel=1e-6)
    assert not report.passed


def test_interpolated_recursion():
    report = verify_recursion(FunctionBlocks.patching(), 0, tile_resolution=250, fine_tile_resolution=100)
    assert not report.nested
    assert report.passed


def test_materialize_matches_tile_layout():
    blocks = FunctionBlocks.patching()
    fields = assemble(1, blocks, 0.0, tile_resolution=20)
    grid = fields.rho.materialize()
    assert grid.resolution == 200
    # every tile holds the same block at level 1
    assert np.allclose(grid.values[:20, :20], grid.values[180:, 40:60])
    coarse = fields.rho.materialize(5)
    assert coarse.resolution == 50
    assert coarse.values[0, 0] == pytest.approx(grid.values[:4, :4].mean())
    with pytest.raises(ResolutionError):
        fields.rho.materialize(3)


def test_scaled_norms_agree_with_the_grid():
    fields = assemble(1, FunctionBlocks.patching(), 0.3, tile_resolution=32)
    grid = fields.rho.materialize()
    assert fields.rho.mean() == pytest.approx(grid.mean(), abs=1e-12)
    assert fields.rho.l2_norm() == pytest.approx(grid.l2_norm(), rel=1e-12)
    assert fields.rho.sup_norm() == pytest.approx(grid.sup_norm(), rel=1e-12)
    assert fields.rho.gradient_sup() == pytest.approx(grid.gradient_sup(), rel=1e-10)
    assert fields.rho.holder_seminorm(0.5) == pytest.approx(grid.holder_seminorm(0.5), rel=1e-10)


def test_velocity_scaling_with_level():
    blocks = FunctionBlocks.translation()
    v0 = assemble(0, blocks, 0.0, tile_resolution=16).velocity
    v1 = assemble(1, blocks, 0.0, tile_resolution=16).velocity
    assert v0.kind is FieldKind.VECTOR
    assert v0.sup_norm() / v1.sup_norm() == pytest.approx(5.0)


def test_nonlinear_term_of_constant_velocity_vanishes():
    fields = assemble(1, FunctionBlocks.translation(), 0.0, tile_resolution=16)
    assert nonlinear_term(fields).sup_norm() < 1e-12


def test_level_fields_unpack():
    rho, velocity = assemble(0, FunctionBlocks.patching(), 0.0, tile_resolution=16)
    assert rho.kind is FieldKind.SCALAR and velocity.kind is FieldKind.VECTOR


def test_scaling_exponents():
    diagnostics = scaling_diagnostics(FunctionBlocks.patching(), [0, 1, 2], tile_resolution=32,
                                      spectral_tile_resolution=4)
    assert len(diagnostics.rows) == 3
    for row in diagnostics.rows[:2]:
        fields = assemble(row["level"], FunctionBlocks.patching(), 0.5, tile_resolution=32)
        grid = fields.rho.materialize()
        assert row["grad_sup"] == pytest.approx(grid.gradient_sup(), rel=1e-10)
    assert diagnostics.slopes["grad_sup"] == pytest.approx(1.0, abs=0.02)
    assert diagnostics.slopes["hminus1"] == pytest.approx(-1.0, abs=0.1)


def test_vanishing_quantities_have_no_exponent():
    diagnostics = scaling_diagnostics(FunctionBlocks.patching(), [0, 1], tile_resolution=16,
                                      spectral_tile_resolution=4)
    assert np.isnan(diagnostics.slopes["velocity_sup"])


def _signed_blocks():
    """Two constant blocks of opposite sign: every seam between them is a jump."""
    return FunctionBlocks([lambda x1, x2, t: np.ones_like(x1), lambda x1, x2, t: -np.ones_like(x1)])


@pytest.mark.parametrize("level", [0, 1])
def test_level_norms_read_the_seams(level):
    rho = assemble(level, _signed_blocks(), 0.0, tile_resolution=8, cycle=(0, 1)).rho
    grid = rho.materialize()
    # each block alone is flat
    assert all(GridField.scalar(b).gradient_sup() < 1e-9 for b in rho.blocks)
    assert rho.gradient_sup() > 0.0
    assert rho.gradient_sup() == pytest.approx(grid.gradient_sup(), rel=1e-12)
    assert rho.holder_seminorm(0.5) > 0.0
    assert rho.holder_seminorm(0.5) == pytest.approx(grid.holder_seminorm(0.5), rel=1e-12)


def test_vector_level_norms_match_the_grid():
    blocks = FunctionBlocks(
        [lambda x1, x2, t: x1 * x2, lambda x1, x2, t: 1.0 - x2],
        velocities=[lambda x1, x2, t: np.stack([x1, x1 * x2]),
                    lambda x1, x2, t: np.stack([1.0 - x2, np.cos(3.0 * x1)])])
    velocity = assemble(2, blocks, 0.0, tile_resolution=8, cycle=(0, 1, 1)).velocity
    grid = velocity.materialize()
    assert velocity.gradient_sup() == pytest.approx(grid.gradient_sup(), rel=1e-10)
    for alpha in (0.5, 1.0):
        assert velocity.holder_seminorm(alpha) == pytest.approx(grid.holder_seminorm(alpha), rel=1e-10)
    assert velocity.shifted_difference(3, 5) > 0.0


def test_level_norms_need_the_stencil_width():
    rho = assemble(0, _signed_blocks(), 0.0, tile_resolution=2, cycle=(0, 1)).rho
    with pytest.raises(ResolutionError):
        rho.gradient_sup()


def test_supersampled_moments_come_from_the_fine_points():
    blocks = FunctionBlocks([lambda x1, x2, t: x1])
    sample = blocks.sample(0, 0.0, 4, supersample=8)
    # cell averages of a linear profile are its centre values
    assert np.allclose(sample.theta[:, 0], (np.arange(4) + 0.5) / 4)
    mean, mean_sq = sample.moments
    assert mean == pytest.approx(0.5, abs=1e-12)
    assert mean_sq == pytest.approx(1 / 3 - 1 / (12 * 32 ** 2), rel=1e-12)
    rho = assemble(1, blocks, 0.0, tile_resolution=4, supersample=8).rho
    assert rho.mean() == pytest.approx(mean, abs=1e-12)
    assert rho.l2_norm() == pytest.approx(np.sqrt(mean_sq), rel=1e-12)
    # the coarse grid alone misses the subcell variance
    assert rho.materialize().l2_norm() < rho.l2_norm()


def test_bad_supersample_is_rejected():
    with pytest.raises(ValueError):
        FunctionBlocks.patching().sample(0, 0.0, 8, supersample=0)


def test_curve_blocks_keep_zero_mean_and_unit_l2():
    blocks = LocalFieldSet(rotating_circle_blocks(2, n=256))
    for level in (0, 1, 2):
        rho = assemble(level, blocks, 0.5, tile_resolution=32, supersample=16).rho
        assert abs(rho.mean()) < 1e-6
        assert abs(rho.l2_norm() ** 2 - 1.0) < 1e-4
