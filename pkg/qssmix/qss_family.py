# qssmix/qss_family.py
"""
Quasi-self-similar assembly on 5-adic tilings.

Level n tiles the unit square by (2 5^n)^2 squares Q; the tile with lower-left corner
r_Q carries block i(Q):

    rho_n(x, t) = Theta_i(2 5^n (x - r_Q), t),   v_n(x, t) = (2 5^n)^-1 V_i(2 5^n (x - r_Q), t).

Fields are kept as block samples plus an assignment table. Integrals come from the
blocks' fine-grid moments and the tile counts; gradient and Hölder norms are read on
the assembled grid through the seams between neighbouring tiles. Full grids are
materialised only on request.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Protocol, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .core import FieldKind, ResolutionError, cell_centres
from .field import GridField
from .local_fields import COMPACT_SQUARE, BlockSample
from .numerics import cell_average, derivative, fit_exponent, stencil_half_width

logger = logging.getLogger(__name__)

MAX_LEVEL = 4
QUADRANT_ORDER = ((0, 0), (1, 0), (1, 1), (0, 1))
DEFAULT_CYCLE = (0, 1, 2, 3, 4, 5)


def tiles_per_side(level: int) -> int:
    return 2 * 5 ** level


def peano_order(level: int) -> np.ndarray:
    """
    Rank of every cell of the 5^n x 5^n grid along the base-5 Peano curve.

    The x digit is reflected (d -> 4 - d) when the earlier y digits sum to an odd
    number, the y digit when the x digits up to and including the current one do;
    the rank interleaves the reflected digits. Consecutive ranks share an edge.
    """
    if level < 0:
        raise ValueError(f"level must be non-negative, got {level}")
    side = 5 ** level
    I, J = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    rank = np.zeros_like(I)
    xsum = np.zeros_like(I)
    ysum = np.zeros_like(I)
    for k in range(level):
        place = 5 ** (level - 1 - k)
        xd = (I // place) % 5
        yd = (J // place) % 5
        tx = np.where(ysum % 2 == 1, 4 - xd, xd)
        xsum += xd
        ty = np.where(xsum % 2 == 1, 4 - yd, yd)
        ysum += yd
        rank = rank * 25 + tx * 5 + ty
    return rank


@dataclass(frozen=True, eq=False)
class Tiling:
    """Q(2 5^n) with block assignment i(Q) = cycle[rank(Q) mod len(cycle)]."""

    level: int
    ranks: np.ndarray
    assignment: np.ndarray
    cycle: tuple[int, ...]

    @classmethod
    def build(cls, level: int, cycle: Sequence[int] = DEFAULT_CYCLE, blocks: int | None = None) -> "Tiling":
        if not 0 <= level <= MAX_LEVEL:
            raise ValueError(f"level must lie in 0..{MAX_LEVEL}, got {level}")
        cycle = tuple(int(c) for c in cycle)
        if not cycle:
            raise ValueError("the block cycle is empty")
        if blocks is not None and (min(cycle) < 0 or max(cycle) >= blocks):
            raise ValueError(f"cycle {cycle} refers to blocks outside 0..{blocks - 1}")
        side = 5 ** level
        local = peano_order(level)
        ranks = np.empty((2 * side, 2 * side), dtype=np.int64)
        for q, (qi, qj) in enumerate(QUADRANT_ORDER):
            ranks[qi * side:(qi + 1) * side, qj * side:(qj + 1) * side] = q * side * side + local
        assignment = np.asarray(cycle)[ranks % len(cycle)]
        return cls(level, ranks, assignment, cycle)

    @property
    def tiles_per_side(self) -> int:
        return self.ranks.shape[0]

    @property
    def tile_size(self) -> float:
        return 1.0 / self.tiles_per_side

    def corners(self) -> np.ndarray:
        """Lower-left corners r_Q, shape (T, T, 2)."""
        c = np.arange(self.tiles_per_side) * self.tile_size
        return np.stack(np.meshgrid(c, c, indexing="ij"), axis=-1)

    def counts(self, blocks: int) -> np.ndarray:
        return np.bincount(self.assignment.ravel(), minlength=blocks)

    def __repr__(self) -> str:
        return f"Tiling(level={self.level}, {self.tiles_per_side}x{self.tiles_per_side}, cycle={self.cycle})"


# ---------- block sources ----------

class BlockSource(Protocol):
    @property
    def count(self) -> int: ...

    def sample(self, index: int, t: float, resolution: int, supersample: int = 1) -> BlockSample: ...


BlockFunction = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def _patterned(x1, x2):
    return 2.0 * np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * x2)


class FunctionBlocks:
    """Analytic blocks Theta_i(x, t) with a velocity or a stream function per block."""

    def __init__(self, thetas: Sequence[BlockFunction], velocities: Sequence[BlockFunction] | None = None,
                 streams: Sequence[BlockFunction] | None = None):
        self.thetas = list(thetas)
        self.velocities = None if velocities is None else list(velocities)
        self.streams = None if streams is None else list(streams)
        for name, funcs in (("velocities", self.velocities), ("streams", self.streams)):
            if funcs is not None and len(funcs) != len(self.thetas):
                raise ValueError(f"{len(self.thetas)} scalar blocks but {len(funcs)} {name}")

    @property
    def count(self) -> int:
        return len(self.thetas)

    def sample(self, index: int, t: float, resolution: int, supersample: int = 1) -> BlockSample:
        """Cell averages over supersample^2 points per cell, as for curve-based blocks."""
        if supersample < 1:
            raise ValueError(f"supersample must be positive, got {supersample}")
        x1, x2 = cell_centres(resolution * supersample)
        fine = np.array(np.broadcast_to(self.thetas[index](x1, x2, t), x1.shape), dtype=float)
        theta = cell_average(fine, supersample)
        stream = None
        if self.streams is not None:
            stream = cell_average(np.asarray(self.streams[index](x1, x2, t), dtype=float), supersample)
        if self.velocities is not None:
            velocity = cell_average(np.asarray(self.velocities[index](x1, x2, t), dtype=float), supersample)
        elif stream is not None:
            velocity = GridField.scalar(stream).perp_gradient().values
        else:
            velocity = np.zeros((2, resolution, resolution))
        return BlockSample(theta, velocity, stream, (float(np.mean(fine)), float(np.mean(fine ** 2))))

    @classmethod
    def patching(cls) -> "FunctionBlocks":
        """Theta = cos(pi t/2) f(x) + sin(pi t/2) f(5x mod 1); Theta(., 1) tiles into Theta(., 0) exactly."""
        def theta(x1, x2, t):
            return (np.cos(np.pi * t / 2) * _patterned(x1, x2)
                    + np.sin(np.pi * t / 2) * _patterned(np.mod(5 * x1, 1.0), np.mod(5 * x2, 1.0)))
        return cls([theta])

    @classmethod
    def mismatched(cls) -> "FunctionBlocks":
        """The patching block and its negative; alternating assignment breaks the recursion."""
        theta = cls.patching().thetas[0]
        return cls([theta, lambda x1, x2, t: -theta(x1, x2, t)])

    @classmethod
    def translation(cls, velocity=(1.0, 0.5)) -> "FunctionBlocks":
        """Theta(x, t) = f(x - w t) carried by the constant block velocity w."""
        w = np.asarray(velocity, dtype=float)

        def theta(x1, x2, t):
            return _patterned(x1 - w[0] * t, x2 - w[1] * t)

        def vel(x1, x2, t):
            return np.stack([np.full_like(x1, w[0]), np.full_like(x2, w[1])])

        return cls([theta], velocities=[vel])


# ---------- tiled fields ----------

def _split_shift(shift: int, m: int) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """(tile offset, source cells, target cells) for a shift of ``shift`` cells across tiles of m cells."""
    local = np.arange(m)
    target = local + shift
    offsets = target // m
    return [(int(q), local[offsets == q], target[offsets == q] % m) for q in np.unique(offsets)]


class TiledField:
    """A level-n field held as one sample per block and the tiling's assignment table."""

    def __init__(self, tiling: Tiling, samples: Sequence[np.ndarray], scale: float, kind: FieldKind,
                 time: float = 0.0, moments: Sequence[tuple[float, float]] | None = None):
        self.tiling = tiling
        self.blocks = np.stack([np.asarray(s, dtype=float) for s in samples])
        self.scale = float(scale)
        self.kind = kind
        self.time = time
        self.moments = None if moments is None else np.asarray(moments, dtype=float)
        self.used = np.unique(tiling.assignment)

    @property
    def level(self) -> int:
        return self.tiling.level

    @property
    def tile_resolution(self) -> int:
        return self.blocks.shape[-1]

    @property
    def resolution(self) -> int:
        return self.tiling.tiles_per_side * self.tile_resolution

    @property
    def dilation(self) -> int:
        return self.tiling.tiles_per_side

    def _block_field(self, i: int) -> GridField:
        return GridField(self.blocks[i], self.kind)

    def _neighbour(self, shift0: int, shift1: int) -> np.ndarray:
        """Block index of tile (i + shift0, j + shift1) for every tile (i, j), wrapping around."""
        return np.roll(self.tiling.assignment, (-shift0, -shift1), axis=(0, 1))

    def _magnitude(self, data: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(data ** 2, axis=0)) if self.kind is FieldKind.VECTOR else np.abs(data)

    # ---------- grids ----------
    def materialize(self, resolution_per_tile: int | None = None) -> GridField:
        """Full grid; each tile is cell-averaged down to ``resolution_per_tile`` cells per side."""
        m = self.tile_resolution
        k = m if resolution_per_tile is None else int(resolution_per_tile)
        if k <= 0 or m % k:
            raise ResolutionError(f"block samples with {m} cells cannot be averaged to {k} cells per tile")
        tiles = cell_average(self.blocks, m // k)[self.tiling.assignment]
        T = self.tiling.tiles_per_side
        if self.kind is FieldKind.SCALAR:
            values = tiles.transpose(0, 2, 1, 3).reshape(T * k, T * k)
        else:
            values = tiles.transpose(2, 0, 3, 1, 4).reshape(2, T * k, T * k)
        return GridField(values * self.scale, self.kind, time=self.time, level=self.level)

    def take(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Scalar values at global cell indices rows x cols without materialising the grid."""
        if self.kind is not FieldKind.SCALAR:
            raise TypeError("take() reads scalar fields")
        m = self.tile_resolution
        rows, cols = np.asarray(rows), np.asarray(cols)
        ti, a = np.divmod(rows, m)
        tj, b = np.divmod(cols, m)
        idx = self.tiling.assignment[ti[:, None], tj[None, :]]
        return self.blocks[idx, a[:, None], b[None, :]] * self.scale

    # ---------- integrals by tile bookkeeping ----------
    def mean(self) -> float:
        """int rho_n; from the blocks' fine-grid moments when they were sampled with them."""
        counts = self.tiling.counts(len(self.blocks))
        if self.moments is not None:
            return float(counts @ self.moments[:, 0] / self.tiling.ranks.size * self.scale)
        total = np.tensordot(counts, self.blocks.mean(axis=(-2, -1)), axes=1)
        total = total / self.tiling.ranks.size * self.scale
        return float(np.linalg.norm(total)) if self.kind is FieldKind.VECTOR else float(total)

    def l2_norm(self) -> float:
        counts = self.tiling.counts(len(self.blocks))
        if self.moments is not None:
            return float(np.sqrt(counts @ self.moments[:, 1] / self.tiling.ranks.size) * abs(self.scale))
        axes = tuple(range(1, self.blocks.ndim))
        mean_sq = np.mean(self.blocks ** 2, axis=axes) * (2 if self.kind is FieldKind.VECTOR else 1)
        return float(np.sqrt(np.sum(counts * mean_sq) / self.tiling.ranks.size) * abs(self.scale))

    def sup_norm(self) -> float:
        return max(self._block_field(i).sup_norm() for i in self.used) * abs(self.scale)

    # ---------- norms of the assembled grid ----------
    def gradient_sup(self) -> float:
        """
        Sup of the sixth-order difference gradient of the assembled grid.

        Each tile is padded with the stencil rows of its four neighbours, so seams read
        exactly as on the materialised field; tiles with equal neighbourhoods are done once.
        """
        m = self.tile_resolution
        w = stencil_half_width(1)
        if m < w:
            raise ResolutionError(f"{m} cells per tile are fewer than the stencil half-width {w}")
        h = 1.0 / self.resolution
        B = self.blocks
        keys = np.stack([self.tiling.assignment, self._neighbour(-1, 0), self._neighbour(1, 0),
                         self._neighbour(0, -1), self._neighbour(0, 1)], axis=-1).reshape(-1, 5)
        best = 0.0
        for c, up, down, left, right in np.unique(keys, axis=0):
            rows = np.concatenate([B[up][..., -w:, :], B[c], B[down][..., :w, :]], axis=-2)
            cols = np.concatenate([B[left][..., -w:], B[c], B[right][..., :w]], axis=-1)
            d0 = derivative(rows, h, 1, periodic=False, axis=rows.ndim - 2)[..., w:w + m, :]
            d1 = derivative(cols, h, 1, periodic=False, axis=cols.ndim - 1)[..., w:w + m]
            squares = d0 ** 2 + d1 ** 2
            if self.kind is FieldKind.VECTOR:
                squares = np.sum(squares, axis=0)
            best = max(best, float(np.max(np.sqrt(squares))))
        return best * abs(self.scale)

    def shifted_difference(self, shift0: int, shift1: int) -> float:
        """max |f(x + (shift0, shift1) cells) - f(x)| over the assembled grid."""
        n_blocks = len(self.blocks)
        best = 0.0
        for q0, a, a_to in _split_shift(shift0, self.tile_resolution):
            for q1, b, b_to in _split_shift(shift1, self.tile_resolution):
                code = self.tiling.assignment * n_blocks + self._neighbour(q0, q1)
                for i, j in (divmod(int(p), n_blocks) for p in np.unique(code)):
                    diff = (self.blocks[j][..., a_to[:, None], b_to[None, :]]
                            - self.blocks[i][..., a[:, None], b[None, :]])
                    best = max(best, float(np.max(self._magnitude(diff))))
        return best * abs(self.scale)

    def holder_seminorm(self, alpha: float) -> float:
        """Dyadic-shift C^alpha seminorm of the assembled grid, the same shifts as ``numerics.holder_seminorm``."""
        if not 0 < alpha <= 1:
            raise ValueError(f"Hölder exponent must lie in (0, 1], got {alpha}")
        h = 1.0 / self.resolution
        best = 0.0
        d = 1
        while d <= self.resolution // 2:
            for shift0, shift1, dist in ((d, 0, d * h), (0, d, d * h), (d, d, np.sqrt(2.0) * d * h)):
                best = max(best, self.shifted_difference(shift0, shift1) / dist ** alpha)
            d *= 2
        return best

    def support_within(self, compact: tuple[float, float] = COMPACT_SQUARE) -> bool:
        """Each tile's field vanishes outside the image of compact^2 in that tile."""
        x1, x2 = cell_centres(self.tile_resolution)
        lo, hi = compact
        outside = (x1 < lo) | (x1 > hi) | (x2 < lo) | (x2 > hi)
        return all(np.all(self.blocks[i][..., outside] == 0.0) for i in self.used)

    def __repr__(self) -> str:
        return f"TiledField({self.kind.value}, level={self.level}, tile={self.tile_resolution}, t={self.time:g})"


@dataclass
class LevelFields:
    rho: TiledField
    velocity: TiledField
    stream: TiledField | None = None

    def __iter__(self) -> Iterator[TiledField]:
        yield self.rho
        yield self.velocity

    def velocity_field(self, resolution_per_tile: int | None = None) -> GridField:
        """Materialised velocity; taken from the stream when available so it is divergence-free."""
        if self.stream is not None:
            return self.stream.materialize(resolution_per_tile).perp_gradient()
        return self.velocity.materialize(resolution_per_tile)


def assemble(level: int, blocks: BlockSource, t: float, *, tile_resolution: int = 64,
             cycle: Sequence[int] = DEFAULT_CYCLE, supersample: int = 1) -> LevelFields:
    """
    (rho_n, v_n) at time t, plus the level stream (2 5^n)^-2 psi_i when the blocks carry one.
    Cycle entries are taken modulo the block count. Block cells are averages over
    supersample^2 points, and int rho_n, int rho_n^2 use the same fine points.
    """
    cycle = [c % blocks.count for c in cycle] if len(cycle) else [0]
    tiling = Tiling.build(level, cycle, blocks.count)
    samples = [blocks.sample(i, t, tile_resolution, supersample) for i in range(blocks.count)]
    lam = tiling.tiles_per_side
    moments = None if any(s.moments is None for s in samples) else [s.moments for s in samples]
    rho = TiledField(tiling, [s.theta for s in samples], 1.0, FieldKind.SCALAR, t, moments)
    velocity = TiledField(tiling, [s.velocity for s in samples], 1.0 / lam, FieldKind.VECTOR, t)
    stream = None
    if all(s.stream is not None for s in samples):
        stream = TiledField(tiling, [s.stream for s in samples], 1.0 / lam ** 2, FieldKind.SCALAR, t)
    logger.debug("assembled level %d at t=%g: %d tiles of %d cells", level, t, lam ** 2, tile_resolution)
    return LevelFields(rho, velocity, stream)


def nonlinear_term(fields: LevelFields) -> TiledField:
    """v_n . grad v_n = (2 5^n)^-1 (V . grad V)(2 5^n (x - r_Q)), from spectral block products."""
    vel = fields.velocity
    products = []
    for block in vel.blocks:
        v = GridField.vector(block)
        products.append(v.advect(v).values)
    return TiledField(vel.tiling, products, vel.scale, FieldKind.VECTOR, vel.time)


# ---------- diagnostics ----------

@dataclass
class ScalingDiagnostics:
    rows: list[dict] = field(default_factory=list)
    slopes: dict[str, float] = field(default_factory=dict)


def scaling_diagnostics(blocks: BlockSource, levels: Sequence[int], alphas: Sequence[float] = (0.5,), *,
                        t: float = 0.5, tile_resolution: int = 64, spectral_tile_resolution: int = 8,
                        cycle: Sequence[int] = DEFAULT_CYCLE, supersample: int = 1) -> ScalingDiagnostics:
    """
    Per-level norms and fitted base-5 exponents of |grad rho_n|_inf (expected 1),
    [v_n]_alpha and [v_n . grad v_n]_alpha (expected alpha - 1) and |rho_n|_{H^-1} (expected -1).
    Gradient and Hölder norms are taken on the assembled grid, seams included.
    """
    levels = list(levels)
    if max(levels) > MAX_LEVEL:
        raise ValueError(f"levels above {MAX_LEVEL} are out of reach")
    out = ScalingDiagnostics()
    for n in levels:
        fields = assemble(n, blocks, t, tile_resolution=tile_resolution, cycle=cycle, supersample=supersample)
        nonlinear = nonlinear_term(fields)
        coarse = fields.rho.materialize(spectral_tile_resolution)
        centred = GridField.scalar(coarse.values - coarse.values.mean())
        row = {
            "level": n,
            "mean": fields.rho.mean(),
            "l2": fields.rho.l2_norm(),
            "grad_sup": fields.rho.gradient_sup(),
            "velocity_sup": fields.velocity.sup_norm(),
            "hminus1": centred.h_minus1_norm(),
        }
        for a in alphas:
            row[f"velocity_holder_{a:g}"] = fields.velocity.holder_seminorm(a)
            row[f"nonlinear_holder_{a:g}"] = nonlinear.holder_seminorm(a)
        out.rows.append(row)
        logger.info("level %d: grad_sup=%.4g hminus1=%.4g", n, row["grad_sup"], row["hminus1"])
    if len(levels) >= 2:
        for key in out.rows[0]:
            if key in ("level", "mean", "l2"):
                continue
            values = [r[key] for r in out.rows]
            if min(values) <= 0:
                logger.warning("no exponent for %s: vanishing values %s", key, values)
                out.slopes[key] = float("nan")
                continue
            out.slopes[key] = fit_exponent(levels, values)
    return out


@dataclass
class RecursionReport:
    level: int
    mismatch: float
    tolerance: float
    nested: bool

    @property
    def passed(self) -> bool:
        return self.mismatch <= self.tolerance


def verify_recursion(blocks: BlockSource, level: int, *, tile_resolution: int = 64,
                     fine_tile_resolution: int | None = None,
                     cycle: Sequence[int] = DEFAULT_CYCLE) -> RecursionReport:
    """
    L^2 distance between rho_n(., 1) and rho_{n+1}(., 0) on the level-n grid.

    With equal cells per tile the fine grid nests five-to-one in the coarse one and is
    read exactly at the coarse centres; otherwise it is interpolated bilinearly.
    """
    if level + 1 > MAX_LEVEL:
        raise ValueError(f"level {level + 1} is out of reach")
    fine_tile_resolution = tile_resolution if fine_tile_resolution is None else fine_tile_resolution
    coarse = assemble(level, blocks, 1.0, tile_resolution=tile_resolution, cycle=cycle).rho
    fine = assemble(level + 1, blocks, 0.0, tile_resolution=fine_tile_resolution, cycle=cycle).rho
    R = coarse.resolution
    c = coarse.materialize().values
    nested = fine.resolution == 5 * R
    if nested:
        idx = 5 * np.arange(R) + 2
        f = fine.take(idx, idx)
    else:
        F = fine.materialize().values
        x = (np.arange(R) + 0.5) / R * F.shape[0] - 0.5
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        f = map_coordinates(F, [X1, X2], order=1, mode="grid-wrap")
    mismatch = float(np.sqrt(np.mean((c - f) ** 2)))
    tolerance = 2.0 * coarse.gradient_sup() / R
    logger.info("recursion %d -> %d: mismatch %.3e (tolerance %.3e)", level, level + 1, mismatch, tolerance)
    return RecursionReport(level, mismatch, tolerance, nested)
