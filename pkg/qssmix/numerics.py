# qssmix/numerics.py
"""
Finite-difference stencils, boundary-flat steps, Hölder seminorms and exponent fits.

Everything here works on plain numpy arrays; the value types in ``core``/``field``
and the geometry modules build on these helpers.
"""
from __future__ import annotations

import logging
from functools import lru_cache
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


def fd_weights(z: float, nodes: Sequence[float], order: int) -> np.ndarray:
    """
    Fornberg's recursion for finite-difference weights.

    Returns an array of shape (len(nodes), order + 1); column ``k`` holds the
    weights of the k-th derivative at ``z``.
    """
    x = np.asarray(nodes, dtype=float)
    if order < 0:
        raise ValueError(f"derivative order must be non-negative, got {order}")
    if x.size <= order:
        raise ValueError(f"{x.size} nodes cannot resolve a derivative of order {order}")
    c = np.zeros((x.size, order + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, x.size):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


@lru_cache(maxsize=512)
def _stencil(offsets: tuple[int, ...], order: int) -> np.ndarray:
    w = fd_weights(0.0, offsets, order)[:, order]
    w.setflags(write=False)
    return w


def stencil_half_width(order: int, accuracy: int = 6) -> int:
    return accuracy // 2 + (order - 1) // 2


def derivative(values, spacing: float, order: int = 1, *, periodic: bool = True,
               axis: int = 0, accuracy: int = 6) -> np.ndarray:
    """
    Centred finite-difference derivative of ``values`` along ``axis``.

    Periodic data use the same centred stencil everywhere. Open data switch to
    shifted one-sided windows of the same width near the two ends.
    """
    if order < 0:
        raise ValueError(f"derivative order must be non-negative, got {order}")
    if spacing <= 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    f = np.moveaxis(np.asarray(values), axis, 0)
    if order == 0:
        return np.moveaxis(f.copy(), 0, axis)

    half = stencil_half_width(order, accuracy)
    width = 2 * half + 1
    n = f.shape[0]
    out = np.zeros(f.shape, dtype=np.result_type(f, float))

    if periodic:
        offsets = tuple(range(-half, half + 1))
        for k, wk in zip(offsets, _stencil(offsets, order)):
            out += wk * np.roll(f, -k, axis=0)
    else:
        if n < width:
            raise ValueError(f"{n} samples are too few for a {width}-point stencil")
        offsets = tuple(range(-half, half + 1))
        for k, wk in zip(offsets, _stencil(offsets, order)):
            out[half:n - half] += wk * f[half + k:n - half + k]
        for j in [*range(half), *range(n - half, n)]:
            start = min(max(j - half, 0), n - width)
            window = tuple(range(start - j, start - j + width))
            out[j] = np.tensordot(_stencil(window, order), f[start:start + width], axes=(0, 0))

    out /= spacing ** order
    return np.moveaxis(out, 0, axis)


def c_norm(values, spacing: float, order: int, *, periodic: bool = True, axis: int = 0) -> float:
    """Discrete C^order norm: the largest sup norm among derivatives 0..order."""
    best = 0.0
    for k in range(order + 1):
        d = derivative(values, spacing, k, periodic=periodic, axis=axis)
        best = max(best, float(np.max(np.abs(d))))
    return best


def cell_average(values, factor: int) -> np.ndarray:
    """Average ``factor`` x ``factor`` blocks of the last two axes."""
    f = np.asarray(values)
    n = f.shape[-1]
    if factor <= 0 or n % factor:
        raise ValueError(f"{n} cells cannot be averaged in groups of {factor}")
    if factor == 1:
        return f
    k = n // factor
    return f.reshape(*f.shape[:-2], k, factor, k, factor).mean(axis=(-3, -1))


# ---------- boundary-flat steps ----------

def _flat(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        return np.where(x > 0, np.exp(-1.0 / safe), 0.0)


def smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, C-infinity with all derivatives vanishing at both ends."""
    a = _flat(x)
    b = _flat(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def smooth_step_derivative(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.5)
    with np.errstate(over="ignore", under="ignore"):
        a = np.exp(-1.0 / xi)
        b = np.exp(-1.0 / (1.0 - xi))
        d = a * b * (1.0 / xi ** 2 + 1.0 / (1.0 - xi) ** 2) / (a + b) ** 2
    return np.where(inside, d, 0.0)


def plateau(x, lo: float, hi: float, ramp: float):
    """Window equal to 0 below ``lo``, 1 on [lo + ramp, hi - ramp], 0 above ``hi``."""
    if ramp <= 0 or lo + 2 * ramp > hi:
        raise ValueError(f"plateau needs 0 < ramp <= (hi - lo)/2, got lo={lo}, hi={hi}, ramp={ramp}")
    x = np.asarray(x, dtype=float)
    return smooth_step((x - lo) / ramp) * smooth_step((hi - x) / ramp)


# ---------- Hölder seminorms ----------

def holder_seminorm(values, spacing: float, alpha: float, *, axes: Sequence[int] = (-2, -1),
                    component_axis: int | None = None, max_shift: int | None = None) -> float:
    """
    Discrete periodic C^alpha seminorm: max of |f(x + d e) - f(x)| / d^alpha over
    dyadic shifts d = 1, 2, 4, ... cells along each axis (and the diagonal).
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"Hölder exponent must lie in (0, 1], got {alpha}")
    f = np.asarray(values)
    ax0, ax1 = axes
    n = min(f.shape[ax0], f.shape[ax1])
    limit = n // 2 if max_shift is None else min(max_shift, n // 2)

    def _magnitude(diff):
        if component_axis is None:
            return np.abs(diff)
        return np.sqrt(np.sum(np.abs(diff) ** 2, axis=component_axis))

    best = 0.0
    d = 1
    while d <= limit:
        shifts = (
            (np.roll(f, -d, axis=ax0), d * spacing),
            (np.roll(f, -d, axis=ax1), d * spacing),
            (np.roll(np.roll(f, -d, axis=ax0), -d, axis=ax1), np.sqrt(2.0) * d * spacing),
        )
        for shifted, dist in shifts:
            q = float(np.max(_magnitude(shifted - f))) / dist ** alpha
            best = max(best, q)
        d *= 2
    return best


# ---------- exponent fits ----------

def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError(f"log-log fit needs positive data, got x={x.tolist()}, y={y.tolist()}")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def fit_exponent(levels: Sequence[float], values: Sequence[float], base: float = 5.0) -> float:
    """Slope of log_base(values) against the (linear) level index."""
    levels = np.asarray(levels, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise ValueError(f"exponent fit needs positive values, got {values.tolist()}")
    return float(np.polyfit(levels, np.log(values) / np.log(base), 1)[0])
