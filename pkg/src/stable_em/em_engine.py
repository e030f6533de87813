"""Euler-Maruyama recursion, its continuous-time version, and exact coupling
of noise across nested grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .sde_model import DriftSpec, SdeProblem, _drift_values
from .stable_noise import RngStream, StableParams, increment_scale, sample_stable_array


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, T]`` with ``N`` steps; the step is ``T / N``."""

    T: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"step count must be a positive integer, got {self.N!r}")
        if not (self.T > 0.0) or not math.isfinite(self.T):
            raise ValidationError(f"horizon must be positive, got {self.T!r}")
        if not (0.0 < self.delta < 1.0):
            raise ValidationError(f"step size must lie in (0, 1), got T/N = {self.delta!r}")

    @property
    def delta(self) -> float:
        return self.T / self.N

    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.delta

    @classmethod
    def from_delta(cls, T: float, delta: float, rtol: float = 1e-9) -> "GridSpec":
        """Grid with step ``delta``; ``T / delta`` must be an integer."""
        if not (delta > 0.0):
            raise ValidationError(f"step size must be positive, got {delta!r}")
        n = round(T / delta)
        if n < 1 or abs(n * delta - T) > rtol * T:
            raise ValidationError(f"step {delta!r} does not divide the horizon {T!r}")
        return cls(T, n)


@dataclass(frozen=True)
class NoisePath:
    """Stable increments on a grid together with the running levels ``L(i dt)``.

    ``increments[..., i] = L((i+1) dt) - L(i dt)`` for ``i = 0..N-1``.  The
    levels are the left-to-right running sums of the increments, except for a
    coarsened path, whose levels are copied from the fine path it came from.
    Leading axes, if any, index independent paths.
    """

    alpha: float
    grid: GridSpec
    increments: np.ndarray
    levels: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=np.float64)
        if inc.shape[-1] != self.grid.N:
            raise ValidationError("increment vector length must equal grid.N")
        object.__setattr__(self, "increments", inc)
        if self.levels is None:
            lead = np.zeros(inc.shape[:-1] + (1,))
            object.__setattr__(self, "levels",
                               np.concatenate([lead, np.cumsum(inc, axis=-1)], axis=-1))
        elif self.levels.shape != inc.shape[:-1] + (self.grid.N + 1,):
            raise ValidationError("levels must have one more entry than increments")


@dataclass(frozen=True)
class EmPath:
    """EM values ``Y_0..Y_N`` on ``grid``.

    ``drift_integral[i]`` is the accumulated drift ``sum_{k<i} f(Y_k) dt``, so
    that ``values[i] = x0 + L(i dt) + drift_integral[i]``.  ``first_nonfinite``
    is the first index where the state stopped being finite, if any.
    """

    grid: GridSpec
    values: np.ndarray
    drift_integral: np.ndarray
    drift: DriftSpec
    x0: float
    first_nonfinite: Optional[int] = None


def generate_increments(alpha: float, grid: GridSpec, stream: RngStream) -> NoisePath:
    scale = increment_scale(alpha, grid.delta)
    dl = sample_stable_array(StableParams(alpha, scale), stream, grid.N)
    return NoisePath(alpha, grid, dl)


def coarsen(noise: NoisePath, ratio: int) -> NoisePath:
    """Aggregate consecutive blocks of ``ratio`` fine increments.

    Block sums run in ascending index order; the coarse levels are the fine
    levels at the shared grid points, copied exactly.
    """
    ratio = int(ratio)
    n = noise.grid.N
    if ratio < 2 or n % ratio:
        raise ValidationError(
            f"coarsening ratio {ratio} must be >= 2 and divide the fine step count {n}")
    inc = noise.increments
    blocks = inc.reshape(inc.shape[:-1] + (n // ratio, ratio))
    out = blocks[..., 0].copy()
    for k in range(1, ratio):
        out += blocks[..., k]
    return NoisePath(noise.alpha, GridSpec(noise.grid.T, n // ratio), out,
                     noise.levels[..., ::ratio].copy())


def em_batch(drift: DriftSpec, x0: float, delta: float, levels: np.ndarray):
    """EM on rows of noise levels ``L(i dt)``.

    Returns ``(values, drift_integral, first_bad)``; ``first_bad[b]`` is the
    first non-finite index of row ``b`` or -1.
    """
    lv = np.atleast_2d(levels)
    batch, n1 = lv.shape
    values = np.empty((batch, n1))
    acc = np.zeros((batch, n1))
    y = np.full(batch, float(x0))
    d = np.zeros(batch)
    values[:, 0] = y
    # overflow is expected for exploding paths and is reported via first_bad
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n1):
            d = d + _drift_values(drift, y) * delta
            y = x0 + lv[:, i] + d
            acc[:, i] = d
            values[:, i] = y
    finite = np.isfinite(values)
    first_bad = np.where(finite.all(axis=1), -1, np.argmin(finite, axis=1))
    return values, acc, first_bad


def em_run(problem: SdeProblem, grid: GridSpec, noise: NoisePath) -> EmPath:
    """Discrete EM path ``Y_{i+1} = Y_i + f(Y_i) dt + dL_i`` from ``problem.x0``.

    The recursion is carried as ``Y_i = x0 + L(i dt) + sum_{k<i} f(Y_k) dt``,
    the same scheme in closed-sum form: paths driven by coupled noise then
    agree bit-for-bit wherever the drift contributions agree.  Non-finite
    states are propagated, not clamped, and the first one is recorded.
    """
    if noise.grid != grid:
        raise ValidationError("noise grid does not match the integration grid")
    if noise.increments.ndim != 1:
        raise ValidationError("em_run takes a single noise path")
    if not math.isclose(grid.T, problem.T, rel_tol=1e-12):
        raise ValidationError("grid horizon differs from the problem horizon")
    values, acc, bad = em_batch(problem.drift, problem.x0, grid.delta, noise.levels)
    first = int(bad[0])
    return EmPath(grid, values[0], acc[0], problem.drift, float(problem.x0),
                  None if first < 0 else first)


def _fine_index(fine: GridSpec, t: float) -> int:
    k = round(t / fine.delta)
    if not (0 <= k <= fine.N) or abs(k * fine.delta - t) > 1e-9 * max(fine.delta, abs(t)):
        raise ValidationError(f"t={t!r} is not a point of the fine grid (step {fine.delta!r})")
    return int(k)


def interpolant_eval(path: EmPath, fine_noise: NoisePath, t: float) -> float:
    """Continuous-time EM value ``Y(t)`` at a point of the fine grid.

    With ``i = floor(t / dt)`` on the path grid,
    ``Y(t) = x0 + L(t) + sum_{k<i} f(Y_k) dt + f(Y_i) (t - i dt)``, which equals
    ``Y_i + f(Y_i)(t - i dt) + L(t) - L(i dt)``.  Values between fine grid
    points would need stable-bridge sampling and are rejected.
    """
    coarse, fine = path.grid, fine_noise.grid
    if fine.N % coarse.N or not math.isclose(fine.T, coarse.T, rel_tol=1e-12):
        raise ValidationError("fine noise must refine the path grid by an integer ratio")
    if fine_noise.increments.ndim != 1:
        raise ValidationError("interpolant_eval takes a single noise path")
    r = fine.N // coarse.N
    k = _fine_index(fine, t)
    i, j = divmod(k, r)
    if j == 0:
        return float(path.values[i])
    y = float(path.values[i])
    drift = float(_drift_values(path.drift, y))
    return path.x0 + float(fine_noise.levels[k]) + float(path.drift_integral[i]) \
        + drift * (j * fine.delta)
