"""Symmetric alpha-stable variates and their fractional absolute moments.

Variates are drawn with the Chambers-Mallows-Stuck method restricted to the
symmetric, centred case.  With skewness 0 and location 0 the usual stable
parameterizations coincide, so no continuity-in-alpha shift is applied; the
``S_alpha(sigma, 0, 0)`` law used here has characteristic function
``exp(-sigma**alpha * |theta|**alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ValidationError

_MASK64 = (1 << 64) - 1
_TWO_M52 = 2.0 ** -52


@dataclass(frozen=True)
class StableParams:
    """Parameters of a symmetric, centred stable law ``S_alpha(sigma, 0, 0)``."""

    alpha: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0) or math.isnan(self.alpha):
            raise ValidationError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise ValidationError(f"sigma must be positive and finite, got {self.sigma!r}")


@dataclass
class RngStream:
    """Deterministic random stream keyed by ``(seed, index)``.

    Streams with the same key replay the same sequence; distinct indices under
    one seed are spawned children of a single ``SeedSequence`` and are
    statistically independent.  A stream is meant for one consumer.
    """

    seed: int
    index: int = 0
    _bitgen: np.random.PCG64 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(int(self.seed) & _MASK64,
                                    spawn_key=(int(self.index) & _MASK64,))
        self._bitgen = np.random.PCG64(ss)

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(size)

    def uniform_open(self, size: int) -> np.ndarray:
        """Uniforms on the open interval (0, 1), one 64-bit word each.

        The top 52 bits are centred in their cell, so the extreme values are
        ``2**-53`` and ``1 - 2**-53``; neither 0 nor 1 can occur.
        """
        return _open_unit(self.raw(size))


def _open_unit(raw: np.ndarray) -> np.ndarray:
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_M52


def _cms(alpha: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    # u uniform on (-pi/2, pi/2), w ~ Exp(1)
    if alpha == 2.0:
        return 2.0 * np.sin(u) * np.sqrt(w)
    if alpha == 1.0:
        return np.tan(u)
    return (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))


def sample_stable_array(params: StableParams, stream: RngStream, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. ``S_alpha(sigma, 0, 0)`` variates.

    Each variate consumes two consecutive 64-bit words (angle, then
    exponential), so ``n`` draws followed by ``m`` draws reproduce a single
    call with ``n + m``.
    """
    n = int(n)
    if n < 0:
        raise ValidationError(f"sample count must be nonnegative, got {n}")
    if n == 0:
        return np.empty(0, dtype=np.float64)
    raw = stream.raw(2 * n)
    u = math.pi * (_open_unit(raw[0::2]) - 0.5)
    w = -np.log(_open_unit(raw[1::2]))
    return params.sigma * _cms(float(params.alpha), u, w)


def sample_stable(params: StableParams, stream: RngStream) -> float:
    """Draw a single variate; same stream contract as :func:`sample_stable_array`."""
    return float(sample_stable_array(params, stream, 1)[0])


def increment_scale(alpha: float, delta: float) -> float:
    """Scale ``delta**(1/alpha)`` of a stable increment over a step of length ``delta``."""
    if not (0.0 < alpha <= 2.0):
        raise ValidationError(f"alpha must lie in (0, 2], got {alpha!r}")
    if not (delta > 0.0) or not math.isfinite(delta):
        raise ValidationError(f"time step must be positive, got {delta!r}")
    return delta ** (1.0 / alpha)


@lru_cache(maxsize=None)
def _unit_abs_moment(alpha: float, q: float) -> float:
    # E|X|^q for X ~ S_alpha(1,0,0):
    #   2^q Gamma((1+q)/2) Gamma(1 - q/alpha) / (sqrt(pi) Gamma(1 - q/2))
    log_c = (q * math.log(2.0) + math.lgamma((1.0 + q) / 2.0)
             + math.lgamma(1.0 - q / alpha)
             - 0.5 * math.log(math.pi) - math.lgamma(1.0 - q / 2.0))
    return math.exp(log_c)


def abs_moment(alpha: float, q: float, sigma: float = 1.0) -> float:
    """Fractional absolute moment ``E|X|**q`` of ``X ~ S_alpha(sigma, 0, 0)``.

    Only defined for ``0 < q < alpha < 2``; the moment is infinite for
    ``q >= alpha`` and the Gaussian case is not handled here.
    """
    if not (0.0 < alpha < 2.0):
        raise ValidationError(f"abs_moment needs alpha in (0, 2), got {alpha!r}")
    if not (0.0 < q):
        raise ValidationError(f"moment order q must be positive, got {q!r}")
    if not (q < alpha):
        raise ValidationError(f"E|X|^q is infinite unless q < alpha (q={q!r}, alpha={alpha!r})")
    if not (sigma > 0.0):
        raise ValidationError(f"sigma must be positive, got {sigma!r}")
    return sigma ** q * _unit_abs_moment(float(alpha), float(q))
