"""Scalar SDE ``dx = f(x) dt + dL`` with a Hoelder-continuous drift."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .errors import ValidationError
from .stable_noise import RngStream


@dataclass(frozen=True)
class Zero:
    """The drift ``f = 0``."""

    def __str__(self):
        return "zero"


@dataclass(frozen=True)
class OddPower:
    """Odd power drift ``f(x) = c * sign(x) * |x|**beta``.

    For ``x >= 0`` this is ``c * x**beta``; negative states use the odd
    extension so that the drift stays globally beta-Hoelder on the real line.
    """

    c: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValidationError(f"odd_power needs beta in (0, 1), got {self.beta!r}")
        if self.c == 0.0 or not math.isfinite(self.c):
            raise ValidationError(f"odd_power needs a finite nonzero coefficient, got {self.c!r}")

    def __str__(self):
        return f"odd_power:c={self.c!r},beta={self.beta!r}"


@dataclass(frozen=True)
class Custom:
    """User drift with declared Hoelder constants.

    ``func`` is called with numpy arrays and must act elementwise.
    """

    func: Callable[[np.ndarray], np.ndarray]
    K: float
    beta: float

    def __post_init__(self):
        if not (self.K > 0.0):
            raise ValidationError(f"declared Hoelder constant must be positive, got {self.K!r}")
        if not (0.0 < self.beta < 1.0):
            raise ValidationError(f"declared Hoelder exponent must lie in (0, 1), got {self.beta!r}")


DriftSpec = Union[Zero, OddPower, Custom]


@dataclass(frozen=True)
class HolderMeta:
    """Hoelder constant ``K``, exponent ``beta`` and growth constant ``K2 = max(K, |f(0)|)``.

    The zero drift is represented with ``K = K2 = 0``; its ``beta`` is a
    placeholder and nothing downstream depends on it.
    """

    K: float
    beta: float
    K2: float

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValidationError(f"beta must lie in (0, 1), got {self.beta!r}")
        if self.K < 0.0 or self.K2 < self.K:
            raise ValidationError(f"need 0 <= K <= K2, got K={self.K!r}, K2={self.K2!r}")
        if self.K == 0.0 and self.K2 != 0.0:
            raise ValidationError("K = 0 is reserved for the zero drift")

    @property
    def is_zero(self) -> bool:
        return self.K2 == 0.0


def _drift_values(spec: DriftSpec, x):
    # no finiteness check: used inside the EM loop where nan/inf is tracked
    if isinstance(spec, Zero):
        return np.zeros_like(x, dtype=np.float64) if isinstance(x, np.ndarray) else 0.0
    if isinstance(spec, OddPower):
        return spec.c * np.sign(x) * np.abs(x) ** spec.beta
    return spec.func(x)


def eval_drift(spec: DriftSpec, x):
    """Evaluate the drift at a scalar or array of finite states."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("drift evaluated at a non-finite state")
    if arr.ndim == 0:
        return float(_drift_values(spec, float(arr)))
    return np.asarray(_drift_values(spec, arr), dtype=np.float64)


def holder_meta(spec: DriftSpec) -> HolderMeta:
    if isinstance(spec, Zero):
        return HolderMeta(K=0.0, beta=0.5, K2=0.0)
    if isinstance(spec, OddPower):
        # sup of |f(x)-f(y)|/|x-y|^beta is attained on antisymmetric pairs y = -x
        K = abs(spec.c) * 2.0 ** (1.0 - spec.beta)
        return HolderMeta(K=K, beta=spec.beta, K2=K)
    f0 = abs(float(np.asarray(spec.func(np.zeros(1)))[0]))
    return HolderMeta(K=spec.K, beta=spec.beta, K2=max(spec.K, f0))


@dataclass
class HolderReport:
    max_ratio: float
    arg_pair: tuple
    passed: bool


def _adversarial_pairs(radius: float):
    mags = np.concatenate([np.geomspace(1e-12, radius, 400), [radius]])
    eps = np.geomspace(1e-12, 1e-3, 20) * max(radius, 1.0)
    xs = [mags, mags, eps, -eps, np.full(eps.size, radius), [radius]]
    ys = [-mags, np.zeros_like(mags), np.zeros_like(eps), eps, radius - eps, [-radius]]
    return np.concatenate(xs), np.concatenate(ys)


def check_holder(spec: DriftSpec, K: float, beta: float, n_pairs: int,
                 domain_radius: float, stream: RngStream) -> HolderReport:
    """Search for a pair violating ``|f(x) - f(y)| <= K |x - y|**beta``.

    Uniform pairs on ``[-R, R]**2`` are supplemented with antisymmetric,
    near-zero and near-boundary pairs.  Coincident pairs are skipped.
    """
    if n_pairs < 1:
        raise ValidationError("n_pairs must be at least 1")
    if not (domain_radius > 0.0):
        raise ValidationError("domain_radius must be positive")
    u = stream.uniform_open(2 * int(n_pairs))
    x = domain_radius * (2.0 * u[0::2] - 1.0)
    y = domain_radius * (2.0 * u[1::2] - 1.0)
    ax, ay = _adversarial_pairs(float(domain_radius))
    x = np.concatenate([ax, x])
    y = np.concatenate([ay, y])
    keep = x != y
    x, y = x[keep], y[keep]
    num = np.abs(np.asarray(_drift_values(spec, x), dtype=np.float64)
                 - np.asarray(_drift_values(spec, y), dtype=np.float64))
    ratio = num / np.abs(x - y) ** beta
    if ratio.size == 0:
        return HolderReport(0.0, (math.nan, math.nan), True)
    k = int(np.argmax(ratio))
    max_ratio = float(ratio[k])
    return HolderReport(max_ratio, (float(x[k]), float(y[k])), max_ratio <= K * (1.0 + 1e-9))


@dataclass(frozen=True)
class SdeProblem:
    """Drift, initial state ``x0``, noise index ``alpha`` in (1, 2) and horizon ``T``."""

    drift: DriftSpec
    x0: float
    alpha: float
    T: float

    def __post_init__(self):
        if not (1.0 < self.alpha < 2.0):
            raise ValidationError(f"SDE noise index alpha must lie in (1, 2), got {self.alpha!r}")
        if not (self.T > 0.0) or not math.isfinite(self.T):
            raise ValidationError(f"horizon T must be positive, got {self.T!r}")
        if not math.isfinite(self.x0):
            raise ValidationError("x0 must be finite")

    @property
    def holder(self) -> HolderMeta:
        return holder_meta(self.drift)

    @property
    def theorem_applies(self) -> bool:
        """True when the drift exponent satisfies ``2 * beta < alpha``."""
        h = self.holder
        return not h.is_zero and 2.0 * h.beta < self.alpha


def _number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse number {text!r}") from exc


def parse_drift(text: str) -> DriftSpec:
    """Parse ``zero`` or ``odd_power:c=<num>,beta=<num>`` (numbers may be fractions)."""
    s = text.strip()
    if s == "zero":
        return Zero()
    name, _, rest = s.partition(":")
    if name != "odd_power":
        raise ValidationError(f"unknown drift {text!r}; expected 'zero' or 'odd_power:c=..,beta=..'")
    kw = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq or key.strip() not in ("c", "beta"):
            raise ValidationError(f"bad drift parameter {item!r}")
        kw[key.strip()] = _number(val)
    if "beta" not in kw:
        raise ValidationError("odd_power drift needs beta=...")
    return OddPower(c=kw.get("c", 1.0), beta=kw["beta"])
