"""Explicit constants of the strong-error bound for EM with Hoelder drift.

All constants are closed forms in ``alpha, beta, K, K2, q, T, x0`` (and the
step size for ``C6``).  ``C1 = (E|X|^q)^(1/q)`` for a unit-scale symmetric
stable ``X``; it enters the moment constants as ``C1**q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError
from .stable_noise import abs_moment

C1_CONVENTION = "C1 = (E|X|^q)^(1/q) at unit scale; C2 uses C1^q"


def default_q(alpha: float, beta: float) -> float:
    """Midpoint of the admissible interval ``(2 beta, alpha)``."""
    return (2.0 * beta + alpha) / 2.0


@dataclass(frozen=True)
class TheoryInputs:
    alpha: float
    beta: float
    K: float
    K2: float
    T: float
    x0: float
    delta: float
    p: float = 2.0
    q: Optional[float] = None

    def __post_init__(self):
        if self.q is None:
            object.__setattr__(self, "q", default_q(self.alpha, self.beta))
        for msg in self.violations():
            raise ValidationError(msg)

    def assumption_checks(self) -> dict:
        return {
            "two_beta_lt_alpha": 2.0 * self.beta < self.alpha,
            "q_in_open_2beta_alpha": 2.0 * self.beta < self.q < self.alpha,
            # moment and gap constants are derived for q in [1, alpha)
            "q_ge_1": self.q >= 1.0,
        }

    def violations(self):
        out = []
        if not (1.0 < self.alpha < 2.0):
            out.append(f"alpha must lie in (1, 2), got {self.alpha!r}")
        if not (0.0 < self.beta < 1.0):
            out.append(f"beta must lie in (0, 1), got {self.beta!r}")
        if not (2.0 * self.beta < self.alpha):
            out.append(f"the error bound requires 2*beta < alpha "
                       f"(2*beta = {2 * self.beta!r}, alpha = {self.alpha!r})")
        elif not (2.0 * self.beta < self.q < self.alpha):
            out.append(f"q must lie in (2*beta, alpha) = ({2 * self.beta!r}, {self.alpha!r}), "
                       f"got {self.q!r}")
        if self.K2 == 0.0:
            out.append("K2 = 0 (zero drift): the error is identically zero and the constants degenerate")
        elif not (self.K > 0.0 and self.K2 >= self.K):
            out.append(f"need K > 0 and K2 >= K, got K={self.K!r}, K2={self.K2!r}")
        if not (self.T > 0.0):
            out.append(f"T must be positive, got {self.T!r}")
        if not (0.0 < self.p <= 2.0):
            out.append(f"p must lie in (0, 2], got {self.p!r}")
        if not (0.0 < self.delta < 1.0):
            out.append(f"delta must lie in (0, 1), got {self.delta!r}")
        if not math.isfinite(self.x0):
            out.append("x0 must be finite")
        return out


@dataclass(frozen=True)
class TheoryConstants:
    """C1..C6; ``logs`` holds their natural logarithms, which stay finite when
    a constant itself overflows to ``inf``."""

    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    logs: tuple = field(default=(), repr=False, compare=False)

    def as_dict(self) -> dict:
        return {f"c{i}": _finite_or_none(v) for i, v in
                enumerate((self.C1, self.C2, self.C3, self.C4, self.C5, self.C6), 1)}


def _finite_or_none(v):
    return v if math.isfinite(v) else None


def _lse(*terms) -> float:
    """log(sum(exp(t))) over the finite-or-(-inf) terms."""
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    m = max(terms)
    return m + math.log(sum(math.exp(t - m) for t in terms))


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _log_moment_constants(alpha, beta, K2, q, T, x0):
    lT = math.log(T)
    l1 = math.log(abs_moment(alpha, q, 1.0)) / q
    l2 = q * math.log(3.0) + _lse(q * _log(abs(x0)),
                                  q * _log(2.0 * K2) + (2.0 * q - 1.0) / q * lT,
                                  q * l1 + q / alpha * lT)
    l3 = _lse((1.0 - beta) * l2,
              math.log(1.0 - beta) + q * _log(6.0 * K2) + lT) / (1.0 - beta)
    return l1, l2, l3


def moment_constants(alpha: float, beta: float, K2: float, q: float, T: float, x0: float):
    """``(C1, C2, C3)`` of the q-th moment bound; ``K2 = 0`` is allowed here."""
    return tuple(_exp(v) for v in _log_moment_constants(alpha, beta, K2, q, T, x0))


def compute_constants(inputs: TheoryInputs) -> TheoryConstants:
    a, b, q, T = inputs.alpha, inputs.beta, inputs.q, inputs.T
    K, K2 = inputs.K, inputs.K2
    lT, lK = math.log(T), math.log(K)
    l1, l2, l3 = _log_moment_constants(a, b, K2, q, T, inputs.x0)
    # ln(1 + C3^beta) = logaddexp(0, beta ln C3)
    l4 = _lse(2.0 * q * math.log(2.0) + q * math.log(K2) + _lse(0.0, b * l3),
              q * math.log(2.0) + q * l1)
    l5 = math.log(2.0) + 2.0 * lK + 1.5 * lT + 2.0 * b / q * l4
    l_denom = _lse((1.0 - b) * (l5 + 2.0 * b / a * math.log(inputs.delta)),
                   math.log(1.0 - b) + math.log(2.0) + 2.0 * lK + 1.5 * lT)
    l6 = math.log(2.0) + 2.0 * lK + 0.5 * lT - l_denom
    logs = (l1, l2, l3, l4, l5, l6)
    return TheoryConstants(*(_exp(v) for v in logs), logs=logs)


@dataclass(frozen=True)
class Bound:
    """Strong-error bound kept in log space; ``value`` is None when it overflows."""

    log_value: float
    value: Optional[float]

    @property
    def log10_value(self) -> float:
        return self.log_value / math.log(10.0)


def theorem_bound(constants: TheoryConstants, inputs: TheoryInputs) -> Bound:
    """``delta**(p beta/alpha) * C5**(p/2) * exp(C6 T p / 2)``.

    Bounds ``sup_t E|x(t) - Y(t)|**p``.
    """
    p = inputs.p
    log_c5 = constants.logs[4] if constants.logs else math.log(constants.C5)
    log_b = (p * inputs.beta / inputs.alpha * math.log(inputs.delta)
             + 0.5 * p * log_c5 + 0.5 * constants.C6 * inputs.T * p)
    value = _exp(log_b)
    return Bound(log_b, value if math.isfinite(value) else None)


def bound_for(inputs: TheoryInputs) -> Bound:
    return theorem_bound(compute_constants(inputs), inputs)


@dataclass(frozen=True)
class LemmaBounds:
    moment_bound: float
    C4: float
    q: float
    alpha: float

    def gap_bound(self, delta: float) -> float:
        """Bound ``C4 * delta**(q/alpha)`` on ``E|Y(t) - Ybar(t)|**q``."""
        return self.C4 * delta ** (self.q / self.alpha)


def lemma_bounds(constants: TheoryConstants, inputs: TheoryInputs) -> LemmaBounds:
    return LemmaBounds(constants.C3, constants.C4, inputs.q, inputs.alpha)
