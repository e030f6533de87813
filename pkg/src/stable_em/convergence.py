"""Monte Carlo strong-error studies on coupled EM paths.

Every path ``m`` draws its reference-grid noise from ``RngStream(seed, m)``.
Coarser grids reuse that noise through :func:`coarsen`, so the coarse and
reference solutions are driven by the same realised Levy path.  The true
solution is not available in closed form; the reference-grid EM path stands
in for it.

Paths are processed in fixed blocks of ``block_size``.  Block boundaries do
not depend on the worker count and per-time reductions run over the full
path axis in index order, so reports are identical for any number of
workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .em_engine import GridSpec, NoisePath, coarsen, em_batch, generate_increments
from .errors import StudyAborted, ValidationError
from .sde_model import SdeProblem, Zero, _drift_values
from .stable_noise import RngStream, abs_moment
from .theory import (
    C1_CONVENTION, TheoryInputs, compute_constants, default_q, moment_constants, theorem_bound,
)

EXCLUSION_LIMIT = 0.01
DEFAULT_BLOCK = 50


def _map_blocks(fn, M: int, block_size: int, workers: int):
    bounds = [(s, min(s + block_size, M)) for s in range(0, M, block_size)]
    if workers <= 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def _noise_block(problem: SdeProblem, grid: GridSpec, seed: int, start: int, stop: int) -> NoisePath:
    rows = [generate_increments(problem.alpha, grid, RngStream(seed, m)).increments
            for m in range(start, stop)]
    return NoisePath(problem.alpha, grid, np.vstack(rows))


def nested_grids(T: float, deltas: Sequence[float], ref_ratio: int):
    """Reference grid plus ``(grid, ratio_to_reference)`` for every delta.

    The reference step is ``min(deltas) / ref_ratio`` and every delta must be
    an integer multiple of it.
    """
    if len(deltas) == 0:
        raise ValidationError("at least one step size is required")
    if int(ref_ratio) != ref_ratio or ref_ratio < 2:
        raise ValidationError(f"ref_ratio must be an integer >= 2, got {ref_ratio!r}")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValidationError("step sizes must be strictly decreasing")
    grids = [GridSpec.from_delta(T, d) for d in deltas]
    ref = GridSpec(T, grids[-1].N * int(ref_ratio))
    out = []
    for g in grids:
        if ref.N % g.N:
            raise ValidationError(
                f"nesting rule violated: step {g.delta!r} is not an integer multiple of the "
                f"reference step {ref.delta!r} (every step count must divide {ref.N})")
        out.append((g, ref.N // g.N))
    return ref, out


def _check_exclusions(bad: np.ndarray, M: int):
    n_bad = int(bad.sum())
    if n_bad > EXCLUSION_LIMIT * M:
        raise StudyAborted(f"{n_bad} of {M} paths produced non-finite states "
                           f"(limit {EXCLUSION_LIMIT:.0%})")
    return n_bad


def _column_stats(values: np.ndarray):
    """Per-time means of per-path values; max over time with its column's spread."""
    means = values.mean(axis=0)
    k = int(np.argmax(means))
    col = values[:, k]
    m = col.shape[0]
    se = float(col.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
    return k, float(means[k]), se, col


def _kurtosis(col: np.ndarray) -> Optional[float]:
    if col.size < 4 or np.all(col == col[0]):
        return None
    return float(stats.kurtosis(col))


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


@dataclass(frozen=True)
class StudyConfig:
    problem: SdeProblem
    deltas: tuple
    ref_ratio: int = 8
    M: int = 1000
    p: float = 2.0
    master_seed: int = 0
    q: Optional[float] = None
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if self.M < 2:
            raise ValidationError("strong error estimation needs M >= 2 paths")
        if not (0.0 < self.p <= 2.0):
            raise ValidationError(f"p must lie in (0, 2], got {self.p!r}")
        if self.block_size < 1:
            raise ValidationError("block_size must be positive")
        nested_grids(self.problem.T, self.deltas, self.ref_ratio)


@dataclass
class DeltaStats:
    delta: float
    n_steps: int
    error_p: float
    error_root: float
    std_error: float
    M_effective: int
    argmax_t: float
    kurtosis: Optional[float]
    c6: Optional[float] = None
    theorem_bound: Optional[float] = None
    log10_theorem_bound: Optional[float] = None


@dataclass
class StudyReport:
    config: dict
    per_delta: list
    fit: Optional[dict]
    degenerate: bool
    checks: dict
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v for v in self.checks.values() if v is not None)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "degenerate": self.degenerate,
            "per_delta": [vars(s) for s in self.per_delta],
            "fit": self.fit,
            "checks": self.checks,
            "passed": self.passed,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "error_p", "error_root", "stderr"])
        for s in self.per_delta:
            w.writerow([repr(s.delta), repr(s.error_p), repr(s.error_root), repr(s.std_error)])
        return buf.getvalue()


def rate_fit(deltas, errors, p: float = 1.0) -> dict:
    """Least-squares slope of ``ln(error**(1/p))`` against ``ln(delta)``."""
    d = np.asarray(deltas, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if d.size != e.size or d.size < 3:
        raise ValidationError("rate_fit needs at least three (delta, error) points")
    if np.any(e <= 0.0) or np.any(d <= 0.0):
        raise ValidationError("rate_fit needs strictly positive errors and step sizes")
    res = stats.linregress(np.log(d), np.log(e) / p)
    return {"slope": float(res.slope), "intercept": float(res.intercept),
            "r_squared": float(res.rvalue ** 2)}


def _study_block(cfg: StudyConfig, ref: GridSpec, grids, start: int, stop: int):
    pr = cfg.problem
    noise = _noise_block(pr, ref, cfg.master_seed, start, stop)
    y_ref, _, bad_ref = em_batch(pr.drift, pr.x0, ref.delta, noise.levels)
    bad = bad_ref >= 0
    diffs = []
    for grid, r in grids:
        y, _, b = em_batch(pr.drift, pr.x0, grid.delta, coarsen(noise, r).levels)
        bad |= b >= 0
        with np.errstate(invalid="ignore", over="ignore"):
            diffs.append(np.abs(y_ref[:, ::r] - y) ** cfg.p)
    return bad, diffs


def run_study(cfg: StudyConfig, workers: int = 1) -> StudyReport:
    """Strong error ``sup_t E|Y_ref(t) - Y_delta(t)|**p`` for every delta, plus the rate fit.

    The supremum is taken over the coarse grid times of the per-time Monte
    Carlo means.  Paths with non-finite states on any grid are excluded from
    every delta; more than 1% exclusions aborts the study.
    """
    pr = cfg.problem
    ref, grids = nested_grids(pr.T, cfg.deltas, cfg.ref_ratio)
    parts = _map_blocks(lambda a, b: _study_block(cfg, ref, grids, a, b),
                        cfg.M, cfg.block_size, workers)
    bad = np.concatenate([b for b, _ in parts])
    n_bad = _check_exclusions(bad, cfg.M)
    keep = ~bad

    hm = pr.holder
    degenerate = isinstance(pr.drift, Zero)
    q = cfg.q
    theory = None
    if pr.theorem_applies:
        q = default_q(pr.alpha, hm.beta) if q is None else q

    per_delta = []
    for k, (grid, _) in enumerate(grids):
        vals = np.concatenate([d[k] for _, d in parts])[keep]
        j, err, se, col = _column_stats(vals)
        s = DeltaStats(delta=grid.delta, n_steps=grid.N, error_p=err,
                       error_root=err ** (1.0 / cfg.p), std_error=se,
                       M_effective=int(keep.sum()), argmax_t=j * grid.delta,
                       kurtosis=_kurtosis(col))
        if pr.theorem_applies:
            ti = TheoryInputs(pr.alpha, hm.beta, hm.K, hm.K2, pr.T, pr.x0, grid.delta, cfg.p, q)
            consts = compute_constants(ti)
            bnd = theorem_bound(consts, ti)
            theory = consts
            s.c6 = consts.C6
            s.theorem_bound = _finite_or_none(bnd.value)
            s.log10_theorem_bound = bnd.log10_value
        per_delta.append(s)

    errs = [s.error_p for s in per_delta]
    fit = None
    if not degenerate and len(errs) >= 3 and all(e > 0.0 for e in errs):
        fit = rate_fit(cfg.deltas, errs, cfg.p)

    checks = {}
    if degenerate:
        checks["zero_drift_exact"] = all(e == 0.0 for e in errs)
    else:
        checks["monotone"] = all(
            b.error_p - a.error_p <= 3.0 * math.hypot(a.std_error, b.std_error)
            for a, b in zip(per_delta, per_delta[1:]))
        if pr.theorem_applies:
            target = hm.beta / pr.alpha - 0.05
            checks["rate"] = None if fit is None else fit["slope"] >= target
            checks["dominance"] = all(
                s.theorem_bound is None or s.error_p <= s.theorem_bound for s in per_delta)

    metadata = {
        "master_seed": cfg.master_seed,
        "stream_indices": [0, cfg.M - 1],
        "block_size": cfg.block_size,
        "reference_steps": ref.N,
        "reference_delta": ref.delta,
        "excluded_paths": n_bad,
        "q": q,
        "expected_order": (hm.beta / pr.alpha) if pr.theorem_applies else None,
        "rate_threshold": (hm.beta / pr.alpha - 0.05) if pr.theorem_applies else None,
        "constants": None if theory is None else {
            k: v for k, v in theory.as_dict().items() if k != "c6"},
        "c1_convention": C1_CONVENTION,
    }
    config = {
        "drift": str(pr.drift), "x0": pr.x0, "alpha": pr.alpha, "T": pr.T,
        "deltas": list(cfg.deltas), "ref_ratio": cfg.ref_ratio, "M": cfg.M, "p": cfg.p,
    }
    return StudyReport(config, per_delta, fit, degenerate, checks, metadata)


def strong_error(problem: SdeProblem, delta: float, ref_ratio: int, M: int, p: float,
                 master_seed: int, workers: int = 1) -> DeltaStats:
    """Single-delta strong error against a reference step ``delta / ref_ratio``."""
    cfg = StudyConfig(problem, (delta,), ref_ratio, M, p, master_seed)
    return run_study(cfg, workers).per_delta[0]


def _check_q(problem: SdeProblem, q: float):
    if not (1.0 <= q < problem.alpha):
        raise ValidationError(f"q must lie in [1, alpha) = [1, {problem.alpha!r}), got {q!r}")


def moment_check(problem: SdeProblem, q: float, delta: float, M: int, master_seed: int,
                 workers: int = 1, block_size: int = DEFAULT_BLOCK) -> dict:
    """Compare ``sup_t E|Y(t)|**q`` on the EM grid with the moment constant C3."""
    _check_q(problem, q)
    if M < 1:
        raise ValidationError("M must be at least 1")
    grid = GridSpec.from_delta(problem.T, delta)

    def block(a, b):
        noise = _noise_block(problem, grid, master_seed, a, b)
        y, _, bad = em_batch(problem.drift, problem.x0, grid.delta, noise.levels)
        return bad >= 0, np.abs(y) ** q

    parts = _map_blocks(block, M, block_size, workers)
    bad = np.concatenate([b for b, _ in parts])
    n_bad = _check_exclusions(bad, M)
    vals = np.concatenate([v for _, v in parts])[~bad]
    j, emp, se, _ = _column_stats(vals)
    hm = problem.holder
    c1, c2, c3 = moment_constants(problem.alpha, hm.beta, hm.K2, q, problem.T, problem.x0)
    return {
        "empirical_sup_moment": emp,
        "std_error": _finite_or_none(se),
        "argmax_t": j * grid.delta,
        "C3": c3,
        "q": q,
        "delta": grid.delta,
        "M_effective": int((~bad).sum()),
        "excluded_paths": n_bad,
        "low_confidence": M < 2,
        "pass": emp <= c3,
    }


def gap_check(problem: SdeProblem, deltas, ref_ratio: int, q: float, M: int,
              master_seed: int, workers: int = 1, block_size: int = DEFAULT_BLOCK) -> dict:
    """Moments of ``Y(t) - Ybar(t)`` at the midpoint of every coarse cell.

    For each delta the midpoint gap is ``f(Y_i) delta/2 + L(t) - L(i delta)``
    with the noise difference read off the fine reference levels.  Reports
    the max over cells of the per-cell means (``gap_sup``) and the pooled
    mean over cells and paths.  With at least three deltas, ``fit`` is the
    slope of ``ln gap_pooled`` against ``ln delta`` and ``fit_sup`` the same
    for ``gap_sup``.

    The gap has infinite variance whenever ``2q >= alpha``, so the max over
    a growing number of noisy cell means is inflated by single large jumps,
    more so at small delta, which flattens ``fit_sup``.  The pooled mean
    estimates the same ``delta**(q/alpha)`` law without that bias.
    """
    _check_q(problem, q)
    if M < 2:
        raise ValidationError("gap_check needs M >= 2 paths")
    deltas = tuple(float(d) for d in np.atleast_1d(deltas))
    if int(ref_ratio) % 2:
        raise ValidationError("ref_ratio must be even so that cell midpoints lie on the fine grid")
    ref, grids = nested_grids(problem.T, deltas, ref_ratio)
    pr = problem

    def block(a, b):
        noise = _noise_block(pr, ref, master_seed, a, b)
        _, _, bad = em_batch(pr.drift, pr.x0, ref.delta, noise.levels)
        bad = bad >= 0
        out = []
        for grid, r in grids:
            y, _, bb = em_batch(pr.drift, pr.x0, grid.delta, coarsen(noise, r).levels)
            bad |= bb >= 0
            lv = noise.levels
            dl = lv[:, r // 2::r][:, :grid.N] - lv[:, 0:-1:r]
            gap = np.asarray(_drift_values(pr.drift, y[:, :-1])) * (0.5 * grid.delta) + dl
            out.append(np.abs(gap) ** q)
        return bad, out

    parts = _map_blocks(block, M, block_size, workers)
    bad = np.concatenate([b for b, _ in parts])
    n_bad = _check_exclusions(bad, M)
    keep = ~bad
    hm = pr.holder
    c1, _, c3 = moment_constants(pr.alpha, hm.beta, hm.K2, q, pr.T, pr.x0)
    c4 = 2.0 ** (2.0 * q) * hm.K2 ** q * (1.0 + c3 ** hm.beta) + 2.0 ** q * c1 ** q
    rows = []
    for k, (grid, _) in enumerate(grids):
        vals = np.concatenate([o[k] for _, o in parts])[keep]
        j, sup, se, _ = _column_stats(vals)
        flat = vals.ravel()
        lemma = c4 * grid.delta ** (q / pr.alpha)
        rows.append({
            "delta": grid.delta,
            "gap_sup": sup,
            "gap_sup_stderr": se,
            "argmax_t": (j + 0.5) * grid.delta,
            "gap_pooled": float(flat.mean()),
            "gap_pooled_stderr": float(flat.std(ddof=1) / math.sqrt(flat.size)),
            "noise_only_moment": abs_moment(pr.alpha, q, (0.5 * grid.delta) ** (1.0 / pr.alpha)),
            "lemma_bound": lemma,
            "within_lemma_bound": sup <= lemma,
        })
    fit = fit_sup = None
    if len(rows) >= 3:
        ds = [r["delta"] for r in rows]
        fit = rate_fit(ds, [r["gap_pooled"] for r in rows], 1.0)
        fit_sup = rate_fit(ds, [r["gap_sup"] for r in rows], 1.0)
    return {
        "q": q,
        "expected_slope": q / pr.alpha,
        "per_delta": rows,
        "fit": fit,
        "fit_sup": fit_sup,
        "C4": c4,
        "M_effective": int(keep.sum()),
        "excluded_paths": n_bad,
        "pass": all(r["within_lemma_bound"] for r in rows),
    }
