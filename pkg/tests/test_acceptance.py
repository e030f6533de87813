"""End-to-end acceptance checks on the reference scenario.

Scenario: drift sign(x)|x|^(4/9), alpha = 1.8, T = 2, x0 = 1.  Each test
prints one PASS/FAIL line; run with ``pytest tests/test_acceptance.py -s``
to see them alongside the pytest summary.
"""

import math
import time

import mpmath
import numpy as np
import pytest
from scipy import stats

from stable_em import (
    GridSpec, OddPower, RngStream, SdeProblem, StableParams, StudyConfig, TheoryInputs, Zero,
    abs_moment, compute_constants, gap_check, generate_increments, moment_check, run_study,
    sample_stable_array, theorem_bound,
)

from oracles import mp_constants

SEED = 20241015
ALPHA, BETA, T, X0 = 1.8, 4.0 / 9.0, 2.0, 1.0
DELTAS = tuple(T * 2.0 ** -k for k in range(4, 10))
REF_RATIO = 8  # reference step 2^-12 T
M = 1000


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="module")
def problem():
    return SdeProblem(OddPower(1.0, BETA), X0, ALPHA, T)


@pytest.fixture(scope="module")
def study(problem):
    cfg = StudyConfig(problem, DELTAS, REF_RATIO, M, 2.0, SEED)
    return cfg, run_study(cfg, workers=1)


def test_01_sampler_reductions(capsys):
    results = []
    for alpha, dist in ((2.0, stats.norm(scale=math.sqrt(2.0))), (1.0, stats.cauchy())):
        t0 = time.perf_counter()
        x = sample_stable_array(StableParams(alpha), RngStream(SEED, int(alpha)), 100_000)
        pval = stats.kstest(x, dist.cdf).pvalue
        results.append((alpha, pval, time.perf_counter() - t0))
    ok = all(p > 0.01 and dt < 5.0 for _, p, dt in results)
    report(capsys, 1, ok, "; ".join(f"alpha={a}: KS p={p:.3f}, {dt:.2f}s" for a, p, dt in results))
    assert ok


def test_02_fractional_moments(capsys):
    t0 = time.perf_counter()
    rows = []
    for i, (alpha, q) in enumerate(((1.8, 1.0), (1.5, 1.0), (1.8, 1.3444))):
        x = np.abs(sample_stable_array(StableParams(alpha), RngStream(SEED, 10 + i), 1_000_000)) ** q
        mc, se = x.mean(), x.std(ddof=1) / math.sqrt(x.size)
        exact = abs_moment(alpha, q)
        rows.append((alpha, q, exact, mc, abs(mc - exact) / se))
    dt = time.perf_counter() - t0
    ok = all(z <= 3.0 for *_, z in rows) and dt < 30.0
    report(capsys, 2, ok, "; ".join(f"({a},{q}): exact={e:.5f} mc={m:.5f} |z|={z:.2f}"
                                    for a, q, e, m, z in rows) + f"; {dt:.1f}s")
    assert ok


def test_03_self_similarity(capsys):
    n, delta = 1_000_000, 1e-4
    small = generate_increments(ALPHA, GridSpec(n * delta, n), RngStream(SEED, 20)).increments
    big = generate_increments(ALPHA, GridSpec(n * 4 * delta, n), RngStream(SEED, 21)).increments
    ratio = np.abs(small).mean() / np.abs(big).mean()
    want = 4.0 ** (-1.0 / ALPHA)
    ok = abs(ratio / want - 1.0) <= 0.02
    report(capsys, 3, ok, f"ratio={ratio:.5f} target={want:.5f}")
    assert ok


def test_04_zero_drift_exact(capsys):
    pr = SdeProblem(Zero(), X0, ALPHA, T)
    rep = run_study(StudyConfig(pr, DELTAS, REF_RATIO, 200, 2.0, SEED))
    errs = [s.error_p for s in rep.per_delta]
    ok = all(e == 0.0 for e in errs) and rep.degenerate
    report(capsys, 4, ok, f"errors={errs}")
    assert ok


def test_05_rate(capsys, study):
    _, rep = study
    slope = rep.fit["slope"]
    pd = rep.per_delta
    monotone = all(b.error_p - a.error_p <= 3.0 * math.hypot(a.std_error, b.std_error)
                   for a, b in zip(pd, pd[1:]))
    ok = slope >= BETA / ALPHA - 0.05 and monotone
    report(capsys, 5, ok, f"slope={slope:.4f} (>= {BETA / ALPHA - 0.05:.4f}), "
                          f"r2={rep.fit['r_squared']:.4f}, monotone={monotone}")
    assert ok


def test_06_gap_scaling(capsys, problem):
    q = 1.0
    res = gap_check(problem, DELTAS, REF_RATIO, q, M, SEED)
    slope = res["fit"]["slope"]
    c1 = compute_constants(TheoryInputs(ALPHA, BETA, 2 ** (1 - BETA), 2 ** (1 - BETA), T, X0,
                                        DELTAS[0], 2.0, q=1.0)).C1
    zero = gap_check(SdeProblem(Zero(), X0, ALPHA, T), DELTAS, REF_RATIO, q, M, SEED)
    zs = [abs(r["gap_pooled"] - c1 ** q * (r["delta"] / 2) ** (q / ALPHA)) / r["gap_pooled_stderr"]
          for r in zero["per_delta"]]
    ok = abs(slope - q / ALPHA) <= 0.1 and max(zs) <= 3.0
    report(capsys, 6, ok, f"slope={slope:.4f} target={q / ALPHA:.4f}+-0.1 "
                          f"(max-over-cells slope {res['fit_sup']['slope']:.4f}); "
                          f"zero-drift max |z|={max(zs):.2f}")
    assert ok


def test_07_moment_dominance(capsys, problem):
    res = moment_check(problem, 1.3, DELTAS[-1], M, SEED)
    ok = res["empirical_sup_moment"] <= res["C3"]
    report(capsys, 7, ok, f"sup E|Y|^1.3={res['empirical_sup_moment']:.4f} C3={res['C3']:.4g}")
    assert ok


def test_08_theorem_dominance(capsys, study, problem):
    _, rep = study
    hm = problem.holder
    pairs = []
    for s in rep.per_delta:
        ti = TheoryInputs(ALPHA, hm.beta, hm.K, hm.K2, T, X0, s.delta, 2.0)
        pairs.append((s.error_p, theorem_bound(compute_constants(ti), ti).value))
    ok = all(e <= b for e, b in pairs)
    report(capsys, 8, ok, "; ".join(f"{e:.3g}<={b:.3g}" for e, b in pairs))
    assert ok


def test_09_determinism(capsys, study):
    cfg, rep = study
    other = run_study(cfg, workers=4)
    ok = rep.to_json() == other.to_json() and rep.to_csv() == other.to_csv()
    report(capsys, 9, ok, "workers 1 vs 4: JSON and CSV byte-identical" if ok else "reports differ")
    assert ok


def test_10_constants_regression(capsys, problem):
    hm = problem.holder
    ti = TheoryInputs(ALPHA, hm.beta, hm.K, hm.K2, T, X0, 0.001, 2.0)
    got = compute_constants(ti)
    want = mp_constants(ti.alpha, ti.beta, ti.K, ti.K2, ti.q, ti.T, ti.x0, ti.delta)
    rel = [abs(mpmath.mpf(g) - w) / abs(w) for g, w in
           zip((got.C1, got.C2, got.C3, got.C4, got.C5, got.C6), want)]
    worst = float(max(rel))
    ok = worst <= 1e-12
    report(capsys, 10, ok, f"max relative deviation {worst:.2e} over C1..C6")
    assert ok
