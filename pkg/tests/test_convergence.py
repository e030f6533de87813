import math

import numpy as np
import pytest

from stable_em import (
    OddPower, SdeProblem, StudyAborted, StudyConfig, ValidationError, Zero, abs_moment, gap_check,
    moment_check, rate_fit, run_study, strong_error,
)
from stable_em.convergence import nested_grids
from stable_em.theory import moment_constants

DELTAS = tuple(2.0 * 2.0 ** -k for k in range(4, 8))


def test_rate_fit_exact_power_law():
    d = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = rate_fit(d, 3.0 * d ** 0.25)
    assert fit["slope"] == pytest.approx(0.25, abs=1e-12)
    assert fit["r_squared"] == pytest.approx(1.0, abs=1e-12)
    assert fit["intercept"] == pytest.approx(math.log(3.0), abs=1e-12)


def test_rate_fit_uses_pth_root():
    d = np.array([0.1, 0.05, 0.025])
    assert rate_fit(d, d ** 0.5, p=2.0)["slope"] == pytest.approx(0.25, abs=1e-12)


def test_rate_fit_flat_pair_pulls_slope_down():
    d = np.array([0.4, 0.2, 0.1])
    fit = rate_fit(d, [1.0, 1.0, 0.5])
    assert 0.0 < fit["slope"] < 1.0 and fit["r_squared"] < 1.0


def test_rate_fit_rejects():
    with pytest.raises(ValidationError):
        rate_fit([0.1, 0.05], [1.0, 0.5])
    with pytest.raises(ValidationError):
        rate_fit([0.1, 0.05, 0.01], [1.0, 0.0, 0.5])


def test_nested_grids_rules():
    ref, grids = nested_grids(2.0, DELTAS, 8)
    assert ref.N == 128 * 8 and [r for _, r in grids] == [64, 32, 16, 8]
    with pytest.raises(ValidationError, match="nesting"):
        nested_grids(2.0, (0.125, 0.1), 2)
    with pytest.raises(ValidationError, match="decreasing"):
        nested_grids(2.0, (0.0625, 0.125), 2)
    with pytest.raises(ValidationError, match="divide"):
        nested_grids(2.0, (0.3,), 2)


def test_zero_drift_errors_exactly_zero(zero_problem):
    rep = run_study(StudyConfig(zero_problem, DELTAS, 4, 40, 2.0, 1))
    assert rep.degenerate and rep.fit is None
    assert all(s.error_p == 0.0 for s in rep.per_delta)
    assert rep.checks == {"zero_drift_exact": True} and rep.passed


def test_strong_error_reproducible(scenario):
    a = strong_error(scenario, 2.0 * 2 ** -5, 128, 200, 2.0, 9)
    b = strong_error(scenario, 2.0 * 2 ** -5, 128, 200, 2.0, 9)
    assert a.error_p > 0 and a == b


def test_strong_error_decreases_with_step(scenario):
    cfg = StudyConfig(scenario, (2.0 * 2 ** -5, 2.0 * 2 ** -6), 64, 1000, 2.0, 17)
    rep = run_study(cfg)
    big, small = rep.per_delta
    assert big.error_p - small.error_p > 3 * math.hypot(big.std_error, small.std_error)


def test_study_independent_of_workers_and_reports_checks(scenario):
    cfg = StudyConfig(scenario, DELTAS, 4, 120, 1.0, 3, block_size=16)
    one, four = run_study(cfg, workers=1), run_study(cfg, workers=4)
    assert one.to_json() == four.to_json() and one.to_csv() == four.to_csv()
    assert set(one.checks) == {"monotone", "rate", "dominance"}
    assert one.to_csv().splitlines()[0] == "delta,error_p,error_root,stderr"


def test_study_config_validation(scenario):
    with pytest.raises(ValidationError):
        StudyConfig(scenario, DELTAS, 8, 1, 2.0, 0)
    with pytest.raises(ValidationError):
        StudyConfig(scenario, DELTAS, 8, 10, 3.0, 0)


def test_exploding_paths_abort():
    # 1e300-scale initial state overflows on the first drift step
    pr = SdeProblem(OddPower(1e300, 0.9), 1e300, 1.5, 1.0)
    with pytest.raises(StudyAborted):
        run_study(StudyConfig(pr, (0.25, 0.125, 0.0625), 2, 10, 2.0, 0))


def test_moment_check_zero_drift(zero_problem):
    pr = SdeProblem(Zero(), 1.0, 1.8, 1.0)
    res = moment_check(pr, 1.0, 1.0 / 16, 400, 5)
    _, _, c3 = moment_constants(1.8, 0.5, 0.0, 1.0, 1.0, 1.0)
    assert res["C3"] == pytest.approx(c3) and res["pass"]
    # sup_t E|1 + L(t)| lies between 1 and 1 + E|L(1)|
    assert 1.0 <= res["empirical_sup_moment"] <= 1.0 + 1.2 * abs_moment(1.8, 1.0)


def test_moment_check_single_path_low_confidence(scenario):
    res = moment_check(scenario, 1.3, 0.125, 1, 5)
    assert res["low_confidence"] and res["std_error"] is None


def test_moment_check_rejects_q(scenario):
    for q in (0.9, 1.8):
        with pytest.raises(ValidationError):
            moment_check(scenario, q, 0.125, 10, 0)


def test_gap_zero_drift_matches_noise_moment(zero_problem):
    res = gap_check(zero_problem, DELTAS, 8, 1.0, 500, 2)
    for row in res["per_delta"]:
        want = abs_moment(1.8, 1.0) * (row["delta"] / 2) ** (1 / 1.8)
        assert row["noise_only_moment"] == pytest.approx(want, rel=1e-14)
        assert abs(row["gap_pooled"] - want) < 3 * row["gap_pooled_stderr"]
    assert res["pass"]


def test_gap_requires_even_ratio(scenario):
    with pytest.raises(ValidationError, match="even"):
        gap_check(scenario, DELTAS, 3, 1.0, 10, 0)


def test_gap_pooled_matches_interpolant(scenario):
    from stable_em import GridSpec, RngStream, coarsen, em_run, generate_increments, interpolant_eval
    deltas, r, M = (0.5, 0.25, 0.125), 4, 3
    res = gap_check(scenario, deltas, r, 1.2, M, 11, block_size=2)
    ref = GridSpec(2.0, 16 * r)
    for row, d in zip(res["per_delta"], deltas):
        gaps = []
        for m in range(M):
            fine = generate_increments(1.8, ref, RngStream(11, m))
            k = round(d / ref.delta)
            path = em_run(scenario, GridSpec.from_delta(2.0, d), coarsen(fine, k))
            for i in range(path.grid.N):
                t = i * d + (k // 2) * ref.delta
                gaps.append(abs(interpolant_eval(path, fine, t) - path.values[i]) ** 1.2)
        assert row["gap_pooled"] == pytest.approx(np.mean(gaps), rel=1e-10)
    assert res["fit"] is not None and res["fit_sup"] is not None
