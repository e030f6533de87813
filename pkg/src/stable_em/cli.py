"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 study aborted (too many exploded
paths), 3 I/O failure, 4 study finished but a pass flag is false.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import RunConfig, parse_number, parse_number_list
from .convergence import StudyConfig, gap_check, moment_check, run_study
from .em_engine import GridSpec, em_run, generate_increments
from .errors import StudyAborted, ValidationError
from .sde_model import SdeProblem, holder_meta, parse_drift
from .stable_noise import RngStream, StableParams, sample_stable_array
from .theory import C1_CONVENTION, TheoryInputs, compute_constants, lemma_bounds, theorem_bound

EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_IO, EXIT_FAILED = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _pick(flag, default):
    return default if flag is None else flag


def _write_text(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _problem(args, cfg: RunConfig) -> SdeProblem:
    s = cfg.sde_model
    return SdeProblem(parse_drift(_pick(args.drift, s.drift)), _pick(args.x0, s.x0),
                      _pick(args.alpha, s.alpha), _pick(args.T, s.T))


def _add_problem_flags(p):
    g = p.add_argument_group("SDE")
    g.add_argument("--drift", help="drift: 'zero' or 'odd_power:c=<c>,beta=<beta>', "
                   "f(x) = c*sign(x)*|x|^beta (default odd_power:c=1,beta=4/9)")
    g.add_argument("--x0", type=parse_number, help="initial state (default 1)")
    g.add_argument("--alpha", type=parse_number,
                   help="stability index of the driving noise, in (1, 2) (default 1.8)")
    g.add_argument("--T", type=parse_number, help="time horizon (default 2)")


def cmd_sample(args, cfg: RunConfig) -> int:
    s = cfg.stable_noise
    alpha, sigma = _pick(args.alpha, s.alpha), _pick(args.sigma, s.sigma)
    n, seed = _pick(args.n, s.n), _pick(args.seed, s.seed)
    params = StableParams(alpha, sigma)
    if n < 0:
        raise ValidationError("n must be nonnegative")
    x = sample_stable_array(params, RngStream(seed, _pick(args.stream, s.stream)), n)
    _write_text(args.out, "value\n" + "".join(f"{v!r}\n" for v in x.tolist()))
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    pr = _problem(args, cfg)
    e = cfg.em_engine
    grid = GridSpec.from_delta(pr.T, _pick(args.delta, e.delta))
    seed, k = _pick(args.seed, e.seed), _pick(args.paths, e.paths)
    if k < 1:
        raise ValidationError("--paths must be at least 1")
    if args.split and args.out in (None, "-"):
        raise ValidationError("--split needs --out to name the file stem")
    times = grid.times().tolist()
    flagged = {}
    long_rows = []
    for m in range(k):
        path = em_run(pr, grid, generate_increments(pr.alpha, grid, RngStream(seed, m)))
        if path.first_nonfinite is not None:
            flagged[m] = path.first_nonfinite
        vals = path.values.tolist()
        if args.split:
            stem = args.out[:-4] if args.out.endswith(".csv") else args.out
            body = "t,value\n" + "".join(f"{t!r},{v!r}\n" for t, v in zip(times, vals))
            _write_text(f"{stem}_{m}.csv", body)
        else:
            long_rows.append((m, vals))
    if not args.split:
        if k == 1:
            body = "t,value\n" + "".join(f"{t!r},{v!r}\n" for t, v in zip(times, long_rows[0][1]))
        else:
            body = "path_id,t,value\n" + "".join(
                f"{m},{t!r},{v!r}\n" for m, vals in long_rows for t, v in zip(times, vals))
        _write_text(args.out, body)
    if flagged:
        report = json.dumps({"nonfinite_paths": [{"path_id": m, "first_index": i}
                                                 for m, i in flagged.items()]}, indent=2)
        if args.out in (None, "-"):
            sys.stderr.write(report + "\n")
        else:
            _write_text(args.out + ".nonfinite.json", report + "\n")
    return EXIT_OK


def _study_config(args, cfg: RunConfig, pr: SdeProblem) -> StudyConfig:
    c = cfg.convergence_lab
    return StudyConfig(pr, _pick(args.deltas, c.deltas), _pick(args.ref_ratio, c.ref_ratio),
                       _pick(args.M, c.M), _pick(args.p, c.p), _pick(args.seed, c.master_seed),
                       block_size=_pick(args.block_size, c.block_size))


def cmd_converge(args, cfg: RunConfig) -> int:
    pr = _problem(args, cfg)
    study = _study_config(args, cfg, pr)
    report = run_study(study, _pick(args.workers, cfg.convergence_lab.workers))
    _write_text(args.json, report.to_json())
    if args.csv:
        _write_text(args.csv, report.to_csv())
    return EXIT_OK if report.passed else EXIT_FAILED


def _theory_inputs(args, cfg: RunConfig) -> TheoryInputs:
    s, t = cfg.sde_model, cfg.theory_constants
    hm = holder_meta(parse_drift(_pick(args.drift, s.drift)))
    beta = _pick(args.beta, hm.beta)
    K = _pick(args.K, hm.K)
    K2 = _pick(args.K2, max(K, hm.K2) if args.K is not None else hm.K2)
    return TheoryInputs(alpha=_pick(args.alpha, s.alpha), beta=beta, K=K, K2=K2,
                        T=_pick(args.T, s.T), x0=_pick(args.x0, s.x0),
                        delta=_pick(args.delta, t.delta), p=_pick(args.p, t.p),
                        q=_pick(args.q, t.q))


def cmd_constants(args, cfg: RunConfig) -> int:
    ti = _theory_inputs(args, cfg)
    c = compute_constants(ti)
    b = theorem_bound(c, ti)
    lb = lemma_bounds(c, ti)
    out = dict(c.as_dict())
    out.update({
        "bound": b.value,
        "log10_bound": b.log10_value,
        "q": ti.q,
        "gap_bound": lb.gap_bound(ti.delta),
        "inputs": {"alpha": ti.alpha, "beta": ti.beta, "K": ti.K, "K2": ti.K2, "T": ti.T,
                   "x0": ti.x0, "delta": ti.delta, "p": ti.p},
        "assumption_checks": ti.assumption_checks(),
        "c1_convention": C1_CONVENTION,
    })
    _write_text(args.out, json.dumps(out, indent=2, allow_nan=False) + "\n")
    return EXIT_OK


def cmd_moments(args, cfg: RunConfig) -> int:
    pr = _problem(args, cfg)
    c = cfg.convergence_lab
    res = moment_check(pr, _pick(args.q, c.moment_q), _pick(args.delta, c.moment_delta),
                       _pick(args.M, c.M), _pick(args.seed, c.master_seed),
                       _pick(args.workers, c.workers))
    _write_text(args.out, json.dumps(res, indent=2, allow_nan=False) + "\n")
    return EXIT_OK if res["pass"] else EXIT_FAILED


def cmd_gap(args, cfg: RunConfig) -> int:
    pr = _problem(args, cfg)
    c = cfg.convergence_lab
    res = gap_check(pr, _pick(args.deltas, c.deltas), _pick(args.ref_ratio, c.ref_ratio),
                    _pick(args.q, c.gap_q), _pick(args.M, c.M), _pick(args.seed, c.master_seed),
                    _pick(args.workers, c.workers))
    _write_text(args.out, json.dumps(res, indent=2, allow_nan=False) + "\n")
    return EXIT_OK if res["pass"] else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stable-em", epilog=__doc__.split("\n\n")[1],
                     description="Euler-Maruyama for dx = f(x) dt + dL with symmetric "
                     "alpha-stable L: sampling, paths, error constants, convergence studies.")
    parser.add_argument("--config", help="config file with [section] / key = value lines; "
                        "flags override it")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw symmetric stable variates as CSV")
    p.add_argument("--alpha", type=parse_number, help="stability index in (0, 2] (default 1.8)")
    p.add_argument("--sigma", type=parse_number,
                   help="scale; 0.001^(1/alpha) gives EM increments for step 0.001 (default)")
    p.add_argument("--n", type=int, help="number of variates (default 2000)")
    p.add_argument("--seed", type=int, help="master seed (default 42)")
    p.add_argument("--stream", type=int, help="stream index under the seed (default 0)")
    p.add_argument("--out", help="output CSV path, '-' for stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="EM paths as CSV (t,value or path_id,t,value)")
    _add_problem_flags(p)
    p.add_argument("--delta", "--h", dest="delta", type=parse_number,
                   help="time step; must divide T (default 0.001)")
    p.add_argument("--seed", type=int, help="master seed; path m uses stream m (default 42)")
    p.add_argument("--paths", type=int, help="number of paths (default 1)")
    p.add_argument("--split", action="store_true",
                   help="write one <stem>_<m>.csv per path instead of one long-format file")
    p.add_argument("--out", help="output CSV path, '-' for stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("converge", help="coupled-path strong-error study with rate fit")
    _add_problem_flags(p)
    p.add_argument("--deltas", type=parse_number_list,
                   help="comma-separated decreasing step sizes (default T*2^-4 .. T*2^-9)")
    p.add_argument("--ref-ratio", dest="ref_ratio", type=int,
                   help="reference step = smallest delta / ref-ratio (default 8)")
    p.add_argument("--M", type=int, help="number of Monte Carlo paths (default 1000)")
    p.add_argument("--p", type=parse_number, help="error moment order in (0, 2] (default 2)")
    p.add_argument("--seed", type=int, help="master seed (default 20241015)")
    p.add_argument("--workers", type=int, help="worker threads; results do not depend on it")
    p.add_argument("--block-size", dest="block_size", type=int,
                   help="paths per work unit (default 50); part of the reproducibility key")
    p.add_argument("--json", help="JSON report path (default stdout)")
    p.add_argument("--csv", help="CSV path with delta,error_p,error_root,stderr")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("constants", help="error-bound constants C1..C6 and the bound as JSON")
    p.add_argument("--drift", help="drift used to derive K, beta, K2 (default odd_power:c=1,beta=4/9)")
    p.add_argument("--alpha", type=parse_number, help="stability index in (1, 2) (default 1.8)")
    p.add_argument("--beta", type=parse_number, help="Hoelder exponent; overrides the drift's")
    p.add_argument("--K", type=parse_number, help="Hoelder constant; overrides the drift's")
    p.add_argument("--K2", type=parse_number, help="growth constant max(K, |f(0)|)")
    p.add_argument("--q", type=parse_number,
                   help="auxiliary moment order in (2*beta, alpha) (default midpoint)")
    p.add_argument("--p", type=parse_number, help="error moment order in (0, 2] (default 2)")
    p.add_argument("--T", type=parse_number, help="time horizon (default 2)")
    p.add_argument("--x0", type=parse_number, help="initial state (default 1)")
    p.add_argument("--delta", type=parse_number, help="step size in (0, 1) (default 0.001)")
    p.add_argument("--out", help="output JSON path, '-' for stdout")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("moments", help="Monte Carlo sup_t E|Y(t)|^q against C3")
    _add_problem_flags(p)
    p.add_argument("--q", type=parse_number, help="moment order in [1, alpha) (default 1.3)")
    p.add_argument("--delta", type=parse_number, help="EM step size (default 0.0625)")
    p.add_argument("--M", type=int, help="number of paths (default 1000)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker threads")
    p.add_argument("--out", help="output JSON path, '-' for stdout")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("gap", help="moments of Y(t) - Ybar(t) at cell midpoints")
    _add_problem_flags(p)
    p.add_argument("--q", type=parse_number, help="moment order in [1, alpha) (default 1)")
    p.add_argument("--deltas", type=parse_number_list, help="comma-separated decreasing steps")
    p.add_argument("--ref-ratio", dest="ref_ratio", type=int,
                   help="even refinement of the smallest step (default 8)")
    p.add_argument("--M", type=int, help="number of paths (default 1000)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker threads")
    p.add_argument("--out", help="output JSON path, '-' for stdout")
    p.set_defaults(func=cmd_gap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        return args.func(args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StudyAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
