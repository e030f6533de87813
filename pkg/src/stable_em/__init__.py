"""Euler-Maruyama simulation of SDEs with Hoelder drift and symmetric
alpha-stable additive noise, with explicit error constants and Monte Carlo
convergence checks."""

from .errors import StudyAborted, ValidationError
from .stable_noise import (
    RngStream,
    StableParams,
    abs_moment,
    increment_scale,
    sample_stable,
    sample_stable_array,
)
from .sde_model import (
    Custom,
    HolderMeta,
    OddPower,
    SdeProblem,
    Zero,
    check_holder,
    eval_drift,
    holder_meta,
    parse_drift,
)
from .em_engine import (
    EmPath,
    GridSpec,
    NoisePath,
    coarsen,
    em_run,
    generate_increments,
    interpolant_eval,
)
from .theory import (
    TheoryConstants,
    TheoryInputs,
    compute_constants,
    lemma_bounds,
    theorem_bound,
)
from .convergence import (
    StudyConfig,
    StudyReport,
    gap_check,
    moment_check,
    rate_fit,
    run_study,
    strong_error,
)

__version__ = "0.1.0"
