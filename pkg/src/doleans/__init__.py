"""Path-level stochastic exponentials and logarithms with verification suites."""

from .path_model import (
    CadlagPath,
    PathMode,
    HitKind,
    HittingReport,
    OutOfIntervalError,
    value_at,
    left_limit_at,
    values,
    left_limits,
    running_infimum_abs,
    detect_zero_hit,
    announcing_sequence,
    stop_at,
    write_path_csv,
    read_path_csv,
    channel_max_diff,
)
from .calculus import (
    Integrand,
    IntegrabilityError,
    quadratic_variation,
    jump_integral,
    stochastic_integral,
    sign_change_count,
)
from .exp_log import (
    phi,
    stoch_exp_formula,
    stoch_exp_recursive,
    stoch_log,
    reciprocal_companion,
    jump_measure_pushforward,
    classify_tail,
    check_membership,
    TailThresholds,
    TailVerdict,
    TailClassification,
    ClassMembership,
    GridMismatchError,
)
from .generators import GeneratorSpec, make_path, derive_seed, KINDS
from .harness import SuiteReport, CheckResult, run_suite, SUITES

__version__ = "0.1.0"
