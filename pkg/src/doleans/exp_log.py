"""Stochastic exponentials and logarithms of discrete cadlag paths.

Two evaluators are provided for the exponential: a closed-form one (driven
by the path value, the continuous quadratic variation, and a product over
jump factors, computed in log-magnitude plus sign so that long products
neither underflow nor overflow) and a one-step recursion that multiplies
``(1 + c_k)(1 + J_k)`` per step.  On pure-jump paths the two coincide
bit-for-bit; on grid paths their gap shrinks with the mesh and is measured
by the verification harness rather than hidden.

The logarithm divides the channels by left limits, treating anything
within the zero threshold as zero, and shortens its domain when the input
reached zero continuously.  The reciprocal companion transform produces
the path whose exponential is the pointwise reciprocal, with jumps
transported through the involution ``phi(x) = -1 + 1/(1+x)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .calculus import JumpFunctional, jump_integral, quadratic_variation
from .path_model import (
    CadlagPath,
    HitKind,
    HittingReport,
    PathMode,
    detect_zero_hit,
    left_limits,
    values,
    zero_threshold_for,
)

__all__ = [
    "phi",
    "stoch_exp_formula",
    "stoch_exp_recursive",
    "stoch_log",
    "reciprocal_companion",
    "jump_measure_pushforward",
    "GridMismatchError",
    "TailVerdict",
    "TailThresholds",
    "TailClassification",
    "classify_tail",
    "ClassMembership",
    "check_membership",
]


class GridMismatchError(ValueError):
    """Two paths expected on the same grid do not share their times."""


def phi(x: float) -> float:
    """The jump-transport involution ``-1 + 1/(1+x)``; undefined at -1."""
    if x == -1.0:
        raise ValueError("phi is undefined at x = -1")
    return -1.0 + 1.0 / (1.0 + x)


def _pin_step_to(c_val: float, target: float) -> float:
    """Jump entry j with ``fl(c_val + j) == target`` (a few ulp nudges)."""
    j = target - c_val
    for _ in range(4):
        got = c_val + j
        if got == target:
            return j
        j = math.nextafter(j, math.inf if got < target else -math.inf)
    return target - c_val  # unreachable in practice; keep the best guess


def _assemble_exp_output(
    x: CadlagPath, vals_live: np.ndarray, llims_live: np.ndarray
) -> CadlagPath:
    """Turn evaluated exponential values into an output path.

    ``vals_live`` holds the exponential at the in-domain grid indices
    0..last; ``llims_live`` its left limits at indices 1..last.  If the
    input lives on ``[0, t_m)`` the output is killed at index ``m``: it
    drops to exactly zero there and stays, so the result is defined on the
    whole grid.

    Channel entries are value differences, so the path's cumulative-sum
    reconstruction telescopes back to the evaluated values up to rounding.
    The absorbing drop to zero (a jump of exactly -1, or the kill at the
    interval end) is pinned so the reconstruction reaches exactly 0.0 and
    stays there, which downstream zero tests rely on.
    """
    n = x.n_steps
    live = x.last_index
    c_out = np.zeros(n)
    j_out = np.zeros(n)
    q_out = np.zeros(n)
    if live:
        prev = vals_live[:-1]
        c_out[:live] = llims_live - prev
        j_out[:live] = vals_live[1:] - llims_live
        q_out[:live] = prev**2 * x.cont_qv_increments[:live]
    c_out += 0.0  # flush -0.0 from the differencing
    j_out += 0.0
    recon = np.cumsum(np.concatenate(([vals_live[0]], c_out + j_out)))
    dead_from = None
    zeros = np.flatnonzero((vals_live[1:] == 0.0) & (vals_live[:-1] != 0.0))
    if zeros.size:
        a = int(zeros[0])  # channel position of the absorbing step
        if recon[a + 1] != 0.0:
            j_out[a] = _pin_step_to(float(c_out[a]), -float(recon[a]))
        dead_from = a + 1
    if x.interval_end is not None:
        m = x.interval_end
        if dead_from is not None and dead_from < m:
            j_out[m - 1] = 0.0
        else:
            j_out[m - 1] = _pin_step_to(0.0, -float(recon[m - 1]))
    return CadlagPath(
        float(vals_live[0]),
        x.times,
        c_out,
        j_out + 0.0,
        q_out,
        interval_end=None,
        mode=x.mode,
    )


def _pure_jump_exp_values(x: CadlagPath, factors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    live = x.last_index
    vals = np.empty(live + 1)
    vals[0] = math.exp(x.initial_value)
    if live:
        vals[1:] = vals[0] * np.cumprod(factors)
    return vals, vals[:-1].copy()


def stoch_exp_formula(x: CadlagPath) -> CadlagPath:
    """Closed-form stochastic exponential of a path.

    Starts at ``exp(initial_value)``.  Inside the domain the value is
    ``exp(X - qv_c/2)`` times the product of ``(1 + J)exp(-J)`` over past
    jumps; a jump of exactly -1 sends the value to exactly zero for good,
    and each jump below -1 flips the sign.  At and after the input's
    interval end the output is zero (the drop is recorded in the jump
    channel), so the result is defined on the whole grid.

    Grid paths are evaluated in log-magnitude plus sign; pure-jump paths
    reduce to the plain product of ``(1 + J)``, making this evaluator
    bit-identical to :func:`stoch_exp_recursive` in that mode.
    """
    live = x.last_index
    j = x.jumps[:live]
    if x.mode is PathMode.PURE_JUMP:
        vals, llims = _pure_jump_exp_values(x, 1.0 + j)
        return _assemble_exp_output(x, vals, llims)
    xvals = values(x)[: live + 1]
    qc_half = 0.5 * np.cumsum(x.cont_qv_increments[:live])
    nonzero = j != 0.0
    with np.errstate(divide="ignore"):
        lg = np.where(j > -1.0, np.log1p(np.where(nonzero, j, 0.0)), np.log(np.abs(1.0 + j)))
    lm = np.where(nonzero, lg - j, 0.0)
    cum_lm = np.cumsum(lm)
    flips = np.cumsum(j < -1.0)
    sign = 1.0 - 2.0 * (flips % 2)
    logmag = xvals[1:] - qc_half + cum_lm
    vals = np.empty(live + 1)
    vals[0] = math.exp(x.initial_value)
    vals[1:] = sign * np.exp(logmag) + 0.0
    cum_lm_prev = np.concatenate(([0.0], cum_lm[:-1])) if live else cum_lm
    flips_prev = np.concatenate(([0], flips[:-1])) if live else flips
    logmag_left = (xvals[1:] - j) - qc_half + cum_lm_prev
    sign_left = 1.0 - 2.0 * (flips_prev % 2)
    llims = sign_left * np.exp(logmag_left) + 0.0
    return _assemble_exp_output(x, vals, llims)


def stoch_exp_recursive(x: CadlagPath) -> CadlagPath:
    """One-step recursion for the stochastic exponential.

    Starts at ``exp(initial_value)`` and multiplies ``(1 + c_k)(1 + J_k)``
    per step; the left limit within a step is the previous value times
    ``(1 + c_k)``.  This is the exact discrete inverse of
    :func:`stoch_log`.  Output conventions (kill at the interval end,
    whole-grid domain) match :func:`stoch_exp_formula`.
    """
    live = x.last_index
    c = x.cont_increments[:live]
    j = x.jumps[:live]
    if x.mode is PathMode.PURE_JUMP:
        vals, llims = _pure_jump_exp_values(x, (1.0 + c) * (1.0 + j))
        return _assemble_exp_output(x, vals, llims)
    vals = np.empty(live + 1)
    vals[0] = math.exp(x.initial_value)
    if live:
        vals[1:] = vals[0] * np.cumprod((1.0 + c) * (1.0 + j))
    llims = vals[:-1] * (1.0 + c)
    return _assemble_exp_output(x, vals, llims)


def stoch_log(z: CadlagPath, report: Optional[HittingReport] = None) -> CadlagPath:
    """Stochastic logarithm: the channels of ``z`` divided at left limits.

    Per step, the continuous and qv channels are divided by the previous
    value (squared for qv) and the jump by the left limit; any divisor
    within the report's zero threshold contributes zero instead, so a path
    that was absorbed at zero yields a logarithm that is constant from the
    absorbing jump on (that jump itself maps to exactly -1 when the hit
    was exact).

    When the report says the zero hit was continuous, the output is only
    defined before the hit: its interval end is set to the hit index
    rather than raising, since there is no meaningful continuation.
    ``report`` defaults to :func:`~doleans.path_model.detect_zero_hit`
    with the mode's threshold.
    """
    if report is None:
        report = detect_zero_hit(z)
    theta = report.zero_threshold
    end = z.interval_end
    if report.kind is HitKind.CONTINUOUS:
        hit = report.tau0_index
        if hit == 0:
            # |Z_0| is already within the threshold: every divisor is
            # masked and the domain is empty for practical purposes.
            n = z.n_steps
            zero = np.zeros(n)
            return CadlagPath(0.0, z.times, zero, zero.copy(), zero.copy(),
                              interval_end=1 if n else None, mode=z.mode)
        end = hit if end is None else min(end, hit)
    n = z.n_steps
    live = n if end is None else end - 1
    vals = values(z)
    lls = left_limits(z)
    prev = vals[:live]
    llim = lls[1 : live + 1]
    c = z.cont_increments[:live]
    j = z.jumps[:live]
    q = z.cont_qv_increments[:live]
    prev_ok = np.abs(prev) > theta
    llim_ok = np.abs(llim) > theta
    c_out = np.zeros(n)
    j_out = np.zeros(n)
    q_out = np.zeros(n)
    np.divide(c, prev, out=c_out[:live], where=prev_ok)
    np.divide(j, llim, out=j_out[:live], where=llim_ok)
    np.divide(q, prev**2, out=q_out[:live], where=prev_ok)
    return CadlagPath(0.0, z.times, c_out + 0.0, j_out + 0.0, q_out,
                      interval_end=end, mode=z.mode)


def reciprocal_companion(x: CadlagPath, zero_threshold: Optional[float] = None) -> CadlagPath:
    """The path whose exponential is the reciprocal of the input's.

    Channels: the continuous increment flips sign and absorbs the qv
    increment, the qv channel is kept, and each jump ``x`` becomes
    ``phi(x) = -x + x^2/(1+x)``.  The domain is tightened to end at the
    first jump of -1 (where ``phi`` is undefined and the reciprocal of
    zero does not exist); -1 is matched exactly on pure-jump paths and
    within the zero threshold on grid paths.
    """
    theta = zero_threshold_for(x) if zero_threshold is None else float(zero_threshold)
    n = x.n_steps
    live = x.last_index
    j = x.jumps
    at_minus_one = np.abs(1.0 + j[:live]) <= theta
    end = x.interval_end
    hits = np.flatnonzero(at_minus_one)
    if hits.size:
        tau_j = int(hits[0]) + 1
        end = tau_j if end is None else min(end, tau_j)
    denom_ok = np.abs(1.0 + j) > theta
    recip = np.divide(1.0, 1.0 + j, out=np.ones(n), where=denom_ok & (j != 0.0))
    j_out = np.where(denom_ok, recip - 1.0, 0.0)
    c_out = x.cont_qv_increments - x.cont_increments
    return CadlagPath(
        -x.initial_value + 0.0,
        x.times,
        c_out + 0.0,
        j_out + 0.0,
        x.cont_qv_increments.copy(),
        interval_end=end,
        mode=x.mode,
    )


def _restrict(path: CadlagPath, last: int) -> CadlagPath:
    if last >= path.last_index:
        return path
    return replace(path, interval_end=last + 1)


def jump_measure_pushforward(
    g: JumpFunctional, x: CadlagPath, y: CadlagPath
) -> Tuple[np.ndarray, np.ndarray]:
    """Both sides of the jump-transport identity, on the common domain.

    Returns ``(lhs, rhs)`` where ``lhs`` integrates ``g`` over the jumps
    of ``y`` and ``rhs`` integrates ``g`` composed with the involution
    over the jumps of ``x``.  With ``y`` the reciprocal companion of ``x``
    the two sequences agree index by index.
    """
    if not np.array_equal(x.times, y.times):
        raise GridMismatchError("pushforward requires both paths on the same grid")
    common = min(x.last_index, y.last_index)
    lhs = jump_integral(g, _restrict(y, common))
    rhs = jump_integral(lambda t, v: g(t, phi(v)), _restrict(x, common))
    return lhs, rhs


class TailVerdict(enum.Enum):
    CONVERGES_FINITE = "converges-finite"
    DIVERGES_TO_MINUS_INF = "diverges-to-minus-inf"
    INFINITE_QV = "infinite-qv"
    ABSORBED_BY_JUMP = "absorbed-by-jump"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class TailThresholds:
    """Knobs for the finite-horizon tail classification.

    ``divergence`` bounds the terminal value from below, ``qv`` bounds the
    total quadratic variation from above, and a path counts as settled
    when its values over the trailing ``window_fraction`` of indices
    oscillate by at most ``settle``.
    """

    divergence: float = -20.0
    qv: float = 1e3
    window_fraction: float = 0.1
    settle: float = 1e-3


@dataclass(frozen=True)
class TailClassification:
    verdict: TailVerdict
    final_value: float
    final_qv: float
    oscillation: float


def classify_tail(
    x: CadlagPath,
    thresholds: TailThresholds = TailThresholds(),
    zero_threshold: Optional[float] = None,
) -> TailClassification:
    """Finite-horizon verdict about the behaviour of the path at its end.

    Checked in order: terminal value below the divergence threshold while
    the trailing window trends down; total quadratic variation above the
    qv threshold; an exact -1 jump inside the domain; trailing oscillation
    within the settle threshold.  Anything else is indeterminate.
    """
    theta = zero_threshold_for(x) if zero_threshold is None else float(zero_threshold)
    live = x.last_index
    vals = values(x)[: live + 1]
    w = min(live + 1, max(2, math.ceil(thresholds.window_fraction * (live + 1))))
    window = vals[-w:]
    oscillation = float(np.max(window) - np.min(window))
    terminal = float(vals[-1])
    total_qv = float(quadratic_variation(x)[0][-1])
    absorbed = bool(np.any(np.abs(1.0 + x.jumps[:live]) <= theta))
    if terminal <= thresholds.divergence and terminal <= window[0]:
        verdict = TailVerdict.DIVERGES_TO_MINUS_INF
    elif total_qv >= thresholds.qv:
        verdict = TailVerdict.INFINITE_QV
    elif absorbed:
        verdict = TailVerdict.ABSORBED_BY_JUMP
    elif oscillation <= thresholds.settle:
        verdict = TailVerdict.CONVERGES_FINITE
    else:
        verdict = TailVerdict.INDETERMINATE
    return TailClassification(verdict, terminal, total_qv, oscillation)


@dataclass(frozen=True)
class ClassMembership:
    """Outcome of a structural class-membership check.

    ``reasons`` lists every violated condition; empty means the path is a
    member.  Only the structural conditions are decided here, ensemble
    properties (supermartingale behaviour, maximality of the interval end)
    are the harness's job.
    """

    which: str
    is_member: bool
    reasons: Tuple[str, ...]


def _check_l(path: CadlagPath, theta: float) -> Tuple[str, ...]:
    reasons = []
    if path.initial_value != 0.0:
        reasons.append(f"initial value {path.initial_value!r} is not 0")
    live = path.last_index
    j = path.jumps[:live]
    minus_one = np.abs(1.0 + j) <= theta
    below = np.flatnonzero((j < -1.0) & ~minus_one)
    for pos in below:
        reasons.append(f"jump below -1 at grid index {int(pos) + 1}")
    hits = np.flatnonzero(minus_one)
    if hits.size:
        first = int(hits[0])
        moved = (
            np.any(path.cont_increments[first + 1 :] != 0.0)
            or np.any(path.jumps[first + 1 :] != 0.0)
            or np.any(path.cont_qv_increments[first + 1 :] != 0.0)
        )
        if moved:
            reasons.append(
                f"path moves after the absorbing -1 jump at grid index {first + 1}"
            )
    return tuple(reasons)


def _check_z(path: CadlagPath) -> Tuple[str, ...]:
    reasons = []
    if path.initial_value != 1.0:
        reasons.append(f"initial value {path.initial_value!r} is not 1")
    live = path.last_index
    vals = values(path)[: live + 1]
    lls = left_limits(path)[: live + 1]
    neg = np.flatnonzero(vals < 0.0)
    if neg.size:
        reasons.append(f"negative value at grid index {int(neg[0])}")
    neg = np.flatnonzero(lls < 0.0)
    if neg.size:
        reasons.append(f"negative left limit at grid index {int(neg[0])}")
    return tuple(reasons)


def check_membership(
    path: CadlagPath, which: str, zero_threshold: Optional[float] = None
) -> ClassMembership:
    """Structural membership test for the two process classes.

    ``which`` is ``"L"`` (zero start, jumps at least -1, frozen after the
    first -1 jump) or ``"Z"`` (unit start, nonnegative values and left
    limits).
    """
    theta = zero_threshold_for(path) if zero_threshold is None else float(zero_threshold)
    key = which.strip().upper()
    if key == "L":
        reasons = _check_l(path, theta)
    elif key == "Z":
        reasons = _check_z(path)
    else:
        raise ValueError(f"unknown class {which!r}, expected 'L' or 'Z'")
    return ClassMembership(key, not reasons, reasons)
