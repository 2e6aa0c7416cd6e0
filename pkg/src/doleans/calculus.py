"""Integral calculus on discrete cadlag paths.

Quadratic variation, running sums of a functional over the jump measure
(with the divergence convention that a non-finite term sends the whole
tail to +inf), and left-point stochastic integrals.  All results are
reported per grid index inside the path's domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .path_model import CadlagPath, left_limits, values

__all__ = [
    "JumpFunctional",
    "Integrand",
    "IntegrabilityError",
    "quadratic_variation",
    "jump_integral",
    "stochastic_integral",
    "sign_change_count",
]

#: A deterministic real function of (time, jump size), evaluated only at
#: nonzero jumps.  May return +inf, which is absorbing in sums.
JumpFunctional = Callable[[float, float], float]


class IntegrabilityError(ValueError):
    """The integrand is non-finite at a point where the path moves."""

    def __init__(self, index: int, which: str):
        self.index = index
        super().__init__(
            f"integrand is not finite at grid index {index} ({which} evaluation)"
        )


def _live_steps(path: CadlagPath) -> int:
    """Number of step positions inside the domain (grid indices 1..last)."""
    return path.last_index


def quadratic_variation(path: CadlagPath) -> Tuple[np.ndarray, np.ndarray]:
    """Total and continuous quadratic variation per in-domain grid index.

    The continuous part accumulates the qv channel; the total adds the
    squared jumps.  Both sequences start at 0 and are nondecreasing.
    """
    n = _live_steps(path)
    cont = np.zeros(n + 1)
    total = np.zeros(n + 1)
    if n:
        np.cumsum(path.cont_qv_increments[:n], out=cont[1:])
        total[1:] = cont[1:] + np.cumsum(path.jumps[:n] ** 2)
    return total, cont


def jump_integral(f: JumpFunctional, path: CadlagPath) -> np.ndarray:
    """Running sum of ``f(t_k, J_k)`` over nonzero jumps, per grid index.

    A term that is not finite (the ``-log(0)`` style divergences) makes the
    sum +inf from that index on, mirroring the absolute-convergence
    convention for integrals against the jump measure.
    """
    n = _live_steps(path)
    out = np.zeros(n + 1)
    if n == 0:
        return out
    terms = np.zeros(n)
    bad = None
    for pos in np.flatnonzero(path.jumps[:n] != 0.0):
        val = f(float(path.times[pos]), float(path.jumps[pos]))
        if not np.isfinite(val):
            bad = pos if bad is None else min(bad, pos)
            val = 0.0
        terms[pos] = val
    np.cumsum(terms, out=out[1:])
    if bad is not None:
        out[bad + 1:] = np.inf
    return out


@dataclass(frozen=True)
class Integrand:
    """A process sampled where the left-point integration rule needs it.

    ``at_step_start[k-1]`` is the value carried over ``(t_{k-1}, t_k]``
    (the previous grid point), used for the continuous and qv channels;
    ``at_jump[k-1]`` is the left limit at ``t_k``, used for the jump
    channel.  Both arrays have one entry per step, so the integrand never
    sees the jump it multiplies.
    """

    at_step_start: np.ndarray
    at_jump: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.at_step_start, dtype=np.float64)
        b = np.asarray(self.at_jump, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("integrand samples must be 1-D arrays of equal length")
        object.__setattr__(self, "at_step_start", a)
        object.__setattr__(self, "at_jump", b)

    @classmethod
    def constant(cls, value: float, n_steps: int) -> "Integrand":
        arr = np.full(n_steps, float(value))
        return cls(arr, arr.copy())

    @classmethod
    def from_function(cls, h: Callable[[float, float], float], path: CadlagPath) -> "Integrand":
        """Sample ``h(time, path value)`` at step starts and at left limits."""
        vals = values(path)
        lls = left_limits(path)
        n = path.n_steps
        start = np.array([h(path.time_of(k - 1), vals[k - 1]) for k in range(1, n + 1)])
        jump = np.array([h(path.time_of(k), lls[k]) for k in range(1, n + 1)])
        return cls(start, jump)


def stochastic_integral(h: Integrand, path: CadlagPath) -> CadlagPath:
    """Left-point stochastic integral of ``h`` against the path.

    Channel rules: the continuous increment and qv increment are scaled by
    the step-start value (squared for qv), the jump by the left-limit
    value.  The output starts at 0 and inherits the grid, the interval end,
    and the mode.  A non-finite integrand value matters only where the
    corresponding channel entry is nonzero; there it raises
    :class:`IntegrabilityError` naming the grid index.
    """
    n = path.n_steps
    if h.at_step_start.size != n:
        raise ValueError(
            f"integrand has {h.at_step_start.size} samples, path has {n} steps"
        )
    c = path.cont_increments
    j = path.jumps
    q = path.cont_qv_increments
    live = _live_steps(path)
    start_needed = (c[:live] != 0.0) | (q[:live] != 0.0)
    bad = np.flatnonzero(start_needed & ~np.isfinite(h.at_step_start[:live]))
    if bad.size:
        raise IntegrabilityError(int(bad[0]) + 1, "step-start")
    bad = np.flatnonzero((j[:live] != 0.0) & ~np.isfinite(h.at_jump[:live]))
    if bad.size:
        raise IntegrabilityError(int(bad[0]) + 1, "left-limit")
    # Zero channel entries contribute zero regardless of the integrand,
    # so a non-finite sample never leaks through as nan.
    out_c = np.where(c == 0.0, 0.0, h.at_step_start * c)
    out_j = np.where(j == 0.0, 0.0, h.at_jump * j)
    out_q = np.where(q == 0.0, 0.0, h.at_step_start ** 2 * q)
    return CadlagPath(
        0.0,
        path.times,
        out_c,
        out_j,
        out_q,
        interval_end=path.interval_end,
        mode=path.mode,
    )


def sign_change_count(path: CadlagPath) -> np.ndarray:
    """Running count of jumps strictly below -1, per in-domain grid index."""
    n = _live_steps(path)
    out = np.zeros(n + 1, dtype=np.int64)
    if n:
        np.cumsum(path.jumps[:n] < -1.0, out=out[1:])
    return out
