"""Discrete cadlag paths on stochastic intervals.

A sampled path is stored as an initial value plus three per-step channels:
continuous increments, jumps, and continuous quadratic-variation increments.
Grid index ``k`` refers to time ``times[k-1]`` for ``k >= 1`` and to time 0
for ``k = 0``; channel position ``k-1`` describes what happens over
``(t_{k-1}, t_k]``.  A path may carry an interval end marker ``m``, meaning
it is only defined on ``[0, t_m)``: grid indices ``>= m`` are outside the
path's domain and their channel entries are zeroed on construction.

The value at index ``k`` is ``initial_value + sum_{j<=k}(c_j + J_j)`` and
the left limit is ``value - J_k``, with the convention that the left limit
at index 0 equals the initial value.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, replace
from typing import Optional, Sequence, TextIO, Union

import numpy as np

__all__ = [
    "PathMode",
    "CadlagPath",
    "HitKind",
    "HittingReport",
    "OutOfIntervalError",
    "DEFAULT_GRID_ZERO_THRESHOLD",
    "zero_threshold_for",
    "value_at",
    "left_limit_at",
    "values",
    "left_limits",
    "running_infimum_abs",
    "detect_zero_hit",
    "announcing_sequence",
    "stop_at",
    "write_path_csv",
    "read_path_csv",
    "channel_max_diff",
]

#: Grid-mode default for "equals zero": exact zeros are unattainable in
#: floating point once continuous increments are involved.
DEFAULT_GRID_ZERO_THRESHOLD = 1e-9

CSV_HEADER = [
    "index",
    "time",
    "value",
    "left_limit",
    "cont_increment",
    "jump",
    "cont_qv_increment",
    "in_interval",
]


class OutOfIntervalError(IndexError):
    """Raised when a grid index at or after the interval end is dereferenced."""


class PathMode(enum.Enum):
    PURE_JUMP = "purejump"
    GRID = "grid"


def _frozen_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("path channels must be one-dimensional")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CadlagPath:
    """A sampled cadlag trajectory with separated channels.

    Parameters
    ----------
    initial_value : float
        Path value at time 0.
    times : array_like
        Strictly increasing, finite, positive grid times ``t_1 < ... < t_N``.
    cont_increments : array_like
        Change of the continuous part over ``(t_{k-1}, t_k]``, length N.
    jumps : array_like
        Jump at ``t_k`` (zero means no jump there), length N.
    cont_qv_increments : array_like
        Increment of the continuous quadratic variation over
        ``(t_{k-1}, t_k]``, nonnegative, length N.
    interval_end : int or None
        ``None`` for a path defined on all grid indices; an index
        ``1 <= m <= N`` for a path defined on ``[0, t_m)`` only.  Channel
        entries at positions ``>= m`` are zeroed.
    mode : PathMode
        ``PURE_JUMP`` promises exact arithmetic (continuous channels are
        identically zero); ``GRID`` marks a time-discretised approximation.

    Paths are immutable after construction; all operations in this module
    are pure functions and safe to share across workers.
    """

    initial_value: float
    times: np.ndarray
    cont_increments: np.ndarray
    jumps: np.ndarray
    cont_qv_increments: np.ndarray
    interval_end: Optional[int] = None
    mode: PathMode = PathMode.GRID

    def __post_init__(self):
        times = _frozen_array(self.times)
        c = np.asarray(self.cont_increments, dtype=np.float64).copy()
        j = np.asarray(self.jumps, dtype=np.float64).copy()
        q = np.asarray(self.cont_qv_increments, dtype=np.float64).copy()
        x0 = float(self.initial_value)
        if not np.isfinite(x0):
            raise ValueError("initial_value must be finite")
        n = times.size
        if not (c.size == j.size == q.size == n):
            raise ValueError("all channels must have the same length as times")
        if n and not np.all(np.isfinite(times)):
            raise ValueError("times must be finite")
        if n and not (times[0] > 0.0 and np.all(np.diff(times) > 0.0)):
            raise ValueError("times must be strictly increasing and positive")
        for name, arr in (("cont_increments", c), ("jumps", j), ("cont_qv_increments", q)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(q < 0.0):
            raise ValueError("cont_qv_increments must be nonnegative")
        end = self.interval_end
        if end is not None:
            end = int(end)
            if not 1 <= end <= n:
                raise ValueError(f"interval_end must lie in [1, {n}], got {end}")
            # Entries outside the domain are dead weight; keep them canonical.
            c[end - 1:] = 0.0
            j[end - 1:] = 0.0
            q[end - 1:] = 0.0
        if self.mode is PathMode.PURE_JUMP:
            if np.any(c != 0.0) or np.any(q != 0.0):
                raise ValueError("pure-jump paths must have zero continuous channels")
        for arr in (c, j, q):
            arr.setflags(write=False)
        object.__setattr__(self, "initial_value", x0)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "cont_increments", c)
        object.__setattr__(self, "jumps", j)
        object.__setattr__(self, "cont_qv_increments", q)
        object.__setattr__(self, "interval_end", end)

    @property
    def n_steps(self) -> int:
        return self.times.size

    @property
    def last_index(self) -> int:
        """Largest grid index inside the path's domain."""
        if self.interval_end is None:
            return self.n_steps
        return self.interval_end - 1

    def in_interval(self, k: int) -> bool:
        return 0 <= k <= self.last_index

    def time_of(self, k: int) -> float:
        """Grid time of index ``k`` (0.0 for ``k = 0``)."""
        if not 0 <= k <= self.n_steps:
            raise IndexError(f"grid index {k} out of range [0, {self.n_steps}]")
        return 0.0 if k == 0 else float(self.times[k - 1])

    @property
    def horizon(self) -> float:
        """Time of the last in-domain grid index."""
        return self.time_of(self.last_index)


def zero_threshold_for(path: CadlagPath) -> float:
    """Mode-dependent default for the 'equals zero' test."""
    return 0.0 if path.mode is PathMode.PURE_JUMP else DEFAULT_GRID_ZERO_THRESHOLD


def values(path: CadlagPath) -> np.ndarray:
    """Path values at every grid index 0..N (also outside the domain,
    where the zeroed channels leave the value frozen)."""
    steps = np.empty(path.n_steps + 1)
    steps[0] = path.initial_value
    if path.n_steps:
        steps[1:] = path.cont_increments + path.jumps
    return np.cumsum(steps)


def left_limits(path: CadlagPath) -> np.ndarray:
    """Left limits at every grid index; index 0 returns the initial value."""
    out = values(path)
    if path.n_steps:
        out[1:] -= path.jumps
    return out


def value_at(path: CadlagPath, k: int) -> float:
    """Value at grid index ``k``.

    Raises OutOfIntervalError for indices at or after the interval end.
    """
    if not 0 <= k <= path.n_steps:
        raise IndexError(f"grid index {k} out of range [0, {path.n_steps}]")
    if not path.in_interval(k):
        raise OutOfIntervalError(
            f"grid index {k} is outside the interval [0, t_{path.interval_end})"
        )
    return float(values(path)[k])


def left_limit_at(path: CadlagPath, k: int) -> float:
    """Left limit at grid index ``k`` (initial value at ``k = 0``)."""
    if not 0 <= k <= path.n_steps:
        raise IndexError(f"grid index {k} out of range [0, {path.n_steps}]")
    if not path.in_interval(k):
        raise OutOfIntervalError(
            f"grid index {k} is outside the interval [0, t_{path.interval_end})"
        )
    return float(left_limits(path)[k])


def running_infimum_abs(path: CadlagPath) -> np.ndarray:
    """Running infimum of the absolute path over values and left limits.

    Entry ``k`` is the infimum of ``|Z|`` over everything observed up to
    and including grid index ``k``.  Only in-domain indices are returned
    (length ``last_index + 1``); the result is nonincreasing.
    """
    last = path.last_index
    v = np.abs(values(path)[: last + 1])
    l = np.abs(left_limits(path)[: last + 1])
    return np.minimum.accumulate(np.minimum(v, l))


class HitKind(enum.Enum):
    CONTINUOUS = "continuous"
    JUMP = "jump"
    NO_HIT = "nohit"


@dataclass(frozen=True)
class HittingReport:
    """Location and nature of the first zero hit of ``|Z|``.

    ``tau0_index`` is the first grid index where the running infimum of
    ``|Z|`` drops to ``zero_threshold`` or below, or ``None`` if that never
    happens inside the domain.  ``kind`` is CONTINUOUS when the left limit
    at that index is itself within the threshold (the path crept down to
    zero), JUMP when the left limit is still away from zero (the path was
    knocked to zero by a jump).
    """

    tau0_index: Optional[int]
    kind: HitKind
    zero_threshold: float


def detect_zero_hit(path: CadlagPath, zero_threshold: Optional[float] = None) -> HittingReport:
    """Locate and classify the first zero hit of ``|Z|``.

    ``zero_threshold`` defaults to 0 for pure-jump paths and to
    ``DEFAULT_GRID_ZERO_THRESHOLD`` for grid paths.
    """
    theta = zero_threshold_for(path) if zero_threshold is None else float(zero_threshold)
    if theta < 0.0:
        raise ValueError("zero_threshold must be nonnegative")
    rinf = running_infimum_abs(path)
    hits = np.flatnonzero(rinf <= theta)
    if hits.size == 0:
        return HittingReport(None, HitKind.NO_HIT, theta)
    idx = int(hits[0])
    if abs(left_limit_at(path, idx)) <= theta:
        kind = HitKind.CONTINUOUS
    else:
        kind = HitKind.JUMP
    return HittingReport(idx, kind, theta)


def announcing_sequence(path: CadlagPath, report: HittingReport, n: int) -> float:
    """Stage ``n`` of the announcing construction for the continuous hit time.

    Evaluates, on the discrete path, the time
    ``sigma_n = n ^ sigma'_n`` with ``sigma'_n = n ^ inf{t : |Z|-infimum <= 1/n}``,
    where the candidate is kept only if the running infimum is still away
    from zero there (event ``A_n``, tested against the report's threshold);
    otherwise returns ``min(n, horizon)``.

    The output is nondecreasing in ``n``.  On paths hitting zero
    continuously it stays strictly below the hit time provided the ladder
    level ``1/n`` is coarser than one step of the infimum's decay (for the
    verification suites this is arranged by tying the detection threshold
    to the top of the ladder).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    rinf = running_infimum_abs(path)
    target = 1.0 / n
    hits = np.flatnonzero(rinf <= target)
    if hits.size:
        sigma_prime = min(float(n), path.time_of(int(hits[0])))
    else:
        sigma_prime = float(n)
    horizon = path.horizon
    # Index of the last grid point at or before min(sigma_prime, horizon).
    eval_time = min(sigma_prime, horizon)
    last = path.last_index
    if last == 0:
        eval_idx = 0
    else:
        eval_idx = int(np.searchsorted(path.times[:last], eval_time, side="right"))
    a_holds = rinf[eval_idx] > report.zero_threshold
    if a_holds:
        return sigma_prime
    return min(float(n), horizon)


def stop_at(path: CadlagPath, k: int) -> CadlagPath:
    """Freeze the path at grid index ``k`` (channels strictly after are zeroed)."""
    if not 0 <= k <= path.n_steps:
        raise IndexError(f"grid index {k} out of range [0, {path.n_steps}]")
    if k == path.n_steps:
        return path
    c = path.cont_increments.copy()
    j = path.jumps.copy()
    q = path.cont_qv_increments.copy()
    c[k:] = 0.0
    j[k:] = 0.0
    q[k:] = 0.0
    return replace(path, cont_increments=c, jumps=j, cont_qv_increments=q)


def channel_max_diff(a: CadlagPath, b: CadlagPath) -> float:
    """Largest channel-wise absolute difference between two paths on the
    same grid (initial values included).  Used by the roundtrip checks."""
    if not np.array_equal(a.times, b.times):
        raise ValueError("paths live on different grids")
    d = abs(a.initial_value - b.initial_value)
    for x, y in (
        (a.cont_increments, b.cont_increments),
        (a.jumps, b.jumps),
        (a.cont_qv_increments, b.cont_qv_increments),
    ):
        if x.size:
            d = max(d, float(np.max(np.abs(x - y))))
    return d


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_path_csv(path: CadlagPath, dest: Union[str, TextIO]) -> None:
    """Dump the path to CSV, one row per grid index (header included).

    Row 0 carries time 0 and the initial value with zeroed channels; the
    ``in_interval`` column is 1 for indices inside the domain.  Floats are
    written with 17 significant digits so a read-back is lossless.
    """
    own = isinstance(dest, (str,))
    fp = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(CSV_HEADER)
        vals = values(path)
        lls = left_limits(path)
        last = path.last_index
        w.writerow(["0", _fmt(0.0), _fmt(vals[0]), _fmt(lls[0]),
                    _fmt(0.0), _fmt(0.0), _fmt(0.0), "1"])
        for k in range(1, path.n_steps + 1):
            w.writerow([
                str(k),
                _fmt(path.times[k - 1]),
                _fmt(vals[k]),
                _fmt(lls[k]),
                _fmt(path.cont_increments[k - 1]),
                _fmt(path.jumps[k - 1]),
                _fmt(path.cont_qv_increments[k - 1]),
                "1" if k <= last else "0",
            ])
    finally:
        if own:
            fp.close()


def read_path_csv(src: Union[str, TextIO], mode: Optional[PathMode] = None) -> CadlagPath:
    """Rebuild a path from the CSV schema written by :func:`write_path_csv`.

    The value and left-limit columns are derived data and are ignored; the
    channels are authoritative.  When ``mode`` is not given it is inferred:
    paths with identically zero continuous channels load as pure-jump.
    """
    own = isinstance(src, (str,))
    fp = open(src, "r", newline="") if own else src
    try:
        rows = list(csv.reader(fp))
    finally:
        if own:
            fp.close()
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"bad path CSV header, expected {','.join(CSV_HEADER)}")
    body = rows[1:]
    if not body or body[0][0] != "0":
        raise ValueError("path CSV must start with the index-0 row")
    x0 = float(body[0][2])
    times, c, j, q, flags = [], [], [], [], []
    for row in body[1:]:
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"malformed path CSV row: {row!r}")
        times.append(float(row[1]))
        c.append(float(row[4]))
        j.append(float(row[5]))
        q.append(float(row[6]))
        flags.append(row[7].strip())
    if any(f not in ("0", "1") for f in flags):
        raise ValueError("in_interval column must contain 0 or 1")
    end: Optional[int] = None
    outs = [i for i, f in enumerate(flags) if f == "0"]
    if outs:
        end = outs[0] + 1
        if any(flags[i] == "1" for i in range(end - 1, len(flags))):
            raise ValueError("in_interval column must be a 1-block followed by a 0-block")
    if mode is None:
        pure = all(x == 0.0 for x in c) and all(x == 0.0 for x in q)
        mode = PathMode.PURE_JUMP if pure else PathMode.GRID
    return CadlagPath(x0, times, c, j, q, interval_end=end, mode=mode)
