"""Seeded construction of test processes as cadlag paths.

Each generator is a pure function of a :class:`GeneratorSpec` plus a path
index: the per-path RNG seed is derived from the master seed and the index
with a SplitMix-style mix, so ensembles are reproducible and order
independent.  Grid kinds populate the continuous channels (with either the
exact compensator or the realized square in the qv channel), pure-jump
kinds promise exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .path_model import CadlagPath, PathMode

__all__ = [
    "KINDS",
    "GeneratorSpec",
    "derive_seed",
    "make_path",
    "gen_brownian",
    "gen_stopped_brownian_plus_one",
    "gen_one_jump_exponential",
    "gen_random_walk",
    "gen_time_changed_walk",
    "gen_compound_poisson",
    "gen_random_l_path",
]

KINDS = (
    "brownian",
    "stopped-bm",
    "one-jump",
    "walk",
    "timechanged-walk",
    "compound-poisson",
    "random-l",
)

_MIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, path_index: int) -> int:
    """SplitMix64 finalizer over (master seed, path index).

    Gives every path its own well-separated RNG stream without any shared
    state, so ensemble members can be generated in any order or in
    parallel.
    """
    z = (int(master_seed) + _MIX_GAMMA * (int(path_index) + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate and how.

    ``qv_channel`` selects between the exact compensator (``"exact"``,
    only meaningful for the Brownian kinds) and the realized squared
    increment (``"realized"``).  The remaining fields only matter for the
    kinds that read them: ``rate``/``jump_law``/``law_params`` for the
    compound-Poisson kind, ``stop_at_first_down`` for the unit walk,
    ``n_max`` for the walk jumping at times ``1 - 1/n``, and
    ``minus_one_prob``/``max_jumps`` for the random absorbed-class paths.
    """

    kind: str
    horizon: float = 1.0
    steps: int = 100
    seed: int = 0
    qv_channel: str = "exact"
    rate: float = 1.0
    jump_law: str = "uniform"
    law_params: Tuple[float, ...] = (-0.9, 2.0)
    stop_at_first_down: bool = True
    n_max: int = 200
    minus_one_prob: float = 0.1
    max_jumps: int = 50

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}, expected one of {KINDS}")
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError("horizon must be positive and finite")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.qv_channel not in ("exact", "realized"):
            raise ValueError("qv_channel must be 'exact' or 'realized'")
        if self.kind == "compound-poisson":
            if self.rate <= 0.0:
                raise ValueError("compound-poisson rate must be positive")
            _validate_jump_law(self.jump_law, self.law_params)
        if self.kind == "timechanged-walk" and self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.kind == "random-l" and not 0.0 <= self.minus_one_prob <= 1.0:
            raise ValueError("minus_one_prob must lie in [0, 1]")


def _validate_jump_law(law: str, params: Tuple[float, ...]) -> None:
    if law == "uniform":
        if len(params) != 2 or not params[0] < params[1]:
            raise ValueError("uniform law needs params (low, high) with low < high")
        if params[0] < -1.0 < params[1]:
            raise ValueError(
                "uniform law support must exclude -1; use the two-point law "
                "for jumps of exactly -1"
            )
    elif law == "two-point":
        if len(params) != 3 or not 0.0 <= params[2] <= 1.0:
            raise ValueError("two-point law needs params (value_a, value_b, prob_a)")
    elif law == "shifted-exponential":
        if len(params) != 2 or params[1] <= 0.0:
            raise ValueError("shifted-exponential law needs params (shift, scale > 0)")
        if params[0] < -1.0:
            raise ValueError("shifted-exponential shift must be at least -1")
    else:
        raise ValueError(f"unknown jump law {law!r}")


def _rng(spec: GeneratorSpec, path_index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(spec.seed, path_index))


def _grid_times(spec: GeneratorSpec) -> Tuple[np.ndarray, float]:
    dt = spec.horizon / spec.steps
    return np.arange(1, spec.steps + 1) * dt, dt


def gen_brownian(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Centered Gaussian increments with variance dt; no jumps."""
    rng = _rng(spec, path_index)
    times, dt = _grid_times(spec)
    c = rng.normal(0.0, np.sqrt(dt), spec.steps)
    q = np.full(spec.steps, dt) if spec.qv_channel == "exact" else c**2
    return CadlagPath(0.0, times, c, np.zeros(spec.steps), q, mode=PathMode.GRID)


def gen_stopped_brownian_plus_one(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Brownian motion started at 1, frozen at the first grid value <= 0.

    Absorption is grid-resolution: the final increment is adjusted so the
    value lands on exactly 0.0 and every later channel entry is zero.  The
    approach to zero is carried entirely by the continuous channel (no
    jump entry), so hit detection classifies it as a continuous hit.
    """
    rng = _rng(spec, path_index)
    times, dt = _grid_times(spec)
    c = rng.normal(0.0, np.sqrt(dt), spec.steps)
    csum = np.cumsum(c)
    hits = np.flatnonzero(1.0 + csum <= 0.0)
    if hits.size:
        hit = int(hits[0])
        prev_sum = csum[hit - 1] if hit else 0.0
        c[hit] = -(1.0 + prev_sum)
        c[hit + 1 :] = 0.0
    q = np.full(spec.steps, dt) if spec.qv_channel == "exact" else c**2
    if hits.size:
        q[hit + 1 :] = 0.0
    return CadlagPath(1.0, times, c, np.zeros(spec.steps), q, mode=PathMode.GRID)


def gen_one_jump_exponential(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Unit drift up to a standard exponential time, then a single -1 jump.

    The jump lands on the first grid point at or after the sampled time
    (bias of order dt, documented); an exponential beyond the horizon
    leaves a censored pure-drift path.  The drift is finite variation, so
    the qv channel is identically zero.
    """
    rng = _rng(spec, path_index)
    times, dt = _grid_times(spec)
    e = rng.exponential(1.0)
    # Exact grid-time differences: the cumulative drift then reproduces the
    # grid times bit for bit, so the exponential comes out as exp(t) exactly.
    c = np.diff(times, prepend=0.0)
    j = np.zeros(spec.steps)
    idx = int(np.searchsorted(times, e, side="left"))
    if idx < spec.steps:
        j[idx] = -1.0
        c[idx + 1 :] = 0.0
    return CadlagPath(0.0, times, c, j, np.zeros(spec.steps), mode=PathMode.GRID)


def gen_random_walk(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Unit-step walk jumping at times 1, 2, ..., floor(horizon).

    With ``stop_at_first_down`` the path keeps its first -1 jump and is
    frozen afterwards, which lands it in the absorbed class by
    construction.
    """
    rng = _rng(spec, path_index)
    n = int(np.floor(spec.horizon))
    times = np.arange(1, n + 1, dtype=np.float64)
    j = rng.integers(0, 2, n) * 2.0 - 1.0
    if spec.stop_at_first_down:
        downs = np.flatnonzero(j < 0.0)
        if downs.size:
            j[int(downs[0]) + 1 :] = 0.0
    zeros = np.zeros(n)
    return CadlagPath(0.0, times, zeros, j, zeros.copy(), mode=PathMode.PURE_JUMP)


def gen_time_changed_walk(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Half-step walk jumping at the deterministic times ``1 - 1/n``.

    The index runs n = 2..n_max: the n = 1 term would land at time 0,
    which the grid cannot carry, so it is dropped and the path starts flat
    at 0 (the conceptual horizon is 1, the interval marker stays
    unbounded).
    """
    rng = _rng(spec, path_index)
    ns = np.arange(2, spec.n_max + 1)
    times = 1.0 - 1.0 / ns
    count = times.size
    j = rng.integers(0, 2, count) - 0.5
    zeros = np.zeros(count)
    return CadlagPath(0.0, times, zeros, j, zeros.copy(), mode=PathMode.PURE_JUMP)


def _draw_jump_sizes(rng: np.random.Generator, law: str, params: Tuple[float, ...], n: int) -> np.ndarray:
    if law == "uniform":
        return rng.uniform(params[0], params[1], n)
    if law == "two-point":
        a, b, p = params
        return np.where(rng.random(n) < p, a, b)
    shift, scale = params
    return shift + rng.exponential(scale, n)


def gen_compound_poisson(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Poisson(rate * horizon) many jumps at uniform times, i.i.d. sizes."""
    rng = _rng(spec, path_index)
    n = int(rng.poisson(spec.rate * spec.horizon))
    times = np.sort(rng.uniform(0.0, spec.horizon, n))
    while n and (times[0] <= 0.0 or np.any(np.diff(times) <= 0.0)):
        times = np.sort(rng.uniform(0.0, spec.horizon, n))
    j = _draw_jump_sizes(rng, spec.jump_law, spec.law_params, n)
    zeros = np.zeros(n)
    return CadlagPath(0.0, times, zeros, j, zeros.copy(), mode=PathMode.PURE_JUMP)


def gen_random_l_path(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Random member of the absorbed class, valid by construction.

    Starts at 0; each jump is exactly -1 with probability
    ``minus_one_prob`` and otherwise ``expm1`` of a centered Gaussian,
    which keeps it strictly above -1.  Everything after a -1 jump is
    frozen.  The Gaussian scale 0.25 keeps exponentials of these paths
    within a few orders of magnitude of one, so absolute tolerances in
    the e-12 range stay meaningful for roundtrip checks.
    """
    rng = _rng(spec, path_index)
    n = int(rng.integers(0, spec.max_jumps + 1))
    times = np.sort(rng.uniform(0.0, spec.horizon, n))
    while n and (times[0] <= 0.0 or np.any(np.diff(times) <= 0.0)):
        times = np.sort(rng.uniform(0.0, spec.horizon, n))
    absorb = rng.random(n) < spec.minus_one_prob
    j = np.expm1(rng.normal(0.0, 0.25, n))
    j[absorb] = -1.0
    hits = np.flatnonzero(absorb)
    if hits.size:
        j[int(hits[0]) + 1 :] = 0.0
    zeros = np.zeros(n)
    return CadlagPath(0.0, times, zeros, j, zeros.copy(), mode=PathMode.PURE_JUMP)


_GENERATORS = {
    "brownian": gen_brownian,
    "stopped-bm": gen_stopped_brownian_plus_one,
    "one-jump": gen_one_jump_exponential,
    "walk": gen_random_walk,
    "timechanged-walk": gen_time_changed_walk,
    "compound-poisson": gen_compound_poisson,
    "random-l": gen_random_l_path,
}


def make_path(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Generate ensemble member ``path_index`` of the configured process."""
    return _GENERATORS[spec.kind](spec, path_index)
