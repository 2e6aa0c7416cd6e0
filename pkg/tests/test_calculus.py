import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doleans.calculus import (
    Integrand,
    IntegrabilityError,
    jump_integral,
    quadratic_variation,
    sign_change_count,
    stochastic_integral,
)
from doleans.path_model import CadlagPath, PathMode, channel_max_diff, left_limits, values


def pure_jump(jumps, x0=0.0):
    n = len(jumps)
    z = np.zeros(n)
    return CadlagPath(x0, np.arange(1.0, n + 1.0), z, jumps, z.copy(),
                      mode=PathMode.PURE_JUMP)


class TestQuadraticVariation:
    def test_pure_jump(self):
        total, cont = quadratic_variation(pure_jump([1.0, -0.5]))
        assert total[-1] == 1.25
        assert np.all(cont == 0.0)

    def test_exact_compensator_sums_to_horizon(self):
        n, horizon = 1000, 2.0
        dt = horizon / n
        times = np.arange(1, n + 1) * dt
        p = CadlagPath(0.0, times, np.zeros(n), np.zeros(n), np.full(n, dt))
        total, cont = quadratic_variation(p)
        assert cont[-1] == pytest.approx(horizon, abs=1e-12)
        assert np.array_equal(total, cont)

    def test_constant_path(self):
        total, cont = quadratic_variation(pure_jump([0.0, 0.0]))
        assert np.all(total == 0.0) and np.all(cont == 0.0)

    def test_both_nondecreasing(self):
        p = CadlagPath(0.0, [1.0, 2.0, 3.0], [0.1, -0.2, 0.3],
                       [1.0, 0.0, -2.0], [0.5, 0.0, 0.25])
        total, cont = quadratic_variation(p)
        assert np.all(np.diff(total) >= 0.0)
        assert np.all(np.diff(cont) >= 0.0)

    def test_interval_end_cuts_accumulation(self):
        p = pure_jump([1.0, 1.0, 1.0])
        cut = CadlagPath(0.0, p.times, p.cont_increments, p.jumps,
                         p.cont_qv_increments, interval_end=2,
                         mode=PathMode.PURE_JUMP)
        total, _ = quadratic_variation(cut)
        assert total.size == 2 and total[-1] == 1.0


class TestJumpIntegral:
    def test_square_matches_jump_qv(self):
        p = pure_jump([1.0, -0.5])
        out = jump_integral(lambda t, x: x * x, p)
        assert np.array_equal(out, [0.0, 1.0, 1.25])

    def test_divergence_at_minus_one(self):
        p = pure_jump([0.5, -1.0, 0.25])
        out = jump_integral(lambda t, x: x - math.log(abs(1.0 + x)) if x != -1.0 else math.inf, p)
        assert math.isfinite(out[1])
        assert out[2] == math.inf and out[3] == math.inf

    def test_ratio_functional(self):
        p = pure_jump([1.0])
        out = jump_integral(lambda t, x: x * x / (1.0 + x) if x != -1.0 else 0.0, p)
        assert out[-1] == 0.5

    def test_zero_jumps_skipped(self):
        calls = []

        def f(t, x):
            calls.append((t, x))
            return 1.0

        p = pure_jump([0.0, 2.0, 0.0])
        out = jump_integral(f, p)
        assert np.array_equal(out, [0.0, 0.0, 1.0, 1.0])
        assert calls == [(2.0, 2.0)]

    def test_square_equals_total_minus_continuous(self):
        rng = np.random.default_rng(0)
        p = CadlagPath(0.0, np.arange(1.0, 21.0), rng.normal(size=20),
                       np.where(rng.random(20) < 0.4, rng.normal(size=20), 0.0),
                       rng.uniform(0, 0.3, 20))
        total, cont = quadratic_variation(p)
        sq = jump_integral(lambda t, x: x * x, p)
        # additive form of the identity is exact; the subtractive form only
        # holds up to cancellation rounding
        assert np.array_equal(total, cont + sq)


class TestStochasticIntegral:
    def test_unit_integrand_recovers_increments(self):
        p = CadlagPath(3.0, [1.0, 2.0], [0.1, -0.2], [1.0, 0.0], [0.05, 0.0])
        out = stochastic_integral(Integrand.constant(1.0, 2), p)
        assert out.initial_value == 0.0
        assert np.array_equal(out.cont_increments, p.cont_increments)
        assert np.array_equal(out.jumps, p.jumps)
        assert np.array_equal(out.cont_qv_increments, p.cont_qv_increments)

    def test_zero_integrand(self):
        p = pure_jump([1.0, -0.5])
        out = stochastic_integral(Integrand.constant(0.0, 2), p)
        assert np.all(values(out) == 0.0)

    def test_reciprocal_left_limit_recovers_walk(self):
        # the doubling process 1,2,4 then killed by -4: integrating 1/left
        # limit against it returns the stopped unit walk
        z = pure_jump([1.0, 2.0, -4.0], x0=1.0)
        vals = values(z)
        lls = left_limits(z)
        h = Integrand(1.0 / vals[:-1], 1.0 / lls[1:])
        out = stochastic_integral(h, z)
        assert np.array_equal(out.jumps, [1.0, 1.0, -1.0])

    def test_integrability_error_names_index(self):
        p = pure_jump([1.0, 2.0])
        h = Integrand([1.0, 1.0], [1.0, math.inf])
        with pytest.raises(IntegrabilityError) as err:
            stochastic_integral(h, p)
        assert err.value.index == 2

    def test_nonfinite_integrand_harmless_on_zero_channel(self):
        p = pure_jump([1.0, 0.0])
        h = Integrand([1.0, math.inf], [1.0, math.inf])
        out = stochastic_integral(h, p)
        assert np.array_equal(out.jumps, [1.0, 0.0])

    def test_qv_channel_scaled_by_square(self):
        p = CadlagPath(0.0, [1.0], [0.2], [0.0], [0.3])
        out = stochastic_integral(Integrand.constant(2.0, 1), p)
        assert out.cont_qv_increments[0] == 1.2

    def test_interval_end_inherited(self):
        p = CadlagPath(0.0, [1.0, 2.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0],
                       interval_end=1, mode=PathMode.PURE_JUMP)
        out = stochastic_integral(Integrand.constant(1.0, 2), p)
        assert out.interval_end == 1
        assert out.mode is PathMode.PURE_JUMP

    @given(
        a=st.floats(-3, 3),
        b=st.floats(-3, 3),
        h1=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
        h2=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    )
    @settings(max_examples=100, deadline=None)
    def test_bilinear_in_integrand(self, a, b, h1, h2):
        p = CadlagPath(0.0, [1.0, 2.0, 3.0], [0.5, -0.25, 0.0],
                       [0.0, 1.0, -0.5], [0.1, 0.2, 0.0])
        ha = Integrand(h1, list(reversed(h1)))
        hb = Integrand(h2, list(reversed(h2)))
        combo = Integrand(a * ha.at_step_start + b * hb.at_step_start,
                          a * ha.at_jump + b * hb.at_jump)
        lhs = stochastic_integral(combo, p)
        ra = stochastic_integral(ha, p)
        rb = stochastic_integral(hb, p)
        for chan in ("cont_increments", "jumps"):
            left = getattr(lhs, chan)
            right = a * getattr(ra, chan) + b * getattr(rb, chan)
            assert np.allclose(left, right, rtol=1e-12, atol=1e-12)

    def test_qv_of_integral_matches_channel_rule(self):
        rng = np.random.default_rng(7)
        p = CadlagPath(0.0, np.arange(1.0, 11.0), rng.normal(size=10),
                       np.where(rng.random(10) < 0.5, rng.normal(size=10), 0.0),
                       rng.uniform(0, 0.2, 10))
        h = Integrand(rng.normal(size=10), rng.normal(size=10))
        out = stochastic_integral(h, p)
        total, cont = quadratic_variation(out)
        jump_part = jump_integral(lambda t, x: x * x, out)
        scaled = np.concatenate(([0.0], np.cumsum(h.at_step_start**2 * p.cont_qv_increments)))
        assert np.array_equal(cont, scaled)
        assert np.array_equal(total, cont + jump_part)


class TestSignChangeCount:
    def test_no_deep_jumps(self):
        assert np.all(sign_change_count(pure_jump([1.0, -1.0, -0.5])) == 0)

    def test_single_deep_jump(self):
        out = sign_change_count(pure_jump([0.5, -2.0, 0.5]))
        assert np.array_equal(out, [0, 0, 1, 1])

    def test_two_deep_jumps(self):
        out = sign_change_count(pure_jump([-2.0, -3.0]))
        assert out[-1] == 2
