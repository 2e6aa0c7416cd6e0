import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doleans.calculus import sign_change_count
from doleans.exp_log import (
    GridMismatchError,
    TailThresholds,
    TailVerdict,
    check_membership,
    classify_tail,
    jump_measure_pushforward,
    phi,
    reciprocal_companion,
    stoch_exp_formula,
    stoch_exp_recursive,
    stoch_log,
)
from doleans.generators import GeneratorSpec, make_path
from doleans.path_model import (
    CadlagPath,
    HitKind,
    PathMode,
    channel_max_diff,
    detect_zero_hit,
    values,
)


def pure_jump(jumps, x0=0.0, times=None, interval_end=None):
    n = len(jumps)
    times = np.arange(1.0, n + 1.0) if times is None else np.asarray(times, float)
    z = np.zeros(n)
    return CadlagPath(x0, times, z, jumps, z.copy(), interval_end=interval_end,
                      mode=PathMode.PURE_JUMP)


class TestPhi:
    def test_fixed_point(self):
        assert phi(0.0) == 0.0

    def test_value_at_one(self):
        assert phi(1.0) == -0.5

    def test_undefined_at_minus_one(self):
        with pytest.raises(ValueError):
            phi(-1.0)

    def test_involution_spot(self):
        assert phi(phi(0.7)) == pytest.approx(0.7, abs=1e-15)

    @given(st.floats(min_value=-1.0, max_value=1e6, exclude_min=True))
    @settings(max_examples=300, deadline=None)
    def test_involution_within_ulps(self, x):
        # the achievable accuracy is a few ulps at the scale of the
        # reciprocal's conditioning (1+x)^2, not of x itself
        back = phi(phi(x))
        scale = max(abs(x), 1.0, 0.25 * (1.0 + x) ** 2)
        assert abs(back - x) <= 4 * math.ulp(scale)


class TestExpFormula:
    def test_one_jump_martingale_closed_form(self):
        # drift at unit rate, single -1 jump at t = 2.5
        times = [1.0, 2.0, 2.5, 3.0, 4.0]
        c = [1.0, 1.0, 0.5, 0.0, 0.0]
        j = [0.0, 0.0, -1.0, 0.0, 0.0]
        x = CadlagPath(0.0, times, c, j, np.zeros(5))
        z = values(stoch_exp_formula(x))
        assert z[0] == 1.0
        assert z[1] == math.exp(1.0)
        assert z[2] == math.exp(2.0)
        assert z[3] == 0.0 and z[4] == 0.0 and z[5] == 0.0

    def test_doubling_walk(self):
        x = pure_jump([1.0, 1.0, -1.0])
        assert np.array_equal(values(stoch_exp_formula(x)), [1.0, 2.0, 4.0, 0.0])

    def test_deep_jump_gives_minus_one(self):
        x = pure_jump([-2.0])
        z = values(stoch_exp_formula(x))
        assert z[1] == -1.0

    def test_starts_at_exp_of_initial(self):
        x = pure_jump([0.5], x0=1.3)
        assert values(stoch_exp_formula(x))[0] == math.exp(1.3)

    def test_killed_at_interval_end(self):
        x = pure_jump([1.0, 1.0, 1.0], interval_end=2)
        z = stoch_exp_formula(x)
        assert z.interval_end is None
        assert np.array_equal(values(z), [1.0, 2.0, 0.0, 0.0])
        assert z.jumps[1] == -2.0

    def test_zero_absorption_permanent(self):
        x = pure_jump([0.5, -1.0, 3.0, -0.5])
        z = values(stoch_exp_formula(x))
        assert z[1] == 1.5
        assert np.all(z[2:] == 0.0)

    def test_gbm_closed_form(self):
        spec = GeneratorSpec("brownian", horizon=1.0, steps=500, seed=11)
        x = make_path(spec, 0)
        z = values(stoch_exp_formula(x))
        t = np.concatenate(([0.0], x.times))
        oracle = np.exp(values(x) - t / 2.0)
        assert np.max(np.abs(z - oracle)) <= 1e-12


class TestExpRecursive:
    def test_zero_path(self):
        x = CadlagPath(0.0, [1.0, 2.0], np.zeros(2), np.zeros(2), np.zeros(2))
        assert np.all(values(stoch_exp_recursive(x)) == 1.0)

    def test_pure_jump_product(self):
        x = pure_jump([0.5, -0.5, 0.25])
        z = values(stoch_exp_recursive(x))
        assert np.array_equal(z, np.concatenate(([1.0], np.cumprod(1.0 + x.jumps))))

    def test_coincides_with_formula_on_pure_jump(self):
        spec = GeneratorSpec("random-l", seed=3)
        for i in range(50):
            x = make_path(spec, i)
            assert channel_max_diff(stoch_exp_recursive(x), stoch_exp_formula(x)) == 0.0

    def test_per_step_rule(self):
        x = CadlagPath(0.0, [1.0, 2.0], [0.1, -0.2], [0.5, 0.0], [0.0, 0.0])
        z = values(stoch_exp_recursive(x))
        assert z[1] == pytest.approx(1.1 * 1.5, rel=1e-15)
        assert z[2] == pytest.approx(1.1 * 1.5 * 0.8, rel=1e-15)

    def test_formula_gap_shrinks_with_mesh(self):
        gaps = []
        for steps in (64, 1024):
            spec = GeneratorSpec("brownian", horizon=1.0, steps=steps, seed=21)
            x = make_path(spec, 0)
            gaps.append(np.max(np.abs(values(stoch_exp_formula(x))
                                      - values(stoch_exp_recursive(x)))))
        assert gaps[1] < gaps[0]


class TestStochLog:
    def test_log_of_unity(self):
        z = CadlagPath(1.0, [1.0, 2.0], np.zeros(2), np.zeros(2), np.zeros(2))
        x = stoch_log(z)
        assert np.all(values(x) == 0.0)
        assert x.initial_value == 0.0

    def test_recovers_stopped_walk(self):
        x = pure_jump([1.0, 1.0, -1.0, 0.0])
        z = stoch_exp_recursive(x)
        back = stoch_log(z, detect_zero_hit(z))
        assert channel_max_diff(back, x) == 0.0
        assert back.jumps[2] == -1.0
        assert np.all(back.jumps[3:] == 0.0)

    def test_continuous_hit_shortens_interval(self):
        spec = GeneratorSpec("stopped-bm", horizon=50.0, steps=5000, seed=1)
        for i in range(30):
            z = make_path(spec, i)
            rep = detect_zero_hit(z)
            if rep.kind is not HitKind.CONTINUOUS:
                continue
            x = stoch_log(z, rep)
            assert x.interval_end == rep.tau0_index
            # channels before the hit divide by the running value
            pos = rep.tau0_index - 2
            prev = values(z)[pos]
            assert x.cont_increments[pos] == z.cont_increments[pos] / prev
            assert x.cont_qv_increments[pos] == z.cont_qv_increments[pos] / prev**2
            break
        else:
            pytest.fail("no absorbed path found in the sample")

    def test_masked_divisions_after_absorption(self):
        z = pure_jump([-1.0, 0.0], x0=1.0)
        x = stoch_log(z, detect_zero_hit(z))
        assert x.jumps[0] == -1.0
        assert np.all(x.jumps[1:] == 0.0)

    def test_threshold_zero_start(self):
        z = CadlagPath(0.0, [1.0], [0.5], [0.0], [0.0])
        x = stoch_log(z, detect_zero_hit(z))
        assert np.all(values(x) == 0.0)


class TestReciprocalCompanion:
    def test_brownian_with_exact_compensator(self):
        spec = GeneratorSpec("brownian", horizon=2.0, steps=800, seed=5)
        x = make_path(spec, 0)
        y = reciprocal_companion(x)
        t = np.concatenate(([0.0], x.times))
        assert np.max(np.abs(values(y) - (t - values(x)))) <= 1e-12
        assert np.array_equal(y.cont_qv_increments, x.cont_qv_increments)

    def test_zero_path(self):
        x = CadlagPath(0.0, [1.0], [0.0], [0.0], [0.0])
        assert np.all(values(reciprocal_companion(x)) == 0.0)

    def test_half_step_jumps(self):
        x = pure_jump([0.5, -0.5])
        y = reciprocal_companion(x)
        assert y.jumps[0] == pytest.approx(-1.0 / 3.0, rel=1e-15)
        assert y.jumps[1] == 1.0

    def test_interval_tightened_at_minus_one(self):
        x = pure_jump([0.5, -1.0, 0.5])
        y = reciprocal_companion(x)
        assert y.interval_end == 2
        assert np.all(y.jumps[1:] == 0.0)

    def test_initial_value_negated(self):
        x = pure_jump([0.5], x0=2.0)
        assert reciprocal_companion(x).initial_value == -2.0

    def test_product_identity_with_deep_jumps(self):
        x = pure_jump([-2.5, 0.5, -3.0])
        y = reciprocal_companion(x)
        zx = values(stoch_exp_formula(x))
        zy = values(stoch_exp_formula(y))
        assert np.max(np.abs(zx * zy - 1.0)) <= 1e-12


class TestPushforward:
    def test_square_on_single_jump(self):
        x = pure_jump([1.0])
        y = reciprocal_companion(x)
        lhs, rhs = jump_measure_pushforward(lambda t, v: v * v, x, y)
        assert lhs[-1] == 0.25 and rhs[-1] == 0.25

    def test_zero_functional(self):
        x = pure_jump([0.5, -0.25])
        y = reciprocal_companion(x)
        lhs, rhs = jump_measure_pushforward(lambda t, v: 0.0, x, y)
        assert np.all(lhs == 0.0) and np.all(rhs == 0.0)

    def test_log_compensated_identity(self):
        spec = GeneratorSpec("timechanged-walk", n_max=50, seed=2)
        x = make_path(spec, 0)
        y = reciprocal_companion(x)
        g = lambda t, v: v - math.log(abs(1.0 + v))
        lhs, rhs = jump_measure_pushforward(g, x, y)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_grid_mismatch_rejected(self):
        x = pure_jump([1.0])
        y = pure_jump([1.0], times=[2.0])
        with pytest.raises(GridMismatchError):
            jump_measure_pushforward(lambda t, v: v, x, y)

    def test_domain_stops_before_minus_one_jump(self):
        x = pure_jump([0.5, -1.0])
        y = reciprocal_companion(x)
        lhs, rhs = jump_measure_pushforward(lambda t, v: abs(v), x, y)
        assert lhs.size == 2  # indices 0 and 1 only


class TestClassifyTail:
    def test_constant_converges(self):
        x = CadlagPath(0.0, [1.0, 2.0], np.zeros(2), np.zeros(2), np.zeros(2))
        assert classify_tail(x).verdict is TailVerdict.CONVERGES_FINITE

    def test_absorbed_by_jump(self):
        x = pure_jump([0.5, -1.0, 0.0, 0.0])
        assert classify_tail(x).verdict is TailVerdict.ABSORBED_BY_JUMP

    def test_diverges_down(self):
        vals = -np.linspace(0.0, 30.0, 50)[1:]
        x = CadlagPath(0.0, np.arange(1.0, 50.0), np.diff(np.concatenate(([0.0], vals))),
                       np.zeros(49), np.zeros(49))
        out = classify_tail(x)
        assert out.verdict is TailVerdict.DIVERGES_TO_MINUS_INF
        assert out.final_value == pytest.approx(-30.0)

    def test_infinite_qv(self):
        n = 100
        x = CadlagPath(0.0, np.arange(1.0, n + 1.0), np.zeros(n), np.zeros(n),
                       np.full(n, 20.0))
        out = classify_tail(x)
        assert out.verdict is TailVerdict.INFINITE_QV
        assert out.final_qv == pytest.approx(2000.0)

    def test_indeterminate_for_oscillation(self):
        x = pure_jump([1.0, -1.5, 1.0, -1.5, 1.0, -1.5])
        assert classify_tail(x).verdict is TailVerdict.INDETERMINATE

    def test_thresholds_configurable(self):
        x = pure_jump([-3.0, -3.0])
        default = classify_tail(x)
        assert default.verdict is not TailVerdict.DIVERGES_TO_MINUS_INF
        tuned = classify_tail(x, TailThresholds(divergence=-5.0))
        assert tuned.verdict is TailVerdict.DIVERGES_TO_MINUS_INF


class TestMembership:
    def test_stopped_walk_in_l(self):
        x = pure_jump([1.0, -1.0, 0.0])
        out = check_membership(x, "L")
        assert out.is_member and out.reasons == ()

    def test_unit_process_in_z(self):
        z = CadlagPath(1.0, [1.0], [0.0], [0.0], [0.0])
        assert check_membership(z, "Z").is_member

    def test_deep_jump_not_in_l(self):
        x = pure_jump([-1.5])
        out = check_membership(x, "L")
        assert not out.is_member
        assert any("below -1" in r for r in out.reasons)

    def test_nonzero_start_not_in_l(self):
        x = pure_jump([0.5], x0=1.0)
        assert not check_membership(x, "L").is_member

    def test_movement_after_absorption_not_in_l(self):
        x = pure_jump([-1.0, 1.0])
        out = check_membership(x, "L")
        assert not out.is_member
        assert any("after" in r for r in out.reasons)

    def test_negative_value_not_in_z(self):
        z = CadlagPath(1.0, [1.0], [0.0], [-1.5], [0.0])
        out = check_membership(z, "Z")
        assert not out.is_member

    def test_exponential_of_l_is_in_z(self):
        spec = GeneratorSpec("random-l", seed=8)
        for i in range(100):
            x = make_path(spec, i)
            assert check_membership(x, "L").is_member
            z = stoch_exp_recursive(x)
            assert check_membership(z, "Z").is_member

    def test_unknown_class_rejected(self):
        with pytest.raises(ValueError):
            check_membership(pure_jump([1.0]), "Q")


class TestIdentities:
    def test_sign_rule(self):
        x = pure_jump([0.5, -2.0, 1.0, -3.0, 0.25])
        z = values(stoch_exp_formula(x))
        counts = sign_change_count(x)
        for k in range(x.n_steps + 1):
            assert math.copysign(1.0, z[k]) == (-1.0) ** counts[k]

    def test_sign_rule_recursive_matches(self):
        x = pure_jump([-2.0, -2.0])
        zf = values(stoch_exp_formula(x))
        zr = values(stoch_exp_recursive(x))
        assert np.array_equal(zf, zr)
        assert zf[1] == -1.0 and zf[2] == 1.0

    @given(st.lists(st.floats(-0.9, 3.0), min_size=0, max_size=12),
           st.integers(0, 11))
    @settings(max_examples=150, deadline=None)
    def test_roundtrips_on_random_absorbed_paths(self, raw, cut):
        jumps = list(raw)
        if cut < len(jumps):
            jumps[cut] = -1.0
            jumps[cut + 1:] = [0.0] * (len(jumps) - cut - 1)
        x = pure_jump(jumps)
        z = stoch_exp_recursive(x)
        rep = detect_zero_hit(z)
        assert channel_max_diff(stoch_log(z, rep), x) <= 1e-12
        assert channel_max_diff(stoch_exp_recursive(stoch_log(z, rep)), z) <= 1e-12

    def test_grid_roundtrip(self):
        spec = GeneratorSpec("brownian", horizon=1.0, steps=1000, seed=13)
        x = make_path(spec, 0)
        z = stoch_exp_recursive(x)
        assert channel_max_diff(stoch_log(z, detect_zero_hit(z)), x) <= 1e-10

    def test_exponential_nonnegative_for_jumps_above_minus_one(self):
        spec = GeneratorSpec("compound-poisson", rate=8.0, horizon=2.0, seed=4,
                             jump_law="uniform", law_params=(-0.9, 2.0))
        for i in range(100):
            z = values(stoch_exp_formula(make_path(spec, i)))
            assert np.all(z > 0.0)
