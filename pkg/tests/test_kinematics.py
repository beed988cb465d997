import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from helpers import (PAIR_LIMITS, PAIR_X, PAIR_Y, SWITCH_AXIS, SWITCH_LIMITS, SYNC_STAR, profile_integrals,
                     random_axis)
from kopkit.kinematics import (AxisBoundary, KinematicLimits, NoFeasibleDuration, PatternKind, PatternSolution,
                               axis_feasible_at, axis_time_optimal, candidate_times, earliest_common,
                               feasibility_oracle, feasible_intervals, naive_sync_time, optimal_sync_time,
                               sample_trajectory, solve_classical, solve_sync)

NULL = AxisBoundary(0.0, 0.0, 0.0, 0.0)


def _contains(values, target, tol=1e-9):
    return any(abs(v - target) <= tol for v in values)


def rest_to_rest_time(D, a, vmax):
    """Textbook minimum time of a rest-to-rest move: triangle or trapezoid."""
    D = abs(D)
    if D <= vmax * vmax / a:
        return 2.0 * math.sqrt(D / a)
    return D / vmax + vmax / a


# ---- value types --------------------------------------------------------

def test_limits_reject_zero_acceleration():
    with pytest.raises(ValueError):
        KinematicLimits(0.0, -1.0, 1.0)


def test_limits_reject_inverted_bounds():
    with pytest.raises(ValueError):
        KinematicLimits(1.0, 1.0, -1.0)


def test_symmetric_limits():
    assert KinematicLimits.symmetric(0.5, 2.0) == KinematicLimits(0.5, -2.0, 2.0)


def test_pattern_duration_and_kind_flags():
    sol = PatternSolution(PatternKind.SYNC_POSITIVE, 0.5, 0.5, 6.0, 0.5, 0.25)
    assert sol.duration == 7.0
    assert sol.last_acceleration == 0.5
    assert not sol.kind.is_classical
    assert PatternKind.CLASSICAL_DEC_FIRST.is_classical


# ---- closed forms ---------------------------------------------------------

def test_switch_classical_at_optimum():
    sols = solve_classical(SWITCH_AXIS, SWITCH_LIMITS, 0.5, 3.0)
    assert len(sols) == 1  # double root: the two branches coincide
    s = sols[0]
    assert (s.t1, s.t2, s.t3) == pytest.approx((2.0, 0.0, 1.0), abs=1e-12)
    assert s.v_c == pytest.approx(1.0, abs=1e-12)


def test_switch_sync_positive_at_seven_seconds():
    s = solve_sync(SWITCH_AXIS, SWITCH_LIMITS, 0.5, 7.0)
    assert s.kind is PatternKind.SYNC_POSITIVE
    assert (s.t1, s.t2, s.t3) == pytest.approx((0.5, 6.0, 0.5), abs=1e-9)
    assert s.v_c == pytest.approx(0.25, abs=1e-12)


def test_sync_degenerate_stretch_returns_none():
    # a*T == v_e - v_s makes the cruise segment length undefined
    axis = AxisBoundary(0.0, 0.0, 1.0, 1.0)
    assert solve_sync(axis, SWITCH_LIMITS, 0.5, 2.0) is None


# ---- axis feasibility and optimum ------------------------------------------

def test_pair_axis_optima():
    assert axis_time_optimal(PAIR_X, PAIR_LIMITS) == pytest.approx(4.5, abs=1e-9)
    assert axis_time_optimal(PAIR_Y, PAIR_LIMITS) == pytest.approx(2.5, abs=1e-9)


def test_null_axis_optimum_is_zero():
    assert axis_time_optimal(NULL, PAIR_LIMITS) == 0.0


def test_null_axis_feasible_at_any_duration():
    for T in (0.0, 1.0, 17.5):
        sol = axis_feasible_at(NULL, PAIR_LIMITS, T)
        assert sol is not None and sol.t1 == 0.0 and sol.t3 == 0.0 and sol.t2 == pytest.approx(T)


def test_pair_y_infeasible_at_x_optimum():
    assert axis_feasible_at(PAIR_Y, PAIR_LIMITS, 4.5) is None


def test_pair_y_window_boundaries():
    lo, hi = 8.0 - 2.0 * math.sqrt(6.0), SYNC_STAR
    assert axis_feasible_at(PAIR_Y, PAIR_LIMITS, lo) is not None
    assert axis_feasible_at(PAIR_Y, PAIR_LIMITS, lo + 1e-3) is None
    assert axis_feasible_at(PAIR_Y, PAIR_LIMITS, hi - 1e-3) is None
    assert axis_feasible_at(PAIR_Y, PAIR_LIMITS, hi) is not None


def test_switch_classical_until_four_seconds():
    classical = {PatternKind.CLASSICAL_ACC_FIRST, PatternKind.CLASSICAL_DEC_FIRST}
    for T in np.linspace(3.0, 4.0, 21):
        sol = axis_feasible_at(SWITCH_AXIS, SWITCH_LIMITS, float(T))
        assert sol is not None and sol.kind in classical
    sol = axis_feasible_at(SWITCH_AXIS, SWITCH_LIMITS, 4.0 + 1e-3)
    assert sol is not None and sol.kind not in classical


@pytest.mark.parametrize("D,a,vmax", [(0.9, 1.0606601717798212, 2.1213203435596424), (5.0, 0.5, 2.0),
                                      (-3.0, 2.0, 1.0), (1e-3, 3.0, 3.0)])
def test_rest_to_rest_matches_textbook(D, a, vmax):
    axis = AxisBoundary(1.0, 0.0, 1.0 + D, 0.0)
    lim = KinematicLimits(a, -vmax, vmax)
    assert axis_time_optimal(axis, lim) == pytest.approx(rest_to_rest_time(D, a, vmax), rel=1e-12)


def test_tangent_duration_is_feasible_despite_roundoff():
    # the bang-bang optimum has a zero discriminant that rounds slightly negative
    axis = AxisBoundary(6.7, 0.0, 5.8, 0.0)
    lim = KinematicLimits(1.5 / math.sqrt(2), -3 / math.sqrt(2), 3 / math.sqrt(2))
    T = 2.0 * math.sqrt(0.9 / lim.a_max)
    assert axis_feasible_at(axis, lim, T) is not None


# ---- candidate times ------------------------------------------------------

def test_candidate_times_pair_y():
    c = candidate_times(PAIR_Y, PAIR_LIMITS)
    for t in (2.5, 8.0 - 2.0 * math.sqrt(6.0), SYNC_STAR):
        assert _contains(c, t)
    assert c == sorted(c)


def test_candidate_times_null_axis():
    assert _contains(candidate_times(NULL, PAIR_LIMITS), 0.0)


def test_candidate_times_switch():
    c = candidate_times(SWITCH_AXIS, SWITCH_LIMITS)
    assert _contains(c, 3.0) and _contains(c, 4.0)


def test_candidate_times_distinct():
    rng = np.random.default_rng(3)
    for _ in range(200):
        axis, lim = random_axis(rng)
        c = candidate_times(axis, lim)
        assert all(b - a > 1e-9 for a, b in zip(c, c[1:]))
        assert all(t >= 0 for t in c)


# ---- feasible intervals ---------------------------------------------------

def test_feasible_intervals_pair():
    iy = feasible_intervals(PAIR_Y, PAIR_LIMITS)
    assert len(iy) == 2
    assert iy[0] == pytest.approx((2.5, 8.0 - 2.0 * math.sqrt(6.0)))
    assert iy[1][0] == pytest.approx(SYNC_STAR) and iy[1][1] == math.inf
    (ix,) = feasible_intervals(PAIR_X, PAIR_LIMITS)
    assert ix[0] == pytest.approx(4.5) and ix[1] == math.inf


def test_earliest_common_of_pair():
    sets = [feasible_intervals(PAIR_X, PAIR_LIMITS), feasible_intervals(PAIR_Y, PAIR_LIMITS)]
    assert earliest_common(sets) == pytest.approx(SYNC_STAR, abs=1e-9)


def test_intervals_agree_with_pointwise_feasibility():
    rng = np.random.default_rng(11)
    for _ in range(200):
        axis, lim = random_axis(rng)
        iv = feasible_intervals(axis, lim)
        for T in rng.uniform(0, 30, 10):
            inside = any(lo - 1e-7 <= T <= hi + 1e-7 for lo, hi in iv)
            near = any(abs(T - e) < 1e-6 for pair in iv for e in pair)
            if not near:
                assert inside == (axis_feasible_at(axis, lim, float(T)) is not None)


# ---- synchronization ------------------------------------------------------

def test_pair_sync_time_exceeds_naive_rule():
    res = optimal_sync_time([PAIR_X, PAIR_Y], [PAIR_LIMITS] * 2)
    assert res.duration == pytest.approx(SYNC_STAR, abs=1e-6)
    assert naive_sync_time([PAIR_X, PAIR_Y], [PAIR_LIMITS] * 2) == pytest.approx(4.5)
    x_sol = res.per_axis[0]
    assert x_sol.kind is PatternKind.SYNC_POSITIVE


def test_pair_sync_time_matches_dense_grid_oracle():
    # no common oracle-feasible time on a 0.05 s grid below the analytic value
    grid = np.arange(4.5, SYNC_STAR - 0.05, 0.05)
    common = [T for T in grid if feasibility_oracle(PAIR_Y, PAIR_LIMITS, T, 1e-3)
              and feasibility_oracle(PAIR_X, PAIR_LIMITS, T, 1e-3)]
    assert common == []
    assert feasibility_oracle(PAIR_Y, PAIR_LIMITS, SYNC_STAR + 1e-3, 1e-3)
    assert feasibility_oracle(PAIR_X, PAIR_LIMITS, SYNC_STAR + 1e-3, 1e-3)


def test_single_axis_sync_is_axis_optimum():
    rng = np.random.default_rng(5)
    for _ in range(50):
        axis, lim = random_axis(rng)
        assert optimal_sync_time([axis], [lim]).duration == axis_time_optimal(axis, lim)


def test_zero_axes_sync_at_zero():
    assert optimal_sync_time([NULL, NULL], [PAIR_LIMITS] * 2).duration == 0.0


def test_sync_rejects_out_of_range_boundary():
    with pytest.raises(ValueError):
        optimal_sync_time([AxisBoundary(0, 3.0, 1, 0)], [PAIR_LIMITS])


def test_sync_rejects_mismatched_lists():
    with pytest.raises(ValueError):
        optimal_sync_time([PAIR_X], [PAIR_LIMITS] * 2)


def test_per_axis_solutions_sum_to_common_duration():
    res = optimal_sync_time([PAIR_X, PAIR_Y], [PAIR_LIMITS] * 2)
    for sol in res.per_axis:
        assert sol.t1 + sol.t2 + sol.t3 == pytest.approx(res.duration, abs=1e-9)


def test_feasible_intervals_raises_on_breakdown(monkeypatch):
    from kopkit import _core
    monkeypatch.setattr(_core, "intervals", lambda *a: np.empty((0, 2)))
    with pytest.raises(NoFeasibleDuration):
        feasible_intervals(PAIR_Y, PAIR_LIMITS)


# ---- sampling -------------------------------------------------------------

def test_switch_sampled_velocities():
    sol = axis_feasible_at(SWITCH_AXIS, SWITCH_LIMITS, 3.0)
    from kopkit.kinematics import SyncResult
    out = sample_trajectory(SyncResult(3.0, (sol,)), [SWITCH_AXIS], 0.5)
    assert out[:, 0] == pytest.approx([0, 0.5, 1, 1.5, 2, 2.5, 3])
    assert out[:, 2] == pytest.approx([0, 0.25, 0.5, 0.75, 1.0, 0.75, 0.5], abs=1e-12)


def test_zero_length_trajectory_single_sample():
    res = optimal_sync_time([NULL], [PAIR_LIMITS])
    out = sample_trajectory(res, [NULL], 0.1)
    assert out.shape == (1, 4)


def test_sampling_rejects_bad_step():
    res = optimal_sync_time([PAIR_Y], [PAIR_LIMITS])
    with pytest.raises(ValueError):
        sample_trajectory(res, [PAIR_Y], 0.0)


def test_pair_trajectory_ends_at_target_and_respects_bounds():
    axes = [PAIR_X, PAIR_Y]
    res = optimal_sync_time(axes, [PAIR_LIMITS] * 2)
    out = sample_trajectory(res, axes, 0.01)
    assert out[-1, 0] == res.duration
    assert out[-1, 1:3] == pytest.approx([5.0, 5.0], abs=1e-6)
    assert out[-1, 3:5] == pytest.approx([2.0, 2.0], abs=1e-6)
    assert np.all(np.abs(out[:, 3:5]) <= 2.0 + 1e-6)
    assert np.all(np.abs(out[:, 5:7]) <= 0.5 + 1e-12)


def test_sampled_positions_match_numerical_integration():
    axes = [PAIR_X, PAIR_Y]
    res = optimal_sync_time(axes, [PAIR_LIMITS] * 2)
    out = sample_trajectory(res, axes, 1e-3)
    for j in range(2):
        v = out[:, 3 + j]
        pos = axes[j].p_s + np.concatenate([[0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(out[:, 0]))])
        assert np.max(np.abs(pos - out[:, 1 + j])) < 1e-6


# ---- oracle ----------------------------------------------------------------

def test_oracle_pair_examples():
    assert not feasibility_oracle(PAIR_Y, PAIR_LIMITS, 4.5, 1e-3)
    assert feasibility_oracle(PAIR_Y, PAIR_LIMITS, 2.5, 1e-3)
    assert feasibility_oracle(PAIR_X, PAIR_LIMITS, 4.5, 1e-3)


def test_oracle_rejects_bad_grid():
    with pytest.raises(ValueError):
        feasibility_oracle(PAIR_Y, PAIR_LIMITS, 3.0, 0.0)


# ---- properties -------------------------------------------------------------

speeds = st.floats(-1.0, 1.0)
axes_st = st.tuples(st.floats(-10, 10), speeds, st.floats(-10, 10), speeds, st.floats(0.1, 3.0),
                    st.floats(0.5, 5.0))


def _build(t):
    ps, fs, pe, fe, a, vmax = t
    return AxisBoundary(ps, fs * vmax, pe, fe * vmax), KinematicLimits(a, -vmax, vmax)


@settings(max_examples=150, deadline=None)
@given(axes_st, st.floats(0.0, 40.0))
def test_feasible_solutions_satisfy_integrals(t, T):
    axis, lim = _build(t)
    sol = axis_feasible_at(axis, lim, T)
    assume(sol is not None)
    dv, dp = profile_integrals(sol, axis.v_s)
    scale = max(1.0, abs(axis.v_s), abs(axis.v_e), T)
    assert sol.t1 + sol.t2 + sol.t3 == pytest.approx(T, abs=1e-9 * scale)
    assert dv == pytest.approx(axis.v_e - axis.v_s, abs=1e-9 * scale)
    assert dp == pytest.approx(axis.displacement, abs=1e-9 * scale * scale)
    assert lim.v_min - 1e-9 <= sol.v_c <= lim.v_max + 1e-9


@settings(max_examples=60, deadline=None)
@given(axes_st)
def test_mirror_symmetry(t):
    axis, lim = _build(t)
    mirrored = AxisBoundary(-axis.p_s, -axis.v_s, -axis.p_e, -axis.v_e)
    mlim = KinematicLimits(lim.a_max, -lim.v_max, -lim.v_min)
    assert axis_time_optimal(mirrored, mlim) == pytest.approx(axis_time_optimal(axis, lim), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(axes_st)
def test_time_reversal_symmetry(t):
    axis, lim = _build(t)
    reversed_ = AxisBoundary(axis.p_e, -axis.v_e, axis.p_s, -axis.v_s)
    assert axis_time_optimal(reversed_, lim) == pytest.approx(axis_time_optimal(axis, lim), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(axes_st, st.floats(1.0, 3.0), st.floats(1.0, 2.0))
def test_relaxing_limits_never_slows_down(t, fa, fv):
    axis, lim = _build(t)
    wide = KinematicLimits(lim.a_max * fa, lim.v_min * fv, lim.v_max * fv)
    assert axis_time_optimal(axis, wide) <= axis_time_optimal(axis, lim) + 1e-9


@settings(max_examples=40, deadline=None)
@given(axes_st)
def test_nothing_faster_than_optimum(t):
    axis, lim = _build(t)
    T = axis_time_optimal(axis, lim)
    assume(T > 2e-3)
    for frac in (0.5, 0.9):
        assert not feasibility_oracle(axis, lim, T * frac - 1e-6, 1e-3)


@settings(max_examples=40, deadline=None)
@given(axes_st, axes_st)
def test_sync_time_feasible_for_every_axis(t1, t2):
    (ax1, l1), (ax2, _) = _build(t1), _build(t2)
    lim = l1
    ax2 = AxisBoundary(ax2.p_s, max(min(ax2.v_s, lim.v_max), lim.v_min), ax2.p_e,
                       max(min(ax2.v_e, lim.v_max), lim.v_min))
    res = optimal_sync_time([ax1, ax2], [lim, lim])
    assert res.duration >= naive_sync_time([ax1, ax2], [lim, lim]) - 1e-9
    for ax in (ax1, ax2):
        assert axis_feasible_at(ax, lim, res.duration) is not None
    sets = [feasible_intervals(ax, lim) for ax in (ax1, ax2)]
    assert res.duration == pytest.approx(earliest_common(sets), abs=1e-7)
