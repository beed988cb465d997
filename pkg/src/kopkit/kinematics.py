"""Time-optimal bang-zero-bang trajectories for decoupled double-integrator axes.

Every axis is driven by one of four acceleration patterns with three constant
segments.  Classical patterns ``(+a, 0, -a)`` give the single-axis optimum;
synchronization patterns ``(+a, 0, +a)`` stretch an axis to a longer common
duration.  A duration ``T`` is feasible for an axis when some pattern has
non-negative segment durations and a cruise velocity inside the bounds.  The
feasible set is a union of closed intervals whose endpoints are the roots of
those conditions, so the optimum over several axes is found by scanning the
root candidates.
"""
from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _core
from ._core import DEDUP_TOL, EPS_T, EPS_V


class NoFeasibleDuration(RuntimeError):
    """No candidate duration is feasible for a single axis."""


class NoCommonDuration(RuntimeError):
    """Candidate scan ended without a duration feasible for every axis."""


@dataclass(frozen=True)
class KinematicLimits:
    a_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        if not self.a_max > 0:
            raise ValueError(f"a_max must be positive, got {self.a_max}")
        if not self.v_min < self.v_max:
            raise ValueError(f"need v_min < v_max, got [{self.v_min}, {self.v_max}]")

    @classmethod
    def symmetric(cls, a_max: float, v_max: float) -> "KinematicLimits":
        return cls(a_max, -v_max, v_max)


@dataclass(frozen=True)
class AxisBoundary:
    p_s: float
    v_s: float
    p_e: float
    v_e: float

    @property
    def displacement(self) -> float:
        return self.p_e - self.p_s

    def is_null(self) -> bool:
        return self.p_s == self.p_e and self.v_s == 0.0 and self.v_e == 0.0


class PatternKind(enum.Enum):
    CLASSICAL_ACC_FIRST = "classical+"
    CLASSICAL_DEC_FIRST = "classical-"
    SYNC_POSITIVE = "sync+"
    SYNC_NEGATIVE = "sync-"

    @property
    def is_classical(self) -> bool:
        return self in (PatternKind.CLASSICAL_ACC_FIRST, PatternKind.CLASSICAL_DEC_FIRST)


@dataclass(frozen=True)
class PatternSolution:
    """Segment durations of one bang-zero-bang profile.

    ``a`` is the signed acceleration of the first segment.  The last segment
    applies ``-a`` for classical kinds and ``+a`` for synchronization kinds.
    """

    kind: PatternKind
    a: float
    t1: float
    t2: float
    t3: float
    v_c: float

    @property
    def duration(self) -> float:
        return self.t1 + self.t2 + self.t3

    @property
    def last_acceleration(self) -> float:
        return -self.a if self.kind.is_classical else self.a

    def clamped(self) -> "PatternSolution":
        return PatternSolution(self.kind, self.a, max(self.t1, 0.0), max(self.t2, 0.0),
                               max(self.t3, 0.0), self.v_c)

    def evaluate(self, v_s: float, t: float) -> tuple[float, float, float]:
        """Displacement, velocity and acceleration at time ``t`` from the start."""
        t1, t2 = self.t1, self.t2
        a3 = self.last_acceleration
        if t < t1:
            return v_s * t + 0.5 * self.a * t * t, v_s + self.a * t, self.a
        d1 = v_s * t1 + 0.5 * self.a * t1 * t1
        if t < t1 + t2:
            return d1 + self.v_c * (t - t1), self.v_c, 0.0
        tau = t - t1 - t2
        return d1 + self.v_c * t2 + self.v_c * tau + 0.5 * a3 * tau * tau, self.v_c + a3 * tau, a3


@dataclass(frozen=True)
class SyncResult:
    duration: float
    per_axis: tuple[PatternSolution, ...]


def _kind_for(a: float, classical: bool) -> PatternKind:
    if classical:
        return PatternKind.CLASSICAL_ACC_FIRST if a > 0 else PatternKind.CLASSICAL_DEC_FIRST
    return PatternKind.SYNC_POSITIVE if a > 0 else PatternKind.SYNC_NEGATIVE


def _discriminant(axis: AxisBoundary, a: float, T: float) -> float:
    return _core.discriminant(axis.displacement, axis.v_s, axis.v_e, a, T)


def solve_classical(axis: AxisBoundary, limits: KinematicLimits, a: float, T: float) -> list[PatternSolution]:
    """Both sign branches of the ``(+a, 0, -a)`` pattern at duration ``T``.

    Returns an empty list when the discriminant is negative and a single entry
    when both branches coincide.  Feasibility is not checked here.
    """
    disc = _discriminant(axis, a, T)
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    kind = _kind_for(a, True)
    dv = axis.v_e - axis.v_s
    out = []
    for sign in (1.0, -1.0):
        t1 = (a * T + dv + sign * root) / (2.0 * a)
        t2 = -sign * root / a
        t3 = (a * T - dv + sign * root) / (2.0 * a)
        out.append(PatternSolution(kind, a, t1, t2, t3, axis.v_s + a * t1))
        if root == 0.0:
            break
    return out


def solve_sync(axis: AxisBoundary, limits: KinematicLimits, a: float, T: float) -> PatternSolution | None:
    """The ``(+a, 0, +a)`` pattern at duration ``T``; ``None`` if degenerate."""
    stretch = a * T - axis.v_e + axis.v_s
    kind = _kind_for(a, False)
    if stretch == 0.0:
        return None
    t2 = stretch / a
    v_c = (2.0 * a * axis.displacement - axis.v_e ** 2 + axis.v_s ** 2) / (2.0 * stretch)
    return PatternSolution(kind, a, (v_c - axis.v_s) / a, t2, (axis.v_e - v_c) / a, v_c)


def is_feasible(sol: PatternSolution, limits: KinematicLimits) -> bool:
    return (sol.t1 >= -EPS_T and sol.t2 >= -EPS_T and sol.t3 >= -EPS_T
            and limits.v_min - EPS_V <= sol.v_c <= limits.v_max + EPS_V)


def axis_feasible_at(axis: AxisBoundary, limits: KinematicLimits, T: float) -> PatternSolution | None:
    """First feasible pattern at duration ``T`` in the fixed order
    classical(+a_max) [+ branch, - branch], classical(-a_max), sync(+a_max),
    sync(-a_max)."""
    if T < 0:
        return None
    if axis.is_null():
        return PatternSolution(PatternKind.SYNC_POSITIVE, limits.a_max, 0.0, T, 0.0, 0.0)
    code = _core.feasible_code(*_args(axis, limits), T)
    if code < 0:
        return None
    a = limits.a_max if code in (0, 1, 4) else -limits.a_max
    if code < 4:
        sol = solve_classical(axis, limits, a, T)[code % 2]
    else:
        sol = solve_sync(axis, limits, a, T)
    return sol.clamped()


def candidate_times(axis: AxisBoundary, limits: KinematicLimits) -> list[float]:
    """Sorted, de-duplicated non-negative durations at which any pattern
    condition holds with equality.  ``0`` is always included.

    Classical conditions become quadratics in ``T`` after squaring the root
    term; each root is substituted back and kept only if the unsquared
    condition holds.  Synchronization conditions are linear in ``T``.
    """
    return _core.candidates(*_args(axis, limits)).tolist()


def _args(axis: AxisBoundary, limits: KinematicLimits) -> tuple[float, ...]:
    return (axis.displacement, axis.v_s, axis.v_e, limits.a_max, limits.v_min, limits.v_max)


def _dedup(values) -> list[float]:
    out: list[float] = []
    for v in sorted(max(v, 0.0) for v in values):
        if not out or v - out[-1] > DEDUP_TOL:
            out.append(v)
    return out


def axis_time_optimal(axis: AxisBoundary, limits: KinematicLimits) -> float:
    """Minimum-time duration of a single axis."""
    if axis.is_null():
        return 0.0
    for T in candidate_times(axis, limits):
        if axis_feasible_at(axis, limits, T) is not None:
            return T
    raise NoFeasibleDuration(f"no feasible candidate for {axis} under {limits}")


def _check_boundary(axis: AxisBoundary, limits: KinematicLimits) -> None:
    for v in (axis.v_s, axis.v_e):
        if not limits.v_min - EPS_V <= v <= limits.v_max + EPS_V:
            raise ValueError(f"boundary velocity {v} outside [{limits.v_min}, {limits.v_max}]")


def optimal_sync_time(axes: Sequence[AxisBoundary], limits: Sequence[KinematicLimits]) -> SyncResult:
    """Least common duration feasible for every axis, with per-axis patterns."""
    if not axes:
        raise ValueError("need at least one axis")
    if len(axes) != len(limits):
        raise ValueError("axes and limits differ in length")
    for ax, lim in zip(axes, limits):
        _check_boundary(ax, lim)
    t_lo = max(axis_time_optimal(ax, lim) for ax, lim in zip(axes, limits))
    pool = [t_lo]
    for ax, lim in zip(axes, limits):
        pool.extend(T for T in candidate_times(ax, lim) if T >= t_lo - EPS_T)
    for T in _dedup(max(T, t_lo) for T in pool):
        sols = []
        for ax, lim in zip(axes, limits):
            sol = axis_feasible_at(ax, lim, T)
            if sol is None:
                break
            sols.append(sol)
        else:
            return SyncResult(T, tuple(_fit_duration(s, T) for s in sols))
    raise NoCommonDuration(f"no common duration for {list(axes)}")


def _fit_duration(sol: PatternSolution, T: float) -> PatternSolution:
    # absorb clamping residue into the cruise segment so durations sum to T
    return PatternSolution(sol.kind, sol.a, sol.t1, max(T - sol.t1 - sol.t3, 0.0), sol.t3, sol.v_c)


def feasible_intervals(axis: AxisBoundary, limits: KinematicLimits) -> tuple[tuple[float, float], ...]:
    """Feasible durations of one axis as sorted closed intervals.

    The last interval is unbounded (``math.inf``).  Feasibility is constant
    between consecutive candidates, so one probe per gap decides it.
    """
    iv = _core.intervals(*_args(axis, limits))
    if iv.shape[0] == 0:
        raise NoFeasibleDuration(f"feasible set of {axis} is bounded; candidate enumeration broke down")
    return tuple((float(lo), float(hi)) for lo, hi in iv)


def earliest_common(interval_sets: Sequence[Sequence[tuple[float, float]]]) -> float:
    """Smallest duration contained in every interval set."""
    T = 0.0
    while True:
        moved = False
        for ivs in interval_sets:
            starts = [lo for lo, _ in ivs]
            k = bisect.bisect_right(starts, T + DEDUP_TOL) - 1
            if k >= 0 and ivs[k][1] >= T - DEDUP_TOL:
                continue
            if k + 1 >= len(ivs):
                raise NoCommonDuration("interval sets share no duration")
            T = ivs[k + 1][0]
            moved = True
        if not moved:
            return T


def sample_trajectory(result: SyncResult, axes: Sequence[AxisBoundary], dt: float) -> np.ndarray:
    """Closed-form samples at ``0, dt, 2dt, ...`` plus the final time.

    Returns an array with columns ``t, p_1..p_n, v_1..v_n, a_1..a_n``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    T = result.duration
    n_steps = int(math.floor(T / dt + 1e-9))
    times = [k * dt for k in range(n_steps + 1)]
    if T - times[-1] > 1e-9 * max(1.0, T):
        times.append(T)
    else:
        times[-1] = T
    n = len(axes)
    out = np.empty((len(times), 1 + 3 * n))
    out[:, 0] = times
    for j, (sol, ax) in enumerate(zip(result.per_axis, axes)):
        for r, t in enumerate(times):
            d, v, acc = sol.evaluate(ax.v_s, t)
            out[r, 1 + j] = ax.p_s + d
            out[r, 1 + n + j] = v
            out[r, 1 + 2 * n + j] = acc
    # pin the last sample to the requested end state
    for j, ax in enumerate(axes):
        out[-1, 1 + j] = ax.p_e if abs(out[-1, 1 + j] - ax.p_e) <= 1e-6 else out[-1, 1 + j]
        out[-1, 1 + n + j] = ax.v_e if abs(out[-1, 1 + n + j] - ax.v_e) <= 1e-6 else out[-1, 1 + n + j]
    return out


def naive_sync_time(axes: Sequence[AxisBoundary], limits: Sequence[KinematicLimits]) -> float:
    """Largest single-axis optimum; not generally synchronizable."""
    return max(axis_time_optimal(ax, lim) for ax, lim in zip(axes, limits))


def feasibility_oracle(axis: AxisBoundary, limits: KinematicLimits, T: float, grid: float = 1e-3) -> bool:
    """Brute-force feasibility of duration ``T``.

    For each pattern shape the first switching time runs over a grid on
    ``[0, T]``; the last segment length follows from the velocity change and
    the cruise segment fills the rest.  The profile is integrated segment by
    segment and the end-position error is scanned for a zero crossing over the
    admissible part of the grid.
    """
    if not grid > 0:
        raise ValueError("grid must be positive")
    if T < 0:
        return False
    dv = axis.v_e - axis.v_s
    D = axis.displacement
    n = max(int(math.ceil(T / grid)), 1)
    t1 = np.linspace(0.0, T, n + 1)
    tol = 1e-9 + 1e-6 * grid
    for a in (limits.a_max, -limits.a_max):
        for same_sign in (False, True):
            t3 = dv / a - t1 if same_sign else t1 - dv / a
            a3 = a if same_sign else -a
            t2 = T - t1 - t3
            vc = axis.v_s + a * t1
            dist = (axis.v_s * t1 + 0.5 * a * t1 ** 2) + vc * t2 + (vc * t3 + 0.5 * a3 * t3 ** 2)
            err = dist - D
            slack = np.minimum.reduce([t2, t3, vc - limits.v_min, limits.v_max - vc])
            ok = slack >= -tol
            if not ok.any():
                continue
            if np.any(ok & (np.abs(err) <= tol)):
                return True
            if _crosses(t1, err, ok, slack, a, a3, axis, limits, T, dv, D, same_sign, tol):
                return True
    return False


def _crosses(t1, err, ok, slack, a, a3, axis, limits, T, dv, D, same_sign, tol) -> bool:
    # sign change of the position error between neighbouring admissible samples
    both = ok[:-1] & ok[1:]
    if np.any(both & (np.sign(err[:-1]) != np.sign(err[1:]))):
        return True
    # refine transitions into and out of the admissible region
    edges = np.flatnonzero(ok[:-1] != ok[1:])
    for e in edges:
        lo, hi = t1[e], t1[e + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            s_mid = _slack_at(mid, a, a3, axis, limits, T, dv, same_sign)
            if (s_mid >= -tol) == bool(ok[e]):
                lo = mid
            else:
                hi = mid
        edge_t = lo if ok[e] else hi
        e_edge = _err_at(edge_t, a, a3, axis, T, dv, D, same_sign)
        inner = err[e] if ok[e] else err[e + 1]
        if abs(e_edge) <= tol or np.sign(e_edge) != np.sign(inner):
            return True
    return False


def _slack_at(t1, a, a3, axis, limits, T, dv, same_sign) -> float:
    t3 = dv / a - t1 if same_sign else t1 - dv / a
    t2 = T - t1 - t3
    vc = axis.v_s + a * t1
    return min(t1, t2, t3, vc - limits.v_min, limits.v_max - vc)


def _err_at(t1, a, a3, axis, T, dv, D, same_sign) -> float:
    t3 = dv / a - t1 if same_sign else t1 - dv / a
    t2 = T - t1 - t3
    vc = axis.v_s + a * t1
    return (axis.v_s * t1 + 0.5 * a * t1 ** 2) + vc * t2 + (vc * t3 + 0.5 * a3 * t3 ** 2) - D
