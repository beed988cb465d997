"""Shared fixtures data and independent oracles for the test suite."""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from kopkit import lns
from kopkit.cli import load_instance
from kopkit.dubins import dubins_cost_matrix
from kopkit.kinematics import AxisBoundary, KinematicLimits
from kopkit.orienteering import BUDGET_TOL, Instance
from kopkit.steering_cost import AxisLimitPolicy, CostMatrix, Discretization, Location, build_cost_matrix

# two axes whose optimal durations (4.5 s, 2.5 s) cannot be shared
PAIR_LIMITS = KinematicLimits(0.5, -2.0, 2.0)
PAIR_X = AxisBoundary(0.0, 0.0, 5.0, 2.0)
PAIR_Y = AxisBoundary(0.0, 2.0, 5.0, 2.0)
# classical pattern up to 4 s, same-sign sync pattern beyond
SWITCH_LIMITS = KinematicLimits(0.5, -10.0, 10.0)
SWITCH_AXIS = AxisBoundary(0.0, 0.0, 1.75, 0.5)
SYNC_STAR = 8.0 + 2.0 * math.sqrt(6.0)

VMAX, AMAX, HEADINGS = 3.0, 1.5, 8
SCALED = AxisLimitPolicy.PER_AXIS_SCALED


def random_axis(rng: np.random.Generator) -> tuple[AxisBoundary, KinematicLimits]:
    a = rng.uniform(0.1, 3.0)
    vmax = rng.uniform(0.5, 5.0)
    lim = KinematicLimits(a, -vmax, vmax)
    vs, ve = rng.uniform(-vmax, vmax, 2)
    ps, pe = rng.uniform(-10, 10, 2)
    return AxisBoundary(ps, vs, pe, ve), lim


def profile_integrals(sol, v_s: float) -> tuple[float, float]:
    """Velocity change and displacement of a bang-zero-bang profile, by
    summing constant-acceleration pieces (trapezoids are exact here)."""
    dv = 0.0
    dp = 0.0
    v = v_s
    for acc, dur in ((sol.a, sol.t1), (0.0, sol.t2), (sol.last_acceleration, sol.t3)):
        v_next = v + acc * dur
        dp += 0.5 * (v + v_next) * dur
        dv += acc * dur
        v = v_next
    return dv, dp


# ---- orienteering oracles -------------------------------------------------

def brute_force_optimum(instance: Instance, matrix: CostMatrix, start_states=None) -> float:
    """Best objective by plain enumeration of every ordered subset and every
    state assignment; no pruning."""
    n, spl = matrix.n_locations, matrix.states_per_location
    C = matrix.flat
    r = instance.priorities
    starts = list(range(spl)) if start_states is None else list(start_states)
    best = -1.0
    interior = range(1, n - 1)
    for size in range(0, n - 1):
        for perm in itertools.permutations(interior, size):
            route = (0, *perm, n - 1)
            reward = float(sum(r[j] for j in route[1:]))
            if reward <= best:
                continue
            choices = [starts] + [range(spl)] * (len(route) - 1)
            for states in itertools.product(*choices):
                idx = [loc * spl + s for loc, s in zip(route, states)]
                cost = sum(C[a, b] for a, b in zip(idx, idx[1:]))
                if cost <= instance.budget + BUDGET_TOL:
                    best = reward
                    break
    return best


def min_time_with_visits(matrix: CostMatrix, k: int) -> float:
    """Least flight time of a depot-to-depot tour with exactly ``k`` interior
    visits (dynamic program over visited sets and last state)."""
    n, spl = matrix.n_locations, matrix.states_per_location
    C = matrix.flat
    inner = list(range(1, n - 1))
    if k == 0:
        return float(C[np.ix_(range(spl), range((n - 1) * spl, n * spl))].min())
    layer = {}
    for p in inner:
        for s in range(spl):
            layer[(1 << p, p * spl + s)] = float(C[:spl, p * spl + s].min())
    for _ in range(k - 1):
        nxt = {}
        for (mask, cur), cost in layer.items():
            for p in inner:
                if mask >> p & 1:
                    continue
                for s in range(spl):
                    key = (mask | 1 << p, p * spl + s)
                    c = cost + C[cur, p * spl + s]
                    if c < nxt.get(key, math.inf):
                        nxt[key] = c
        layer = nxt
    end = range((n - 1) * spl, n * spl)
    return min(cost + float(C[cur, end].min()) for (_, cur), cost in layer.items())


def random_small_instance(seed: int, n: int = 6, headings: int = 2, speeds: int = 2):
    """Random instance whose budget lies between the cheapest 2-visit and the
    cheapest 4-visit tour, so the optimum holds 2 to 4 locations."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 10, (n, 2))
    pr = rng.integers(1, 11, n).astype(float)
    pr[0] = pr[-1] = 0.0
    locs = tuple(Location(float(x), float(y), float(p)) for (x, y), p in zip(pts, pr))
    lim = SCALED.axis_limits(VMAX, AMAX)
    disc = Discretization.uniform(headings, speeds, lim.v_max)
    matrix = build_cost_matrix(locs, disc, SCALED, VMAX, AMAX)
    lo, hi = min_time_with_visits(matrix, 2), min_time_with_visits(matrix, 4)
    budget = float(rng.uniform(lo, max(lo, hi - 1e-6)))
    return Instance(locs, budget, f"random-{seed}"), matrix


# ---- benchmark set 2 ----------------------------------------------------------

@lru_cache(maxsize=None)
def tsi2() -> Instance:
    return load_instance("builtin:tsiligirides_2", 0.0)


@lru_cache(maxsize=None)
def tsi2_kop(speeds: int, single_speed: float | None = None) -> CostMatrix:
    lim = SCALED.axis_limits(VMAX, AMAX)
    disc = Discretization.uniform(HEADINGS, speeds, lim.v_max, single_speed)
    return build_cost_matrix(tsi2().locations, disc, SCALED, VMAX, AMAX)


@lru_cache(maxsize=None)
def tsi2_dop(v_const: float) -> CostMatrix:
    return dubins_cost_matrix(tsi2().locations, HEADINGS, v_const, AMAX)


def sweep_fractions() -> list[float]:
    return [round(0.1 * i, 1) for i in range(1, 11)]


def best_lns(instance: Instance, matrix: CostMatrix, seeds=range(10)) -> float:
    return max(lns.solve(instance, matrix, lns.LnsConfig(seed=s)).objective for s in seeds)
