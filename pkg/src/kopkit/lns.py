"""Large Neighborhood Search over (location, heading, speed) tours.

Tours are handled internally as lists of flat state indices into
``CostMatrix.flat``.  Randomness is consumed only when a destruction rule is
drawn, so construction is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .orienteering import BUDGET_TOL, InfeasibleBudget, Instance, Solution, evaluate
from .steering_cost import CostMatrix

ENDPOINT_MODES = ("neighbors", "depots", "off")
_ZERO = 1e-12


@dataclass(frozen=True)
class LnsConfig:
    phase1_iters: int = 100
    phase1_destroy: float = 0.5
    phase2_iters: int = 100
    phase2_destroy: float = 0.2
    seed: int = 0
    endpoint_opt: str = "neighbors"

    def __post_init__(self):
        for f in (self.phase1_destroy, self.phase2_destroy):
            if not 0 < f <= 1:
                raise ValueError(f"destroy fraction {f} outside (0, 1]")
        if self.phase1_iters < 0 or self.phase2_iters < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.endpoint_opt not in ENDPOINT_MODES:
            raise ValueError(f"endpoint_opt must be one of {ENDPOINT_MODES}")


@dataclass(frozen=True)
class InsertionCandidate:
    location: int
    position: int  # index in the tour the new visit will occupy
    state: int  # flat state index of the inserted visit
    delta_cost: float
    ratio: float


class _Ctx:
    def __init__(self, matrix: CostMatrix, instance: Instance, start_states: Sequence[int] | None):
        if matrix.n_locations != instance.n:
            raise ValueError("matrix does not match instance")
        self.C = matrix.flat
        self.spl = matrix.states_per_location
        self.n = instance.n
        self.rewards = instance.priorities
        self.budget = instance.budget
        self.matrix = matrix
        self.instance = instance
        offsets = range(self.spl) if start_states is None else sorted(start_states)
        self.start_options = np.array(list(offsets), dtype=np.int64)

    def states_of(self, loc: int) -> np.ndarray:
        if loc == 0:
            return self.start_options
        return np.arange(loc * self.spl, (loc + 1) * self.spl)

    def cost(self, tour: Sequence[int]) -> float:
        return float(sum(self.C[a, b] for a, b in zip(tour, tour[1:])))

    def solution(self, tour: Sequence[int]) -> Solution:
        return evaluate([self.matrix.state(s) for s in tour], self.matrix, self.instance)

    def to_flat(self, sol: Solution) -> list[int]:
        return [self.matrix.index(s) for s in sol.tour]


def depot_tour(matrix: CostMatrix, instance: Instance, start_states: Sequence[int] | None = None) -> Solution:
    """Direct start-to-end flight with the cheapest depot states."""
    ctx = _Ctx(matrix, instance, start_states)
    starts, ends = ctx.states_of(0), ctx.states_of(ctx.n - 1)
    block = ctx.C[np.ix_(starts, ends)]
    a, b = np.unravel_index(int(np.argmin(block)), block.shape)
    return ctx.solution([int(starts[a]), int(ends[b])])


def best_insertions(tour: Sequence[int], ctx: _Ctx) -> list[InsertionCandidate]:
    """Cheapest insertion of every unscheduled positive-priority location."""
    visited = {s // ctx.spl for s in tour}
    todo = [p for p in range(1, ctx.n - 1) if p not in visited and ctx.rewards[p] > 0]
    if not todo:
        return []
    A = np.asarray(tour[:-1])
    B = np.asarray(tour[1:])
    P = np.concatenate([ctx.states_of(p) for p in todo])
    delta = ctx.C[np.ix_(A, P)] + ctx.C[np.ix_(P, B)].T - ctx.C[A, B][:, None]
    # (gaps, p, state) -> (p, gaps * state); first minimum = lowest gap, then state
    per = delta.reshape(len(A), len(todo), ctx.spl).transpose(1, 0, 2).reshape(len(todo), -1)
    idx = np.argmin(per, axis=1)
    out = []
    for row, p in enumerate(todo):
        gap, s = divmod(int(idx[row]), ctx.spl)
        d = float(per[row, idx[row]])
        ratio = ctx.rewards[p] / d if d > _ZERO else math.inf
        out.append(InsertionCandidate(p, gap + 1, p * ctx.spl + s, d, ratio))
    return out


def _reoptimize(tour: list[int], pos: int, ctx: _Ctx) -> None:
    # best state of tour[pos] with both neighbours fixed
    loc = tour[pos] // ctx.spl
    opts = ctx.states_of(loc)
    total = np.zeros(len(opts))
    if pos > 0:
        total += ctx.C[tour[pos - 1], opts]
    if pos + 1 < len(tour):
        total += ctx.C[opts, tour[pos + 1]]
    cur = int(np.flatnonzero(opts == tour[pos])[0]) if tour[pos] in opts else None
    best = int(np.argmin(total))
    if cur is None or total[best] < total[cur]:
        tour[pos] = int(opts[best])


def construct(partial: Solution, matrix: CostMatrix, instance: Instance, rng=None,
              endpoint_opt: str = "neighbors", start_states: Sequence[int] | None = None) -> Solution:
    """Greedy best-ratio insertion until nothing fits the budget.

    After each insertion the neighbouring visits (or the depots, per
    ``endpoint_opt``) get the (heading, speed) that minimises their two legs.
    ``rng`` is accepted for interface symmetry and not used.
    """
    ctx = _Ctx(matrix, instance, start_states)
    tour = ctx.to_flat(partial)
    total = ctx.cost(tour)
    while True:
        cands = [c for c in best_insertions(tour, ctx) if total + c.delta_cost <= ctx.budget + BUDGET_TOL]
        if not cands:
            break
        pick = cands[0]
        for c in cands[1:]:
            if c.ratio > pick.ratio:
                pick = c
        tour.insert(pick.position, pick.state)
        if endpoint_opt == "neighbors":
            _reoptimize(tour, pick.position - 1, ctx)
            _reoptimize(tour, pick.position + 1, ctx)
        elif endpoint_opt == "depots":
            _reoptimize(tour, 0, ctx)
            _reoptimize(tour, len(tour) - 1, ctx)
        total = ctx.cost(tour)
    return ctx.solution(tour)


def _removal_scores(tour: Sequence[int], ctx: _Ctx):
    """Per interior position: (location, priority, marginal cost, gap to best
    connection)."""
    rows = []
    for q in range(1, len(tour) - 1):
        a, x, b = tour[q - 1], tour[q], tour[q + 1]
        loc = x // ctx.spl
        conn = ctx.C[a, x] + ctx.C[x, b]
        opts = ctx.states_of(loc)
        best = float(np.min(ctx.C[a, opts] + ctx.C[opts, b]))
        rows.append((q, loc, ctx.rewards[loc], conn - ctx.C[a, b], max(conn - best, 0.0)))
    return rows


def _pick_removal(rule: int, rows) -> int:
    def low_ratio(den_idx):
        keyed = [(r[2] / r[den_idx] if r[den_idx] > _ZERO else math.inf, r[1], r[0]) for r in rows]
        return min(keyed)[2]

    if rule == 0:
        return low_ratio(3)
    if rule == 1:
        return min(rows, key=lambda r: (-r[4], r[1]))[0]
    if any(r[4] > _ZERO for r in rows):
        rows = [r for r in rows if r[4] > _ZERO]
        return low_ratio(4)
    return low_ratio(3)


def destroy(sol: Solution, fraction: float, matrix: CostMatrix, instance: Instance, rng,
            start_states: Sequence[int] | None = None) -> Solution:
    """Remove ``ceil(fraction * interior)`` visits, drawing one of three
    removal rules uniformly for each removal:

    0. lowest priority per marginal flight time,
    1. largest excess over the best (heading, speed) connection,
    2. lowest priority per that excess (falls back to rule 0 when every
       visit is connected optimally).
    """
    ctx = _Ctx(matrix, instance, start_states)
    tour = ctx.to_flat(sol)
    interior = len(tour) - 2
    count = min(math.ceil(fraction * interior - 1e-9), interior)
    for _ in range(count):
        rule = int(rng.integers(3))
        q = _pick_removal(rule, _removal_scores(tour, ctx))
        del tour[q]
    return ctx.solution(tour)


def solve(instance: Instance, matrix: CostMatrix, config: LnsConfig = LnsConfig(),
          start_states: Sequence[int] | None = None, history: list | None = None) -> Solution:
    """Construction followed by two destroy/repair phases with strict
    improvement acceptance; returns the best solution seen.

    When given, ``history`` receives the best objective after every iteration.
    """
    rng = np.random.default_rng(config.seed)
    kw = dict(endpoint_opt=config.endpoint_opt, start_states=start_states)
    start = depot_tour(matrix, instance, start_states)
    if start.total_time > instance.budget + BUDGET_TOL:
        raise InfeasibleBudget(f"direct depot flight {start.total_time:.6g} s exceeds budget {instance.budget}")
    best = construct(start, matrix, instance, **kw)
    incumbent = best
    for iters, fraction in ((config.phase1_iters, config.phase1_destroy),
                            (config.phase2_iters, config.phase2_destroy)):
        incumbent = best
        for _ in range(iters):
            partial = destroy(incumbent, fraction, matrix, instance, rng, start_states)
            cand = construct(partial, matrix, instance, **kw)
            if cand.objective > incumbent.objective:
                incumbent = cand
                if cand.objective > best.objective:
                    best = cand
            if history is not None:
                history.append(best.objective)
    return best
