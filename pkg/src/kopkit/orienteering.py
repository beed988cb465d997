"""Instances, tours, evaluation, an exact small-instance solver and LP export.

Location indices are 0-based: index 0 is the start depot and index ``N-1``
the end depot.  The exported LP model uses the 1-based names of the
mathematical formulation.
"""
from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .steering_cost import CostMatrix, Location, PoseState

log = logging.getLogger(__name__)

BUDGET_TOL = 1e-6


class MalformedLine(ValueError):
    def __init__(self, line: int, text: str = ""):
        super().__init__(f"line {line}: cannot parse {text!r}")
        self.line = line


class FewerThanTwoLocations(ValueError):
    pass


class InfeasibleBudget(ValueError):
    pass


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    locations: tuple[Location, ...]
    budget: float
    name: str = ""

    def __post_init__(self):
        if len(self.locations) < 2:
            raise FewerThanTwoLocations(f"need start and end depots, got {len(self.locations)} locations")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.locations[0].priority or self.locations[-1].priority:
            log.warning("depot priorities are non-zero in %s", self.name or "instance")

    @property
    def n(self) -> int:
        return len(self.locations)

    @property
    def priorities(self) -> np.ndarray:
        return np.array([loc.priority for loc in self.locations])

    def with_budget(self, budget: float) -> "Instance":
        return Instance(self.locations, budget, self.name)


def parse_instance(text: str, budget: float = 0.0, name: str = "") -> Instance:
    """Read ``x y score`` triples; the first is the start depot and the second
    the end depot, which is moved to the last index."""
    rows: list[tuple[int, list[float]]] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise MalformedLine(lineno, raw.rstrip("\n")) from None
        rows.append((lineno, values))
    if rows and len(rows[0][1]) == 2 and len(rows) > 1:
        log.warning("ignoring budget header %s on line %d", rows[0][1], rows[0][0])
        rows = rows[1:]
    for lineno, values in rows:
        if len(values) != 3:
            raise MalformedLine(lineno, " ".join(map(str, values)))
    if len(rows) < 2:
        raise FewerThanTwoLocations(f"found {len(rows)} locations")
    locs = [Location(*values) for _, values in rows]
    ordered = [locs[0], *locs[2:], locs[1]]
    return Instance(tuple(ordered), budget, name)


@dataclass(frozen=True)
class Solution:
    tour: tuple[PoseState, ...]
    leg_durations: tuple[float, ...]
    total_time: float
    objective: float

    @property
    def locations(self) -> list[int]:
        return [s.location for s in self.tour]

    def to_dict(self) -> dict:
        return {
            "visits": [{"location": s.location, "heading_index": s.heading, "speed_index": s.speed}
                       for s in self.tour],
            "leg_durations": list(self.leg_durations),
            "total_time": self.total_time,
            "objective": self.objective,
        }


def evaluate(tour: Sequence[PoseState], matrix: CostMatrix, instance: Instance) -> Solution:
    """Leg costs and collected priority of a tour; budget is not checked."""
    tour = tuple(tour)
    legs = tuple(matrix(a, b) for a, b in zip(tour, tour[1:]))
    objective = float(sum(instance.locations[s.location].priority for s in tour[1:]))
    return Solution(tour, legs, float(sum(legs)), objective)


def is_feasible(sol: Solution, instance: Instance) -> bool:
    locs = sol.locations
    if len(locs) < 2 or locs[0] != 0 or locs[-1] != instance.n - 1:
        return False
    if len(set(locs)) != len(locs):
        return False
    if abs(sum(sol.leg_durations) - sol.total_time) > BUDGET_TOL:
        return False
    return sol.total_time <= instance.budget + BUDGET_TOL


def solution_record(sol: Solution, instance: Instance, seed: int | None, config: dict) -> str:
    rec = {"instance": instance.name, "seed": seed, **sol.to_dict(), "config": config}
    return json.dumps(rec, indent=2, sort_keys=False) + "\n"


def read_solution(text: str) -> tuple[dict, tuple[PoseState, ...]]:
    rec = json.loads(text)
    tour = tuple(PoseState(v["location"], v["heading_index"], v["speed_index"]) for v in rec["visits"])
    return rec, tour


@dataclass
class _Search:
    flat: np.ndarray
    n: int
    spl: int
    rewards: np.ndarray
    budget: float
    best_reward: float = -1.0
    best_seq: list[int] = field(default_factory=list)

    def run(self, start_states: Sequence[int]):
        total = float(self.rewards[1:].sum())
        for s in start_states:
            self._dfs([s], 0.0, 0.0, 1 << 0, total)

    def _dfs(self, seq, cost, reward, visited, remaining):
        # optimistic bound: every unvisited priority, end depot included
        if reward + remaining <= self.best_reward:
            return
        cur = seq[-1]
        end = self.n - 1
        for loc in range(1, self.n):
            if visited >> loc & 1:
                continue
            r = self.rewards[loc]
            for k in range(self.spl):
                nxt = loc * self.spl + k
                c = cost + self.flat[cur, nxt]
                if c > self.budget + BUDGET_TOL:
                    continue
                if loc == end:
                    if reward + r > self.best_reward:
                        self.best_reward = reward + r
                        self.best_seq = seq + [nxt]
                    continue
                self._dfs(seq + [nxt], c, reward + r, visited | (1 << loc), remaining - r)


def solve_exact(instance: Instance, matrix: CostMatrix, max_locations: int = 9, max_states: int = 8,
                start_states: Iterable[int] | None = None) -> Solution:
    """Provably optimal tour by depth-first enumeration with budget and bound
    pruning.  Among equal objectives the lexicographically smallest state
    sequence wins.  ``start_states`` restricts the start depot's (heading,
    speed) combinations, given as per-location state offsets."""
    n, spl = matrix.n_locations, matrix.states_per_location
    if n != instance.n:
        raise ValueError("matrix does not match instance")
    if n > max_locations or spl > max_states:
        raise SearchSpaceTooLarge(f"N={n}, H*V={spl} exceeds guard N<={max_locations}, H*V<={max_states}")
    starts = sorted(start_states) if start_states is not None else list(range(spl))
    search = _Search(matrix.flat, n, spl, instance.priorities, instance.budget)
    search.run(starts)
    if search.best_reward < 0:
        raise InfeasibleBudget(f"no depot-to-depot tour fits budget {instance.budget}")
    tour = [matrix.state(i) for i in search.best_seq]
    return evaluate(tour, matrix, instance)


def export_milp(instance: Instance, matrix: CostMatrix) -> str:
    """The routing model in LP text format.

    Arc variables ``x_i_k_g_j_m_w`` (1-based) exist for ``i != j``, ``i < N``
    and ``j > 1``; ordinal variables ``u_i`` carry the subtour elimination.
    """
    N, H, V = matrix.shape[:3]
    r = instance.priorities
    c = matrix.values
    hv = [(k, g) for k in range(H) for g in range(V)]

    def xname(i, k, g, j, m, w):
        return f"x_{i + 1}_{k + 1}_{g + 1}_{j + 1}_{m + 1}_{w + 1}"

    arcs = [(i, j) for i in range(N - 1) for j in range(1, N) if i != j]
    out = io.StringIO()
    w_ = out.write

    def expr(terms) -> str:
        parts = []
        for coef, var in terms:
            mag = "" if abs(coef) == 1 else f"{abs(coef):.17g} "
            sign = "-" if coef < 0 else "+"
            parts.append(f"{sign} {mag}{var}")
        if not parts:
            return "0 u_1"
        lines = [" ".join(parts[i:i + 8]) for i in range(0, len(parts), 8)]
        text = "\n   ".join(lines)
        return text[2:] if text.startswith("+ ") else text

    def row(name, terms, sense, rhs):
        w_(f" {name}: {expr(terms)} {sense} {rhs:.17g}\n")

    def all_x(i, j):
        return [xname(i, k, g, j, m, ww) for k, g in hv for m, ww in hv]

    w_(f"\\ routing model for {instance.name or 'instance'}: N={N} H={H} V={V}\n")
    w_("Maximize\n")
    w_(f" obj: {expr([(float(r[j]), v) for i, j in arcs if r[j] != 0 for v in all_x(i, j)])}\n")
    w_("Subject To\n")
    row("start", [(1, v) for i, j in arcs if i == 0 for v in all_x(i, j)], "=", 1)
    row("end", [(1, v) for i, j in arcs if j == N - 1 for v in all_x(i, j)], "=", 1)
    for j in range(1, N):
        row(f"visit_{j + 1}", [(1, v) for i in range(N - 1) if i != j for v in all_x(i, j)], "<=", 1)
    for j in range(1, N - 1):
        for m, ww in hv:
            terms = [(1, xname(i, k, g, j, m, ww)) for i in range(N - 1) if i != j for k, g in hv]
            terms += [(-1, xname(j, m, ww, o, p, q)) for o in range(1, N) if o != j for p, q in hv]
            row(f"flow_{j + 1}_{m + 1}_{ww + 1}", terms, "=", 0)
    row("budget", [(float(c[i, k, g, j, m, ww]), xname(i, k, g, j, m, ww))
                   for i, j in arcs for k, g in hv for m, ww in hv], "<=", instance.budget)
    arcset = set(arcs)
    for i in range(N):
        for j in range(N):
            terms = [(1, f"u_{i + 1}"), (-1, f"u_{j + 1}")] if i != j else []
            if (i, j) in arcset:
                terms += [(N - 1, v) for v in all_x(i, j)]
            row(f"mtz_{i + 1}_{j + 1}", terms, "<=", N - 2)
    w_("Bounds\n")
    w_(" u_1 = 1\n")
    for i in range(1, N):
        w_(f" 2 <= u_{i + 1} <= {N}\n")
    w_("General\n")
    for i in range(1, N):
        w_(f" u_{i + 1}\n")
    w_("Binary\n")
    for i, j in arcs:
        for v in all_x(i, j):
            w_(f" {v}\n")
    w_("End\n")
    return out.getvalue()
