"""Discretized (heading, speed) states and the flight-time cost tensor."""
from __future__ import annotations

import enum
import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _core
from .kinematics import AxisBoundary, KinematicLimits, NoCommonDuration, optimal_sync_time, sample_trajectory

_TRIG_SNAP = 1e-12


@dataclass(frozen=True)
class Location:
    x: float
    y: float
    priority: float = 0.0

    def __post_init__(self):
        if self.priority < 0:
            raise ValueError(f"priority must be non-negative, got {self.priority}")


@dataclass(frozen=True)
class Discretization:
    """``headings`` equally spaced angles and an explicit list of speeds.

    Heading index ``k`` (0-based) points at ``2*pi*(k+1)/headings``, so the
    last index is the positive x direction.
    """

    headings: int
    speed_values: tuple[float, ...]

    def __post_init__(self):
        if self.headings < 1:
            raise ValueError("need at least one heading")
        if len(self.speed_values) < 1:
            raise ValueError("need at least one speed")
        if any(v < 0 for v in self.speed_values):
            raise ValueError("speeds must be non-negative")

    @classmethod
    def uniform(cls, headings: int, speeds: int, v_ref: float, single_speed: float | None = None):
        """``speeds`` values evenly spread over ``[0, v_ref]``.

        A single speed level has no spread; its value must be given.
        """
        if speeds == 1:
            if single_speed is None:
                raise ValueError("one speed level needs an explicit traversal speed")
            if not 0 <= single_speed <= v_ref + 1e-12:
                raise ValueError(f"speed {single_speed} outside [0, {v_ref}]")
            return cls(headings, (float(single_speed),))
        if speeds < 1:
            raise ValueError("need at least one speed")
        return cls(headings, tuple(i * v_ref / (speeds - 1) for i in range(speeds)))

    @property
    def speeds(self) -> int:
        return len(self.speed_values)

    @property
    def states_per_location(self) -> int:
        return self.headings * self.speeds

    def angle(self, k: int) -> float:
        return 2.0 * math.pi * (k + 1) / self.headings

    def unit(self, k: int) -> tuple[float, float]:
        h = self.angle(k)
        c, s = math.cos(h), math.sin(h)
        return (0.0 if abs(c) < _TRIG_SNAP else c, 0.0 if abs(s) < _TRIG_SNAP else s)

    def velocity(self, k: int, g: int) -> tuple[float, float]:
        c, s = self.unit(k)
        v = self.speed_values[g]
        return v * c, v * s


@dataclass(frozen=True, order=True)
class PoseState:
    location: int
    heading: int
    speed: int


class AxisLimitPolicy(enum.Enum):
    PER_AXIS_SCALED = "scaled"
    PER_AXIS_BOX = "box"

    def axis_limits(self, v_max: float, a_max: float) -> KinematicLimits:
        f = 1.0 / math.sqrt(2.0) if self is AxisLimitPolicy.PER_AXIS_SCALED else 1.0
        return KinematicLimits(a_max * f, -v_max * f, v_max * f)


class CostMatrix:
    """Dense flight times indexed ``[i, k, g, j, m, w]``.

    ``flat`` is the same data as an ``(S, S)`` view with state index
    ``(i * H + k) * V + g``.
    """

    def __init__(self, values: np.ndarray):
        if values.ndim != 6 or values.shape[:3] != values.shape[3:]:
            raise ValueError(f"bad cost tensor shape {values.shape}")
        self.values = values
        self.values.setflags(write=False)
        n, h, v = values.shape[:3]
        self.flat = values.reshape(n * h * v, n * h * v)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def n_locations(self) -> int:
        return self.values.shape[0]

    @property
    def states_per_location(self) -> int:
        return self.values.shape[1] * self.values.shape[2]

    def index(self, s: PoseState) -> int:
        _, h, v = self.values.shape[:3]
        return (s.location * h + s.heading) * v + s.speed

    def state(self, idx: int) -> PoseState:
        _, h, v = self.values.shape[:3]
        loc, rest = divmod(idx, h * v)
        k, g = divmod(rest, v)
        return PoseState(loc, k, g)

    def __call__(self, a: PoseState, b: PoseState) -> float:
        return float(self.values[a.location, a.heading, a.speed, b.location, b.heading, b.speed])

    def to_bytes(self) -> bytes:
        header = struct.pack("<6I", *self.values.shape)
        return header + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CostMatrix":
        shape = struct.unpack_from("<6I", blob)
        data = np.frombuffer(blob, dtype="<f8", offset=24).astype(float)
        return cls(data.reshape(shape))

    def to_json(self) -> str:
        return json.dumps({"shape": list(self.values.shape), "data": self.values.ravel().tolist()})

    @classmethod
    def from_json(cls, text: str) -> "CostMatrix":
        obj = json.loads(text)
        return cls(np.asarray(obj["data"], dtype=float).reshape(obj["shape"]))


def state_to_axis_boundaries(src: PoseState, dst: PoseState, locations: Sequence[Location],
                             disc: Discretization) -> tuple[AxisBoundary, AxisBoundary]:
    a, b = locations[src.location], locations[dst.location]
    vsx, vsy = disc.velocity(src.heading, src.speed)
    vex, vey = disc.velocity(dst.heading, dst.speed)
    return AxisBoundary(a.x, vsx, b.x, vex), AxisBoundary(a.y, vsy, b.y, vey)


def leg_cost(src: PoseState, dst: PoseState, locations: Sequence[Location], disc: Discretization,
             limits: Sequence[KinematicLimits]) -> float:
    """Optimal synchronized flight time of one leg; zero for identical states."""
    if src == dst:
        return 0.0
    axes = state_to_axis_boundaries(src, dst, locations, disc)
    return optimal_sync_time(axes, limits).duration


def tour_trajectory(tour: Sequence[PoseState], locations: Sequence[Location], disc: Discretization,
                    limits: Sequence[KinematicLimits], dt: float = 0.02) -> np.ndarray:
    """Samples ``t, x, y, vx, vy, ax, ay`` of a whole tour, legs back to back.

    Each leg is sampled on its own grid from its start time; the junction
    sample is kept once.
    """
    pieces = []
    t0 = 0.0
    for src, dst in zip(tour, tour[1:]):
        if src == dst:
            continue
        axes = state_to_axis_boundaries(src, dst, locations, disc)
        leg = sample_trajectory(optimal_sync_time(axes, limits), axes, dt)
        leg[:, 0] += t0
        pieces.append(leg if not pieces else leg[1:])
        t0 = leg[-1, 0]
    if not pieces:
        loc = locations[tour[0].location]
        vx, vy = disc.velocity(tour[0].heading, tour[0].speed)
        return np.array([[0.0, loc.x, loc.y, vx, vy, 0.0, 0.0]])
    return np.vstack(pieces)


def _fill_rows(args) -> np.ndarray:
    rows, xs, ys, disc, limits = args
    vel = np.array([disc.velocity(k, g) for k in range(disc.headings) for g in range(disc.speeds)])
    ux, sx = np.unique(vel[:, 0], return_inverse=True)
    uy, sy = np.unique(vel[:, 1], return_inverse=True)
    lim = [np.array([lm.a_max, lm.v_min, lm.v_max]) for lm in limits]
    return _core.fill_block(np.asarray(rows, dtype=np.int64), xs, ys, ux, uy,
                            sx.astype(np.int64), sy.astype(np.int64), lim[0], lim[1])


def build_cost_matrix(locations: Sequence[Location], disc: Discretization, policy: AxisLimitPolicy,
                      v_max: float, a_max: float, workers: int = 1) -> CostMatrix:
    """Fill every leg of the state graph.

    For each ordered location pair the feasible duration sets of every
    (start velocity, end velocity) combination are computed once per axis;
    a leg's cost is then the least duration common to both axes.
    ``workers > 1`` splits source locations over processes.
    """
    n = len(locations)
    if n < 2:
        raise ValueError("need at least two locations")
    limits = (policy.axis_limits(v_max, a_max),) * 2
    for k in range(disc.headings):
        for g, v in enumerate(disc.speed_values):
            for comp in disc.velocity(k, g):
                if not limits[0].v_min - 1e-9 <= comp <= limits[0].v_max + 1e-9:
                    raise ValueError(f"speed {v} at heading {k} exceeds per-axis bound {limits[0].v_max}")
    xs = np.array([loc.x for loc in locations], dtype=float)
    ys = np.array([loc.y for loc in locations], dtype=float)
    H, V = disc.headings, disc.speeds
    if workers <= 1:
        flat = _fill_rows((list(range(n)), xs, ys, disc, limits))
    else:
        chunks = [list(range(n))[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_fill_rows, [(c, xs, ys, disc, limits) for c in chunks]))
        flat = np.empty((n, H * V, n, H * V))
        for c, part in zip(chunks, parts):
            flat[c] = part
    values = flat.reshape(n, H, V, n, H, V)
    bad = np.argwhere(np.isnan(values))
    if bad.size:
        raise NoCommonDuration(f"no common duration for leg {tuple(int(i) for i in bad[0])}")
    return CostMatrix(values)
