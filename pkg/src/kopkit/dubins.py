"""Dubins shortest paths and constant-speed leg costs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .steering_cost import CostMatrix

TWO_PI = 2.0 * math.pi
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")


def mod2pi(theta: float) -> float:
    r = theta - TWO_PI * math.floor(theta / TWO_PI)
    return 0.0 if r >= TWO_PI else r


@dataclass(frozen=True)
class DubinsConfig:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", mod2pi(self.theta))


@dataclass(frozen=True)
class DubinsPath:
    kind: str
    segment_params: tuple[float, float, float]
    radius: float

    @property
    def total_length(self) -> float:
        return sum(self.segment_params)


def turning_radius(v_const: float, a_max: float) -> float:
    """Radius flown at ``v_const`` with lateral acceleration ``a_max``."""
    if not (v_const > 0 and a_max > 0):
        raise ValueError("v_const and a_max must be positive")
    return v_const ** 2 / a_max


# Each word returns normalized (t, p, q) or None; inputs are the start and end
# headings relative to the connecting line and the separation in radii.

def _lsl(a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p2 = 2 + d * d - 2 * math.cos(a - b) + 2 * d * (sa - sb)
    if p2 < 0:
        return None
    tmp = math.atan2(cb - ca, d + sa - sb)
    return mod2pi(tmp - a), math.sqrt(p2), mod2pi(b - tmp)


def _rsr(a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p2 = 2 + d * d - 2 * math.cos(a - b) + 2 * d * (sb - sa)
    if p2 < 0:
        return None
    tmp = math.atan2(ca - cb, d - sa + sb)
    return mod2pi(a - tmp), math.sqrt(p2), mod2pi(tmp - b)


def _lsr(a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p2 = -2 + d * d + 2 * math.cos(a - b) + 2 * d * (sa + sb)
    if p2 < 0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return mod2pi(tmp - a), p, mod2pi(tmp - b)


def _rsl(a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    p2 = -2 + d * d + 2 * math.cos(a - b) - 2 * d * (sa + sb)
    if p2 < 0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return mod2pi(a - tmp), p, mod2pi(b - tmp)


def _rlr(a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    tmp = (6.0 - d * d + 2 * math.cos(a - b) + 2 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1:
        return None
    p = mod2pi(TWO_PI - math.acos(tmp))
    t = mod2pi(a - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
    return t, p, mod2pi(a - b - t + p)


def _lrl(a, b, d):
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    tmp = (6.0 - d * d + 2 * math.cos(a - b) + 2 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1:
        return None
    p = mod2pi(TWO_PI - math.acos(tmp))
    t = mod2pi(-a + math.atan2(-ca + cb, d + sa - sb) + p / 2.0)
    return t, p, mod2pi(b - a - t + p)


_SOLVERS = {"LSL": _lsl, "RSR": _rsr, "LSR": _lsr, "RSL": _rsl, "RLR": _rlr, "LRL": _lrl}


def shortest_path(q0: DubinsConfig, q1: DubinsConfig, r: float) -> DubinsPath:
    """Shortest of the six Dubins words; ties go to the earlier word in
    ``WORDS``."""
    if not r > 0:
        raise ValueError("turning radius must be positive")
    dx, dy = q1.x - q0.x, q1.y - q0.y
    d = math.hypot(dx, dy) / r
    phi = math.atan2(dy, dx) if d > 0 else 0.0
    a, b = mod2pi(q0.theta - phi), mod2pi(q1.theta - phi)
    best = None
    for word in WORDS:
        res = _SOLVERS[word](a, b, d)
        if res is None:
            continue
        length = sum(res)
        if best is None or length < best[0] - 1e-12:
            best = (length, word, res)
    _, word, (t, p, q) = best
    return DubinsPath(word, (t * r, p * r, q * r), r)


def sample_path(q0: DubinsConfig, path: DubinsPath, step: float) -> list[tuple[float, float, float]]:
    """Poses along ``path`` every ``step`` metres, endpoint included."""
    poses = [(q0.x, q0.y, q0.theta)]
    x, y, th = q0.x, q0.y, q0.theta
    r = path.radius
    for letter, seg in zip(path.kind, path.segment_params):
        n = max(1, int(math.ceil(seg / step)))
        ds = seg / n
        for _ in range(n):
            if letter == "S":
                x += ds * math.cos(th)
                y += ds * math.sin(th)
            else:
                turn = ds / r if letter == "L" else -ds / r
                # exact arc of the circle on the turning side
                cx = x - r * math.sin(th) if letter == "L" else x + r * math.sin(th)
                cy = y + r * math.cos(th) if letter == "L" else y - r * math.cos(th)
                th2 = th + turn
                if letter == "L":
                    x, y = cx + r * math.sin(th2), cy - r * math.cos(th2)
                else:
                    x, y = cx - r * math.sin(th2), cy + r * math.cos(th2)
                th = th2
            poses.append((x, y, mod2pi(th)))
    return poses


def dop_leg_cost(q0: DubinsConfig, q1: DubinsConfig, v_const: float, a_max: float) -> float:
    """Flight time of the shortest Dubins path at constant speed."""
    if q0 == q1:
        return 0.0
    return shortest_path(q0, q1, turning_radius(v_const, a_max)).total_length / v_const


def dubins_cost_matrix(locations, headings: int, v_const: float, a_max: float):
    """Dubins flight times over ``headings`` equally spaced angles (one speed)."""
    n = len(locations)
    r = turning_radius(v_const, a_max)
    angles = [2.0 * math.pi * (k + 1) / headings for k in range(headings)]
    values = np.zeros((n, headings, 1, n, headings, 1))
    for i, li in enumerate(locations):
        for k, hk in enumerate(angles):
            q0 = DubinsConfig(li.x, li.y, hk)
            for j, lj in enumerate(locations):
                for m, hm in enumerate(angles):
                    if i == j and k == m:
                        continue
                    q1 = DubinsConfig(lj.x, lj.y, hm)
                    values[i, k, 0, j, m, 0] = shortest_path(q0, q1, r).total_length / v_const
    return CostMatrix(values)
