"""Compiled scalar kernels behind :mod:`kopkit.kinematics`.

Axis problems are passed as plain floats ``(D, vs, ve, a_max, v_min, v_max)``
with ``D`` the displacement.  Pattern codes follow the fixed evaluation order:
0/1 classical(+a_max) branch +/-, 2/3 classical(-a_max) branch +/-,
4 sync(+a_max), 5 sync(-a_max); -1 means infeasible.
"""
import math

import numpy as np
from numba import njit

EPS_T = 1e-9
EPS_V = 1e-9
DEDUP_TOL = 1e-9
ROOT_CHECK_TOL = 1e-7
MAX_CANDIDATES = 48
MAX_INTERVALS = 24
DISC_REL_TOL = 1e-12


@njit(cache=True)
def discriminant(D, vs, ve, a, T):
    """Classical-pattern discriminant; round-off just below zero (relative to
    the size of its terms) is read as a double root."""
    dv = ve - vs
    t0 = a * a * T * T
    t1 = 2.0 * (ve + vs) * a * T
    t2 = 4.0 * a * D
    t3 = dv * dv
    disc = t0 + t1 - t2 - t3
    if disc < 0.0 and disc >= -DISC_REL_TOL * (abs(t0) + abs(t1) + abs(t2) + t3):
        return 0.0
    return disc


@njit(cache=True)
def feasible_code(D, vs, ve, a_max, v_min, v_max, T):
    if T < 0.0:
        return -1
    dv = ve - vs
    lo_v = v_min - EPS_V
    hi_v = v_max + EPS_V
    for s in range(2):
        a = a_max if s == 0 else -a_max
        disc = discriminant(D, vs, ve, a, T)
        if disc >= 0.0:
            root = math.sqrt(disc)
            for b in range(2):
                sign = 1.0 if b == 0 else -1.0
                t1 = (a * T + dv + sign * root) / (2.0 * a)
                t2 = -sign * root / a
                t3 = (a * T - dv + sign * root) / (2.0 * a)
                vc = vs + a * t1
                if t1 >= -EPS_T and t2 >= -EPS_T and t3 >= -EPS_T and lo_v <= vc <= hi_v:
                    return 2 * s + b
                if root == 0.0:
                    break
    for s in range(2):
        a = a_max if s == 0 else -a_max
        stretch = a * T - dv
        if stretch == 0.0:
            continue
        vc = (2.0 * a * D - ve * ve + vs * vs) / (2.0 * stretch)
        if (stretch / a >= -EPS_T and (vc - vs) / a >= -EPS_T and (ve - vc) / a >= -EPS_T
                and lo_v <= vc <= hi_v):
            return 4 + s
    return -1


@njit(cache=True)
def _real_roots(c2, c1, c0, out):
    scale = max(abs(c2), abs(c1), abs(c0), 1.0)
    if abs(c2) <= 1e-14 * scale:
        if abs(c1) <= 1e-14 * scale:
            return 0
        out[0] = -c0 / c1
        return 1
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        if disc > -1e-12 * max(c1 * c1, 1.0):
            disc = 0.0
        else:
            return 0
    r = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(r, c1))
    out[0] = q / c2
    out[1] = c0 / q if q != 0.0 else -c1 / (2.0 * c2)
    return 2


@njit(cache=True)
def _classical_residual_ok(D, vs, ve, a, T, kind, vb):
    # kind 0: t1, 1: t3, 2: v_c - vb
    dv = ve - vs
    disc = discriminant(D, vs, ve, a, T)
    if disc < -ROOT_CHECK_TOL:
        return False
    root = math.sqrt(disc) if disc > 0.0 else 0.0
    scale = max(1.0, abs(T), abs(vs), abs(ve), abs(dv) / abs(a))
    for b in range(2):
        sign = 1.0 if b == 0 else -1.0
        t1 = (a * T + dv + sign * root) / (2.0 * a)
        if kind == 0:
            res = t1
        elif kind == 1:
            res = (a * T - dv + sign * root) / (2.0 * a)
        else:
            res = vs + a * t1 - vb
        if abs(res) <= ROOT_CHECK_TOL * scale:
            return True
    return False


@njit(cache=True)
def candidates(D, vs, ve, a_max, v_min, v_max):
    """Sorted distinct non-negative durations where any condition is tight."""
    buf = np.empty(MAX_CANDIDATES)
    roots = np.empty(2)
    n = 0
    buf[n] = 0.0
    n += 1
    dv = ve - vs
    for s in range(2):
        a = a_max if s == 0 else -a_max
        c2 = a * a
        c1 = 2.0 * (ve + vs) * a
        c0 = -4.0 * a * D - dv * dv
        k = _real_roots(c2, c1, c0, roots)
        for r in range(k):
            buf[n] = roots[r]
            n += 1
        # squared forms  A(T) = (alpha T + beta)^2
        for cond in range(4):
            if cond == 0:
                alpha, beta, kind, vb = a, dv, 0, 0.0
            elif cond == 1:
                alpha, beta, kind, vb = a, -dv, 1, 0.0
            elif cond == 2:
                alpha, beta, kind, vb = -a, 2.0 * (v_min - vs) - dv, 2, v_min
            else:
                alpha, beta, kind, vb = -a, 2.0 * (v_max - vs) - dv, 2, v_max
            k = _real_roots(c2 - alpha * alpha, c1 - 2.0 * alpha * beta, c0 - beta * beta, roots)
            for r in range(k):
                T = roots[r]
                if not (math.isfinite(T) and T >= -EPS_T):
                    continue
                T = max(T, 0.0)
                if _classical_residual_ok(D, vs, ve, a, T, kind, vb):
                    buf[n] = T
                    n += 1
        K = 2.0 * a * D - ve * ve + vs * vs
        buf[n] = dv / a
        n += 1
        for c in range(4):
            if c == 0:
                target = vs
            elif c == 1:
                target = ve
            elif c == 2:
                target = v_min
            else:
                target = v_max
            if target != 0.0:
                buf[n] = (K / (2.0 * target) + dv) / a
                n += 1
    vals = np.sort(buf[:n])
    out = np.empty(n)
    m = 0
    for i in range(n):
        v = vals[i]
        if not (math.isfinite(v) and v >= -EPS_T):
            continue
        v = max(v, 0.0)
        if m == 0 or v - out[m - 1] > DEDUP_TOL:
            out[m] = v
            m += 1
    return out[:m]


@njit(cache=True)
def intervals(D, vs, ve, a_max, v_min, v_max):
    """Feasible durations as an ``(k, 2)`` array of closed intervals; the
    last upper end is ``inf``.  Returns an empty array on breakdown."""
    out = np.empty((MAX_INTERVALS, 2))
    if D == 0.0 and vs == 0.0 and ve == 0.0:
        out[0, 0] = 0.0
        out[0, 1] = np.inf
        return out[:1]
    cands = candidates(D, vs, ve, a_max, v_min, v_max)
    m = 0
    nc = cands.shape[0]
    for i in range(nc):
        T = cands[i]
        hi = cands[i + 1] if i + 1 < nc else np.inf
        mid = 0.5 * (T + hi) if i + 1 < nc else 2.0 * T + 1.0
        for probe in range(2):
            if probe == 0:
                ok = feasible_code(D, vs, ve, a_max, v_min, v_max, T) >= 0
                lo_i, hi_i = T, T
            else:
                ok = feasible_code(D, vs, ve, a_max, v_min, v_max, mid) >= 0
                lo_i, hi_i = T, hi
            if not ok:
                continue
            if m > 0 and lo_i <= out[m - 1, 1] + DEDUP_TOL:
                out[m - 1, 1] = max(out[m - 1, 1], hi_i)
            else:
                if m == MAX_INTERVALS:
                    return out[:0]
                out[m, 0] = lo_i
                out[m, 1] = hi_i
                m += 1
    if m == 0 or out[m - 1, 1] != np.inf:
        return out[:0]
    return out[:m]


@njit(cache=True)
def earliest_common2(ix, iy):
    """Least duration inside both interval arrays; ``nan`` if none."""
    a = 0
    b = 0
    while a < ix.shape[0] and b < iy.shape[0]:
        lo = max(ix[a, 0], iy[b, 0])
        hi = min(ix[a, 1], iy[b, 1])
        if lo <= hi + DEDUP_TOL:
            return lo
        if ix[a, 1] < iy[b, 1]:
            a += 1
        else:
            b += 1
    return np.nan


@njit(cache=True)
def fill_block(rows, xs, ys, ux, uy, sx, sy, ax, ay):
    """Leg costs from every state of each location in ``rows`` to all states.

    ``ux``/``uy`` hold the distinct axis velocities, ``sx``/``sy`` map a
    per-location state to its entry there, ``ax``/``ay`` are the per-axis
    limits ``(a_max, v_min, v_max)``.  Entries with no common duration are
    ``nan``.
    """
    n = xs.shape[0]
    S = sx.shape[0]
    nux = ux.shape[0]
    nuy = uy.shape[0]
    out = np.empty((rows.shape[0], S, n, S))
    ivx = np.empty((nux, nux, MAX_INTERVALS, 2))
    cntx = np.empty((nux, nux), dtype=np.int64)
    ivy = np.empty((nuy, nuy, MAX_INTERVALS, 2))
    cnty = np.empty((nuy, nuy), dtype=np.int64)
    for r in range(rows.shape[0]):
        i = rows[r]
        for j in range(n):
            dx = xs[j] - xs[i]
            dy = ys[j] - ys[i]
            for p in range(nux):
                for q in range(nux):
                    iv = intervals(dx, ux[p], ux[q], ax[0], ax[1], ax[2])
                    cntx[p, q] = iv.shape[0]
                    ivx[p, q, :iv.shape[0]] = iv
            for p in range(nuy):
                for q in range(nuy):
                    iv = intervals(dy, uy[p], uy[q], ay[0], ay[1], ay[2])
                    cnty[p, q] = iv.shape[0]
                    ivy[p, q, :iv.shape[0]] = iv
            for s in range(S):
                for t in range(S):
                    if i == j and s == t:
                        out[r, s, j, t] = 0.0
                        continue
                    px, qx = sx[s], sx[t]
                    py, qy = sy[s], sy[t]
                    out[r, s, j, t] = earliest_common2(ivx[px, qx, :cntx[px, qx]],
                                                       ivy[py, qy, :cnty[py, qy]])
    return out
