"""Compiled event loop.

Tables arrive packed by :attr:`noslip.geometry.Table.packed`; states are
float arrays ``[x, y, z, vx, vy, vz, t, shift_y, shift_z]`` where ``x`` is
the orientation coordinate, ``(y, z)`` the lab position and ``shift`` the
accumulated periodic translation (unwrapped position = pos + shift).
"""

from __future__ import annotations

from math import atan2, ceil, floor, hypot, inf, pi, sqrt

import numpy as np
from numba import njit

from .numerics import solve

# find_event codes
HIT = 0
NONE = 1
VERTEX = 2
FAIL = 3

# run statuses
COUNT = 0
TIME = 1
ESCAPED = 2
EXITED = 3
PINCHED = 4
NUMERICAL = 5
STATUS_NAMES = ("count", "time", "escaped", "exited", "pinched", "numerical")

NOSLIP = 0
SPECULAR = 1
PERIODIC = 2
EXIT = 3

GRAZE = 1e-10
VERTEX_TOL = 1e-9
MAX_WRAPS = 1_000_000
REC_COLS = 16
RING = 1000


@njit(cache=True, nogil=True)
def _segment_hit(y, z, vy, vz, ay, az, g, m, t_min, t_stop, tol_v):
    ax_, az_ = g[0], g[1]
    dy, dz = g[2], g[3]
    lo, hi = g[4], g[5]
    ny, nz = g[6], g[7]
    c = np.empty(3)
    c[0] = ny * (y - ax_) + nz * (z - az_)
    c[1] = ny * vy + nz * vz
    c[2] = 0.5 * (ny * ay + nz * az)
    out = np.empty(4)
    mult = np.zeros(4, dtype=np.int64)
    k = solve(c, out, mult)
    for i in range(k):
        t = out[i]
        if t <= t_min:
            continue
        if t > t_stop:
            break
        uy = vy + ay * t
        uz = vz + az * t
        if ny * uy + nz * uz >= -GRAZE * hypot(uy, uz):
            continue
        py = y + vy * t + 0.5 * ay * t * t
        pz = z + vz * t + 0.5 * az * t * t
        s = (py - ax_) * dy + (pz - az_) * dz
        corners = m[3]
        if s < lo - tol_v or s > hi + tol_v:
            continue
        if (corners & 1) and abs(s - lo) <= tol_v:
            return t, True
        if (corners & 2) and abs(s - hi) <= tol_v:
            return t, True
        if s < lo or s > hi:
            continue
        return t, False
    return inf, False


@njit(cache=True, nogil=True)
def _circle_hit(y, z, vy, vz, ay, az, cy, cz, r, orient, a0, span, full, t_min, t_stop, tol_v):
    wy = y - cy
    wz = z - cz
    c = np.empty(5)
    c[0] = wy * wy + wz * wz - r * r
    c[1] = 2.0 * (wy * vy + wz * vz)
    c[2] = vy * vy + vz * vz + wy * ay + wz * az
    c[3] = vy * ay + vz * az
    c[4] = 0.25 * (ay * ay + az * az)
    out = np.empty(4)
    mult = np.zeros(4, dtype=np.int64)
    k = solve(c, out, mult)
    for i in range(k):
        t = out[i]
        if t <= t_min:
            continue
        if t > t_stop:
            break
        py = wy + vy * t + 0.5 * ay * t * t
        pz = wz + vz * t + 0.5 * az * t * t
        uy = vy + ay * t
        uz = vz + az * t
        if orient * (py * uy + pz * uz) / r >= -GRAZE * hypot(uy, uz):
            continue
        if not full:
            u = (atan2(pz, py) - a0) % (2.0 * pi)
            ends = tol_v / r
            if u > span + ends:
                if 2.0 * pi - u > ends:
                    continue
                return t, True
            if u < ends or abs(u - span) <= ends:
                return t, True
        return t, False
    return inf, False


@njit(cache=True, nogil=True)
def _window_box(y, z, vy, vz, ay, az, t0, t1):
    lo_y = hi_y = y + vy * t0 + 0.5 * ay * t0 * t0
    lo_z = hi_z = z + vz * t0 + 0.5 * az * t0 * t0
    py = y + vy * t1 + 0.5 * ay * t1 * t1
    pz = z + vz * t1 + 0.5 * az * t1 * t1
    lo_y = min(lo_y, py)
    hi_y = max(hi_y, py)
    lo_z = min(lo_z, pz)
    hi_z = max(hi_z, pz)
    if ay != 0.0:
        ts = -vy / ay
        if t0 < ts < t1:
            p = y + vy * ts + 0.5 * ay * ts * ts
            lo_y = min(lo_y, p)
            hi_y = max(hi_y, p)
    if az != 0.0:
        ts = -vz / az
        if t0 < ts < t1:
            p = z + vz * ts + 0.5 * az * ts * ts
            lo_z = min(lo_z, p)
            hi_z = max(hi_z, p)
    return lo_y, hi_y, lo_z, hi_z


@njit(cache=True, nogil=True)
def find_event(y, z, vy, vz, ay, az, geo, meta, lat, t_min, t_stop, scale):
    """Earliest boundary crossing in (t_min, t_stop].

    Returns (code, t, index, k, j); index is the component row, or -1 for a
    lattice scatterer in row k, column j.
    """
    best = inf
    best_i = -2
    best_vertex = False
    tol_v = VERTEX_TOL * scale
    for i in range(geo.shape[0]):
        g = geo[i]
        m = meta[i]
        if m[0] == 0:
            t, vert = _segment_hit(y, z, vy, vz, ay, az, g, m, t_min, min(best, t_stop), tol_v)
        else:
            t, vert = _circle_hit(y, z, vy, vz, ay, az, g[0], g[1], g[2], g[3], g[4], g[5],
                                  g[6] > 0.5, t_min, min(best, t_stop), tol_v)
        if t < best:
            best = t
            best_i = i
            best_vertex = vert
    bk = 0
    bj = 0
    if lat[0] > 0.5:
        a = lat[1]
        r = lat[2]
        oy = lat[3]
        oz = lat[4]
        k_min = lat[5]
        k_max = lat[6]
        h = a * sqrt(3.0) / 2.0
        g_acc = hypot(ay, az)
        t_lo = 0.0
        limit = min(best, t_stop)
        while t_lo < limit:
            uy = vy + ay * t_lo
            uz = vz + az * t_lo
            sp = hypot(uy, uz)
            if sp == 0.0 and g_acc == 0.0:
                break
            tau = 2.0 * a / (sp + sqrt(sp * sp + 2.0 * g_acc * a))
            t_hi = min(t_lo + tau, limit)
            lo_y, hi_y, lo_z, hi_z = _window_box(y, z, vy, vz, ay, az, t_lo, t_hi)
            kk0 = max(k_min, ceil((oz - hi_z - r) / h))
            kk1 = min(k_max, floor((oz - lo_z + r) / h))
            kk = kk0
            while kk <= kk1:
                ki = int(kk)
                off = oy + 0.5 * (ki % 2) * a
                j0 = int(ceil((lo_y - r - off) / a))
                j1 = int(floor((hi_y + r - off) / a))
                cz = oz - ki * h
                for jj in range(j0, j1 + 1):
                    cy = off + jj * a
                    t, vert = _circle_hit(y, z, vy, vz, ay, az, cy, cz, r, 1.0, 0.0, 2.0 * pi,
                                          True, t_min, limit, tol_v)
                    if t < best:
                        best = t
                        best_i = -1
                        best_vertex = False
                        bk = ki
                        bj = jj
                        limit = min(best, t_stop)
                kk += 1
            if best <= t_hi:
                break
            t_lo = t_hi
    if best_i == -2:
        return NONE, inf, -2, 0, 0
    if best_vertex:
        return VERTEX, best, best_i, bk, bj
    return HIT, best, best_i, bk, bj


@njit(cache=True, nogil=True)
def _advance(s, ay, az, dt):
    s[0] += s[3] * dt
    s[1] += s[4] * dt + 0.5 * ay * dt * dt
    s[2] += s[5] * dt + 0.5 * az * dt * dt
    s[4] += ay * dt
    s[5] += az * dt
    s[6] += dt


@njit(cache=True, nogil=True)
def _normal(s, idx, geo, meta, lat, bk, bj):
    if idx == -1:
        a = lat[1]
        h = a * sqrt(3.0) / 2.0
        cy = lat[3] + (bj + 0.5 * (bk % 2)) * a
        cz = lat[4] - bk * h
        wy = s[1] - cy
        wz = s[2] - cz
        n = hypot(wy, wz)
        return wy / n, wz / n
    g = geo[idx]
    if meta[idx, 0] == 0:
        return g[6], g[7]
    wy = s[1] - g[0]
    wz = s[2] - g[1]
    n = hypot(wy, wz) * g[3]
    return wy / n, wz / n


@njit(cache=True, nogil=True)
def reflect(vx, vy, vz, ny, nz, rule, cb, sb):
    """Lab velocity after a collision at a wall with inward normal (ny, nz)."""
    ty = nz
    tz = -ny
    tan = vy * ty + vz * tz
    nrm = vy * ny + vz * nz
    if rule == NOSLIP:
        rot2 = -cb * vx - sb * tan
        tan2 = -sb * vx + cb * tan
    else:
        rot2 = vx
        tan2 = tan
    nrm2 = -nrm
    return rot2, tan2 * ty + nrm2 * ny, tan2 * tz + nrm2 * nz


@njit(cache=True, nogil=True)
def run(s, ay, az, geo, meta, lat, cb, sb, rule_override, n_max, t_max, flight_cap, scale,
        rec, record, ring):
    """Advance state ``s`` in place through up to ``n_max`` collisions.

    Returns (status, n_collisions, last_k, last_j, ring_fill).  When
    ``record`` is set, row i of ``rec`` receives collision i; ``ring`` keeps
    the unwrapped positions of the last ``RING`` collisions.
    """
    n = 0
    g_acc = hypot(ay, az)
    t_last = s[6]
    prev_short = False
    prev_id = -3
    wraps = 0
    last_k = 0
    last_j = 0
    ring_fill = 0
    if n_max <= 0:
        return COUNT, 0, last_k, last_j, ring_fill
    while True:
        for q in range(9):
            if not np.isfinite(s[q]):
                return NUMERICAL, n, last_k, last_j, ring_fill
        speed = hypot(s[4], s[5])
        sscale = max(speed, sqrt(g_acc * scale), 1e-300)
        t_min = 1e-9 * scale / sscale
        remaining = t_max - s[6]
        cap = min(remaining, flight_cap - (s[6] - t_last))
        code, dt, idx, bk, bj = find_event(s[1], s[2], s[4], s[5], ay, az, geo, meta, lat,
                                          t_min, cap, scale)
        if code == NONE:
            if remaining <= cap and remaining < inf:
                _advance(s, ay, az, remaining)
                return TIME, n, last_k, last_j, ring_fill
            return ESCAPED, n, last_k, last_j, ring_fill
        vx0 = s[3]
        _advance(s, ay, az, dt)
        if code == VERTEX:
            return PINCHED, n, last_k, last_j, ring_fill
        if code == FAIL:
            return NUMERICAL, n, last_k, last_j, ring_fill
        if idx == -1:
            rule = int(lat[7])
            comp_id = int(lat[8])
        else:
            rule = meta[idx, 1]
            comp_id = meta[idx, 2]
        if rule == PERIODIC:
            s[1] += geo[idx, 8]
            s[2] += geo[idx, 9]
            s[7] -= geo[idx, 8]
            s[8] -= geo[idx, 9]
            wraps += 1
            if wraps > MAX_WRAPS:
                return ESCAPED, n, last_k, last_j, ring_fill
            continue
        if rule == EXIT:
            return EXITED, n, last_k, last_j, ring_fill
        wraps = 0
        if rule_override >= 0:
            rule = rule_override
        ny, nz = _normal(s, idx, geo, meta, lat, bk, bj)
        vy_in = s[4]
        vz_in = s[5]
        rot, vy2, vz2 = reflect(vx0, vy_in, vz_in, ny, nz, rule, cb, sb)
        s[3] = rot
        s[4] = vy2
        s[5] = vz2
        flight = s[6] - t_last
        if record:
            row = rec[n]
            row[0] = s[6]
            row[1] = flight
            row[2] = s[1]
            row[3] = s[2]
            row[4] = comp_id
            row[5] = bk
            row[6] = bj
            row[7] = vx0
            row[8] = vy_in
            row[9] = vz_in
            row[10] = rot
            row[11] = vy2
            row[12] = vz2
            row[13] = ny
            row[14] = nz
            row[15] = s[0]
        r = ring_fill % RING
        ring[r, 0] = s[1] + s[7]
        ring[r, 1] = s[2] + s[8]
        ring_fill += 1
        if idx == -1:
            last_k = bk
            last_j = bj
        t_last = s[6]
        n += 1
        short = flight < 10.0 * t_min
        ident = comp_id * 1000003 + bk * 7919 + bj if idx == -1 else comp_id
        if short and prev_short and ident == prev_id:
            return PINCHED, n, last_k, last_j, ring_fill
        prev_short = short
        prev_id = ident
        if n >= n_max:
            return COUNT, n, last_k, last_j, ring_fill
