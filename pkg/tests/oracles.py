"""Independent reference implementations used only by the tests.

None of these share code with the package's solvers: the root oracle works
in exact rational arithmetic, the event oracle samples the flight arc densely
and bisects the first crossing of a vectorised inside test.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

# ------------------------------------------------------------ Sturm sequences


def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _deriv(p):
    return [i * c for i, c in enumerate(p)][1:]


def _rem(a, b):
    a = list(a)
    while len(a) >= len(b) and a:
        q = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[i + shift] -= q * c
        a = _trim(a)
    return a


def _eval(p, x):
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _gcd(a, b):
    while b:
        a, b = b, _rem(a, b)
    return [c / a[-1] for c in a]


def _div(a, b):
    a = list(a)
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        c = a[-1] / b[-1]
        shift = len(a) - len(b)
        q[shift] = c
        for i, bc in enumerate(b):
            a[i + shift] -= c * bc
        a = _trim(a)
    return q


def _sturm(p):
    seq = [p, _deriv(p)]
    while True:
        r = _rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return seq


def _variations(seq, x):
    signs = [v for v in (_eval(p, x) for p in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def sturm_roots(coeffs, tol=1e-13):
    """Distinct real roots with multiplicities, by exact Sturm isolation + bisection."""
    p = _trim([Fraction(c) for c in coeffs])
    if len(p) < 2:
        raise ValueError("constant polynomial")
    g = _gcd(p, _deriv(p))
    sq = _div(p, g) if len(g) > 1 else p  # square-free part
    seq = _sturm(sq)
    bound = 1 + max(abs(c / sq[-1]) for c in sq[:-1])
    lo, hi = -bound, bound
    out = []

    def isolate(a, b):
        n = _variations(seq, a) - _variations(seq, b)
        if n == 0:
            return
        if n == 1:
            fa = _eval(sq, a)
            for _ in range(200):
                if b - a <= tol * max(1, abs(a)):
                    break
                m = (a + b) / 2
                # keep denominators small
                m = Fraction(m).limit_denominator(10 ** 30) if m.denominator > 10 ** 40 else m
                fm = _eval(sq, m)
                if fm == 0:
                    a = b = m
                    break
                if (fm > 0) == (fa > 0):
                    a, fa = m, fm
                else:
                    b = m
            out.append((a + b) / 2)
            return
        m = (a + b) / 2
        if _eval(sq, m) == 0:
            m += (b - a) / 1000
        isolate(a, m)
        isolate(m, b)

    isolate(Fraction(lo), Fraction(hi))
    res = []
    for r in sorted(out):
        mult, q = 0, p
        # multiplicity: how many derivatives vanish near r (numerically, in floats)
        x = float(r)
        while len(q) > 1 and abs(float(_eval(q, Fraction(x)))) <= 1e-9 * max(
                1.0, max(abs(float(c)) for c in q)) * max(1.0, abs(x)) ** (len(q) - 1):
            mult += 1
            q = _deriv(q)
        res.append((float(r), max(mult, 1)))
    return res


# ------------------------------------------------------------ collision matrix


def collision_matrix_trig(gamma):
    b = 2.0 * math.atan(gamma)
    return np.array([[-math.cos(b), -math.sin(b), 0.0],
                     [-math.sin(b), math.cos(b), 0.0],
                     [0.0, 0.0, -1.0]])


# ------------------------------------------------------------ event oracle


def inside_mask(table, pts):
    """Vectorised strict-interior test, written from the component definitions."""
    y, z = pts[:, 0], pts[:, 1]
    ok = np.ones(len(pts), dtype=bool)
    for c in table.components:
        if c.rule == "periodic":
            continue
        ax, az_ = c.anchor
        if c.kind == "segment":
            dx, dz = c.direction
            nx, nz = -dz * c.orientation, dx * c.orientation
            # every straight-walled table in the zoo is convex, so each wall
            # bounds a half-plane
            ok &= (y - ax) * nx + (z - az_) * nz > 0
        else:
            r = np.hypot(y - ax, z - az_)
            ok &= c.orientation * (r - c.radius) > 0
    lat = table.lattice
    if lat is not None:
        h = lat.spacing * math.sqrt(3.0) / 2.0
        k0 = np.round(-(z - lat.origin[1]) / h).astype(np.int64)
        for dk in (-1, 0, 1):
            k = k0 + dk
            valid = (k >= lat.rows[0]) & (k <= lat.rows[1])
            off = np.where(k % 2 == 0, 0.0, lat.spacing / 2.0)
            j0 = np.round((y - lat.origin[0] - off) / lat.spacing).astype(np.int64)
            for dj in (-1, 0, 1):
                cy = lat.origin[0] + off + (j0 + dj) * lat.spacing
                cz = lat.origin[1] - k * h
                ok &= ~(valid & (np.hypot(y - cy, z - cz) <= lat.radius))
    return ok


def dense_first_hit(table, pos, vel, acc, horizon, step):
    """First time the sampled arc leaves the interior, refined by bisection.

    Returns None if the arc stays inside up to ``horizon``.
    """
    def arc(t):
        t = np.atleast_1d(t)
        return np.column_stack([pos[0] + vel[0] * t + 0.5 * acc[0] * t * t,
                                pos[1] + vel[1] * t + 0.5 * acc[1] * t * t])

    n = int(math.ceil(horizon / step))
    chunk = 200_000
    t0 = 0.0
    for start in range(0, n, chunk):
        ts = (np.arange(start, min(start + chunk, n)) + 1) * step
        m = inside_mask(table, arc(ts))
        if not m.all():
            i = int(np.argmin(m))
            a = ts[i - 1] if i > 0 else t0
            b = ts[i]
            for _ in range(80):
                mid = 0.5 * (a + b)
                if inside_mask(table, arc(mid))[0]:
                    a = mid
                else:
                    b = mid
            return 0.5 * (a + b), tuple(arc(0.5 * (a + b))[0])
    return None


# ------------------------------------------------------------ event harness


def _zoo():
    from noslip.geometry import (
        WedgeSpec,
        make_channel,
        make_galton_board,
        make_half_plane,
        make_regular_polygon,
        make_sinai_cell,
        make_two_disk_table,
        make_wedge,
    )

    return [
        make_half_plane(),
        make_wedge(WedgeSpec(math.pi / 7)),
        make_wedge(WedgeSpec(math.pi / 3, "opening-down")),
        make_regular_polygon(3),
        make_regular_polygon(4),
        make_sinai_cell("square", 2.0, 0.5, periodic=False),
        make_sinai_cell("hexagon", 1.0, 0.3, periodic=False),
        make_galton_board(1.0, 0.25),
        make_two_disk_table(0.5),
        make_channel(1.0, "vertical"),
        make_channel(1.0, "horizontal"),
    ]


ZOO = _zoo()


def random_interior(table, rng):
    while True:
        p = rng.uniform(-2, 2, 2)
        if table.name == "wedge" and "opening-down" in str(table.source):
            p[1] = -abs(p[1])
        if table.contains(p) and inside_mask(table, p[None, :])[0]:
            return p


def hit_component(table, point):
    best = min(table.components, key=lambda c: c.distance(point))
    d = best.distance(point)
    if table.lattice is not None:
        lat = table.lattice
        (c, _), *_ = lat.nearest(point)
        if abs(math.dist(c, point) - lat.radius) < d:
            return lat.component_id
    return best.component_id


def event_oracle_agreement(n, seed, horizon=6.0, tol=1e-8):
    """Compare next_collision with dense_first_hit on random zoo launches.

    Returns (number of instances with a hit inside the horizon, list of
    disagreements).  Instances where both report no hit agree trivially.
    """
    from noslip.dynamics import NO_FORCE, ForceField, NoEvent, ParticleState, VertexHit
    from noslip.dynamics import next_collision

    rng = np.random.default_rng(seed)
    checked, failures = 0, []
    for i in range(n):
        table = ZOO[i % len(ZOO)]
        p = random_interior(table, rng)
        speed = rng.uniform(0.5, 2.0)
        ang = rng.uniform(0, 2 * math.pi)
        vel = (rng.normal(), speed * math.cos(ang), speed * math.sin(ang))
        g = float(rng.choice([0.0, 1.0]))
        force = ForceField(g, (0.0, -1.0)) if g else NO_FORCE
        state = ParticleState(pos=tuple(p), vel=vel)
        ev = next_collision(state, table, force)
        ref = dense_first_hit(table, p, (vel[1], vel[2]), force.acceleration, horizon,
                              1e-4 * table.scale / speed)
        if isinstance(ev, NoEvent) or (hasattr(ev, "t_flight") and ev.t_flight > horizon):
            if ref is not None:
                failures.append((i, table.name, "missed hit", ref))
            continue
        if ref is None:
            failures.append((i, table.name, "spurious hit", ev))
            continue
        t_ref, pt_ref = ref
        if abs(ev.t_flight - t_ref) > tol * max(1.0, t_ref):
            failures.append((i, table.name, "time", ev.t_flight, t_ref))
        elif not isinstance(ev, VertexHit) and ev.component_id != hit_component(table, pt_ref):
            failures.append((i, table.name, "component", ev.component_id))
        checked += 1
    return checked, failures
