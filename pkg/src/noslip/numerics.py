"""Real roots of polynomials of degree <= 4.

Event detection in the simulator reduces to finding the first positive real
root of a quadratic (straight walls) or a quartic (circles under a constant
force).  The solvers here are closed-form (stable quadratic formula,
trigonometric/Cardano cubic, Ferrari quartic through its resolvent cubic)
followed by Newton polishing.  When the closed form is close to a degenerate
case (near-double roots, tiny resolvent) the roots are recomputed by
bracketing: real roots of p' split the line into monotone pieces of p, and
every piece with a sign change is bisected.

The ``njit`` kernels take coefficient arrays in ascending order and are shared
with the event loop; :func:`real_roots` and :func:`smallest_root_above` are the
Python-facing wrappers.
"""

from __future__ import annotations

from math import acos, cos, copysign, pi, sqrt
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

EPS = 2.220446049250313e-16
NEAR_DEGENERATE = 1e-6  # relative size below which a discriminant is "lost"
LEADING_CUTOFF = 1e-30


class RootFindingError(ArithmeticError):
    """Polished roots still leave a residual above the accepted bound."""


class Root(NamedTuple):
    value: float
    multiplicity: int


# ---------------------------------------------------------------- kernels


@njit(cache=True, nogil=True)
def horner(c, n, t):
    acc = c[n]
    for i in range(n - 1, -1, -1):
        acc = acc * t + c[i]
    return acc


@njit(cache=True, nogil=True)
def _horner_d(c, n, t):
    f = c[n]
    df = 0.0
    for i in range(n - 1, -1, -1):
        df = df * t + f
        f = f * t + c[i]
    return f, df


@njit(cache=True, nogil=True)
def _abs_scale(c, n, t):
    # sum |c_i| |t|^i, the natural rounding scale of p(t)
    at = abs(t)
    acc = abs(c[n])
    for i in range(n - 1, -1, -1):
        acc = acc * at + abs(c[i])
    return acc


@njit(cache=True, nogil=True)
def _polish(c, n, t):
    f, df = _horner_d(c, n, t)
    for _ in range(6):
        if df == 0.0 or f == 0.0:
            break
        t_new = t - f / df
        f_new, df_new = _horner_d(c, n, t_new)
        if abs(f_new) >= abs(f):
            break
        t, f, df = t_new, f_new, df_new
    return t


@njit(cache=True, nogil=True)
def _quadratic(a, b, c, out, scale=0.0):
    """Real roots of a t^2 + b t + c (a != 0). Returns (count, degenerate).

    ``scale`` is an outside estimate of the size of b^2 when the coefficients
    themselves came out of a cancellation (Ferrari's factors).
    """
    disc = b * b - 4.0 * a * c
    size = max(b * b + 4.0 * abs(a * c), scale)
    if abs(disc) <= 8.0 * EPS * size:
        out[0] = -b / (2.0 * a)
        out[1] = out[0]
        return 2, True
    if disc < 0.0:
        return 0, abs(disc) <= NEAR_DEGENERATE * size
    q = -0.5 * (b + copysign(sqrt(disc), b))
    r1 = q / a
    r2 = c / q if q != 0.0 else -r1
    if r1 > r2:
        r1, r2 = r2, r1
    out[0] = r1
    out[1] = r2
    return 2, disc <= NEAR_DEGENERATE * size


@njit(cache=True, nogil=True)
def _cubic_monic(A, B, C, out):
    """Real roots of t^3 + A t^2 + B t + C. Returns (count, degenerate)."""
    Q = (A * A - 3.0 * B) / 9.0
    R = (2.0 * A * A * A - 9.0 * A * B + 27.0 * C) / 54.0
    Q3 = Q * Q * Q
    R2 = R * R
    # Q and R come from cancellations of terms of size base^2, base^3, so the
    # discriminant is only known to about eps * base^6
    base = max(abs(A) / 3.0, sqrt(abs(B)), abs(C) ** (1.0 / 3.0))
    size = max(R2 + abs(Q3), base ** 6)
    degenerate = abs(R2 - Q3) <= NEAR_DEGENERATE * size
    if R2 < Q3:
        theta = acos(max(-1.0, min(1.0, R / sqrt(Q3))))
        sq = -2.0 * sqrt(Q)
        out[0] = sq * cos(theta / 3.0) - A / 3.0
        out[1] = sq * cos((theta + 2.0 * pi) / 3.0) - A / 3.0
        out[2] = sq * cos((theta - 2.0 * pi) / 3.0) - A / 3.0
        # insertion sort of three
        for i in range(1, 3):
            v = out[i]
            j = i - 1
            while j >= 0 and out[j] > v:
                out[j + 1] = out[j]
                j -= 1
            out[j + 1] = v
        return 3, degenerate
    s = abs(R) + sqrt(R2 - Q3)
    Ac = -copysign(s ** (1.0 / 3.0), R)
    Bc = Q / Ac if Ac != 0.0 else 0.0
    out[0] = Ac + Bc - A / 3.0
    return 1, degenerate


@njit(cache=True, nogil=True)
def _closed_form(c, n, out):
    """Closed-form real roots of the degree-n polynomial c (ascending).

    Returns (count, ok); ok is False when the computation is too close to a
    degenerate configuration to be trusted.
    """
    tmp = np.empty(4)
    if n == 1:
        out[0] = -c[0] / c[1]
        return 1, True
    if n == 2:
        k, degen = _quadratic(c[2], c[1], c[0], tmp)
        for i in range(k):
            out[i] = tmp[i]
        return k, not degen
    if n == 3:
        k, degen = _cubic_monic(c[2] / c[3], c[1] / c[3], c[0] / c[3], tmp)
        for i in range(k):
            out[i] = tmp[i]
        return k, not degen
    a3 = c[3] / c[4]
    a2 = c[2] / c[4]
    a1 = c[1] / c[4]
    a0 = c[0] / c[4]
    sh = a3 / 4.0
    p = a2 - 6.0 * sh * sh
    q = a1 - 2.0 * a2 * sh + 8.0 * sh * sh * sh
    r = a0 - a1 * sh + a2 * sh * sh - 3.0 * sh * sh * sh * sh
    size = abs(p) + sqrt(abs(r)) + 1e-300
    # length scale of the coefficients; p, q, r are only known to eps times
    # its powers, so a root cluster much tighter than it cannot be resolved here
    base2 = max(sh * sh, abs(a2), abs(a1) ** (2.0 / 3.0), sqrt(abs(a0)))
    if max(abs(p), sqrt(abs(r)), abs(q) ** (2.0 / 3.0)) <= NEAR_DEGENERATE * base2:
        return 0, False
    k = 0
    ok = True
    if abs(q) <= 1e-13 * size ** 1.5:
        # biquadratic y^4 + p y^2 + r
        kz, degen = _quadratic(1.0, p, r, tmp, base2 * base2)
        if degen:
            ok = False
        for i in range(kz):
            z = tmp[i]
            if abs(z) <= NEAR_DEGENERATE * base2:
                ok = False
            if z > 0.0:
                w = sqrt(z)
                out[k] = -w - sh
                out[k + 1] = w - sh
                k += 2
            elif z == 0.0:
                out[k] = -sh
                k += 1
    else:
        km, _ = _cubic_monic(p, 0.25 * p * p - r, -0.125 * q * q, tmp)
        m = tmp[0]
        for i in range(1, km):
            if tmp[i] > m:
                m = tmp[i]
        # polish the resolvent root; a step is kept only if it lowers the
        # residual, since near a double resolvent root f' ~ 0 and Newton overshoots
        e1 = 0.25 * p * p - r
        e0 = -0.125 * q * q
        f = ((m + p) * m + e1) * m + e0
        for _ in range(3):
            df = (3.0 * m + 2.0 * p) * m + e1
            if df == 0.0 or f == 0.0:
                break
            m_new = m - f / df
            f_new = ((m_new + p) * m_new + e1) * m_new + e0
            if abs(f_new) >= abs(f):
                break
            m, f = m_new, f_new
        if not (m > NEAR_DEGENERATE * base2):
            return 0, False
        s = sqrt(2.0 * m)
        half = 0.5 * p + m
        qs = q / (2.0 * s)
        quad = np.empty(2)
        for sign in (-1.0, 1.0):
            kq, degen = _quadratic(1.0, sign * s, half - sign * qs, quad, base2)
            if degen:
                ok = False
            for i in range(kq):
                out[k] = quad[i] - sh
                k += 1
    # sort
    for i in range(1, k):
        v = out[i]
        j = i - 1
        while j >= 0 and out[j] > v:
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = v
    return k, ok


@njit(cache=True, nogil=True)
def _bisect(c, n, lo, hi, flo):
    # the loop ends at float resolution; the cap only matters for roots near
    # t = 0, where resolution keeps improving down to the subnormals
    for _ in range(2200):
        # halving from the Cauchy bound never reaches t = 0 exactly, so split
        # there first when it is in the bracket
        mid = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = horner(c, n, mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def _cauchy_bound(c, n):
    b = 0.0
    for i in range(n):
        v = abs(c[i] / c[n])
        if v > b:
            b = v
    return 1.0 + b


@njit(cache=True, nogil=True)
def _roots_between(c, n, crit, cmult, ncrit, out, mult):
    """Roots of c given the sorted real critical points (roots of c')."""
    bound = _cauchy_bound(c, n)
    npts = ncrit + 2
    pts = np.empty(npts)
    pmult = np.zeros(npts, dtype=np.int64)
    pts[0] = -bound
    for i in range(ncrit):
        pts[i + 1] = min(max(crit[i], -bound), bound)
        pmult[i + 1] = cmult[i]
    pts[npts - 1] = bound
    vals = np.empty(npts)
    zero = np.zeros(npts, dtype=np.bool_)
    for i in range(npts):
        vals[i] = horner(c, n, pts[i])
        if 0 < i < npts - 1:
            zero[i] = abs(vals[i]) <= 32.0 * EPS * _abs_scale(c, n, pts[i])
    k = 0
    for i in range(npts - 1):
        if zero[i] and i > 0:
            out[k] = pts[i]
            mult[k] = pmult[i] + 1
            k += 1
        if zero[i] or zero[i + 1]:
            continue
        flo = vals[i]
        fhi = vals[i + 1]
        if flo == 0.0 or fhi == 0.0:
            continue
        if (flo < 0.0) != (fhi < 0.0):
            out[k] = _bisect(c, n, pts[i], pts[i + 1], flo)
            mult[k] = 1
            k += 1
    return k


@njit(cache=True, nogil=True)
def _quadratic_mult(c, out, mult):
    """Roots of c[0] + c[1] t + c[2] t^2 with a double root reported once."""
    if c[2] == 0.0:
        if c[1] == 0.0:
            return 0
        out[0] = -c[0] / c[1]
        mult[0] = 1
        return 1
    tmp = np.empty(2)
    k, _ = _quadratic(c[2], c[1], c[0], tmp)
    if k == 0:
        return 0
    disc = c[1] * c[1] - 4.0 * c[2] * c[0]
    if abs(disc) <= 8.0 * EPS * (c[1] * c[1] + 4.0 * abs(c[2] * c[0])):
        out[0] = tmp[0]
        mult[0] = 2
        return 1
    out[0] = tmp[0]
    out[1] = tmp[1]
    mult[0] = 1
    mult[1] = 1
    return 2


@njit(cache=True, nogil=True)
def _bracketed(c, n, out, mult):
    """Real roots with multiplicities by derivative-based bracketing."""
    if n == 1:
        out[0] = -c[0] / c[1]
        mult[0] = 1
        return 1
    if n == 2:
        return _quadratic_mult(c, out, mult)
    d = np.empty(n)
    for i in range(1, n + 1):
        d[i - 1] = i * c[i]
    crit = np.empty(4)
    cmult = np.zeros(4, dtype=np.int64)
    if n == 3:
        nc = _quadratic_mult(d, crit, cmult)
    else:
        dd = np.empty(3)
        for i in range(1, 4):
            dd[i - 1] = i * d[i]
        c2 = np.empty(4)
        m2 = np.zeros(4, dtype=np.int64)
        n2 = _quadratic_mult(dd, c2, m2)
        nc = _roots_between(d, 3, c2, m2, n2, crit, cmult)
    return _roots_between(c, n, crit, cmult, nc, out, mult)


@njit(cache=True, nogil=True)
def solve(c_in, out, mult):
    """Real roots of the polynomial with ascending coefficients ``c_in``.

    Writes distinct sorted roots to ``out`` and their multiplicities to
    ``mult``; returns the count, 0 for a constant polynomial with no roots,
    or -1 for the zero polynomial.
    """
    size = 0.0
    for v in c_in:
        if abs(v) > size:
            size = abs(v)
    if size == 0.0:
        return -1
    c = np.empty(c_in.shape[0])
    for i in range(c_in.shape[0]):
        c[i] = c_in[i] / size
    n = c.shape[0] - 1
    while n > 0 and abs(c[n]) <= LEADING_CUTOFF:
        n -= 1
    if n == 0:
        return 0
    tmp = np.empty(4)
    k, ok = _closed_form(c, n, tmp)
    if ok:
        for i in range(k):
            tmp[i] = _polish(c, n, tmp[i])
        for i in range(k):
            r = tmp[i]
            # a polished simple root leaves a residual at rounding level;
            # anything larger means the closed form was ill-conditioned
            if abs(horner(c, n, r)) > 1e3 * EPS * _abs_scale(c, n, r):
                ok = False
            if i > 0 and r - tmp[i - 1] <= 1e-9 * max(1.0, abs(r)):
                ok = False
    if ok:
        for i in range(k):
            out[i] = tmp[i]
            mult[i] = 1
        return k
    return _bracketed(c, n, out, mult)


@njit(cache=True, nogil=True)
def first_root_above(c_in, t_min):
    """Smallest real root strictly greater than t_min, or +inf."""
    out = np.empty(4)
    mult = np.zeros(4, dtype=np.int64)
    k = solve(c_in, out, mult)
    for i in range(k):
        if out[i] > t_min:
            return out[i]
    return np.inf


# ---------------------------------------------------------------- Python API


def _as_coeffs(coeffs: Sequence[float]) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float).ravel()
    if c.size > 5:
        if np.any(c[5:] != 0.0):
            raise ValueError("degree > 4 is not supported")
        c = c[:5]
    if not np.all(np.isfinite(c)):
        raise ValueError(f"non-finite coefficients {c.tolist()}")
    return c


def degree(coeffs: Sequence[float]) -> int:
    """Degree after dropping leading coefficients negligible against max |c|."""
    c = _as_coeffs(coeffs)
    size = np.max(np.abs(c)) if c.size else 0.0
    n = c.size - 1
    while n > 0 and abs(c[n]) <= LEADING_CUTOFF * size:
        n -= 1
    return n


def real_roots(coeffs: Sequence[float]) -> list[Root]:
    """All real roots of a polynomial given in ascending coefficient order.

    >>> real_roots([-1.0, 0.0, 1.0])
    [Root(value=-1.0, multiplicity=1), Root(value=1.0, multiplicity=1)]
    """
    c = _as_coeffs(coeffs)
    n = degree(c)
    if n < 1:
        raise ValueError(f"polynomial {c.tolist()} has degree 0")
    c = c[: n + 1]
    out = np.empty(4)
    mult = np.zeros(4, dtype=np.int64)
    k = solve(c, out, mult)
    size = float(np.max(np.abs(c)))
    roots = []
    for i in range(k):
        r = float(out[i])
        resid = abs(float(np.polynomial.polynomial.polyval(r, c)))
        bound = 1e-6 * size * max(1.0, abs(r)) ** n
        if resid > bound:
            raise RootFindingError(
                f"root {r!r} of {c.tolist()} leaves residual {resid:.3e} > {bound:.3e}"
            )
        roots.append(Root(r, int(mult[i])))
    return roots


def smallest_root_above(coeffs: Sequence[float], t_min: float) -> float | None:
    for r in real_roots(coeffs):
        if r.value > t_min:
            return r.value
    return None
