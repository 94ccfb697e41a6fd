"""Globally continuous, non-negative reconstruction of (h, m) in one cell.

Every cell reconstruction is stored as at most three segments.  A segment
carries a height rule (limited reconstruction of h or of the surface h + b,
or linear h, or linear surface) and a momentum triple fed to the limited
reconstruction.  The same table drives point evaluation inside the jitted
evolution loop and the Python-facing :class:`CellReconstruction`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import Constants, bottom_value


class CaseTag(enum.IntEnum):
    DRY = 0
    DIRECT_H = 1
    EQUILIBRIUM_HB = 2
    CASE_A = 3
    CASE_B = 4
    CASE_B_EXCEPTIONAL = 5
    CASE_C = 6
    CASE_C_EXCEPTIONAL = 7


# height rules per segment
MODE_R_H = 0
MODE_R_SURFACE = 1
MODE_LIN_H = 2
MODE_LIN_SURFACE = 3
MODE_POWER_H = 4  # unbounded power law; last-resort non-negative fallback

# float parameter columns
C_BRK = 0  # two breakpoints (local coordinates)
C_HV = 2  # 3 segments x (mean, left, right)
C_MV = 11  # 3 segments x (mean, left, right)
C_ENDS = 20  # hL, hR, mL, mR returned verbatim at the cell ends
C_SHORE = 24
C_F = 25  # case a plateau factor
C_HSTAR = 26  # exceptional cases
N_FLOAT = 27
# int columns
I_TAG = 0
I_MODE = 1  # 3 entries
I_NSEG = 4
I_ANOMALY = 5
N_INT = 6

SHORE_WIDTH_TOL = 1e-12


# ---------------------------------------------------------------------------
# one-dimensional building blocks (normalised coordinate s in [0, 1])


@njit(cache=True, inline="always")
def in_limiter_set(qbar, qL, qR):
    return ((qL < qbar < qL + (qR - qL) / 3.0)
            or (qR - (qR - qL) / 3.0 < qbar < qR)
            or (qR < qbar < qR + (qL - qR) / 3.0)
            or (qL - (qL - qR) / 3.0 < qbar < qL))


@njit(cache=True, inline="always")
def parabolic_s(qbar, qL, qR, s):
    if qL == qbar and qR == qbar:
        return qbar
    return qL * (1.0 - s) + qR * s + (6.0 * qbar - 3.0 * qL - 3.0 * qR) * s * (1.0 - s)


@njit(cache=True, inline="always")
def power_law_s(qL, qR, E, s):
    p = s ** E
    return qR * p + qL * (1.0 - p)


@njit(cache=True, inline="always")
def limited_s(qbar, qL, qR, s, E_max):
    if qbar == qL:
        return parabolic_s(qbar, qL, qR, s)
    E = (qR - qbar) / (qbar - qL)
    if 1.0 / E_max <= E <= E_max:
        return power_law_s(qL, qR, E, s)
    return parabolic_s(qbar, qL, qR, s)


@njit(cache=True, inline="always")
def dispatch_s(qbar, qL, qR, s, E_max, limiting):
    if limiting and in_limiter_set(qbar, qL, qR):
        return limited_s(qbar, qL, qR, s, E_max)
    return parabolic_s(qbar, qL, qR, s)


@njit(cache=True, inline="always")
def linear_s(a, b, s):
    if a == b:
        return a
    return a * (1.0 - s) + b * s


def _unit(xL, xR, x):
    if not xR > xL:
        raise ValueError("need xR > xL")
    return (np.asarray(x, dtype=float) - xL) / (xR - xL)


def recon_parabolic(qbar, qL, qR, xL, xR, x):
    """Parabola on [xL, xR] with end values qL, qR and mean qbar."""
    s = _unit(xL, xR, x)
    return np.vectorize(parabolic_s, otypes=[float])(qbar, qL, qR, s)


def recon_limited(qbar, qL, qR, xL, xR, x, E_max: float = 50.0):
    """Power law qL + (qR - qL) s**E, or the parabola when E is inadmissible."""
    s = _unit(xL, xR, x)
    return np.vectorize(limited_s, otypes=[float])(qbar, qL, qR, s, E_max)


def recon_dispatch(qbar, qL, qR, xL, xR, x, E_max: float = 50.0, limiting: bool = True):
    s = _unit(xL, xR, x)
    return np.vectorize(dispatch_s, otypes=[float])(qbar, qL, qR, s, E_max, limiting)


@njit(cache=True)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True)
def _split(a):
    t = 134217729.0 * a
    hi = t - (t - a)
    return hi, a - hi


@njit(cache=True)
def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(cache=True)
def _deep_minimum_exact(hbar, hL, hR):
    """Sign of (hL + hR - 3 hbar)**2 - hL hR in double-double arithmetic.

    Decides tangent configurations, where the rounded square root is
    not accurate enough.
    """
    t, te = _two_prod(3.0, hbar)
    s, se = _two_sum(hL, hR)
    d, de = _two_sum(s, -t)
    de += se - te
    d, de = _two_sum(d, de)
    if d <= 0.0:
        return False
    p, pe = _two_prod(d, d)
    pe += 2.0 * d * de
    q, qe = _two_prod(hL, hR)
    r, re = _two_sum(p, -q)
    return r + (re + (pe - qe)) > 0.0


@njit(cache=True)
def parabola_goes_negative(hbar, hL, hR):
    """True iff the parabola with positive end values and mean dips below zero."""
    if not hbar < 0.5 * (hL + hR) - abs(hR - hL) / 6.0:
        return False
    gap = hL + hR - math.sqrt(hL * hR) - 3.0 * hbar
    if abs(gap) > 1e-12 * (hL + hR):
        return gap > 0.0
    return _deep_minimum_exact(hbar, hL, hR)


# ---------------------------------------------------------------------------
# shore location


@njit(cache=True)
def _shore_G(xi, a, p, q):
    return (a * xi * xi + p) * xi - q


@njit(cache=True)
def _polish(xi, lo, hi, a, p, q):
    """Safeguarded Newton on a bracket with G(lo) < 0 <= G(hi)."""
    scale = abs(q) + abs(p) + abs(a)
    if not (lo < xi < hi):
        xi = 0.5 * (lo + hi)
    for _ in range(200):
        G = _shore_G(xi, a, p, q)
        if abs(G) <= 1e-16 * scale:
            break
        if G < 0.0:
            lo = xi
        else:
            hi = xi
        dG = 3.0 * a * xi * xi + p
        nxt = xi - G / dG if dG != 0.0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if nxt == xi or hi - lo <= 1e-17 * max(1.0, abs(hi)):
            xi = nxt
            break
        xi = nxt
    return xi


@njit(cache=True)
def shore_cubic(hbar, h_near, h_far, b2, dx):
    """Root in (0, 1) of (b2 dx^2 / 6) xi^3 + (h_far - h_near) xi / 2 - (hbar - h_near).

    Returns NaN when no admissible root exists.
    """
    q = hbar - h_near
    p = 0.5 * (h_far - h_near)
    a = b2 * dx * dx / 6.0
    if not (q > 0.0 and p > 0.0):
        return np.nan
    if abs(a) <= 1e-15 * p:
        # cubic term below round-off on (0, 1); also keeps p / a finite
        xi = q / p
    elif a > 0.0:
        P = p / a
        Qd = -q / a
        arg = (3.0 * Qd / (2.0 * P)) * math.sqrt(3.0 / P)
        xi = -2.0 * math.sqrt(P / 3.0) * math.sinh(math.asinh(arg) / 3.0)
        xi = _polish(xi, 0.0, q / p, a, p, q)
    else:
        xi0 = math.sqrt(p / (-3.0 * a))
        if _shore_G(xi0, a, p, q) < 0.0:
            return np.nan
        P = p / a
        Qd = -q / a
        arg = (3.0 * Qd / (2.0 * P)) * math.sqrt(-3.0 / P)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg)
        best = np.inf
        for k in range(3):
            t = 2.0 * math.sqrt(-P / 3.0) * math.cos(phi / 3.0 - 2.0 * math.pi * k / 3.0)
            if 0.0 < t < best:
                best = t
        xi = _polish(best, 0.0, xi0, a, p, q)
    if 0.0 < xi < 1.0:
        return xi
    return np.nan


def solve_shore_cubic(hbar, h_near, h_far, b2, dx):
    """Python face of :func:`shore_cubic`; ``None`` encodes the exceptional regime."""
    xi = shore_cubic(float(hbar), float(h_near), float(h_far), float(b2), float(dx))
    return None if math.isnan(xi) else float(xi)


@njit(cache=True)
def shore_critical(h_near, h_far, b2, dx):
    """(hbar_crit, xi0) for a concave bottom."""
    d = h_far - h_near
    ab = abs(b2) * dx * dx
    return h_near + math.sqrt(d * d * d / (9.0 * ab)), math.sqrt(d / ab)


# ---------------------------------------------------------------------------
# cell table construction


@njit(cache=True)
def _clear(P, I, k):
    for c in range(P.shape[1]):
        P[k, c] = 0.0
    for c in range(I.shape[1]):
        I[k, c] = 0
    P[k, C_SHORE] = np.nan


@njit(cache=True)
def _seg(P, I, k, j, mode, hbar, hA, hB, mbar, mA, mB):
    I[k, I_MODE + j] = mode
    P[k, C_HV + 3 * j] = hbar
    P[k, C_HV + 3 * j + 1] = hA
    P[k, C_HV + 3 * j + 2] = hB
    P[k, C_MV + 3 * j] = mbar
    P[k, C_MV + 3 * j + 1] = mA
    P[k, C_MV + 3 * j + 2] = mB


@njit(cache=True)
def _ends(P, k, hL, hR, mL, mR):
    P[k, C_ENDS] = hL
    P[k, C_ENDS + 1] = hR
    P[k, C_ENDS + 2] = mL
    P[k, C_ENDS + 3] = mR


@njit(cache=True)
def _shore_momentum_left(mbar, mR, xs, dx):
    """Mean momentum of the left (sloped) part when the right part holds mR."""
    wl = 0.5 + xs / dx
    if wl < SHORE_WIDTH_TOL:
        return mR
    return (mbar - (0.5 - xs / dx) * mR) / wl


@njit(cache=True)
def _shore_momentum_right(mbar, mL, xs, dx):
    wr = 0.5 - xs / dx
    if wr < SHORE_WIDTH_TOL:
        return mL
    return (mbar - mL * (xs / dx + 0.5)) / wr


@njit(cache=True)
def build_cell(P, I, k, hbar, hL, hR, mbar, mL, mR, bL, bC, bR, dx,
               dry_tol, limiting, positivity):
    """Fill row k of the reconstruction table."""
    _clear(P, I, k)
    half = 0.5 * dx
    P[k, C_BRK] = half
    P[k, C_BRK + 1] = half
    I[k, I_NSEG] = 1
    if hbar < dry_tol:
        I[k, I_TAG] = 0
        _seg(P, I, k, 0, MODE_LIN_H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        _ends(P, k, 0.0, 0.0, 0.0, 0.0)
        return
    _ends(P, k, hL, hR, mL, mR)
    b2 = 2.0 * (bR - 2.0 * bC + bL) / (dx * dx)
    negative = False
    if hL > 0.0 and hR > 0.0:
        negative = parabola_goes_negative(hbar, hL, hR)

    if positivity:
        # case a: valley below both ends
        if hbar < hL and hbar < hR and negative:
            f = max(0.5, 2.0 - (hL + hR) / (2.0 * hbar))
            x1 = dx * (2.0 * hbar * (f - 2.0) + hL + hR) / (4.0 * hbar * f - 2.0 * (hL + hR))
            fh = f * hbar
            I[k, I_TAG] = 3
            I[k, I_NSEG] = 3
            P[k, C_BRK] = x1
            P[k, C_BRK + 1] = -x1
            P[k, C_F] = f
            _seg(P, I, k, 0, MODE_LIN_H, 0.0, hL, fh, mbar, mL, mbar)
            _seg(P, I, k, 1, MODE_LIN_H, 0.0, fh, fh, mbar, mbar, mbar)
            _seg(P, I, k, 2, MODE_LIN_H, 0.0, fh, hR, mbar, mbar, mR)
            return
        # case b: constant (possibly dry) right part
        if hR <= hbar < hL and (negative or hR == 0.0):
            if hbar == hR:
                # shore on the left end: the constant part fills the cell
                I[k, I_TAG] = 4
                P[k, C_SHORE] = -half
                _seg(P, I, k, 0, MODE_LIN_H, 0.0, hR, hR, mbar, mL, mR)
                return
            xi = shore_cubic(hbar, hR, hL, b2, dx)
            if not math.isnan(xi):
                xs = xi * dx - half
                if half - xs < SHORE_WIDTH_TOL * dx:
                    I[k, I_TAG] = 4
                    P[k, C_SHORE] = half
                    _seg(P, I, k, 0, MODE_LIN_SURFACE, 0.0, hL + bL, hR + bR, mbar, mL, mR)
                    return
                bs = bottom_value(bL, bC, bR, dx, xs)
                I[k, I_TAG] = 4
                I[k, I_NSEG] = 2
                P[k, C_BRK] = xs
                P[k, C_SHORE] = xs
                _seg(P, I, k, 0, MODE_LIN_SURFACE, 0.0, hL + bL, hR + bs,
                     _shore_momentum_left(mbar, mR, xs, dx), mL, mR)
                _seg(P, I, k, 1, MODE_LIN_H, 0.0, hR, hR, mR, mR, mR)
                return
            if b2 < 0.0:
                hcrit, xi0 = shore_critical(hR, hL, b2, dx)
                if xi0 < 1.0 and hbar > hcrit:
                    ys = dx * (xi0 - 0.5)
                    hs = 2.0 * (hbar - hcrit) + hR
                    bs = bottom_value(bL, bC, bR, dx, ys)
                    I[k, I_TAG] = 5
                    I[k, I_NSEG] = 2
                    P[k, C_BRK] = ys
                    P[k, C_SHORE] = ys
                    P[k, C_HSTAR] = hs
                    _seg(P, I, k, 0, MODE_LIN_SURFACE, 0.0, hL + bL, hs + bs,
                         _shore_momentum_left(mbar, mR, ys, dx), mL, mR)
                    _seg(P, I, k, 1, MODE_LIN_H, 0.0, hs, hR, mR, mR, mR)
                    return
        # case c: constant (possibly dry) left part
        if hL <= hbar < hR and (negative or hL == 0.0):
            if hbar == hL:
                I[k, I_TAG] = 6
                P[k, C_SHORE] = half
                _seg(P, I, k, 0, MODE_LIN_H, 0.0, hL, hL, mbar, mL, mR)
                return
            xi = shore_cubic(hbar, hL, hR, b2, dx)
            if not math.isnan(xi):
                xs = half - xi * dx
                if xs + half < SHORE_WIDTH_TOL * dx:
                    I[k, I_TAG] = 6
                    P[k, C_SHORE] = -half
                    _seg(P, I, k, 0, MODE_LIN_SURFACE, 0.0, hL + bL, hR + bR, mbar, mL, mR)
                    return
                bs = bottom_value(bL, bC, bR, dx, xs)
                I[k, I_TAG] = 6
                I[k, I_NSEG] = 2
                P[k, C_BRK] = xs
                P[k, C_SHORE] = xs
                _seg(P, I, k, 0, MODE_LIN_H, 0.0, hL, hL, mL, mL, mL)
                _seg(P, I, k, 1, MODE_LIN_SURFACE, 0.0, hL + bs, hR + bR,
                     _shore_momentum_right(mbar, mL, xs, dx), mL, mR)
                return
            if b2 < 0.0:
                hcrit, xi0 = shore_critical(hL, hR, b2, dx)
                if xi0 < 1.0 and hbar > hcrit:
                    ys = half - dx * xi0
                    hs = 2.0 * (hbar - hcrit) + hL
                    bs = bottom_value(bL, bC, bR, dx, ys)
                    I[k, I_TAG] = 7
                    I[k, I_NSEG] = 2
                    P[k, C_BRK] = ys
                    P[k, C_SHORE] = ys
                    P[k, C_HSTAR] = hs
                    _seg(P, I, k, 0, MODE_LIN_H, 0.0, hL, hs, mL, mL, mL)
                    _seg(P, I, k, 1, MODE_LIN_SURFACE, 0.0, hs + bs, hR + bR,
                         _shore_momentum_right(mbar, mL, ys, dx), mL, mR)
                    return
        if negative:
            # no admissible shore although the parabola dips below zero;
            # a monotone power law between the end values stays non-negative
            I[k, I_TAG] = 1
            I[k, I_ANOMALY] = 1
            _seg(P, I, k, 0, MODE_POWER_H, hbar, hL, hR, mbar, mL, mR)
            return
        if (hR == 0.0 and hbar >= hL) or (hL == 0.0 and hbar >= hR):
            I[k, I_ANOMALY] = 2

    if min(hL + bL, hR + bR) > max(bL, bR):
        bbar = (bL + 4.0 * bC + bR) / 6.0
        I[k, I_TAG] = 2
        _seg(P, I, k, 0, MODE_R_SURFACE, hbar + bbar, hL + bL, hR + bR, mbar, mL, mR)
        return
    I[k, I_TAG] = 1
    _seg(P, I, k, 0, MODE_R_H, hbar, hL, hR, mbar, mL, mR)


@njit(cache=True, inline="always")
def _segment_of(P, I, k, x, half):
    nseg = I[k, I_NSEG]
    j = 0
    while j < nseg - 1 and x > P[k, C_BRK + j]:
        j += 1
    a = -half if j == 0 else P[k, C_BRK + j - 1]
    b = half if j == nseg - 1 else P[k, C_BRK + j]
    if b > a:
        s = (x - a) / (b - a)
        s = min(1.0, max(0.0, s))
    else:
        s = 0.0
    return j, s


@njit(cache=True)
def eval_h(P, I, k, x, bL, bC, bR, dx, E_max, limiting):
    half = 0.5 * dx
    if x == -half:
        return P[k, C_ENDS]
    if x == half:
        return P[k, C_ENDS + 1]
    j, s = _segment_of(P, I, k, x, half)
    mode = I[k, I_MODE + j]
    hb = P[k, C_HV + 3 * j]
    hA = P[k, C_HV + 3 * j + 1]
    hB = P[k, C_HV + 3 * j + 2]
    if mode == MODE_R_H:
        h = dispatch_s(hb, hA, hB, s, E_max, limiting)
    elif mode == MODE_R_SURFACE:
        h = dispatch_s(hb, hA, hB, s, E_max, limiting) - bottom_value(bL, bC, bR, dx, x)
    elif mode == MODE_LIN_H:
        h = linear_s(hA, hB, s)
    elif mode == MODE_LIN_SURFACE:
        h = linear_s(hA, hB, s) - bottom_value(bL, bC, bR, dx, x)
    else:
        if hb == hA:
            h = parabolic_s(hb, hA, hB, s)
        else:
            h = power_law_s(hA, hB, (hB - hb) / (hb - hA), s)
    return h if h > 0.0 else 0.0


@njit(cache=True)
def eval_m(P, I, k, x, dx, E_max, limiting):
    half = 0.5 * dx
    if x == -half:
        return P[k, C_ENDS + 2]
    if x == half:
        return P[k, C_ENDS + 3]
    j, s = _segment_of(P, I, k, x, half)
    return dispatch_s(P[k, C_MV + 3 * j], P[k, C_MV + 3 * j + 1], P[k, C_MV + 3 * j + 2],
                      s, E_max, limiting)


@njit(cache=True)
def eval_hm(P, I, k, x, bL, bC, bR, dx, E_max, limiting):
    """(h, m) at local x of cell k; m is zero wherever h is."""
    h = eval_h(P, I, k, x, bL, bC, bR, dx, E_max, limiting)
    if h == 0.0:
        return 0.0, 0.0
    return h, eval_m(P, I, k, x, dx, E_max, limiting)


@njit(cache=True)
def reconstruct_cells(h_avg, m_avg, h_pts, m_pts, b_iface, b_center, dx,
                      dry_tol, limiting, positivity):
    """Build the table for every cell; arrays are ghost-extended and aligned."""
    n = h_avg.size
    P = np.empty((n, N_FLOAT))
    I = np.empty((n, N_INT), dtype=np.int64)
    for k in range(n):
        build_cell(P, I, k, h_avg[k], h_pts[k], h_pts[k + 1], m_avg[k], m_pts[k], m_pts[k + 1],
                   b_iface[k], b_center[k], b_iface[k + 1], dx, dry_tol, limiting, positivity)
    return P, I


# ---------------------------------------------------------------------------
# Python-facing single cell


@dataclass
class CellReconstruction:
    """Reconstruction of one cell on local coordinates [-dx/2, dx/2]."""

    params: np.ndarray
    ints: np.ndarray
    bottom: tuple[float, float, float]
    dx: float
    E_max: float = 50.0
    limiting: bool = True

    @property
    def case_tag(self) -> CaseTag:
        return CaseTag(int(self.ints[0, I_TAG]))

    @property
    def shore(self) -> float | None:
        xs = float(self.params[0, C_SHORE])
        return None if math.isnan(xs) else xs

    @property
    def anomaly(self) -> int:
        return int(self.ints[0, I_ANOMALY])

    @property
    def aux(self) -> dict:
        tag = self.case_tag
        if tag is CaseTag.CASE_A:
            return {"f": float(self.params[0, C_F]), "x1": float(self.params[0, C_BRK])}
        if tag in (CaseTag.CASE_B, CaseTag.CASE_C):
            return {"x_star": self.shore}
        if tag in (CaseTag.CASE_B_EXCEPTIONAL, CaseTag.CASE_C_EXCEPTIONAL):
            return {"y_star": self.shore, "h_star": float(self.params[0, C_HSTAR])}
        return {}

    def h(self, x):
        bL, bC, bR = self.bottom
        xs = np.asarray(x, dtype=float)
        out = [eval_h(self.params, self.ints, 0, float(v), bL, bC, bR, self.dx, self.E_max, self.limiting)
               for v in xs.ravel()]
        return np.asarray(out).reshape(xs.shape)

    def m(self, x):
        xs = np.asarray(x, dtype=float)
        out = [eval_m(self.params, self.ints, 0, float(v), self.dx, self.E_max, self.limiting)
               for v in xs.ravel()]
        return np.asarray(out).reshape(xs.shape)

    def surface(self, x):
        bL, bC, bR = self.bottom
        xs = np.asarray(x, dtype=float)
        b = np.asarray([bottom_value(bL, bC, bR, self.dx, float(v)) for v in xs.ravel()]).reshape(xs.shape)
        return self.h(xs) + b


def build_cell_reconstruction(hbar, hL, hR, mbar, mL, mR, bottom_cell, dx,
                              constants: Constants | None = None) -> CellReconstruction:
    """Reconstruct one cell; ``bottom_cell`` is (b_left, b_center, b_right)."""
    c = constants or Constants()
    for name, v in (("hbar", hbar), ("hL", hL), ("hR", hR)):
        if v < -c.dry_avg_tol:
            raise ValueError(f"{name}={v} is negative")
    hbar, hL, hR = (max(0.0, float(v)) for v in (hbar, hL, hR))
    P = np.empty((1, N_FLOAT))
    I = np.empty((1, N_INT), dtype=np.int64)
    bL, bC, bR = (float(v) for v in bottom_cell)
    build_cell(P, I, 0, hbar, hL, hR, float(mbar), float(mL), float(mR), bL, bC, bR, float(dx),
               c.dry_avg_tol, c.limiting, c.positivity)
    return CellReconstruction(P, I, (bL, bC, bR), float(dx), c.E_max, c.limiting)
