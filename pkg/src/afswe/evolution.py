"""Characteristic evolution of interface point values.

Initial data for one step are the cell reconstructions at t^n, stored in
the table produced by :func:`afswe.reconstruction.reconstruct_cells` on the
ghost-extended grid.  Positions are addressed relative to an extended
interface index ``K`` by an offset ``delta`` so that no global coordinate is
ever formed (and exact interface hits stay exact).

The same kernel evolves either the reconstructed data or the fictitious
lake at rest ``max(W - b(x), 0)``, ``v = 0`` used by the well-balance
correction.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .core import Constants, bottom_slope, bottom_value, char_speeds, from_char, to_char
from .reconstruction import C_ENDS, eval_hm

PLUS_DX = 1
MINUS_DX = -1
NO_SHIFT = 0


class CandidateSet(NamedTuple):
    lp: float
    Sp: float
    lm: float
    Sm: float
    shift_origin: int


# ---------------------------------------------------------------------------
# footpoint access


@njit(cache=True, inline="always")
def locate(K, delta, dx, n_cells_ext):
    """Owning extended cell and local coordinate of x_K + delta.

    delta >= 0 belongs to the cell on the right of the interface.
    """
    c = math.floor(delta / dx)
    k = K + c
    xl = (delta - c * dx) - 0.5 * dx
    if k < 0:
        k = 0
        xl = -0.5 * dx
    elif k > n_cells_ext - 1:
        k = n_cells_ext - 1
        xl = 0.5 * dx
    half = 0.5 * dx
    if xl < -half:
        xl = -half
    elif xl > half:
        xl = half
    return k, xl


@njit(cache=True, inline="always")
def initial_data(K, delta, fict, W, P, I, bI, bC, dx, E_max, limiting):
    """(h, m) of the step's initial data at x_K + delta."""
    if delta == 0.0 and not fict:
        # interface: the right cell's stored endpoint is the shared point value
        k = K if K < P.shape[0] else K - 1
        if k == K:
            h = P[k, C_ENDS]
            m = P[k, C_ENDS + 2]
        else:
            h = P[k, C_ENDS + 1]
            m = P[k, C_ENDS + 3]
        return (h, m) if h > 0.0 else (0.0, 0.0)
    k, xl = locate(K, delta, dx, P.shape[0])
    if fict:
        h = W - bottom_value(bI[k], bC[k], bI[k + 1], dx, xl)
        return (h, 0.0) if h > 0.0 else (0.0, 0.0)
    return eval_hm(P, I, k, xl, bI[k], bC[k], bI[k + 1], dx, E_max, limiting)


@njit(cache=True, inline="always")
def slope_at(K, delta, bI, bC, dx, n_cells_ext):
    """b'(x_K + delta); the mean of the one-sided slopes exactly at an interface."""
    if delta == 0.0:
        half = 0.5 * dx
        kr = min(K, n_cells_ext - 1)
        kl = max(K - 1, 0)
        sr = bottom_slope(bI[kr], bC[kr], bI[kr + 1], dx, -half)
        sl = bottom_slope(bI[kl], bC[kl], bI[kl + 1], dx, half)
        return 0.5 * (sl + sr)
    k, xl = locate(K, delta, dx, n_cells_ext)
    return bottom_slope(bI[k], bC[k], bI[k + 1], dx, xl)


@njit(cache=True, inline="always")
def _Q(K, delta, fict, W, P, I, bI, bC, dx, g, E_max, limiting):
    h, m = initial_data(K, delta, fict, W, P, I, bI, bC, dx, E_max, limiting)
    return to_char(h, m, g)


# ---------------------------------------------------------------------------
# operator stages


@njit(cache=True)
def predictor(K, lp, lm, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting):
    """Q*_{j,i} for both families, returned as (Qp_p, Qm_p, Qp_m, Qm_m).

    ``lp``/``lm`` are the speed estimates, possibly taken at x_K +- dx.
    """
    s = slope_at(K, 0.0, bI, bC, dx, P.shape[0])
    Sp0 = -g * s
    Sm0 = g * s
    Qp_pp, _ = _Q(K, -lp * tau, fict, W, P, I, bI, bC, dx, g, E_max, limiting)
    _, Qm_pm = _Q(K, -0.5 * (lp + lm) * tau, fict, W, P, I, bI, bC, dx, g, E_max, limiting)
    Qp_mp, _ = _Q(K, -0.5 * (lm + lp) * tau, fict, W, P, I, bI, bC, dx, g, E_max, limiting)
    _, Qm_mm = _Q(K, -lm * tau, fict, W, P, I, bI, bC, dx, g, E_max, limiting)
    half = 0.5 * tau
    return (Qp_pp + half * Sp0, Qm_pm + half * Sm0,
            Qp_mp + half * Sp0, Qm_mm + half * Sm0)


@njit(cache=True)
def candidate(K, shift, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting):
    """(lp*, lm*) from speed estimates taken at x_K + shift * dx."""
    hs, ms = initial_data(K, shift * dx, fict, W, P, I, bI, bC, dx, E_max, limiting)
    Qps, Qms = to_char(hs, ms, g)
    lp, lm = char_speeds(Qps, Qms, g, dry_tol)
    a, b, c, d = predictor(K, lp, lm, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting)
    lps, _ = char_speeds(a, b, g, dry_tol)
    _, lms = char_speeds(c, d, g, dry_tol)
    return lps, lms


@njit(cache=True)
def evolve_point(K, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting, entropy_fix):
    """One application of the evolution operator at interface K.

    Returns (h, m, shift_used, vacuum) where ``vacuum`` reports that the
    near-vacuum guard kept the initial value.
    """
    h0, m0 = initial_data(K, 0.0, fict, W, P, I, bI, bC, dx, E_max, limiting)
    if entropy_fix:
        lp, lm = candidate(K, 1, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting)
        lp2, lm2 = candidate(K, -1, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting)
        shift = 1
        if abs(lp2) + abs(lm2) > abs(lp) + abs(lm):
            lp, lm, shift = lp2, lm2, -1
    else:
        lp, lm = candidate(K, 0, tau, fict, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting)
        shift = 0
    if lp == 0.0 or lm == 0.0:
        return h0, m0, shift, True
    Q0p, Q0m = to_char(h0, m0, g)
    lp0, lm0 = char_speeds(Q0p, Q0m, g, dry_tol)
    n_ext = P.shape[0]
    Sp = -g * slope_at(K, -0.5 * lp0 * tau, bI, bC, dx, n_ext)
    Sm = g * slope_at(K, -0.5 * lm0 * tau, bI, bC, dx, n_ext)
    hp, mp = initial_data(K, -lp * tau, fict, W, P, I, bI, bC, dx, E_max, limiting)
    hm, mm = initial_data(K, -lm * tau, fict, W, P, I, bI, bC, dx, E_max, limiting)
    if not (hp > 0.0 and hm > 0.0):
        # a characteristic reaching back into vacuum carries no information
        return h0, m0, shift, True
    Qp, _ = to_char(hp, mp, g)
    _, Qm = to_char(hm, mm, g)
    h, m = from_char(Qp + tau * Sp, Qm + tau * Sm, g)
    return h, m, shift, False


@njit(cache=True)
def well_balanced_point(K, tau, h1, m1, P, I, bI, bC, dx, g, dry_tol, E_max, limiting,
                        entropy_fix, froude_max):
    """Subtract the spurious evolution of the local lake at rest.

    Returns (h, m, applied).
    """
    h0, m0 = initial_data(K, 0.0, False, 0.0, P, I, bI, bC, dx, E_max, limiting)
    if not h0 > 0.0:
        return h1, m1, False
    if abs(m0 / h0) >= froude_max * math.sqrt(g * h0):
        return h1, m1, False
    W = h0 + bI[K]
    ht, mt, _, _ = evolve_point(K, tau, True, W, P, I, bI, bC, dx, g, dry_tol, E_max, limiting, entropy_fix)
    if not ht > 0.0:
        return h1, m1, False
    return h0 + (h1 - ht), m1 - mt * (h1 / ht), True


@njit(cache=True)
def evolve_points(K_lo, K_hi, tau, P, I, bI, bC, dx, g, dry_tol, E_max, limiting,
                  entropy_fix, well_balance, froude_max):
    """Evolve interfaces K_lo..K_hi (inclusive) over tau.

    Returns heights, momenta, a per-point vacuum flag and a well-balance flag.
    """
    n = K_hi - K_lo + 1
    h = np.empty(n)
    m = np.empty(n)
    vac = np.zeros(n, dtype=np.bool_)
    wb = np.zeros(n, dtype=np.bool_)
    for j in range(n):
        K = K_lo + j
        h1, m1, _, v = evolve_point(K, tau, False, 0.0, P, I, bI, bC, dx, g, dry_tol, E_max,
                                    limiting, entropy_fix)
        vac[j] = v
        if well_balance:
            h1, m1, wb[j] = well_balanced_point(K, tau, h1, m1, P, I, bI, bC, dx, g, dry_tol,
                                                E_max, limiting, entropy_fix, froude_max)
        if h1 <= 0.0:
            h1, m1 = 0.0, 0.0
        h[j] = h1
        m[j] = m1
    return h, m, vac, wb


# ---------------------------------------------------------------------------
# Python-level API


def entropy_fix_select(c1: CandidateSet, c2: CandidateSet) -> CandidateSet:
    """Keep the candidate with the larger speed sum; ties go to the first (+dx) one."""
    if abs(c2.lp) + abs(c2.lm) > abs(c1.lp) + abs(c1.lm):
        return c2
    return c1


def vacuum_guard(c: CandidateSet) -> CandidateSet:
    """Zero every speed and source when any selected speed is exactly zero."""
    if c.lp == 0.0 or c.lm == 0.0:
        return CandidateSet(0.0, 0.0, 0.0, 0.0, c.shift_origin)
    return c


def freeze(h_new, m_new, h_prev, m_prev, eps_freeze):
    """Replace candidates below the freeze threshold by the last accepted values.

    Returns (h, m, frozen) where ``frozen`` marks wet points that were held.
    """
    hold = h_new < eps_freeze
    h = np.where(hold, h_prev, h_new)
    m = np.where(hold, m_prev, m_new)
    m = np.where(h > 0.0, m, 0.0)
    return h, m, hold & (h_prev > 0.0)


def update_all_points(P, I, b_iface_ext, b_center_ext, dx, dt, constants: Constants,
                      K_lo: int, K_hi: int):
    """Raw candidates at t + dt/2 and t + dt for interfaces K_lo..K_hi.

    Freezing is applied by the caller, which owns the last accepted values.
    """
    c = constants
    args = (P, I, b_iface_ext, b_center_ext, dx, c.g, c.dry_avg_tol, c.E_max, c.limiting,
            c.entropy_fix, c.well_balance, c.froude_wb_threshold)
    hh, mh, vh, _ = evolve_points(K_lo, K_hi, 0.5 * dt, *args)
    hf, mf, vf, wbf = evolve_points(K_lo, K_hi, dt, *args)
    return hh, mh, hf, mf, vh | vf, wbf
