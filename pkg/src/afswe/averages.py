"""Conservative update of cell averages.

Fluxes are Simpson combinations of the point values at t^n, t^{n+1/2} and
t^{n+1}.  The momentum source uses a quadrature built from the three bottom
samples of a cell that is exact at the lake at rest.  A draining fixpoint
scales fluxes so that no average turns negative.
"""
from __future__ import annotations

import warnings
from collections import deque
from typing import NamedTuple

import numpy as np
from numba import njit

from .core import bottom_value
from .reconstruction import C_SHORE, I_TAG, CaseTag, CellReconstruction, eval_h

SPLIT_TAGS = (int(CaseTag.CASE_B), int(CaseTag.CASE_B_EXCEPTIONAL),
              int(CaseTag.CASE_C), int(CaseTag.CASE_C_EXCEPTIONAL))


class InterfaceFlux(NamedTuple):
    fh: np.ndarray
    fm: np.ndarray
    drain_scale: np.ndarray


class SourceQuadratureInputs(NamedTuple):
    hR: tuple  # right interface (t^n, t^{n+1/2}, t^{n+1})
    hL: tuple
    h_center: float
    betas: tuple  # (b1R, b1L, b2R, b2L, b0)


def _flux(h, m, g):
    h = np.asarray(h, dtype=float)
    m = np.asarray(m, dtype=float)
    wet = h > 0.0
    hs = np.where(wet, h, 1.0)
    fh = np.where(wet, m, 0.0)
    fm = np.where(wet, m * m / hs + 0.5 * g * h * h, 0.0)
    return fh, fm


def simpson_flux(q_n, q_half, q_full, g: float) -> InterfaceFlux:
    """Simpson's rule in time of the physical flux; each q is an (h, m) pair of arrays."""
    f0h, f0m = _flux(*q_n, g)
    f1h, f1m = _flux(*q_half, g)
    f2h, f2m = _flux(*q_full, g)
    fh = (f0h + 4.0 * f1h + f2h) / 6.0
    fm = (f0m + 4.0 * f1m + f2m) / 6.0
    return InterfaceFlux(fh, fm, np.ones_like(fh))


@njit(cache=True)
def betas(bL, bC, bR, dx):
    """Slope weights of the quadrature; each approximates b'(center).

    Written in differences so that a flat bottom gives exact zeros.
    """
    dR = bR - bC
    dL = bC - bL
    b1R = (5.0 * dR + dL) / (3.0 * dx)
    b1L = (dR + 5.0 * dL) / (3.0 * dx)
    b2R = (7.0 * dR + 11.0 * dL) / (9.0 * dx)
    b2L = (11.0 * dR + 7.0 * dL) / (9.0 * dx)
    b0 = (bR - bL) / dx
    return b1R, b1L, b2R, b2L, b0


@njit(cache=True)
def quadrature_kernel(hR0, hR1, hR2, hL0, hL1, hL2, hC, b1R, b1L, b2R, b2L, b0):
    """Mean of h b' over a cell and a time step (no -g factor).

    hX0, hX1, hX2 are values at t^n, t^{n+1/2}, t^{n+1}; hC is h^n at the centre.
    """
    return ((hR2 / 12.0 + hR1 / 3.0) * b1R + (hL2 / 12.0 + hL1 / 3.0) * b1L
            - 0.25 * hR0 * b2R - 0.25 * hL0 * b2L + (2.0 / 3.0) * hC * b0)


def source_quadrature(inputs: SourceQuadratureInputs, g: float) -> float:
    """Momentum source rate -g <h b'> of one cell."""
    hR0, hR1, hR2 = inputs.hR
    hL0, hL1, hL2 = inputs.hL
    return -g * float(quadrature_kernel(hR0, hR1, hR2, hL0, hL1, hL2, inputs.h_center, *inputs.betas))


def quadrature_center(recon: CellReconstruction) -> float:
    """Midpoint of the wet part for half-wet cells, else the cell centre."""
    half = 0.5 * recon.dx
    xs = recon.shore
    tag = recon.case_tag
    if xs is None:
        return 0.0
    if tag in (CaseTag.CASE_B, CaseTag.CASE_B_EXCEPTIONAL):
        return 0.5 * (-half + xs)
    if tag in (CaseTag.CASE_C, CaseTag.CASE_C_EXCEPTIONAL):
        return 0.5 * (xs + half)
    return 0.0


@njit(cache=True)
def _sub_interval(a, c, ha0, ha1, ha2, hc0, hc1, hc2, P, I, k, bL, bC, bR, dx, E_max, limiting):
    """Quadrature over [a, c] inside cell k, weighted by its length fraction."""
    L = c - a
    if L < 1e-14 * dx:
        return 0.0
    mid = 0.5 * (a + c)
    ba = bottom_value(bL, bC, bR, dx, a)
    bm = bottom_value(bL, bC, bR, dx, mid)
    bc = bottom_value(bL, bC, bR, dx, c)
    hm = eval_h(P, I, k, mid, bL, bC, bR, dx, E_max, limiting)
    b1R, b1L, b2R, b2L, b0 = betas(ba, bm, bc, L)
    return (L / dx) * quadrature_kernel(hc0, hc1, hc2, ha0, ha1, ha2, hm, b1R, b1L, b2R, b2L, b0)


@njit(cache=True)
def cell_sources(P, I, bI, bC, h0, h1, h2, G, n, dx, g, E_max, limiting):
    """Momentum source rate of interior cells 0..n-1.

    h0, h1, h2 hold point values of interior interfaces 0..n at the three
    time levels.  Half-wet cells are split at the shore and each part gets
    its own quadrature; the shore values follow the constant side in time.
    """
    S = np.zeros(n)
    half = 0.5 * dx
    for i in range(n):
        k = i + G
        bL, bc, bR = bI[k], bC[k], bI[k + 1]
        tag = I[k, I_TAG]
        if tag == 0:
            continue
        if tag >= 4:
            xs = P[k, C_SHORE]
            hs = eval_h(P, I, k, xs, bL, bc, bR, dx, E_max, limiting)
            if tag <= 5:  # constant side on the right
                d1 = h1[i + 1] - h0[i + 1]
                d2 = h2[i + 1] - h0[i + 1]
            else:
                d1 = h1[i] - h0[i]
                d2 = h2[i] - h0[i]
            s1, s2 = hs + d1, hs + d2
            q = _sub_interval(-half, xs, h0[i], h1[i], h2[i], hs, s1, s2,
                              P, I, k, bL, bc, bR, dx, E_max, limiting)
            q += _sub_interval(xs, half, hs, s1, s2, h0[i + 1], h1[i + 1], h2[i + 1],
                               P, I, k, bL, bc, bR, dx, E_max, limiting)
        else:
            hC = eval_h(P, I, k, 0.0, bL, bc, bR, dx, E_max, limiting)
            b1R, b1L, b2R, b2L, b0 = betas(bL, bc, bR, dx)
            q = quadrature_kernel(h0[i + 1], h1[i + 1], h2[i + 1], h0[i], h1[i], h2[i], hC,
                                  b1R, b1L, b2R, b2L, b0)
        S[i] = -g * q
    return S


def draining_fixpoint(h_avg, fh, fm, dt, dx, periodic: bool, tol: float = 1e-14):
    """Scale fluxes of cells that would drain below zero.

    ``fh``/``fm`` hold interface fluxes: ``n + 1`` entries, or ``n`` on
    periodic grids where cell ``i`` is bounded by ``i`` and ``(i + 1) % n``.
    Returns (fh, fm, scale, drained) with ``scale`` the accumulated factor per
    interface and ``drained`` the sorted list of cells whose fluxes were cut.
    """
    h_avg = np.asarray(h_avg, dtype=float)
    n = h_avg.size
    fh = np.array(fh, dtype=float)
    fm = np.array(fm, dtype=float)
    scale = np.ones_like(fh)
    lam = dt / dx

    def right(i):
        return (i + 1) % n if periodic else i + 1

    def trial(i):
        return h_avg[i] - lam * (fh[right(i)] - fh[i])

    fr = np.roll(fh, -1)[:n] if periodic else fh[1:]
    seed = np.nonzero(h_avg - lam * (fr - fh[:n]) < -tol)[0]
    queue = deque(int(i) for i in seed)
    queued = set(queue)
    drained = set()
    cap = 10 * n
    count = 0
    while queue:
        i = queue.popleft()
        queued.discard(i)
        count += 1
        if count > cap:
            warnings.warn("draining fixpoint reached its iteration cap", RuntimeWarning)
            break
        if not trial(i) < -tol:
            continue
        r = right(i)
        net = fh[r] - fh[i]
        s = h_avg[i] / (lam * net)
        for j in (i, r):
            fh[j] *= s
            fm[j] *= s
            scale[j] *= s
        drained.add(i)
        nbrs = ((i - 1) % n, (i + 1) % n) if periodic else (i - 1, i + 1)
        for j in nbrs:
            if 0 <= j < n and j not in queued and trial(j) < -tol:
                queue.append(j)
                queued.add(j)
    return fh, fm, scale, sorted(drained)


def apply_average_update(h_avg, m_avg, fh, fm, source, dt, dx, periodic: bool, tol: float = 1e-14):
    """Flux-difference update, dry snapping and source addition.

    Returns (h_new, m_new, emptied) where ``emptied`` marks cells that held
    water before and none after; their adjacent point values must be zeroed.
    """
    h_avg = np.asarray(h_avg, dtype=float)
    n = h_avg.size
    if periodic:
        dfh = np.roll(fh, -1) - fh
        dfm = np.roll(fm, -1) - fm
    else:
        dfh = fh[1:] - fh[:-1]
        dfm = fm[1:] - fm[:-1]
    lam = dt / dx
    h_new = h_avg - lam * dfh
    m_new = np.asarray(m_avg, dtype=float) - lam * dfm
    if np.any(h_new < -tol):
        bad = int(np.argmin(h_new))
        raise RuntimeError(f"cell {bad} turned negative ({h_new[bad]:.3e}) after draining")
    dry = np.abs(h_new) <= tol
    h_new[dry] = 0.0
    m_new[dry] = 0.0
    emptied = dry & (h_avg > 0.0)
    wet = h_new != 0.0
    m_new[wet] += dt * np.asarray(source, dtype=float)[:n][wet]
    return h_new, m_new, emptied
