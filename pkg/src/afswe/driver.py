"""Time stepping, boundary handling, initialization and error norms."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

from .averages import apply_average_update, cell_sources, draining_fixpoint, simpson_flux
from .core import N_GHOST, BottomTopography, BoundaryKind, Constants, Grid, SolutionState
from .evolution import freeze, update_all_points
from .reconstruction import I_ANOMALY, I_TAG, CaseTag, reconstruct_cells


@dataclass
class StepReport:
    t: float
    dt: float
    n_drained_cells: int
    n_frozen_points: int
    n_vacuum_points: int
    n_cells_per_case: dict = field(default_factory=dict)
    max_froude: float = 0.0
    boundary_mass_flux: float = 0.0  # mass leaving through the boundaries during the step
    n_anomalies: int = 0

    def as_row(self) -> dict:
        row = {k: getattr(self, k) for k in ("t", "dt", "n_drained_cells", "n_frozen_points",
                                             "n_vacuum_points", "max_froude", "boundary_mass_flux",
                                             "n_anomalies")}
        for tag in CaseTag:
            row[f"n_{tag.name.lower()}"] = self.n_cells_per_case.get(tag.name, 0)
        return row


# ---------------------------------------------------------------------------
# boundaries


def apply_boundary(state: SolutionState, grid: Grid, boundary_state: SolutionState | None = None):
    """Ghost-extended copies (h_avg, m_avg, h_pts, m_pts) of the state.

    Periodic grids wrap around.  Outflow copies the boundary cell and point
    into the ghosts.  Both Dirichlet kinds fill the ghosts from
    ``boundary_state`` (the initial data).
    """
    G, n = N_GHOST, grid.n_cells
    kind = grid.boundary_kind
    if kind is BoundaryKind.PERIODIC:
        ic = np.arange(-G, n + G) % n
        ip = np.arange(-G, n + G + 1) % n
        return state.h_avg[ic], state.m_avg[ic], state.h_pts[ip], state.m_pts[ip]
    if kind is BoundaryKind.OUTFLOW_EXTRAPOLATE:
        src = state
    else:
        if boundary_state is None:
            raise ValueError("Dirichlet boundaries need the initial state as boundary data")
        src = boundary_state

    def pad(a_int, a_src):
        return np.concatenate([np.full(G, a_src[0]), a_int, np.full(G, a_src[-1])])

    return (pad(state.h_avg, src.h_avg), pad(state.m_avg, src.m_avg),
            pad(state.h_pts, src.h_pts), pad(state.m_pts, src.m_pts))


def _height_for_discharge(Q_out, m_fix, g):
    """h with 2 sqrt(g h) - |m_fix| / h = Q_out, or None."""
    if Q_out <= 0.0:
        return None
    a = abs(m_fix)
    if a == 0.0:
        return (0.5 * Q_out) ** 2 / g

    def f(h):
        return 2.0 * math.sqrt(g * h) - a / h - Q_out

    lo = a / (2.0 * Q_out + 1e-300)
    while f(lo) > 0.0:
        lo *= 0.5
    hi = max((Q_out / 2.0) ** 2 / g, lo) * 2.0
    while f(hi) < 0.0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def subcritical_boundary_value(h, m, side: str, m_fix, g):
    """Boundary point value for Dirichlet data at a subcritical boundary.

    ``side`` is "left" or "right".  At an inflow boundary (fixed discharge
    pointing into the domain) the discharge is imposed and the height
    follows from the outgoing characteristic.  Elsewhere the point keeps its
    evolved value: the data already enter through the ghost cells along the
    incoming characteristic, and the outgoing waves leave without reflection.
    """
    if side == "left":
        inflow = m_fix > 0.0
        Q_out = 2.0 * math.sqrt(g * h) - m / h if h > 0.0 else 0.0
    else:
        inflow = m_fix < 0.0
        Q_out = 2.0 * math.sqrt(g * h) + m / h if h > 0.0 else 0.0
    if not inflow:
        return h, m
    hn = _height_for_discharge(Q_out, m_fix, g)
    if hn is None:
        return h, m
    return hn, m_fix


# ---------------------------------------------------------------------------
# time step


def max_wave_speed(state: SolutionState, constants: Constants) -> float:
    """max(|v| + c) over wet point values, 0 if all are dry."""
    h, m = state.h_pts, state.m_pts
    wet = h >= constants.dry_avg_tol
    if not np.any(wet):
        return 0.0
    hw = h[wet]
    return float(np.max(np.abs(m[wet] / hw) + np.sqrt(constants.g * hw)))


def compute_dt(state: SolutionState, grid: Grid, constants: Constants) -> float:
    """cfl * dx / max(|v| + c) over the point values."""
    s = max_wave_speed(state, constants)
    if s == 0.0:
        warnings.warn("all point values are dry; using a unit wave speed", RuntimeWarning)
        return constants.cfl * grid.dx / math.sqrt(constants.g)
    return constants.cfl * grid.dx / s


def _max_froude(h, m, g, tol):
    wet = h >= tol
    if not np.any(wet):
        return 0.0
    return float(np.max(np.abs(m[wet] / h[wet]) / np.sqrt(g * h[wet])))


def clip_shore_velocity(h_avg, m_avg, h_pts, m_pts, h_prev, m_prev):
    """Keep the velocity of cells touching a dry point within that of their wet neighbours.

    The average of a cell at a wet/dry front holds little water, so small
    momentum errors become large velocities that throw a thin layer ahead of
    the front.  The bound is the range of velocities at the wet points among
    the two nearest on each side (new values) and of the adjacent cell
    averages (old values).
    """
    n = h_avg.size
    out = np.array(m_avg, dtype=float)
    for i in range(n):
        if h_avg[i] <= 0.0 or (h_pts[i] > 0.0 and h_pts[i + 1] > 0.0):
            continue
        vs = [m_pts[j] / h_pts[j] for j in range(max(i - 1, 0), min(i + 3, n + 1)) if h_pts[j] > 0.0]
        vs += [m_prev[j] / h_prev[j] for j in (i - 1, i + 1) if 0 <= j < n and h_prev[j] > 0.0]
        if vs:
            out[i] = h_avg[i] * min(max(out[i] / h_avg[i], min(vs)), max(vs))
    return out


def step(state: SolutionState, bottom: BottomTopography, constants: Constants,
         dt: float | None = None, boundary_state: SolutionState | None = None):
    """Advance by one time step; returns (new_state, StepReport)."""
    c = constants
    grid = bottom.grid
    G, n, dx = N_GHOST, grid.n_cells, grid.dx
    periodic = grid.periodic
    kind = grid.boundary_kind
    if dt is None:
        dt = compute_dt(state, grid, c)
    hA, mA, hP, mP = apply_boundary(state, grid, boundary_state)
    P, I = reconstruct_cells(hA, mA, hP, mP, bottom.b_iface, bottom.b_center, dx,
                             c.dry_avg_tol, c.limiting, c.positivity)
    K_hi = G + n - 1 if periodic else G + n
    hh, mh, hf, mf, vac, _ = update_all_points(P, I, bottom.b_iface, bottom.b_center, dx, dt, c, G, K_hi)
    if periodic:
        hh, mh, hf, mf = (np.append(a, a[0]) for a in (hh, mh, hf, mf))
        vac = np.append(vac, vac[0])
    if kind is BoundaryKind.DIRICHLET_FROZEN:
        for j in (0, n):
            hh[j] = hf[j] = boundary_state.h_pts[j]
            mh[j] = mf[j] = boundary_state.m_pts[j]
    elif kind is BoundaryKind.SUBCRITICAL_DIRICHLET:
        for j, side in ((0, "left"), (n, "right")):
            mfix = boundary_state.m_pts[j]
            hh[j], mh[j] = subcritical_boundary_value(hh[j], mh[j], side, mfix, c.g)
            hf[j], mf[j] = subcritical_boundary_value(hf[j], mf[j], side, mfix, c.g)
    hh, mh, _ = freeze(hh, mh, state.h_pts, state.m_pts, c.eps_freeze)
    hf, mf, frozen = freeze(hf, mf, state.h_pts, state.m_pts, c.eps_freeze)

    flux = simpson_flux((state.h_pts, state.m_pts), (hh, mh), (hf, mf), c.g)
    fh, fm = flux.fh, flux.fm
    if periodic:
        fh, fm = fh[:n], fm[:n]
    source = cell_sources(P, I, bottom.b_iface, bottom.b_center, state.h_pts, hh, hf, G, n, dx,
                          c.g, c.E_max, c.limiting)
    fh, fm, _, drained = draining_fixpoint(state.h_avg, fh, fm, dt, dx, periodic, c.dry_avg_tol)
    h_new, m_new, emptied = apply_average_update(state.h_avg, state.m_avg, fh, fm, source, dt, dx,
                                                 periodic, c.dry_avg_tol)
    m_new = clip_shore_velocity(h_new, m_new, hf, mf, state.h_avg, state.m_avg)
    idx = np.nonzero(emptied)[0]
    if idx.size:
        for j in np.concatenate([idx, idx + 1]):
            hf[j] = mf[j] = 0.0
            frozen[j] = False
        if periodic:
            if emptied[-1]:
                hf[0] = mf[0] = 0.0
                frozen[0] = False
            if emptied[0]:
                hf[n] = mf[n] = 0.0
                frozen[n] = False
    if periodic:
        hf[n], mf[n], frozen[n] = hf[0], mf[0], frozen[0]

    tags = I[G:G + n, I_TAG]
    counts = {k: int(v) for k, v in enumerate(np.bincount(tags, minlength=len(CaseTag))) if v}
    report = StepReport(
        t=state.t + dt, dt=dt, n_drained_cells=len(drained),
        n_frozen_points=int(np.count_nonzero(frozen[:n] if periodic else frozen)),
        n_vacuum_points=int(np.count_nonzero(vac[:n] if periodic else vac)),
        n_cells_per_case={CaseTag(k).name: v for k, v in sorted(counts.items())},
        max_froude=_max_froude(state.h_pts, state.m_pts, c.g, c.dry_avg_tol),
        boundary_mass_flux=0.0 if periodic else dt * float(fh[n] - fh[0]),
        n_anomalies=int(np.count_nonzero(I[G:G + n, I_ANOMALY])),
    )
    new = SolutionState(h_new, m_new, hf, mf, frozen, state.t + dt)
    return new, report


def run(state: SolutionState, bottom: BottomTopography, constants: Constants, t_end: float,
        boundary_state: SolutionState | None = None, output_times: Iterable[float] = (),
        on_output: Callable | None = None, on_step: Callable | None = None,
        max_steps: int | None = None) -> SolutionState:
    """Step to ``t_end``, landing exactly on every requested output time."""
    if boundary_state is None:
        boundary_state = state.copy()
    output_times = list(output_times)
    targets = sorted(t for t in output_times if state.t < t < t_end) + [t_end]
    steps = 0
    for target in targets:
        while state.t < target:
            dt = compute_dt(state, bottom.grid, constants)
            last = state.t + dt >= target
            if last:
                dt = target - state.t
            state, report = step(state, bottom, constants, dt, boundary_state)
            if last:
                state.t = target
            steps += 1
            if on_step is not None:
                on_step(state, report)
            if max_steps is not None and steps >= max_steps:
                return state
        if on_output is not None and target in output_times:
            on_output(state)
    return state


# ---------------------------------------------------------------------------
# initialization


def _shore_bisect(wet, lo, hi):
    """Boundary between a wet point ``lo`` and a dry point ``hi`` (either order)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if wet(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def initialize(h0: Callable, m0: Callable, bottom: BottomTopography, grid: Grid | None = None,
               n_probe: int = 17) -> SolutionState:
    """Point values from the data, averages by Simpson's rule with a shore search.

    ``h0`` and ``m0`` take arrays of positions.  A cell whose probes show
    one wet/dry change gets its average from the wet part only.
    """
    grid = grid or bottom.grid

    def q(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        h = np.asarray(np.broadcast_to(h0(x), x.shape), dtype=float)
        m = np.asarray(np.broadcast_to(m0(x), x.shape), dtype=float)
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(m))):
            raise ValueError("initial data are not finite")
        h = np.where(h > 0.0, h, 0.0)
        return h, np.where(h > 0.0, m, 0.0)

    n, dx = grid.n_cells, grid.dx
    xi = grid.interfaces
    hp, mp = q(xi)
    xc = grid.centers
    hc, mc = q(xc)
    h_avg = (hp[:-1] + 4.0 * hc + hp[1:]) / 6.0
    m_avg = (mp[:-1] + 4.0 * mc + mp[1:]) / 6.0

    s = np.linspace(0.0, 1.0, n_probe)
    for i in range(n):
        xL = xi[i]
        probes = xL + s * dx
        probes[-1] = xi[i + 1]
        hw, _ = q(probes)
        wet = hw > 0.0
        changes = int(np.count_nonzero(wet[1:] != wet[:-1]))
        if changes == 0:
            if not wet.any():
                h_avg[i] = m_avg[i] = 0.0
            continue
        if changes > 1:
            raise ValueError(f"cell {i} on [{xL}, {xi[i + 1]}] holds more than one shore; "
                             "increase n_cells so every cell has at most one")
        k = int(np.nonzero(wet[1:] != wet[:-1])[0][0])
        a, b = probes[k], probes[k + 1]
        is_wet = lambda x: bool(q(x)[0][0] > 0.0)
        if wet[k]:
            xs = _shore_bisect(is_wet, a, b)
            lo, hi = xL, xs
            qa = (hp[i], mp[i])
        else:
            xs = _shore_bisect(is_wet, b, a)
            lo, hi = xs, xi[i + 1]
            qa = (hp[i + 1], mp[i + 1])
        hm, mm = q(0.5 * (lo + hi))
        hs, ms = q(xs)
        w = (hi - lo) / dx
        h_avg[i] = (qa[0] + 4.0 * hm[0] + hs[0]) / 6.0 * w
        m_avg[i] = (qa[1] + 4.0 * mm[0] + ms[0]) / 6.0 * w
    if grid.periodic:
        hp[-1], mp[-1] = hp[0], mp[0]
    m_avg = np.where(h_avg > 0.0, m_avg, 0.0)
    return SolutionState(h_avg, m_avg, hp, mp, np.zeros(n + 1, dtype=bool), 0.0)


# ---------------------------------------------------------------------------
# errors


def l1_error(state: SolutionState, reference, grid: Grid):
    """L1 norm over point values, dx * sum |q - q_ref|.

    ``reference`` is either a callable ``x -> (h, m)`` or a state on a grid
    refined by an integer factor whose points include the coarse ones.
    """
    n = grid.n_cells
    npts = n if grid.periodic else n + 1
    if callable(reference):
        h_ref, m_ref = reference(grid.interfaces)
        h_ref = np.asarray(h_ref, dtype=float)
        m_ref = np.asarray(m_ref, dtype=float)
    else:
        nr = reference.n_cells
        if nr % n != 0:
            raise ValueError(f"reference grid of {nr} cells does not refine {n} cells")
        r = nr // n
        h_ref = reference.h_pts[::r]
        m_ref = reference.m_pts[::r]
    if h_ref.size != n + 1:
        raise ValueError("reference does not match the grid")
    eh = grid.dx * float(np.sum(np.abs(state.h_pts[:npts] - h_ref[:npts])))
    em = grid.dx * float(np.sum(np.abs(state.m_pts[:npts] - m_ref[:npts])))
    return eh, em


def convergence_order(err_coarse: float, err_fine: float, ratio: float = 2.0) -> float:
    return math.log(err_coarse / err_fine) / math.log(ratio)
