"""Grid, state containers, bottom projection and the h = 0 regularisations.

Scalar kernels are compiled with numba so that the per-point evolution and
the per-cell reconstruction can call them from inside jitted loops; they are
equally callable from plain Python.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from numba import njit

#: ghost cells on each side of the extended arrays
N_GHOST = 2


class BoundaryKind(enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET_FROZEN = "dirichlet"
    OUTFLOW_EXTRAPOLATE = "outflow"
    # ghosts hold the initial data; at inflow boundaries the point keeps its
    # outgoing characteristic and takes the discharge from the initial data
    SUBCRITICAL_DIRICHLET = "subcritical"


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int
    boundary_kind: BoundaryKind = BoundaryKind.PERIODIC

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be positive")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def interfaces(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def periodic(self) -> bool:
        return self.boundary_kind is BoundaryKind.PERIODIC


@dataclass(frozen=True)
class Constants:
    g: float = 9.812
    eps_freeze: float = 1e-7
    dry_avg_tol: float = 1e-14
    E_max: float = 50.0
    froude_wb_threshold: float = 1.0
    cfl: float = 0.7
    # switches; the smooth convergence study runs with limiting and the
    # positivity cases disabled while well-balancing stays on
    limiting: bool = True
    positivity: bool = True
    entropy_fix: bool = True
    well_balance: bool = True

    def __post_init__(self):
        for name in ("g", "eps_freeze", "dry_avg_tol", "E_max", "froude_wb_threshold", "cfl"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.E_max > 1:
            raise ValueError("E_max must exceed 1")


class ConservedPair(NamedTuple):
    h: float
    m: float

    @classmethod
    def make(cls, h: float, m: float, dry_avg_tol: float = 1e-14) -> "ConservedPair":
        """Clamp round-off negative heights to a dry state; reject real negatives."""
        if not (math.isfinite(h) and math.isfinite(m)):
            raise ValueError(f"non-finite state ({h}, {m})")
        if h < -dry_avg_tol:
            raise ValueError(f"negative water height {h}")
        if h <= 0.0:
            return cls(0.0, 0.0)
        return cls(float(h), float(m))


class CharState(NamedTuple):
    Qp: float
    Qm: float
    lp: float
    lm: float
    Sp: float
    Sm: float


# ---------------------------------------------------------------------------
# characteristic transforms and fluxes


@njit(cache=True, inline="always")
def to_char(h, m, g):
    """Q+- = 2c +- v; both vanish for h <= 0."""
    if h <= 0.0:
        return 0.0, 0.0
    c = math.sqrt(g * h)
    v = m / h if h >= 1e-14 else 0.0
    return 2.0 * c + v, 2.0 * c - v


@njit(cache=True, inline="always")
def from_char(Qp, Qm, g):
    c = 0.25 * (Qp + Qm)
    if c <= 0.0:
        return 0.0, 0.0
    h = c * c / g
    v = 0.5 * (Qp - Qm)
    return h, h * v


@njit(cache=True, inline="always")
def char_speeds(Qp, Qm, g, dry_tol):
    """lambda+- = v +- c computed from characteristic values; zero for (near) dry states."""
    c = 0.25 * (Qp + Qm)
    if c <= 0.0:
        return 0.0, 0.0
    if c * c / g < dry_tol:
        return 0.0, 0.0
    v = 0.5 * (Qp - Qm)
    return v + c, v - c


@njit(cache=True)
def physical_flux(h, m, g):
    if h <= 0.0:
        return 0.0, 0.0
    return m, m * m / h + 0.5 * g * h * h


@njit(cache=True)
def wave_speed(h, m, g, dry_tol):
    """|v| + c, zero below the dry tolerance."""
    if h < dry_tol:
        return 0.0
    return abs(m / h) + math.sqrt(g * h)


# ---------------------------------------------------------------------------
# bottom topography


@njit(cache=True, inline="always")
def parabola_lagrange(vL, vC, vR, s):
    """Parabola through (0, vL), (1/2, vC), (1, vR); bit-exact at the three nodes."""
    if s == 0.0:
        return vL
    if s == 1.0:
        return vR
    return vL * (1.0 - s) * (1.0 - 2.0 * s) + 4.0 * vC * s * (1.0 - s) + vR * s * (2.0 * s - 1.0)


@njit(cache=True, inline="always")
def bottom_value(bL, bC, bR, dx, x):
    return parabola_lagrange(bL, bC, bR, x / dx + 0.5)


@njit(cache=True, inline="always")
def bottom_slope(bL, bC, bR, dx, x):
    b1 = (bR - bL) / dx
    b2 = 2.0 * (bR - 2.0 * bC + bL) / (dx * dx)
    return b1 + 2.0 * b2 * x


@dataclass
class BottomTopography:
    """Globally continuous piecewise parabola stored by its samples.

    ``b_iface`` and ``b_center`` cover the ghost-extended grid: interior cell
    ``i`` has samples ``b_iface[i + N_GHOST]``, ``b_center[i + N_GHOST]`` and
    ``b_iface[i + N_GHOST + 1]``.  Continuity is exact by construction since
    neighbouring cells share the interface sample.
    """

    grid: Grid
    b_iface: np.ndarray
    b_center: np.ndarray
    analytic: Callable | None = field(default=None, repr=False)

    @property
    def dx(self) -> float:
        return self.grid.dx

    def samples(self, i: int) -> tuple[float, float, float]:
        k = i + N_GHOST
        return float(self.b_iface[k]), float(self.b_center[k]), float(self.b_iface[k + 1])

    def coefficients(self) -> np.ndarray:
        """(b0, b1, b2) per interior cell, local coordinate centred at x_i."""
        n, G = self.grid.n_cells, N_GHOST
        bL = self.b_iface[G:G + n]
        bR = self.b_iface[G + 1:G + n + 1]
        bC = self.b_center[G:G + n]
        dx = self.dx
        return np.column_stack([bC, (bR - bL) / dx, 2.0 * (bR - 2.0 * bC + bL) / dx**2])

    def interface_values(self) -> np.ndarray:
        G = N_GHOST
        return self.b_iface[G:G + self.grid.n_cells + 1].copy()

    def center_values(self) -> np.ndarray:
        G = N_GHOST
        return self.b_center[G:G + self.grid.n_cells].copy()

    def __call__(self, x) -> np.ndarray:
        """Evaluate the projected bottom at global positions."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        grid = self.grid
        idx = np.clip(np.floor((x - grid.x_min) / grid.dx).astype(int), -N_GHOST, grid.n_cells + N_GHOST - 1)
        out = np.empty_like(x)
        for n, (i, xv) in enumerate(zip(idx, x)):
            xl = xv - (grid.x_min + (i + 0.5) * grid.dx)
            k = i + N_GHOST
            out[n] = bottom_value(self.b_iface[k], self.b_center[k], self.b_iface[k + 1], grid.dx, xl)
        return out


def project_bottom(b_analytic: Callable, grid: Grid) -> BottomTopography:
    """Interpolate ``b_analytic`` at interfaces and centres of every cell.

    Ghost cells are included.  On periodic grids the ghost samples are copies
    of the interior ones and the seam uses ``b(x_min)`` on both ends.
    """
    G, n, dx = N_GHOST, grid.n_cells, grid.dx
    xi = grid.x_min + (np.arange(-G, n + G + 1)) * dx
    xc = grid.x_min + (np.arange(-G, n + G) + 0.5) * dx
    bi = np.asarray(np.broadcast_to(b_analytic(xi), xi.shape), dtype=float).copy()
    bc = np.asarray(np.broadcast_to(b_analytic(xc), xc.shape), dtype=float).copy()
    if not (np.all(np.isfinite(bi)) and np.all(np.isfinite(bc))):
        raise ValueError("bottom topography has non-finite samples")
    if grid.periodic:
        interior_i = bi[G:G + n + 1].copy()
        interior_i[-1] = interior_i[0]
        interior_c = bc[G:G + n].copy()
        bi = np.concatenate([interior_i[n - G:n], interior_i, interior_i[1:G + 1]])
        bc = np.concatenate([interior_c[n - G:], interior_c, interior_c[:G]])
    return BottomTopography(grid, bi, bc, b_analytic)


def bottom_eval(b: BottomTopography, i: int, x_local: float) -> float:
    dx = b.dx
    if abs(x_local) > 0.5 * dx:
        raise ValueError(f"x_local={x_local} outside cell of width {dx}")
    bL, bC, bR = b.samples(i)
    return float(bottom_value(bL, bC, bR, dx, x_local))


def bottom_deriv(b: BottomTopography, i: int, x_local: float) -> float:
    dx = b.dx
    if abs(x_local) > 0.5 * dx:
        raise ValueError(f"x_local={x_local} outside cell of width {dx}")
    bL, bC, bR = b.samples(i)
    return float(bottom_slope(bL, bC, bR, dx, x_local))


# ---------------------------------------------------------------------------
# solution state


@dataclass
class SolutionState:
    """Cell averages, shared interface values and freeze flags.

    ``h_pts``/``m_pts`` have ``n_cells + 1`` entries; on periodic grids the
    last one mirrors the first.  A point flagged in ``frozen`` kept its
    previous accepted value because the candidate update fell below the
    freeze threshold; the stored point value is that last accepted value.
    """

    h_avg: np.ndarray
    m_avg: np.ndarray
    h_pts: np.ndarray
    m_pts: np.ndarray
    frozen: np.ndarray
    t: float = 0.0

    def copy(self) -> "SolutionState":
        return SolutionState(self.h_avg.copy(), self.m_avg.copy(), self.h_pts.copy(),
                             self.m_pts.copy(), self.frozen.copy(), self.t)

    @property
    def n_cells(self) -> int:
        return self.h_avg.size

    def check(self, periodic: bool = False) -> None:
        if np.any(self.h_avg < 0) or np.any(self.h_pts < 0):
            raise ValueError("negative water height in state")
        if periodic and (self.h_pts[0] != self.h_pts[-1] or self.m_pts[0] != self.m_pts[-1]):
            raise ValueError("periodic point values are not identified")
