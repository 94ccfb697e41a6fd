"""CSV snapshots of a solution state.

A snapshot is two files next to each other: ``<stem>_points.csv`` with
columns ``x,h,m,b,level,frozen`` and ``<stem>_averages.csv`` with columns
``x_center,h_avg,m_avg,case_tag``.  Floats are written with 17 significant
digits so that reading a snapshot back gives the stored binary64 values.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import N_GHOST, BottomTopography, Constants, SolutionState
from .reconstruction import I_TAG, reconstruct_cells

POINT_COLUMNS = ("x", "h", "m", "b", "level", "frozen")
AVERAGE_COLUMNS = ("x_center", "h_avg", "m_avg", "case_tag")


class Snapshot(NamedTuple):
    x: np.ndarray
    h: np.ndarray
    m: np.ndarray
    b: np.ndarray
    level: np.ndarray
    frozen: np.ndarray
    x_center: np.ndarray
    h_avg: np.ndarray
    m_avg: np.ndarray
    case_tag: np.ndarray


def _fmt(v: float) -> str:
    return format(float(v) + 0.0, ".17g")  # + 0.0 turns -0.0 into 0


def snapshot_paths(path) -> tuple[Path, Path]:
    """(points, averages) file names for a path given with or without a .csv suffix."""
    p = Path(path)
    stem = p.with_suffix("") if p.suffix == ".csv" else p
    return (stem.parent / f"{stem.name}_points.csv", stem.parent / f"{stem.name}_averages.csv")


def case_tags(state: SolutionState, bottom: BottomTopography, constants) -> np.ndarray:
    """Reconstruction case of every cell for the given state."""
    from .driver import apply_boundary

    grid = bottom.grid
    hA, mA, hP, mP = apply_boundary(state, grid, state)
    _, I = reconstruct_cells(hA, mA, hP, mP, bottom.b_iface, bottom.b_center, grid.dx,
                             constants.dry_avg_tol, constants.limiting, constants.positivity)
    return I[N_GHOST:N_GHOST + grid.n_cells, I_TAG].astype(int)


def emit_snapshot(state: SolutionState, bottom: BottomTopography, path, constants=None,
                  tags: np.ndarray | None = None) -> tuple[Path, Path]:
    """Write the points and averages files; returns their paths.

    Case tags are computed from the state unless given.  Raises OSError
    naming the file on I/O failure.
    """
    grid = bottom.grid
    if tags is None:
        tags = case_tags(state, bottom, constants or Constants())
    G, n = N_GHOST, grid.n_cells
    b = bottom.b_iface[G:G + n + 1]
    h, m = state.h_pts, state.m_pts
    p_pts, p_avg = snapshot_paths(path)
    try:
        p_pts.parent.mkdir(parents=True, exist_ok=True)
        with open(p_pts, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(POINT_COLUMNS)
            for j in range(n + 1):
                w.writerow([_fmt(grid.interfaces[j]), _fmt(h[j]), _fmt(m[j]), _fmt(b[j]),
                            _fmt(h[j] + b[j]), int(bool(state.frozen[j]))])
        with open(p_avg, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(AVERAGE_COLUMNS)
            for i in range(n):
                w.writerow([_fmt(grid.centers[i]), _fmt(state.h_avg[i]), _fmt(state.m_avg[i]),
                            int(tags[i])])
    except OSError as e:
        raise OSError(f"cannot write snapshot {e.filename or path}: {e.strerror or e}") from e
    return p_pts, p_avg


def read_snapshot(path) -> Snapshot:
    """Parse a snapshot written by :func:`emit_snapshot`."""
    p_pts, p_avg = snapshot_paths(path)

    def load(p, columns):
        with open(p, newline="") as f:
            rows = list(csv.reader(f))
        if not rows or tuple(rows[0]) != columns:
            raise ValueError(f"{p}: expected header {','.join(columns)}")
        return [list(col) for col in zip(*rows[1:])] if len(rows) > 1 else [[] for _ in columns]

    x, h, m, b, level, frozen = load(p_pts, POINT_COLUMNS)
    xc, ha, ma, tag = load(p_avg, AVERAGE_COLUMNS)
    fl = lambda col: np.array(col, dtype=float)
    return Snapshot(fl(x), fl(h), fl(m), fl(b), fl(level), np.array(frozen, dtype=int).astype(bool),
                    fl(xc), fl(ha), fl(ma), np.array(tag, dtype=int))


def state_from_snapshot(snap: Snapshot, t: float = 0.0) -> SolutionState:
    return SolutionState(snap.h_avg.copy(), snap.m_avg.copy(), snap.h.copy(), snap.m.copy(),
                         snap.frozen.copy(), t)
