"""Third-order Active Flux solver for the 1D shallow water equations."""
from .core import (BottomTopography, BoundaryKind, ConservedPair, Constants, Grid, SolutionState,
                   project_bottom)
from .driver import StepReport, compute_dt, initialize, l1_error, run, step
from .reconstruction import CaseTag, build_cell_reconstruction

__all__ = [
    "BottomTopography", "BoundaryKind", "CaseTag", "ConservedPair", "Constants", "Grid",
    "SolutionState", "StepReport", "build_cell_reconstruction", "compute_dt", "initialize",
    "l1_error", "project_bottom", "run", "step",
]
