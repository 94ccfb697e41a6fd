"""Built-in benchmark setups.

Each builder takes a parameter dict (string or numeric values) and returns a
:class:`ScenarioConfig`.  Initial data given as a water level are measured
against the projected bottom so that a lake at rest is represented exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import BottomTopography, BoundaryKind, Constants, Grid, SolutionState, project_bottom
from .driver import initialize

G_DEFAULT = 9.812


@dataclass
class ScenarioConfig:
    name: str
    x_min: float
    x_max: float
    n_cells: int
    t_end: float
    boundary_kind: BoundaryKind
    bottom: Callable[[np.ndarray], np.ndarray]
    # maps the projected bottom to (h0, m0) callables
    initial: Callable[[BottomTopography], tuple]
    cfl: float = 0.7
    g: float = G_DEFAULT
    limiting: bool = True
    positivity: bool = True
    entropy_fix: bool = True
    well_balance: bool = True
    output_times: tuple = ()
    params: dict = field(default_factory=dict)
    # optional exact solution (t, x, g) -> (h, m)
    exact: Callable | None = None
    description: str = ""

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.n_cells < 4:
            raise ValueError("n_cells must be at least 4")

    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, int(self.n_cells), self.boundary_kind)

    def constants(self) -> Constants:
        return Constants(g=self.g, cfl=self.cfl, limiting=self.limiting, positivity=self.positivity,
                         entropy_fix=self.entropy_fix, well_balance=self.well_balance)

    def setup(self) -> tuple[Grid, BottomTopography, Constants, SolutionState]:
        grid = self.grid()
        bottom = project_bottom(self.bottom, grid)
        h0, m0 = self.initial(bottom)
        return grid, bottom, self.constants(), initialize(h0, m0, bottom)

    def with_cells(self, n_cells: int) -> "ScenarioConfig":
        return replace(self, n_cells=int(n_cells))


def _level(bottom: BottomTopography, level: Callable, momentum: Callable | float = 0.0):
    def h0(x):
        return np.maximum(0.0, level(x) - bottom(x))

    def m0(x):
        if callable(momentum):
            return momentum(x)
        return np.full_like(np.asarray(x, dtype=float), float(momentum))

    return h0, m0


def _ramp(x, x0, x1, v0, v1):
    """Linear from (x0, v0) to (x1, v1), constant outside."""
    s = np.clip((np.asarray(x, dtype=float) - x0) / (x1 - x0), 0.0, 1.0)
    return v0 + (v1 - v0) * s


# ---------------------------------------------------------------------------
# builders


def four_lakes(p: dict) -> ScenarioConfig:
    level = float(p.get("level", 0.33))
    return ScenarioConfig(
        name="four-lakes", x_min=0.0, x_max=1.0, n_cells=int(p.get("n_cells", 100)),
        t_end=float(p.get("t_end", 10.0)), boundary_kind=BoundaryKind.PERIODIC,
        bottom=lambda x: 0.2 * (1.0 + np.cos(8.0 * np.pi * np.asarray(x))),
        initial=lambda b: _level(b, lambda x: np.full_like(np.asarray(x, dtype=float), level)),
        params={"level": level},
        description="lakes at rest between four dry crests")


def convergence(p: dict) -> ScenarioConfig:
    amp = float(p.get("amplitude", 0.3))
    width = float(p.get("width", 0.05))
    return ScenarioConfig(
        name="convergence", x_min=0.0, x_max=1.0, n_cells=int(p.get("n_cells", 200)),
        t_end=float(p.get("t_end", 0.03)), boundary_kind=BoundaryKind.PERIODIC,
        bottom=lambda x: 0.2 * (1.0 + np.cos(6.0 * np.pi * np.asarray(x))),
        initial=lambda b: _level(b, lambda x: 0.5 + amp * np.exp(-((np.asarray(x) - 0.5) / width) ** 2)),
        limiting=False, positivity=False,
        params={"amplitude": amp, "width": width},
        description="Gaussian surface bump over a cosine bottom, smooth and periodic")


def bouchut_accuracy(p: dict) -> ScenarioConfig:
    return ScenarioConfig(
        name="bouchut-accuracy", x_min=float(p.get("x_min", 0.0)), x_max=float(p.get("x_max", 40.0)),
        n_cells=int(p.get("n_cells", 256)), t_end=float(p.get("t_end", 1.0)),
        boundary_kind=BoundaryKind.PERIODIC,
        bottom=lambda x: np.maximum(0.0, 0.48 * (1.0 - ((np.asarray(x) - 20.0) / 4.0) ** 2)),
        initial=lambda b: (lambda x: np.full_like(np.asarray(x, dtype=float), float(p.get("h", 4.0))),
                           lambda x: np.full_like(np.asarray(x, dtype=float), float(p.get("m", 10.0)))),
        description="uniform flow over a bump with derivative jumps")


def cls04_step(p: dict) -> ScenarioConfig:
    B = float(p.get("B", 2.0))
    eps = float(p.get("eps", 0.01))
    dx = float(p.get("dx", 0.8e-3 if B >= 50 else 1e-3))
    n = int(p.get("n_cells", round(1.0 / dx)))

    def bottom(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0.5, B, _ramp(x, 0.5, 0.5 + 0.5 * eps, B, 0.0))

    def init(b):
        return (lambda x: np.where(np.asarray(x) < 0.5, 3.0, 4.0),
                lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    return ScenarioConfig(
        name="cls04-step", x_min=0.0, x_max=1.0, n_cells=n, t_end=float(p.get("t_end", 0.048)),
        boundary_kind=BoundaryKind.OUTFLOW_EXTRAPOLATE, bottom=bottom, initial=init,
        params={"B": B, "eps": eps}, description="Riemann problem across a steep regularised step")


def parabolic_bowl(p: dict) -> ScenarioConfig:
    vmax = float(p.get("v_max", 5.0))
    x0 = float(p.get("x0", 300.0 * math.sqrt(10.0)))
    H0 = float(p.get("H0", 10.0))
    g = float(p.get("g", G_DEFAULT))
    omega = math.sqrt(2.0 * g) / x0

    def level(t, x):
        return (H0 - vmax**2 / (4.0 * g) - vmax**2 / (4.0 * g) * math.cos(2.0 * omega * t)
                - math.sqrt(2.0 / g) * vmax / x0 * math.cos(omega * t) * np.asarray(x))

    def bottom(x):
        return (np.asarray(x, dtype=float) / x0) ** 2

    def exact(t, x, g_=g):
        h = np.maximum(0.0, level(t, x) - bottom(x))
        return h, h * vmax * math.sin(omega * t)

    cfg = ScenarioConfig(
        name="parabolic-bowl", x_min=-5000.0, x_max=5000.0, n_cells=int(p.get("n_cells", 200)),
        t_end=float(p.get("t_end", 5000.0)), boundary_kind=BoundaryKind.DIRICHLET_FROZEN,
        bottom=bottom, initial=lambda b: _level(b, lambda x: level(0.0, x)), g=g,
        output_times=tuple(float(t) for t in np.arange(100.0, 5000.0 + 1.0, 100.0)),
        params={"v_max": vmax, "x0": x0, "H0": H0, "omega": omega}, exact=exact,
        description="planar surface sloshing in a parabolic bowl")
    return cfg


def bowl_shore(t: float, params: dict, g: float = G_DEFAULT) -> tuple[float, float]:
    """Exact (left, right) shore positions of the bowl oscillation."""
    x0, H0, vmax, om = params["x0"], params["H0"], params["v_max"], params["omega"]
    shift = math.sqrt(2.0 / g) * vmax * math.cos(om * t)
    return 0.5 * x0 * (-2.0 * math.sqrt(H0) - shift), 0.5 * x0 * (2.0 * math.sqrt(H0) - shift)


def double_rarefaction(p: dict) -> ScenarioConfig:
    eps = float(p.get("eps", 0.01))
    a, c = 25.0 / 3.0, 25.0 / 2.0
    x_min = float(p.get("x_min", -25.0))
    x_max = float(p.get("x_max", 50.0))
    dx = float(p.get("dx", 25.0 / 200.0))
    n = int(p.get("n_cells", round((x_max - x_min) / dx)))

    def bottom(x):
        x = np.asarray(x, dtype=float)
        up = _ramp(x, a - 0.5 * eps, a, 0.0, 1.0)
        down = _ramp(x, c, c + 0.5 * eps, 1.0, 0.0)
        return np.where(x < a, up, np.where(x <= c, 1.0, down))

    def init(b):
        return _level(b, lambda x: np.full_like(np.asarray(x, dtype=float), 10.0),
                      lambda x: np.where(np.asarray(x) < 50.0 / 3.0, -350.0, 350.0))

    return ScenarioConfig(
        name="double-rarefaction", x_min=x_min, x_max=x_max, n_cells=n,
        t_end=float(p.get("t_end", 0.25)), boundary_kind=BoundaryKind.OUTFLOW_EXTRAPOLATE,
        bottom=bottom, initial=init, params={"eps": eps},
        description="two diverging rarefactions over a step, near-vacuum in between")


def transcritical(p: dict) -> ScenarioConfig:
    dx = float(p.get("dx", 25.0 / 200.0))
    return ScenarioConfig(
        name="transcritical", x_min=0.0, x_max=25.0, n_cells=int(p.get("n_cells", round(25.0 / dx))),
        t_end=float(p.get("t_end", 50.0)), boundary_kind=BoundaryKind.SUBCRITICAL_DIRICHLET,
        bottom=lambda x: np.maximum(0.0, 0.2 - 0.05 * (np.asarray(x) - 10.0) ** 2),
        initial=lambda b: (lambda x: np.full_like(np.asarray(x, dtype=float), float(p.get("h", 0.33))),
                           lambda x: np.full_like(np.asarray(x, dtype=float), float(p.get("m", 0.18)))),
        output_times=tuple(float(t) for t in np.arange(5.0, 50.0, 5.0)),
        description="flow over a bump settling on a steady transcritical jump")


XS11_KEYS = ("h_left", "m_left", "h_right", "m_right")


def xs11_vacuum(p: dict) -> ScenarioConfig:
    missing = [k for k in XS11_KEYS if k not in p]
    if missing:
        raise ValueError("xs11-vacuum needs the Riemann states from its source reference; "
                         f"set {', '.join('params.' + k for k in missing)}")
    hl, ml, hr, mr = (float(p[k]) for k in XS11_KEYS)
    x_mid = float(p.get("x_split", 300.0))
    return ScenarioConfig(
        name="xs11-vacuum", x_min=0.0, x_max=600.0, n_cells=int(p.get("n_cells", 250)),
        t_end=float(p.get("t_end", 15.0)), boundary_kind=BoundaryKind.OUTFLOW_EXTRAPOLATE,
        bottom=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        initial=lambda b: (lambda x: np.where(np.asarray(x) < x_mid, hl, hr),
                           lambda x: np.where(np.asarray(x) < x_mid, ml, mr)),
        params={k: p[k] for k in XS11_KEYS},
        description="flat-bottom Riemann problem opening a vacuum (user-supplied states)")


SCENARIOS: dict[str, Callable[[dict], ScenarioConfig]] = {
    "four-lakes": four_lakes,
    "convergence": convergence,
    "bouchut-accuracy": bouchut_accuracy,
    "cls04-step": cls04_step,
    "parabolic-bowl": parabolic_bowl,
    "double-rarefaction": double_rarefaction,
    "transcritical": transcritical,
    "xs11-vacuum": xs11_vacuum,
}


def builtin_scenarios() -> dict[str, Callable[[dict], ScenarioConfig]]:
    return dict(SCENARIOS)


def get_scenario(name: str, params: dict | None = None) -> ScenarioConfig:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(SCENARIOS)}")
    return SCENARIOS[name](dict(params or {}))
