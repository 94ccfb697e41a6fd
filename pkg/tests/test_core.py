import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afswe.core import (BoundaryKind, ConservedPair, Constants, Grid, SolutionState, bottom_deriv,
                        bottom_eval, char_speeds, from_char, physical_flux, project_bottom, to_char)

G = 9.812


def test_grid_geometry():
    grid = Grid(0.0, 1.0, 4)
    assert grid.dx == 0.25
    np.testing.assert_array_equal(grid.interfaces, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(grid.centers, [0.125, 0.375, 0.625, 0.875])
    assert grid.periodic
    assert not Grid(0.0, 1.0, 4, BoundaryKind.OUTFLOW_EXTRAPOLATE).periodic


@pytest.mark.parametrize("args", [(0.0, 1.0, 0), (1.0, 1.0, 4), (2.0, 1.0, 4)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        Grid(*args)


def test_constants_defaults_and_validation():
    c = Constants()
    assert (c.g, c.eps_freeze, c.dry_avg_tol, c.E_max, c.froude_wb_threshold) == (9.812, 1e-7, 1e-14, 50.0, 1.0)
    with pytest.raises(ValueError):
        Constants(cfl=0.0)
    with pytest.raises(ValueError):
        Constants(E_max=1.0)


def test_conserved_pair_clamps_round_off_only():
    assert ConservedPair.make(-1e-15, 3.0) == (0.0, 0.0)
    assert ConservedPair.make(0.0, 3.0) == (0.0, 0.0)
    assert ConservedPair.make(2.0, 3.0) == (2.0, 3.0)
    with pytest.raises(ValueError):
        ConservedPair.make(-1e-6, 0.0)
    with pytest.raises(ValueError):
        ConservedPair.make(math.nan, 0.0)


# ---------------------------------------------------------------------------
# bottom


def test_constant_bottom_has_constant_coefficients():
    b = project_bottom(lambda x: np.full_like(x, 0.7), Grid(0.0, 1.0, 8))
    np.testing.assert_array_equal(b.coefficients(), np.tile([0.7, 0.0, 0.0], (8, 1)))


def test_linear_bottom_is_exact():
    b = project_bottom(lambda x: x, Grid(0.0, 1.0, 4, BoundaryKind.OUTFLOW_EXTRAPOLATE))
    coef = b.coefficients()
    np.testing.assert_allclose(coef[:, 1], 1.0, rtol=1e-14)
    np.testing.assert_allclose(coef[:, 2], 0.0, atol=1e-12)


def test_bottom_eval_on_a_known_parabola():
    dx = 0.5
    grid = Grid(-0.5 * dx, 0.5 * dx, 1, BoundaryKind.OUTFLOW_EXTRAPOLATE)
    b = project_bottom(lambda x: 1.0 + 2.0 * x + 3.0 * x**2, grid)
    assert bottom_eval(b, 0, 0.0) == 1.0
    right = bottom_eval(b, 0, 0.5 * dx)
    assert right == pytest.approx(1.0 + dx + 0.75 * dx**2, rel=1e-15)
    assert right == b.b_iface[b.grid.n_cells + 2]
    assert bottom_deriv(b, 0, 0.0) == pytest.approx(2.0, rel=1e-13)
    with pytest.raises(ValueError):
        bottom_eval(b, 0, dx)


def test_bottom_is_continuous_bit_exactly():
    grid = Grid(0.0, 1.0, 37, BoundaryKind.OUTFLOW_EXTRAPOLATE)
    b = project_bottom(lambda x: np.sin(5 * x) + x**3, grid)
    half = 0.5 * grid.dx
    for i in range(grid.n_cells - 1):
        assert bottom_eval(b, i, half) == bottom_eval(b, i + 1, -half)


def test_global_quadratic_is_projected_exactly():
    grid = Grid(-1.0, 2.0, 13, BoundaryKind.OUTFLOW_EXTRAPOLATE)
    f = lambda x: 0.3 - 1.1 * x + 2.5 * x**2
    b = project_bottom(f, grid)
    x = np.random.default_rng(0).uniform(-1.0, 2.0, 500)
    np.testing.assert_allclose(b(x), f(x), atol=1e-13)


def test_projection_error_is_third_order():
    # oracle: the analytic bottom itself; halving dx must divide the error by ~8
    f = lambda x: 0.2 * (1.0 + np.cos(8.0 * np.pi * x))
    x = np.random.default_rng(1).uniform(0.0, 1.0, 10_000)
    errs = [np.max(np.abs(project_bottom(f, Grid(0.0, 1.0, n))(x) - f(x))) for n in (100, 200, 400)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(6.0 < r < 10.0 for r in ratios), ratios


def test_projection_rejects_non_finite_samples():
    with pytest.raises(ValueError):
        project_bottom(lambda x: np.where(x > 0.5, np.inf, 0.0), Grid(0.0, 1.0, 4))


# ---------------------------------------------------------------------------
# characteristic variables and fluxes


def test_to_char_at_rest():
    Qp, Qm = to_char(1.0, 0.0, G)
    assert Qp == Qm == pytest.approx(6.2649, abs=1e-4)


def test_dry_state_regularisation():
    assert to_char(0.0, 0.0, G) == (0.0, 0.0)
    assert from_char(-1.0, 0.5, G) == (0.0, 0.0)
    assert char_speeds(0.0, 0.0, G, 1e-14) == (0.0, 0.0)
    # depth below the dry tolerance gives zero speeds even though Q is not zero
    Qp, Qm = to_char(1e-15, 0.0, G)
    assert Qp > 0.0
    assert char_speeds(Qp, Qm, G, 1e-14) == (0.0, 0.0)


@given(st.floats(1e-6, 1e3), st.floats(-50.0, 50.0))
def test_char_round_trip(h, v):
    m = h * v
    h2, m2 = from_char(*to_char(h, m, G), G)
    assert h2 == pytest.approx(h, rel=1e-13)
    assert m2 == pytest.approx(m, rel=1e-12, abs=1e-13 * h * (1.0 + math.sqrt(G * h)))


@given(st.floats(1e-6, 1e3), st.floats(-50.0, 50.0))
def test_char_speeds_split_by_two_c(h, v):
    Qp, Qm = to_char(h, h * v, G)
    lp, lm = char_speeds(Qp, Qm, G, 1e-14)
    c = math.sqrt(G * h)
    assert Qp + Qm == pytest.approx(4.0 * c, rel=1e-13)
    assert lp - lm == pytest.approx(2.0 * c, rel=1e-12)


def test_physical_flux_examples():
    assert physical_flux(2.0, 4.0, G) == pytest.approx((4.0, 27.624), rel=1e-15)
    assert physical_flux(0.0, 0.0, G) == (0.0, 0.0)
    assert physical_flux(1.0, 0.0, G) == (0.0, G / 2)


def test_state_check():
    s = SolutionState(np.ones(3), np.zeros(3), np.ones(4), np.zeros(4), np.zeros(4, bool))
    s.check(periodic=True)
    s.h_pts[0] = 2.0
    with pytest.raises(ValueError):
        s.check(periodic=True)
    s.h_pts[0] = -1.0
    with pytest.raises(ValueError):
        s.check()
