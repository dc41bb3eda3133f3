import math

import numpy as np
import pytest

from qcurve.geometry import (ConformalFactor, DimensionError, PositivityError,
                             check_dimension, hyperbolic_curvature_report,
                             laplacian_radial, laplacian_values,
                             paneitz_values, q_of_conformal,
                             scalar_of_conformal)
from qcurve.grid import RadialFunction, RadialGrid, differentiate


def zero_on(grid):
    return RadialFunction(grid, np.zeros(grid.n_points))


def interior(grid, margin=0.5):
    return grid.window_mask(0.0, grid.r_max - margin)


def test_check_dimension():
    assert check_dimension(4) == 4
    assert check_dimension(7.0) == 7
    with pytest.raises(DimensionError):
        check_dimension(3)
    with pytest.raises(DimensionError):
        check_dimension(4.5)


@pytest.mark.parametrize("n,q,r", [(4, 3.0, -12.0), (5, 13.125, -20.0),
                                   (6, 24.0, -30.0), (8, 60.0, -56.0)])
def test_hyperbolic_constants(n, q, r):
    cc = hyperbolic_curvature_report(n)
    assert cc.Q_hyp == pytest.approx(q, abs=1e-12)
    assert cc.R_hyp == pytest.approx(r, abs=1e-12)
    if n >= 5:
        assert cc.Q_hyp == pytest.approx(n * (n * n - 4.0) / 8.0, abs=1e-12)
    assert cc.R_hyp == -n * (n - 1.0)


def test_laplacian_of_known_profile(grid1024):
    """Lap f = f'' + (n-1) coth(r) f' on an even profile, against the
    analytic value for f = exp(-r^2/2)."""
    g = grid1024
    n = 5
    r = g.r.astype(float)
    f = np.exp(-r ** 2 / 2.0)
    lap = laplacian_values(f, g, n)
    fp = -r * f
    fpp = (r ** 2 - 1.0) * f
    coth = np.empty_like(r)
    coth[1:] = np.cosh(r[1:]) / np.sinh(r[1:])
    exact = np.empty_like(r)
    exact[1:] = fpp[1:] + (n - 1.0) * coth[1:] * fp[1:]
    exact[0] = n * fpp[0]
    m = interior(g)
    assert np.abs(lap - exact)[m].max() < 1e-6


def test_laplacian_origin_closure(grid1024):
    """At r = 0 the radial Laplacian reduces to n f''(0)."""
    g = grid1024
    r = g.r.astype(float)
    f = np.cos(r) * np.exp(-r ** 2 / 4.0)
    for n in (4, 6):
        lap = laplacian_values(f, g, n)
        d2 = differentiate(f, float(g.h), 2)
        assert abs(float(lap[0]) - n * float(d2[0])) < 1e-6


def test_laplacian_radial_wrapper(grid1024):
    g = grid1024
    f = RadialFunction(g, np.exp(-g.r.astype(float) ** 2))
    out = laplacian_radial(f, g, 4)
    assert isinstance(out, RadialFunction)
    assert np.allclose(out.values, laplacian_values(f.values, g, 4))


@pytest.mark.parametrize("n", [4, 5, 6])
def test_q_of_trivial_factor_is_hyperbolic(n, grid2048):
    """q_of_conformal at u = 0 reproduces n(n^2-4)/8 pointwise."""
    g = grid2048
    factor = ConformalFactor(zero_on(g), n)
    q = q_of_conformal(factor, g)
    cc = hyperbolic_curvature_report(n)
    m = interior(g)
    assert np.abs(np.asarray(q.values, float) - cc.Q_hyp)[m].max() < 1e-8


@pytest.mark.parametrize("n", [4, 5, 6])
def test_scalar_of_trivial_factor_is_hyperbolic(n, grid2048):
    g = grid2048
    factor = ConformalFactor(zero_on(g), n)
    s = scalar_of_conformal(factor, g)
    m = interior(g)
    assert np.abs(np.asarray(s.values, float) + n * (n - 1.0))[m].max() < 1e-8


def test_positivity_guard(grid1024):
    g = grid1024
    u = RadialFunction(g, np.full(g.n_points, -1.5))
    with pytest.raises(PositivityError):
        ConformalFactor(u, 5)
    # the exponential regime has no positivity constraint
    ConformalFactor(u, 4)


def test_paneitz_on_constant(grid2048):
    """P c = c (n-4)/2 Q for constants (pure zeroth-order term)."""
    g = grid2048
    ones = np.ones(g.n_points)
    m = interior(g)
    for n in (4, 5, 6):
        cc = hyperbolic_curvature_report(n)
        pv = paneitz_values(ones, g, n)
        expect = 0.5 * (n - 4.0) * cc.Q_hyp
        assert np.abs(np.asarray(pv, float) - expect)[m].max() < 1e-7, n


def test_paneitz_factored_form(grid1024):
    """P = (Lap - n)(Lap + (n^2-4)/2) + (n+4)/2 Q on decaying profiles
    (n >= 5), checked pointwise on the interior."""
    g = grid1024
    n = 5
    r = g.r.astype(float)
    u = np.cosh(r) * np.exp(-r ** 2 / 4.0)  # smooth and even
    cc = hyperbolic_curvature_report(n)
    pv = paneitz_values(u, g, n)
    lap_u = laplacian_values(u, g, n)
    inner = lap_u + 0.5 * (n * n - 4.0) * u
    outer = laplacian_values(inner, g, n) - n * inner
    expect = outer + 0.5 * (n + 4.0) * cc.Q_hyp * u
    m = g.window_mask(0.0, g.r_max - 1.0)
    scale = np.abs(np.asarray(pv, float))[m].max()
    assert np.abs(np.asarray(pv - expect, float))[m].max() < 1e-5 * scale


def test_q_of_conformal_round_trip_n4(grid2048):
    """For the exponential regime, Q~ e^{4u} recovers (P u + 2 Q)/2."""
    g = grid2048
    n = 4
    r = g.r.astype(float)
    u = 1e-2 * np.exp(-r ** 2 / 8.0)
    uf = RadialFunction(g, u)
    q = q_of_conformal(ConformalFactor(uf, n), g)
    pu = paneitz_values(u, g, n)
    m = interior(g)
    lhs = np.asarray(q.values, float) * np.exp(4.0 * u)
    rhs = (np.asarray(pu, float) + 6.0) / 2.0
    assert np.abs(lhs - rhs)[m].max() < 1e-9
