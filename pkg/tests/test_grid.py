import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcurve.grid import RadialFunction, RadialGrid, differentiate, fd_weights


def test_fd_weights_second_derivative_central():
    w = fd_weights(range(-2, 3), 2)
    expect = np.array([-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12])
    assert np.allclose(np.asarray(w, float), expect, atol=1e-18)


def test_fd_weights_first_derivative_central():
    w = fd_weights(range(-2, 3), 1)
    expect = np.array([1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12])
    assert np.allclose(np.asarray(w, float), expect, atol=1e-18)


def test_fd_weights_sum_zero_for_derivatives():
    for m in (1, 2, 3, 4):
        w = fd_weights(range(-3, 4), m)
        assert abs(float(np.sum(w))) < 1e-18


def test_fd_weights_needs_enough_points():
    with pytest.raises(ValueError):
        fd_weights(range(-1, 1), 2)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_differentiate_fourth_order_convergence(m):
    """Errors against the analytic derivative of an even profile shrink
    ~16x per dyadic refinement."""
    def f(r):
        return np.cos(r) * np.exp(-0.5 * r ** 2)

    errs = []
    for pts in (257, 513):
        g = RadialGrid(6.0, pts)
        r = g.r.astype(float)
        vals = f(r)
        d = differentiate(vals, float(g.h), m)
        # analytic m-th derivative via high-order complex-step-free
        # Richardson on a very fine auxiliary grid
        hh = 1e-2
        offs = np.arange(-4, 5)
        w = np.asarray(fd_weights(offs, m), float)
        exact = sum(wj * f(r + o * hh) for wj, o in zip(w, offs)) / hh ** m
        interior = (r > 0.5) & (r < 5.5)
        errs.append(np.abs(d - exact)[interior].max())
    assert errs[0] / errs[1] > 10.0


def test_differentiate_polynomial_exact():
    g = RadialGrid(4.0, 128)
    r = g.r.astype(float)
    vals = 1.0 + 3.0 * r ** 2 + 0.25 * r ** 4
    d2 = differentiate(vals, float(g.h), 2)
    assert np.abs(d2 - (6.0 + 3.0 * r ** 2)).max() < 1e-9


def test_differentiate_annihilates_constants_tightly():
    g = RadialGrid(12.0, 2048)
    ones = np.ones(g.n_points)
    for m in (1, 2, 3, 4):
        d = differentiate(ones, float(g.h), m)
        assert np.abs(d).max() < 1e-8, m


def test_differentiate_odd_parity():
    g = RadialGrid(6.0, 512)
    r = g.r.astype(float)
    vals = np.sin(r)  # odd
    d1 = differentiate(vals, float(g.h), 1, parity=-1)
    assert abs(d1[0] - 1.0) < 1e-8
    assert np.abs(d1[: 400] - np.cos(r[:400])).max() < 1e-8


def test_grid_basic_invariants():
    g = RadialGrid(12.0, 1024)
    assert g.r[0] == 0.0
    assert float(g.r[-1]) == pytest.approx(12.0)
    assert np.all(np.diff(g.r.astype(float)) > 0)
    assert np.all(np.diff(g.x.astype(float)) < 0)
    assert float(g.x[0]) == 1.0
    assert g.index_of(0.0) == 0
    assert g.index_of(12.0) == 1023
    fine = g.refine()
    assert fine.n_points == 2047
    assert fine.r_max == g.r_max


def test_grid_rejects_bad_parameters():
    with pytest.raises(ValueError):
        RadialGrid(-1.0, 64)
    with pytest.raises(ValueError):
        RadialGrid(12.0, 4)


def test_radial_function_rejects_nan_and_shape():
    g = RadialGrid(4.0, 64)
    with pytest.raises(ValueError):
        RadialFunction(g, np.full(64, np.nan))
    with pytest.raises(ValueError):
        RadialFunction(g, np.zeros(63))
    with pytest.raises(ValueError):
        RadialFunction(g, np.zeros(64), parity=2)


def test_radial_function_arithmetic_and_grid_check():
    g = RadialGrid(4.0, 64)
    f = RadialFunction(g, np.linspace(0, 1, 64))
    h = RadialFunction(g, np.ones(64))
    assert np.allclose((f + h).values, f.values + 1.0)
    assert np.allclose((f - h).values, f.values - 1.0)
    assert np.allclose((2.0 * f).values, 2.0 * f.values)
    assert np.allclose((-f).values, -f.values)
    assert (f + 1.0).values[0] == 1.0
    other = RadialFunction(RadialGrid(4.0, 65), np.zeros(65))
    with pytest.raises(ValueError):
        f + other


def test_radial_function_sup_and_csv_rows():
    g = RadialGrid(4.0, 64)
    f = RadialFunction(g, np.linspace(-2, 1, 64))
    assert f.sup() == 2.0
    assert f.sup(mask=g.window_mask(2.0, 4.0)) <= 2.0
    rows = list(f.to_csv_rows())
    assert len(rows) == 64
    r0, x0, v0 = rows[0]
    assert float(r0) == 0.0 and float(x0) == 1.0 and float(v0) == -2.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=5, max_size=5))
def test_derivative_linearity(coeffs):
    """differentiate is linear: d(a f + b g) = a d f + b d g."""
    g = RadialGrid(5.0, 128)
    r = g.r.astype(float)
    f = np.cos(r)
    k = np.exp(-r ** 2 / 4.0)
    a, b = coeffs[0], coeffs[1]
    lhs = differentiate(a * f + b * k, float(g.h), 2)
    rhs = a * differentiate(f, float(g.h), 2) \
        + b * differentiate(k, float(g.h), 2)
    scale = max(1.0, np.abs(rhs).max())
    assert np.abs(lhs - rhs).max() < 1e-10 * scale


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4))
def test_even_profile_derivative_parity(m):
    """Odd-order derivatives of even profiles vanish at the origin."""
    g = RadialGrid(5.0, 256)
    r = g.r.astype(float)
    vals = np.cosh(r) * np.exp(-r ** 2 / 2.0)
    d = differentiate(vals, float(g.h), m)
    if m % 2 == 1:
        assert abs(float(d[0])) < 1e-7
