"""Curvature operators and conformal transformation laws on the radial model.

The base metric is hyperbolic space of dimension n >= 4 written in geodesic
polar form, so radial differential operators reduce to ODE expressions:

    Lap f = f'' + (n-1) coth(r) f'        (trace-of-Hessian sign convention)

with the regular limit Lap f(0) = n f''(0) at the origin.  On this base the
Paneitz operator collapses to a constant-coefficient polynomial in Lap, and
the conformal transformation laws for the Q- and scalar curvature become
pointwise algebra in the conformal factor.

For verifying conformal covariance the module also carries a second, fully
independent evaluator of the Paneitz operator on a radially conformal metric
e^{2w} g, built from warped-product curvature formulas rather than from the
covariance law itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import RadialFunction, differentiate

__all__ = [
    "check_dimension",
    "CurvatureConstants",
    "hyperbolic_curvature_report",
    "ConformalFactor",
    "laplacian_radial",
    "laplacian_values",
    "bilaplacian_values",
    "paneitz_apply",
    "paneitz_values",
    "q_of_conformal",
    "scalar_of_conformal",
    "laplacian_conformal_values",
    "paneitz_conformal_values",
]


class DimensionError(ValueError):
    pass


class PositivityError(ValueError):
    """Raised when a power-regime conformal factor fails 1 + u > 0."""


def check_dimension(n):
    if int(n) != n or n < 4:
        raise DimensionError("dimension must be an integer >= 4, got %r" % (n,))
    return int(n)


@dataclass(frozen=True)
class CurvatureConstants:
    """Exact curvature constants of the hyperbolic model."""

    n: int
    R_hyp: float
    Q_hyp: float
    a_n: float
    b_n: float

    def to_dict(self):
        return {"n": self.n, "R_hyp": self.R_hyp, "Q_hyp": self.Q_hyp,
                "a_n": self.a_n, "b_n": self.b_n}


def hyperbolic_curvature_report(n):
    """Constants of hyperbolic n-space: R = -n(n-1), Q = n(n^2-4)/8, and the
    Paneitz coefficients a_n = ((n-2)^2+4)/(2(n-1)(n-2)), b_n = 4/(n-2).

    Near the boundary the model satisfies Ric = -(n-1) g and W = 0 exactly,
    so these constants are global, not just leading-order.
    """
    n = check_dimension(n)
    return CurvatureConstants(
        n=n,
        R_hyp=float(-n * (n - 1)),
        # fourth-order scalar curvature of the model: the n >= 5 formula
        # n(n^2-4)/8 does not extend to n = 4, where the defining identity
        # -(1/12)(Lap R - R^2 + 3|Ric|^2) evaluates to 3
        Q_hyp=3.0 if n == 4 else n * (n * n - 4) / 8.0,
        a_n=((n - 2) ** 2 + 4) / (2.0 * (n - 1) * (n - 2)),
        b_n=4.0 / (n - 2),
    )


class ConformalFactor:
    """Conformal deformation of the hyperbolic base.

    regime 'exp'   (n = 4):   g~ = e^{2u} g
    regime 'power' (n >= 5):  g~ = (1+u)^{4/(n-4)} g, requires 1 + u > 0.
    """

    def __init__(self, u, n):
        n = check_dimension(n)
        self.n = n
        self.u = u
        self.regime = "exp" if n == 4 else "power"
        if self.regime == "power":
            bad = np.where(1.0 + u.values <= 0.0)[0]
            if bad.size:
                raise PositivityError(
                    "conformal factor needs 1 + u > 0; violated first at r=%g"
                    % u.grid.r[bad[0]])


def _coth(r, dtype):
    # r[0] = 0 is special-cased by every caller; avoid the 1/0 warning here
    r = r.astype(dtype)
    out = np.empty_like(r)
    out[1:] = np.cosh(r[1:]) / np.sinh(r[1:])
    out[0] = np.inf
    return out


def laplacian_values(values, grid, n, parity=1):
    """Lap f = f'' + (n-1) coth(r) f' on raw sample arrays.

    At r = 0 the regular limit n f''(0) is used (valid for even profiles).
    Works in the dtype of `values`, which lets residual diagnostics run in
    extended precision.
    """
    values = np.asarray(values)
    dtype = values.dtype if np.issubdtype(values.dtype, np.floating) else np.dtype(float)
    values = values.astype(dtype)
    d1 = differentiate(values, grid.h, 1, parity=parity)
    d2 = differentiate(values, grid.h, 2, parity=parity)
    coth = _coth(grid.r, dtype)
    out = np.empty_like(values)
    out[1:] = d2[1:] + (n - 1) * coth[1:] * d1[1:]
    if parity == 1:
        # regular limit n f''(0), plus a sixth-difference compensation that
        # matches this row's truncation error to the r -> 0 limit of the
        # interior rows' (the coth-weighted first-derivative truncation
        # survives the limit); without it the error field has an O(h^4)
        # kink at the origin that composed second-order factors amplify
        # by 1/h^2
        d6 = (-20 * values[0] + 30 * values[1]
              - 12 * values[2] + 2 * values[3])
        out[0] = n * d2[0] - (n - 1) * d6 / (dtype.type(45) * grid.h ** 2)
    else:
        # odd profiles have f'(0) finite and f''(0) = 0; coth(r) f' diverges
        # unless f'(0) = 0, so fall back to the two-sided limit of the
        # regular part.  Odd samples only occur as intermediate derivative
        # carriers, never as operator inputs, so keep it simple.
        out[0] = d2[0]
    return out


def laplacian_radial(f, grid, n):
    """Hyperbolic Laplacian of a RadialFunction (see laplacian_values)."""
    n = check_dimension(n)
    if f.grid != grid:
        raise ValueError("function does not live on the supplied grid")
    return f.as_function(laplacian_values(f.values, grid, n, parity=f.parity))


def bilaplacian_values(values, grid, n, parity=1):
    lap = laplacian_values(values, grid, n, parity=parity)
    return laplacian_values(lap, grid, n, parity=parity)


def paneitz_gradient_coefficient(n):
    """Constant c_n with P = Lap^2 - c_n Lap + (n-4)/2 Q on the base.

    The tensor a_n R g - b_n Ric is c_n g on hyperbolic space (Ric = -(n-1)g,
    R = -n(n-1)), so the divergence term is a pure Laplacian multiple.
    """
    cc = hyperbolic_curvature_report(n)
    return cc.a_n * cc.R_hyp + cc.b_n * (n - 1)


def paneitz_values(values, grid, n, parity=1):
    """P_g applied to a raw sample array on the hyperbolic base."""
    n = check_dimension(n)
    cc = hyperbolic_curvature_report(n)
    c_n = paneitz_gradient_coefficient(n)
    lap = laplacian_values(values, grid, n, parity=parity)
    lap2 = laplacian_values(lap, grid, n, parity=parity)
    out = lap2 - c_n * lap
    if n > 4:
        out = out + 0.5 * (n - 4) * cc.Q_hyp * np.asarray(values, dtype=out.dtype)
    return out


def paneitz_apply(phi, grid, n):
    """Paneitz operator of the hyperbolic base applied to a RadialFunction."""
    if phi.grid != grid:
        raise ValueError("function does not live on the supplied grid")
    return phi.as_function(paneitz_values(phi.values, grid, n, parity=phi.parity))


def q_of_conformal(factor, grid, n=None):
    """Q-curvature of the conformally deformed metric, pointwise.

    n = 4:   Q~ = e^{-4u} (P u + 2 Q) / 2
    n >= 5:  Q~ = (2/(n-4)) (1+u)^{-(n+4)/(n-4)} P(1+u)
    """
    n = check_dimension(factor.n if n is None else n)
    cc = hyperbolic_curvature_report(n)
    u = factor.u.values
    if factor.regime == "exp":
        pu = paneitz_values(u, grid, n, parity=factor.u.parity)
        vals = np.exp(-4.0 * u.astype(pu.dtype)) * (pu + 2.0 * cc.Q_hyp) / 2.0
    else:
        # split P(1+u) = P u + (n-4)/2 Q analytically: applying the
        # fourth-order stencils to the O(1) field 1+u would amplify its
        # eps-level representation noise by 1/h^4
        pu = paneitz_values(u, grid, n, parity=factor.u.parity)
        pw = pu + 0.5 * (n - 4.0) * cc.Q_hyp
        p_exp = (n + 4.0) / (n - 4.0)
        vals = (2.0 / (n - 4.0)) * np.asarray(1.0 + u, dtype=pw.dtype) ** (-p_exp) * pw
    return factor.u.as_function(vals)


def scalar_of_conformal(factor, grid, n=None):
    """Scalar curvature of the conformally deformed metric, pointwise.

    n = 4 uses (1+v)^{-3} (-6 Lap + R)(1+v) with 1+v = e^u; n >= 5 the
    conformal-Laplacian law with phi = (1+u)^{(n-2)/(n-4)}.
    """
    n = check_dimension(factor.n if n is None else n)
    cc = hyperbolic_curvature_report(n)
    u = factor.u.values
    if factor.regime == "exp":
        w = np.exp(u)
        lap_w = laplacian_values(w, grid, n, parity=factor.u.parity)
        vals = np.exp(-3.0 * u.astype(lap_w.dtype)) * (-6.0 * lap_w + cc.R_hyp * w)
    else:
        phi = (1.0 + u) ** ((n - 2.0) / (n - 4.0))
        lap_phi = laplacian_values(phi, grid, n, parity=factor.u.parity)
        c = 4.0 * (n - 1.0) / (n - 2.0)
        vals = np.asarray(phi, dtype=lap_phi.dtype) ** (-(n + 2.0) / (n - 2.0)) \
            * (-c * lap_phi + cc.R_hyp * phi)
    return factor.u.as_function(vals)


def laplacian_conformal_values(values, w, grid, n, parity=1):
    """Laplacian of g~ = e^{2w} g on a radial sample:
    Lap~ f = e^{-2w} (Lap f + (n-2) w' f')."""
    values = np.asarray(values)
    dtype = values.dtype if np.issubdtype(values.dtype, np.floating) else np.dtype(float)
    lap = laplacian_values(values, grid, n, parity=parity)
    w = np.asarray(w, dtype=dtype)
    wp = differentiate(w, grid.h, 1, parity=1)
    fp = differentiate(values.astype(dtype), grid.h, 1, parity=parity)
    return np.exp(-2.0 * w) * (lap + (n - 2.0) * wp * fp)


def paneitz_conformal_values(phi, w, grid, n, parity=1):
    """Paneitz operator of the radially conformal metric g~ = e^{2w} g,
    evaluated from warped-product curvature formulas.

    Writing g~ = A^2 dr^2 + B^2 dS^2 with A = e^w, B = e^w sinh r and
    arc-length derivative d/ds = A^{-1} d/dr, the Ricci curvature is

        Ric_ss  = -(n-1) B_ss / B
        Ric_ang = -B_ss/B - (n-2)(B_s^2 - 1)/B^2   (per unit angular metric)

    and P~ phi = Lap~^2 phi - B^{1-n} d/ds(B^{n-1} T_ss phi_s)
                 + (n-4)/2 Q~ phi,   T = a_n R g~ - b_n Ric.

    This route never invokes the conformal covariance law, so it serves as
    its independent check.  Values within a few grid spacings of r = 0 are
    polluted by the 0/0 limits of B and should be read through an interior
    window; the returned array is raw for that reason.
    """
    n = check_dimension(n)
    cc = hyperbolic_curvature_report(n)
    phi = np.asarray(phi)
    dtype = phi.dtype if np.issubdtype(phi.dtype, np.floating) else np.dtype(float)
    phi = phi.astype(dtype)
    w = np.asarray(w, dtype=dtype)
    h = grid.h
    r = grid.r.astype(dtype)

    def d_r(vals, par):
        return differentiate(vals, h, 1, parity=par)

    A = np.exp(w)                          # even
    B = A * np.sinh(r)                     # odd
    B_r = d_r(B, -1)                       # even
    B_s = B_r / A                          # even
    B_s_r = d_r(B_s, 1)                    # odd
    B_ss = B_s_r / A                       # odd

    with np.errstate(divide="ignore", invalid="ignore"):
        ric_ss = -(n - 1) * B_ss / B
        ric_ang = -B_ss / B - (n - 2) * (B_s ** 2 - 1.0) / B ** 2
    # r = 0 entries are 0/0; mask with the smooth-limit placeholder so the
    # arrays stay finite (interior windows never read them)
    for arr in (ric_ss, ric_ang):
        bad = ~np.isfinite(arr)
        arr[bad] = -(n - 1.0)
    R_scal = ric_ss + (n - 1) * ric_ang

    def lap_conf(vals, par):
        return laplacian_conformal_values(vals, w, grid, n, parity=par)

    lap_phi = lap_conf(phi, parity)
    lap2_phi = lap_conf(lap_phi, 1)

    phi_s = d_r(phi, parity) / A                       # odd
    T_ss = cc.a_n * R_scal - cc.b_n * ric_ss           # even
    G = T_ss * phi_s                                   # odd
    G_s = d_r(G, -1) / A                               # even
    with np.errstate(divide="ignore", invalid="ignore"):
        div_term = G_s + (n - 1) * (B_s / B) * G
    # the r = 0 entry is 0/0; interior windows never read it
    div_term[~np.isfinite(div_term)] = 0.0

    out = lap2_phi - div_term
    if n > 4:
        ric_sq = ric_ss ** 2 + (n - 1) * ric_ang ** 2
        lap_R = lap_conf(R_scal, 1)
        q_conf = (-2.0 / (n - 2) ** 2 * ric_sq
                  + (n ** 3 - 4 * n ** 2 + 16 * n - 16)
                  / (8.0 * (n - 1) ** 2 * (n - 2) ** 2) * R_scal ** 2
                  - lap_R / (2.0 * (n - 1)))
        out = out + 0.5 * (n - 4) * q_conf * phi
    return out
