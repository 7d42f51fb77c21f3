"""Discrete subgradient measure at a Dirac node.

For a convex ``u`` the subgradient at a point is the star-shaped set
``{r e_theta : R_minus(theta) <= r <= R_plus(theta)}`` where the radial
bounds come from one-sided directional derivatives:

    R_plus(theta)  = inf over theta' in (theta - pi/2, theta + pi/2) of
                     (d_theta' u)^+ / cos(theta - theta')
    R_minus(theta) = sup over the same window of
                     (-d_{theta' + pi} u)^+ / cos(theta - theta')

On the grid the one-sided derivatives become ``(u_j - u_0) / (l_j h)`` along
the stencil directions and the area integral becomes a weighted sum over the
stencil angles.  Every quantity is monotone in the nodal values, which is what
makes the scheme degenerate elliptic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation
from .stencil import StencilSet

_COS_TOL = 1e-12
_EMPTY_WINDOW_BOUND = 2.0


@dataclass
class DiracNodeView:
    """Values of ``u`` around one Dirac node.

    Attributes:
        u0: value at the Dirac node.
        u_plus: values at ``d + l_i h e_i`` for each stencil direction ``i``.
        u_minus: values at ``d - l_i h e_i``.
        h: grid spacing.
    """

    u0: float
    u_plus: np.ndarray
    u_minus: np.ndarray
    h: float

    @classmethod
    def from_function(cls, u: Callable, center, stencil: StencilSet, h: float) -> "DiracNodeView":
        """Sample a callable ``u(x, y)`` on the stencil around ``center``."""
        c = np.asarray(center, dtype=float)
        pts_p = c[None, :] + h * stencil.offsets
        pts_m = c[None, :] - h * stencil.offsets
        return cls(float(u(c[0], c[1])), np.asarray(u(pts_p[:, 0], pts_p[:, 1]), dtype=float),
                   np.asarray(u(pts_m[:, 0], pts_m[:, 1]), dtype=float), h)


@dataclass
class RadialBounds:
    """Per-angle radial bounds and the directions that attain them."""

    r_plus: np.ndarray
    r_minus: np.ndarray
    arg_plus: np.ndarray
    arg_minus: np.ndarray


@lru_cache(maxsize=32)
def _window(stencil_key, angles_bytes, n):
    angles = np.frombuffer(angles_bytes, dtype=float, count=n)
    c = np.cos(angles[:, None] - angles[None, :])
    valid = c > _COS_TOL
    inv = np.where(valid, 1.0 / np.where(valid, c, 1.0), 0.0)
    return valid, inv


def window(stencil: StencilSet):
    """Open half-window mask and ``1/cos(theta_i - theta_j)`` on it."""
    return _window(stencil.width, stencil.angles.tobytes(), len(stencil))


def one_sided_derivative(view: DiracNodeView, stencil: StencilSet, i: int) -> float:
    """Forward difference ``(u_i - u_0) / (l_i h)`` along direction ``i``."""
    return float((view.u_plus[i] - view.u0) / (stencil.lengths[i] * view.h))


def radial_bounds(view: DiracNodeView, stencil: StencilSet, r_minus_mode: str = "sup") -> RadialBounds:
    """Discrete ``R_plus`` / ``R_minus`` at every stencil angle.

    ``r_minus_mode="sup"`` takes the maximum over the window (the lower radial
    bound of the subgradient); ``"inf"`` takes the minimum instead, for
    comparison with the alternative form of the discrete bound.
    """
    if r_minus_mode not in ("sup", "inf"):
        raise ContractViolation(f"r_minus_mode must be 'sup' or 'inf', got {r_minus_mode!r}")
    valid, inv = window(stencil)
    lh = stencil.lengths * view.h
    s_plus = np.maximum(view.u_plus - view.u0, 0.0) / lh
    s_minus = np.maximum(view.u0 - view.u_minus, 0.0) / lh

    q_plus = np.where(valid, s_plus[None, :] * inv, np.inf)
    arg_plus = np.argmin(q_plus, axis=1)
    r_plus = q_plus[np.arange(len(q_plus)), arg_plus]
    empty = ~np.isfinite(r_plus)
    if empty.any():
        r_plus[empty] = _EMPTY_WINDOW_BOUND
        arg_plus[empty] = -1

    if r_minus_mode == "sup":
        q_minus = np.where(valid, s_minus[None, :] * inv, -np.inf)
        arg_minus = np.argmax(q_minus, axis=1)
    else:
        q_minus = np.where(valid, s_minus[None, :] * inv, np.inf)
        arg_minus = np.argmin(q_minus, axis=1)
    r_minus = q_minus[np.arange(len(q_minus)), arg_minus]
    bad = ~np.isfinite(r_minus)
    if bad.any():
        r_minus[bad] = 0.0
        arg_minus[bad] = -1
    return RadialBounds(r_plus, r_minus, arg_plus, arg_minus)


def subgradient_measure(view: DiracNodeView, stencil: StencilSet, r_minus_mode: str = "sup") -> float:
    """Area of the discrete subgradient: ``sum_i dtheta_i/2 (R_+^2 - R_-^2)^+``."""
    b = radial_bounds(view, stencil, r_minus_mode)
    return float(np.sum(0.5 * stencil.weights * np.maximum(b.r_plus**2 - b.r_minus**2, 0.0)))


def _radial_antiderivative(g: Callable, angles: np.ndarray, order: int):
    """``G(R, i) = int_0^R g(r e_i) r dr`` by Gauss-Legendre, and ``dG/dR``."""
    t, wq = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (t + 1.0)
    wq = 0.5 * wq
    e = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def sample(r):
        pts = r[..., None] * e[..., :]
        vals = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float)
        vals = np.broadcast_to(vals, r.shape)
        if np.any(vals <= 0):
            raise ContractViolation("target density must be positive")
        return vals

    def G(R):
        r = R[:, None] * t[None, :]
        e_rep = np.repeat(e[:, None, :], len(t), axis=1)
        vals = np.asarray(g(r * e_rep[..., 0], r * e_rep[..., 1]), dtype=float)
        vals = np.broadcast_to(vals, r.shape)
        if np.any(vals <= 0):
            raise ContractViolation("target density must be positive")
        return R * np.sum(wq[None, :] * vals * r, axis=1)

    def dG(R):
        return sample(R) * R

    return G, dG


def weighted_subgradient_measure(view: DiracNodeView, stencil: StencilSet, g: Callable,
                                 quadrature_order: int = 8, r_minus_mode: str = "sup") -> float:
    """Subgradient measure against a target density ``g(y1, y2)``.

    Sums ``dtheta_i [G_i(R_+) - G_i(R_-)]^+`` with ``G_i`` the radial
    antiderivative of ``r -> g(r e_i) r``, computed by Gauss-Legendre
    quadrature of the given order.
    """
    b = radial_bounds(view, stencil, r_minus_mode)
    G, _ = _radial_antiderivative(g, stencil.angles, quadrature_order)
    return float(np.sum(stencil.weights * np.maximum(G(b.r_plus) - G(b.r_minus), 0.0)))


@dataclass
class MeasureLinearization:
    """Measure value and its derivative with the selections frozen.

    ``d_u0`` is the derivative with respect to the Dirac value, ``d_plus`` and
    ``d_minus`` with respect to ``u_plus`` and ``u_minus``.
    """

    value: float
    d_u0: float
    d_plus: np.ndarray
    d_minus: np.ndarray
    bounds: RadialBounds


def linearize_measure(view: DiracNodeView, stencil: StencilSet, r_minus_mode: str = "sup",
                      g: Optional[Callable] = None, quadrature_order: int = 8) -> MeasureLinearization:
    """Value and generalised derivative of the (weighted) subgradient measure.

    The argmin/argmax over the window and every positive part are frozen at
    their current selection; ties go to the smallest direction index.
    """
    b = radial_bounds(view, stencil, r_minus_mode)
    n = len(stencil)
    lh = stencil.lengths * view.h
    _, inv = window(stencil)
    if g is None:
        Gp, Gm = 0.5 * b.r_plus**2, 0.5 * b.r_minus**2
        dGp, dGm = b.r_plus, b.r_minus
        wts = stencil.weights
    else:
        G, dG = _radial_antiderivative(g, stencil.angles, quadrature_order)
        Gp, Gm = G(b.r_plus), G(b.r_minus)
        dGp, dGm = dG(b.r_plus), dG(b.r_minus)
        wts = stencil.weights
    active = Gp - Gm > 0
    value = float(np.sum(wts * np.where(active, Gp - Gm, 0.0)))

    rows = np.arange(n)
    d_u0 = 0.0
    d_plus = np.zeros(n)
    d_minus = np.zeros(n)

    # R_plus = (u_j - u_0)/(l_j h cos); derivative only where the positive part is on
    jp = b.arg_plus
    okp = active & (jp >= 0)
    okp[okp] &= view.u_plus[jp[okp]] - view.u0 > 0
    cp = np.zeros(n)
    cp[okp] = wts[okp] * dGp[okp] * inv[rows[okp], jp[okp]] / lh[jp[okp]]
    np.add.at(d_plus, jp[okp], cp[okp])
    d_u0 -= cp.sum()

    # R_minus = (u_0 - u_{-j})/(l_j h cos) enters with a minus sign
    jm = b.arg_minus
    okm = active & (jm >= 0)
    okm[okm] &= view.u0 - view.u_minus[jm[okm]] > 0
    cm = np.zeros(n)
    cm[okm] = wts[okm] * dGm[okm] * inv[rows[okm], jm[okm]] / lh[jm[okm]]
    np.add.at(d_minus, jm[okm], cm[okm])
    d_u0 -= cm.sum()

    return MeasureLinearization(value, float(d_u0), d_plus, d_minus, b)
