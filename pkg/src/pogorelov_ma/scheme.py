"""Monotone finite-difference scheme for the mixed Aleksandrov-viscosity problem.

Rows of the discrete system, one per node of the padded grid:

* interior nodes: the convexified Monge-Ampere operator
  ``-min_{nu} [ (D_nu u)^+ (D_nu' u)^+ - (D_nu u)^- - (D_nu' u)^- ]`` over
  orthogonal stencil pairs, plus ``h^2 u``;
* Dirac nodes: ``-M[u](d_k) + alpha_k + h^2 u`` with ``M`` the discrete
  subgradient measure;
* the square's boundary and the layer outside it: the Hamilton-Jacobi
  condition ``sup_n { grad u . n - H*(n) : n . n_x > 0 }`` with upwinded
  first differences.

The ``h^2 u`` terms make every row strictly monotone; :func:`mean_zero_shift`
removes the constant they introduce.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps

from .errors import ContractViolation, StencilRangeError
from .geometry import ConvexTarget, support_function_many
from .stencil import BOUNDARY, DIRAC, INTERIOR, Grid, build_stencil, default_width
from .subgradient import DiracNodeView, linearize_measure


@dataclass
class SchemeParams:
    """Discretisation parameters.

    Attributes:
        n_x: nodes per side of the computational square ``[-1, 1]^2``.
        width: stencil width; ``floor(1/sqrt(h))`` when ``None``.
        n_y: number of directions for the boundary condition; ``4 n_x`` when ``None``.
        f_source: optional background source density ``f(x1, x2)``.
        g_target: optional target density ``g(y1, y2)``; uniform when ``None``.
        target: the target set (unit disk by default).
        viscosity_baseline: replace Dirac rows by Monge-Ampere rows with a
            point density, the conventional viscosity treatment.
        r_minus_mode: ``"sup"`` or ``"inf"`` for the lower radial bound.
        quadrature_order: Gauss-Legendre order for a non-uniform target density.
    """

    n_x: int
    width: Optional[int] = None
    n_y: Optional[int] = None
    f_source: Optional[Callable] = None
    g_target: Optional[Callable] = None
    target: ConvexTarget = field(default_factory=ConvexTarget.unit_disk)
    viscosity_baseline: bool = False
    r_minus_mode: str = "sup"
    quadrature_order: int = 8

    @property
    def h(self) -> float:
        return 2.0 / (self.n_x - 1)

    def resolved_width(self) -> int:
        return default_width(self.h) if self.width is None else int(self.width)

    def resolved_n_y(self) -> int:
        n_y = 4 * self.n_x if self.n_y is None else int(self.n_y)
        if n_y < 8:
            raise ContractViolation("need at least 8 boundary directions")
        return n_y


@dataclass
class ResidualField:
    """Residual values on the padded grid plus the selections that produced them."""

    values: np.ndarray
    ma_pair: np.ndarray
    ma_a: np.ndarray
    ma_b: np.ndarray
    hj_groups: list
    dirac: list

    def norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def _positive_branch_coeff(a, b):
    """d/da of ``a^+ b^+ - a^- - b^-`` on the branch selected by ``a``'s sign."""
    return np.where(a > 0, np.maximum(b, 0.0), 1.0)


class MongeAmpereScheme:
    """Discrete operator ``F[u]`` for a set of Diracs on a padded grid."""

    def __init__(self, params: SchemeParams, diracs):
        self.params = params
        self.diracs = diracs
        w = params.resolved_width()
        if w < 1:
            raise ContractViolation("stencil width must be >= 1")
        self.stencil = build_stencil(w)
        self.grid = Grid(params.n_x, pad=w)
        g = self.grid
        self.h = g.h
        self.dirac_nodes = [g.index_of(p) for p in diracs.locations]
        g.mark_diracs(self.dirac_nodes)

        st = self.stencil
        first = (st.angles >= 0) & (st.angles < np.pi / 2 - 1e-12)
        self.pair_first = np.flatnonzero(first)
        self.pair_second = st.perpendicular[self.pair_first]

        lo, hi = g.pad + 1, g.pad + g.n_x - 1
        self._block = (slice(lo, hi), slice(lo, hi))
        self._lo, self._hi = lo, hi

        # Dirac stencil gathers (flat indices into the padded grid)
        self._dirac_plus = []
        for (i, j) in self.dirac_nodes:
            try:
                nbr = [g.neighbor((i, j), o, 1) for o in st.offsets]
            except StencilRangeError as exc:
                raise ContractViolation(f"Dirac at node {(i, j)} too close to the grid edge") from exc
            self._dirac_plus.append(np.array([g.flat(a, b) for a, b in nbr]))
        self._dirac_minus = [p[st.opposite] for p in self._dirac_plus]

        w_visc = st.width
        self.baseline_density = 4.0 / ((w_visc**2 + (w_visc - 1) ** 2) * self.h**2)

        self._setup_boundary()

    # ------------------------------------------------------------------ setup
    def _setup_boundary(self):
        g = self.grid
        n_y = self.params.resolved_n_y()
        ang = 2 * np.pi * np.arange(1, n_y + 1) / n_y
        self.hj_normals = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        self.hj_support = support_function_many(self.params.target, self.hj_normals)

        bmask = g.kind == BOUNDARY
        groups = []
        for sx in (-1, 0, 1):
            for sy in (-1, 0, 1):
                if sx == 0 and sy == 0:
                    continue
                sel = bmask & (g.normal_x == sx) & (g.normal_y == sy)
                if not sel.any():
                    continue
                nvec = np.array([sx, sy], dtype=float)
                nvec /= np.linalg.norm(nvec)
                allowed = np.flatnonzero(self.hj_normals @ nvec > 1e-12)
                ii, jj = np.nonzero(sel)
                groups.append((ii, jj, allowed))
        self._hj_setup = groups

    # --------------------------------------------------------------- residual
    def second_differences(self, u: np.ndarray, k: int) -> np.ndarray:
        """Second difference along stencil direction ``k`` on the interior block."""
        p, q = self.stencil.offsets[k]
        lo, hi = self._lo, self._hi
        c = u[lo:hi, lo:hi]
        fwd = u[lo + p:hi + p, lo + q:hi + q]
        bwd = u[lo - p:hi - p, lo - q:hi - q]
        return (fwd + bwd - 2.0 * c) / (self.stencil.lengths[k] ** 2 * self.h**2)

    def residual(self, u: np.ndarray, offset: float = 0.0) -> ResidualField:
        """Residual of ``u + offset``.

        Only the ``h^2 u`` terms see the scalar ``offset``; keeping a large
        constant out of ``u`` protects the difference quotients from
        cancellation.
        """
        g = self.grid
        h2 = self.h**2
        F = np.zeros_like(u)

        # convexified Monge-Ampere on the interior block
        best = None
        for k, (i1, i2) in enumerate(zip(self.pair_first, self.pair_second)):
            a = self.second_differences(u, i1)
            b = self.second_differences(u, i2)
            phi = np.maximum(a, 0) * np.maximum(b, 0) - np.maximum(-a, 0) - np.maximum(-b, 0)
            if best is None:
                best, pair, sa, sb = phi, np.zeros(phi.shape, dtype=int), a, b
            else:
                upd = phi < best
                best = np.where(upd, phi, best)
                pair = np.where(upd, k, pair)
                sa = np.where(upd, a, sa)
                sb = np.where(upd, b, sb)
        F[self._block] = -best + h2 * (u[self._block] + offset)
        if self.params.f_source is not None:
            F[self._block] += self._source_term(u)

        # Dirac rows
        dirac_info = []
        for k, (i, j) in enumerate(self.dirac_nodes):
            if self.params.viscosity_baseline:
                F[i, j] += self.baseline_density
                dirac_info.append(None)
                continue
            view = DiracNodeView(u[i, j], u.ravel()[self._dirac_plus[k]],
                                 u.ravel()[self._dirac_minus[k]], self.h)
            lin = linearize_measure(view, self.stencil, self.params.r_minus_mode,
                                    self.params.g_target, self.params.quadrature_order)
            F[i, j] = -lin.value + self.diracs.weights[k] + h2 * (u[i, j] + offset)
            dirac_info.append(lin)

        # Hamilton-Jacobi boundary rows
        hj = []
        up = np.pad(u, 1, constant_values=np.nan)
        for ii, jj, allowed in self._hj_setup:
            c = u[ii, jj]
            dxm = (c - up[ii, jj + 1]) / self.h
            dxp = (up[ii + 2, jj + 1] - c) / self.h
            dym = (c - up[ii + 1, jj]) / self.h
            dyp = (up[ii + 1, jj + 2] - c) / self.h
            nv = self.hj_normals[allowed]
            n1p, n1m = np.maximum(nv[:, 0], 0), np.minimum(nv[:, 0], 0)
            n2p, n2m = np.maximum(nv[:, 1], 0), np.minimum(nv[:, 1], 0)
            # missing neighbours drop their term
            dxm, dxp, dym, dyp = (np.nan_to_num(d) for d in (dxm, dxp, dym, dyp))
            vals = (np.outer(dxm, n1p) + np.outer(dxp, n1m) + np.outer(dym, n2p)
                    + np.outer(dyp, n2m) - self.hj_support[allowed][None, :])
            arg = np.argmax(vals, axis=1)
            F[ii, jj] = vals[np.arange(len(ii)), arg]
            hj.append(allowed[arg])

        return ResidualField(F, pair, sa, sb, hj, dirac_info)

    def _source_term(self, u):
        g = self.grid
        lo, hi = self._lo, self._hi
        f = np.asarray(self.params.f_source(g.X[lo:hi, lo:hi], g.Y[lo:hi, lo:hi]), dtype=float)
        if self.params.g_target is None:
            return f
        gx = (u[lo + 1:hi + 1, lo:hi] - u[lo - 1:hi - 1, lo:hi]) / (2 * self.h)
        gy = (u[lo:hi, lo + 1:hi + 1] - u[lo:hi, lo - 1:hi - 1]) / (2 * self.h)
        return f / np.asarray(self.params.g_target(gx, gy), dtype=float)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.residual(u).values

    # --------------------------------------------------------------- jacobian
    def jacobian(self, u: np.ndarray, field: ResidualField) -> sps.csr_matrix:
        """Generalised Jacobian with every min/max/positive-part selection frozen.

        The lagged background-source term (if any) is not differentiated.
        """
        g = self.grid
        n = g.n
        h2 = self.h**2
        rows, cols, vals = [], [], []

        lo, hi = self._lo, self._hi
        I, J = np.meshgrid(np.arange(lo, hi), np.arange(lo, hi), indexing="ij")
        I, J = I.ravel(), J.ravel()
        pair = field.ma_pair.ravel()
        a, b = field.ma_a.ravel(), field.ma_b.ravel()
        keep = g.kind[I, J] != DIRAC if not self.params.viscosity_baseline else np.ones(len(I), bool)
        I, J, pair, a, b = I[keep], J[keep], pair[keep], a[keep], b[keep]
        r = g.flat(I, J)
        ka, kb = self.pair_first[pair], self.pair_second[pair]
        ca = -_positive_branch_coeff(a, b) / (self.stencil.lengths[ka] ** 2 * h2)
        cb = -_positive_branch_coeff(b, a) / (self.stencil.lengths[kb] ** 2 * h2)
        oa, ob = self.stencil.offsets[ka], self.stencil.offsets[kb]
        rows += [r, r, r, r, r]
        cols += [r, g.flat(I + oa[:, 0], J + oa[:, 1]), g.flat(I - oa[:, 0], J - oa[:, 1]),
                 g.flat(I + ob[:, 0], J + ob[:, 1]), g.flat(I - ob[:, 0], J - ob[:, 1])]
        vals += [-2 * ca - 2 * cb + h2, ca, ca, cb, cb]

        if not self.params.viscosity_baseline:
            for k, (i, j) in enumerate(self.dirac_nodes):
                lin = field.dirac[k]
                r0 = g.flat(i, j)
                rows.append(np.full(1 + 2 * len(self.stencil), r0))
                cols.append(np.concatenate([[r0], self._dirac_plus[k], self._dirac_minus[k]]))
                vals.append(np.concatenate([[-lin.d_u0 + h2], -lin.d_plus, -lin.d_minus]))

        for (ii, jj, _), sel in zip(self._hj_setup, field.hj_groups):
            nv = self.hj_normals[sel]
            r = g.flat(ii, jj)
            diag = np.zeros(len(ii))
            for axis, (di, dj) in enumerate(((1, 0), (0, 1))):
                comp = nv[:, axis]
                pos, neg = np.maximum(comp, 0) / self.h, np.minimum(comp, 0) / self.h
                # backward neighbour (used when the component is positive)
                bi, bj = ii - di, jj - dj
                okb = (bi >= 0) & (bj >= 0) & (pos > 0)
                diag += np.where(okb, pos, 0.0)
                rows.append(r[okb]); cols.append(g.flat(bi[okb], bj[okb])); vals.append(-pos[okb])
                fi, fj = ii + di, jj + dj
                okf = (fi < n) & (fj < n) & (neg < 0)
                diag += np.where(okf, -neg, 0.0)
                rows.append(r[okf]); cols.append(g.flat(fi[okf], fj[okf])); vals.append(neg[okf])
            rows.append(r); cols.append(r); vals.append(diag)

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        return sps.csr_matrix((vals, (rows, cols)), shape=(g.size, g.size))

    # -------------------------------------------------------------- utilities
    def augmented_mask(self) -> np.ndarray:
        """Nodes whose rows carry the ``h^2 u`` augmentation."""
        return self.grid.kind != BOUNDARY


def mean_zero_shift(v: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Undo the ``h^2 u`` augmentation.

    Solving ``A[v] + h^2 v = 0`` on the augmented rows is equivalent to
    solving ``A[u] - h^2 sum(u) + h^2 u = 0`` for ``u = v + c``.  Substituting
    gives ``sum(v) + n c - c = 0`` over the ``n`` augmented nodes, so
    ``c = sum(v) / (1 - n)``.
    """
    v = np.asarray(v, dtype=float)
    mask = np.ones(v.shape, dtype=bool) if mask is None else mask
    n = int(np.count_nonzero(mask))
    if n == 1:
        raise ContractViolation("mean-zero normalisation is singular for a single augmented node")
    c = float(np.sum(v[mask])) / (1.0 - n)
    return v + c
