"""Damped semismooth Newton iteration for the discrete Monge-Ampere system."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
import pyamg
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .errors import ContractViolation, SolverError, StagnationError
from .scheme import MongeAmpereScheme, SchemeParams, mean_zero_shift
from .stencil import Grid

log = logging.getLogger(__name__)


@dataclass
class SolveReport:
    """Outcome of :func:`newton_solve`.

    ``potential`` lives on the padded grid of ``scheme``; ``heights`` are the
    values at the Diracs shifted so the smallest is zero.
    """

    potential: np.ndarray
    scheme: MongeAmpereScheme
    iterations: int
    residual_history: List[float]
    damping_history: List[float]
    heights: np.ndarray
    wall_time: float
    converged: bool
    coarse_iterations: List[int] = field(default_factory=list)

    @property
    def grid(self) -> Grid:
        return self.scheme.grid


def sparse_solve(matrix, rhs, rtol: float = 1e-10, method: str = "auto",
                 refine: int = 4) -> np.ndarray:
    """Solve ``matrix @ x = rhs``.

    ``method`` is ``"lu"`` (SuperLU with iterative refinement), ``"amg"``
    (GMRES preconditioned by pyamg's AIR hierarchy, falling back to LU) or
    ``"auto"`` (LU below 3000 unknowns, AMG above).  The relative residual is
    the normwise backward error ``|b - A x| / (|A| |x| + |b|)`` in the
    max-norm; :class:`SolverError` is raised if it exceeds ``rtol``, if the
    matrix is not square, or if the factorisation breaks down.
    """
    A = sps.csr_matrix(matrix)
    if A.shape[0] != A.shape[1]:
        raise SolverError(f"system matrix is not square: {A.shape}")
    rhs = np.asarray(rhs, dtype=float)
    a_norm = spla.norm(A, np.inf)
    b_norm = np.linalg.norm(rhs, np.inf)

    def backward_error(x):
        if not np.all(np.isfinite(x)):
            return np.inf
        r = rhs - A @ x
        return np.linalg.norm(r, np.inf) / max(a_norm * np.linalg.norm(x, np.inf) + b_norm,
                                               np.finfo(float).tiny)

    if method == "auto":
        method = "lu" if A.shape[0] < 3000 else "amg"
    if method == "amg":
        try:
            # degree-1 restriction: default degree-2 setup blows up on late iterates
            ml = pyamg.air_solver(A, restrict=("air", {"theta": 0.05, "degree": 1}))
            x = ml.solve(rhs, tol=1e-14, accel="gmres", maxiter=400)
            if backward_error(x) <= rtol:
                return x
            log.debug("AMG solve missed tolerance; falling back to LU")
        except Exception as exc:  # pyamg raises a variety of errors on breakdown
            log.debug("AMG setup/solve failed (%s); falling back to LU", exc)
    elif method != "lu":
        raise ContractViolation(f"unknown linear solver {method!r}")

    try:
        lu = spla.splu(sps.csc_matrix(A))
    except RuntimeError as exc:
        raise SolverError(f"sparse factorisation failed: {exc}") from exc
    x = lu.solve(rhs)
    for _ in range(refine):
        if backward_error(x) <= rtol:
            break
        x = x + lu.solve(rhs - A @ x)
    rel = backward_error(x)
    if rel > rtol:
        raise SolverError(f"linear solve relative residual {rel:.2e} exceeds {rtol:.0e}")
    return x


def default_initialization(grid: Grid, diracs) -> np.ndarray:
    """Cone-min guess ``min_k |x - d_k|`` on the padded grid."""
    d = np.asarray(diracs.locations, dtype=float)
    dist = np.hypot(grid.X[..., None] - d[:, 0], grid.Y[..., None] - d[:, 1])
    return dist.min(axis=-1)


def interpolate_to(coarse: Grid, values: np.ndarray, fine: Grid) -> np.ndarray:
    """Bilinear interpolation between padded grids (extrapolating at the rim)."""
    interp = RegularGridInterpolator((coarse.axis, coarse.axis), values,
                                     bounds_error=False, fill_value=None)
    pts = np.stack([fine.X.ravel(), fine.Y.ravel()], axis=1)
    return interp(pts).reshape(fine.X.shape)


def newton_solve(params: SchemeParams, diracs, initial: Optional[np.ndarray] = None, *,
                 tol: float = 1e-8, max_iter: int = 200, max_backtracks: int = 30,
                 continuation: Optional[bool] = None, min_coarse: int = 17,
                 row_order: Optional[np.ndarray] = None) -> SolveReport:
    """Solve ``F[u] = 0`` by damped Newton with a frozen-selection Jacobian.

    Each step solves ``J d = -F`` and halves the step from 1 until the
    max-norm of the residual decreases.  Stops at ``|F|_inf <= tol``.

    Args:
        params: discretisation parameters.
        diracs: the :class:`~pogorelov_ma.transport.DiracMeasure`.
        initial: starting values on the padded grid; cone-min when ``None``.
        continuation: start from a coarser converged solve; defaults to on
            when there are three or more Diracs.
        min_coarse: smallest grid used in continuation.
        row_order: optional permutation applied to the rows of every linear
            system (the solution must not depend on it).
    """
    t0 = time.perf_counter()
    scheme = MongeAmpereScheme(params, diracs)
    grid = scheme.grid
    coarse_iters: List[int] = []

    if continuation is None:
        continuation = len(diracs.weights) >= 3
    if initial is None:
        u = default_initialization(grid, diracs)
        coarse_n = (params.n_x + 1) // 2
        if continuation and coarse_n >= min_coarse and _on_grid(diracs, coarse_n):
            coarse_params = _with_size(params, coarse_n)
            coarse = newton_solve(coarse_params, diracs, tol=tol, max_iter=max_iter,
                                  max_backtracks=max_backtracks, continuation=True,
                                  min_coarse=min_coarse)
            coarse_iters = coarse.coarse_iterations + [coarse.iterations]
            u = interpolate_to(coarse.grid, coarse.potential, grid)
    else:
        u = np.array(initial, dtype=float)
        if u.shape != grid.X.shape:
            raise ContractViolation(f"initial guess has shape {u.shape}, expected {grid.X.shape}")
    if not np.all(np.isfinite(u)):
        raise ContractViolation("initial guess must be finite")

    # u is held as (u - offset) + offset so differences never see a large constant
    mask = scheme.augmented_mask()
    offset = float(np.mean(u[mask]))
    u = u - offset
    field = scheme.residual(u, offset)
    res = field.norm()
    history, damping = [res], []
    it = 0
    while res > tol and it < max_iter:
        J = scheme.jacobian(u, field)
        step = _newton_step(J, -field.values.ravel(), row_order, it, res).reshape(u.shape)
        found = _backtrack(scheme, u, offset, step, res, max_backtracks)
        if found is None:
            # at a kink: retry with the selections active just along the failed step
            probe = u + _PROBE * step / max(np.abs(step).max(), np.finfo(float).tiny)
            J = scheme.jacobian(u, scheme.residual(probe, offset))
            step = _newton_step(J, -field.values.ravel(), row_order, it, res).reshape(u.shape)
            found = _backtrack(scheme, u, offset, step, res, max_backtracks)
        if found is None:
            raise StagnationError(f"no residual decrease after {max_backtracks} backtracks "
                                  f"at iteration {it} (|F| = {res:.3e})", iteration=it,
                                  residual_norm=res)
        lam, trial, tfield, tres = found
        shift = float(np.mean(trial[mask]))
        u, offset, field, res = trial - shift, offset + shift, tfield, tres
        it += 1
        history.append(res)
        damping.append(lam)
        log.debug("newton n_x=%d it=%d |F|=%.3e lambda=%g", params.n_x, it, res, lam)

    n_aug = int(np.count_nonzero(mask))
    u = mean_zero_shift(u, mask) + offset / (1.0 - n_aug)
    heights = np.array([u[i, j] for i, j in scheme.dirac_nodes])
    heights -= heights.min()
    return SolveReport(u, scheme, it, history, damping, heights,
                       time.perf_counter() - t0, res <= tol, coarse_iters)


_PROBE = 1e-7


def _backtrack(scheme, u, offset, step, res, max_backtracks):
    lam = 1.0
    for _ in range(max_backtracks):
        trial = u + lam * step
        tfield = scheme.residual(trial, offset)
        tres = tfield.norm()
        if tres < res:
            return lam, trial, tfield, tres
        lam *= 0.5
    return None


def _newton_step(J, rhs, row_order, it, res):
    if row_order is not None:
        J, rhs = J[row_order], rhs[row_order]
    try:
        return sparse_solve(J, rhs)
    except SolverError as exc:
        raise SolverError(f"linear solve failed at Newton iteration {it}: {exc}",
                          iteration=it, residual_norm=res) from exc


def _on_grid(diracs, n_x: int) -> bool:
    h = 2.0 / (n_x - 1)
    s = (np.asarray(diracs.locations) + 1.0) / h
    inner = (s > 0.5) & (s < n_x - 1.5)
    return bool(np.all(np.abs(s - np.rint(s)) < 1e-9) and np.all(inner))


def _with_size(params: SchemeParams, n_x: int) -> SchemeParams:
    return replace(params, n_x=n_x)
