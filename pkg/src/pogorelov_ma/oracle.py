"""Exact reference heights by sequential lifting of the supporting planes.

Lowering the height ``v_k`` lifts plane ``k`` and grows its Laguerre cell
while every other cell shrinks, so each height can be fixed by a monotone
1-D root-find.  Sweeping over the Diracs until every area matches gives the
semi-discrete transport potential with exact cell geometry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ContractViolation, NonConvergenceError
from .geometry import laguerre_areas, laguerre_cell
from .transport import DiracMeasure

log = logging.getLogger(__name__)

BRACKET = 4.0


@dataclass
class OracleResult:
    """Heights (smallest is zero), final per-cell area errors and sweep count."""

    heights: np.ndarray
    area_errors: np.ndarray
    sweeps: int

    @property
    def max_area_error(self) -> float:
        return float(np.max(np.abs(self.area_errors)))


def pogorelov_solve(diracs: DiracMeasure, tolerance: float = 1e-10,
                    max_sweeps=None) -> OracleResult:
    """Find heights whose Laguerre cells in the unit disk have the target areas.

    Args:
        diracs: locations and weights; the weights must sum to ``pi``.
        tolerance: stop once every ``|area_k - alpha_k|`` is below this.
        max_sweeps: sweep limit, ``10 K^2`` by default.

    Raises:
        NonConvergenceError: the sweep limit was reached.  The final heights
            and area errors are attached as ``details``.
    """
    alpha = np.asarray(diracs.weights, dtype=float)
    if abs(alpha.sum() - np.pi) > 1e-8:
        raise ContractViolation(f"weights sum to {alpha.sum():.10f}, expected pi")
    loc = np.asarray(diracs.locations, dtype=float)
    K = len(alpha)
    if max_sweeps is None:
        max_sweeps = 10 * K * K
    v = np.zeros(K)
    if K == 1:
        return OracleResult(v, np.zeros(1), 0)

    def mismatch(t, k):
        trial = v.copy()
        trial[k] = t
        return laguerre_cell(loc, trial, k).area - alpha[k]

    errors = laguerre_areas(loc, v) - alpha
    sweeps = 0
    while np.max(np.abs(errors)) > tolerance:
        if sweeps >= max_sweeps:
            raise NonConvergenceError(
                f"Pogorelov sweeps did not converge in {max_sweeps} sweeps "
                f"(max area error {np.max(np.abs(errors)):.3e})",
                details={"heights": v - v.min(), "area_errors": errors, "sweeps": sweeps})
        for k in range(K):
            lo, hi = v[k] - BRACKET, v[k] + BRACKET
            v[k] = brentq(mismatch, lo, hi, args=(k,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        v -= v.min()
        sweeps += 1
        errors = laguerre_areas(loc, v) - alpha
        log.debug("sweep %d max area error %.3e", sweeps, np.max(np.abs(errors)))
    return OracleResult(v, errors, sweeps)


@dataclass
class OracleComparison:
    """Scheme heights measured against the oracle."""

    height_error: float
    area_errors: np.ndarray

    @property
    def area_linf(self) -> float:
        return float(np.max(np.abs(self.area_errors)))

    @property
    def area_rss(self) -> float:
        return float(np.sqrt(np.sum(self.area_errors**2)))


def oracle_vs_scheme(oracle: OracleResult, report, diracs: DiracMeasure) -> OracleComparison:
    """Shift-aligned height error and exact cell-area errors of the scheme's heights."""
    a = np.asarray(oracle.heights, dtype=float)
    b = np.asarray(report.heights if hasattr(report, "heights") else report, dtype=float)
    if a.shape != b.shape:
        raise ContractViolation("oracle and scheme heights have different lengths")
    a, b = a - a.min(), b - b.min()
    areas = laguerre_areas(diracs.locations, b)
    return OracleComparison(float(np.max(np.abs(a - b))), areas - diracs.weights)
