"""Measures, max-of-planes potentials and Legendre-Fenchel utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

TOTAL_MASS_TOL = 1e-8


@dataclass(frozen=True)
class DiracMeasure:
    """Weighted sum of Diracs ``sum_k alpha_k delta_{d_k}``.

    Weights must be positive and, by default, sum to the area ``pi`` of the
    unit disk.  Pass ``total=None`` to skip the mass check (e.g. for a
    non-uniform target density).
    """

    locations: np.ndarray
    weights: np.ndarray

    def __init__(self, locations, weights, total=np.pi, box: float = 1.0):
        loc = np.atleast_2d(np.asarray(locations, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if loc.shape[1] != 2 or len(loc) != len(w):
            raise ContractViolation("need one 2-D location per weight")
        if np.any(w <= 0):
            raise ContractViolation("Dirac weights must be positive")
        if total is not None and abs(w.sum() - total) > TOTAL_MASS_TOL:
            raise ContractViolation(f"weights sum to {w.sum():.10f}, expected {total:.10f}")
        if np.any(np.abs(loc) >= box):
            raise ContractViolation("Dirac locations must lie inside the computational square")
        if len(np.unique(loc, axis=0)) != len(loc):
            raise ContractViolation("Dirac locations must be pairwise distinct")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, locations, weights, total=np.pi, **kw) -> "DiracMeasure":
        """Rescale ``weights`` so they sum to ``total`` exactly."""
        w = np.asarray(weights, dtype=float)
        return cls(locations, w * (total / w.sum()), total=total, **kw)

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class MaxOfPlanesPotential:
    """``phi(y) = max_k { y . d_k - v_k }``."""

    locations: np.ndarray
    heights: np.ndarray

    def __init__(self, diracs, heights):
        loc = np.asarray(getattr(diracs, "locations", diracs), dtype=float)
        v = np.asarray(heights, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ContractViolation("heights must be finite")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "heights", v)

    def values(self, y) -> np.ndarray:
        """Values of every plane at points ``y`` (..., 2) -> (..., K)."""
        y = np.asarray(y, dtype=float)
        return y @ self.locations.T - self.heights

    def __call__(self, y):
        return self.values(y).max(axis=-1)


@dataclass(frozen=True)
class ConeMinFunction:
    """``psi(x) = min_k { v_k + |x - d_k| }``."""

    locations: np.ndarray
    heights: np.ndarray

    def __init__(self, diracs, heights):
        loc = np.asarray(getattr(diracs, "locations", diracs), dtype=float)
        v = np.asarray(heights, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ContractViolation("heights must be finite")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "heights", v)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = np.linalg.norm(x[..., None, :] - self.locations, axis=-1)
        return (self.heights + d).min(axis=-1)


def eval_potential(phi: MaxOfPlanesPotential, y):
    """Value of ``phi`` at ``y`` and the (smallest) maximising plane index."""
    vals = phi.values(y)
    k = np.argmax(vals, axis=-1)
    return np.take_along_axis(vals, np.expand_dims(k, -1), -1)[..., 0], k


def transport_map(phi: MaxOfPlanesPotential, y) -> np.ndarray:
    """Dirac location that ``y`` is sent to (ties go to the lower index)."""
    _, k = eval_potential(phi, y)
    return phi.locations[k]


def recover_heights(u: np.ndarray, grid, diracs) -> np.ndarray:
    """Heights ``v_k = u(d_k)`` shifted so that the smallest is zero."""
    idx = [grid.index_of(p) for p in diracs.locations]
    v = np.array([u[i, j] for i, j in idx])
    return v - v.min()


def legendre_transform(values: np.ndarray, points: np.ndarray, slopes: np.ndarray,
                       chunk: int = 2048) -> np.ndarray:
    """Discrete transform ``f*(s) = max_i { s . x_i - f(x_i) }``."""
    out = np.empty(len(slopes))
    for a in range(0, len(slopes), chunk):
        s = slopes[a:a + chunk]
        out[a:a + chunk] = np.max(s @ points.T - values[None, :], axis=1)
    return out


def disk_samples(resolution: int) -> np.ndarray:
    """Cartesian grid points of ``[-1, 1]^2`` inside the unit disk plus the circle."""
    t = np.linspace(-1.0, 1.0, resolution)
    X, Y = np.meshgrid(t, t, indexing="ij")
    inside = X**2 + Y**2 <= 1.0
    ang = np.linspace(0.0, 2 * np.pi, 4 * resolution, endpoint=False)
    rim = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.concatenate([np.stack([X[inside], Y[inside]], axis=1), rim])


def cone_envelope_eval(psi: ConeMinFunction, x, resolution: int = 201, box: float = 2.0):
    """Convex envelope ``psi**`` at ``x`` by a brute-force double transform.

    ``psi`` is sampled on a ``resolution``-square grid over ``[-box, box]^2``
    and at ``x``,
    transformed onto slopes sampled in the closed unit disk (``psi`` is
    1-Lipschitz, so its transform is infinite outside it), and transformed
    back at ``x``.  Accuracy is on the order of the sample spacings.
    """
    if resolution < 2:
        raise ContractViolation("resolution must be at least 2")
    t = np.linspace(-box, box, resolution)
    X, Y = np.meshgrid(t, t, indexing="ij")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    # sampling the query points too keeps the result below psi there
    pts = np.concatenate([np.stack([X.ravel(), Y.ravel()], axis=1), x])
    slopes = disk_samples(resolution)
    conj = legendre_transform(psi(pts), pts, slopes)
    out = legendre_transform(conj, slopes, x)
    return out if out.size > 1 else float(out[0])


def plane_dual(locations, height, x):
    """Dual of ``y -> y.d - v`` restricted to the unit disk: ``v + |x - d|``."""
    return height + np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(locations, dtype=float), axis=-1)


def check_duality(phi: MaxOfPlanesPotential, tolerance: float, resolution: int = 161,
                  n_checks: int = 200, seed: int = 0) -> dict:
    """Numerical checks of basic Legendre-Fenchel properties for ``phi``.

    The transform is taken over samples of the unit disk.  Returns a dict of
    ``{name: (max_deviation, passed)}`` for:

    * ``convexity`` -- midpoint inequality for the numerical ``phi*``;
    * ``involution`` -- ``phi** = phi`` on the disk;
    * ``attainment`` -- ``phi(y) + phi*(d_k) = y . d_k`` inside cell ``k``;
    * ``plane_dual`` -- the transform of a single plane is a cone.
    """
    rng = np.random.default_rng(seed)
    ys = disk_samples(resolution)
    fy = phi(ys)

    def conj(x):
        return legendre_transform(fy, ys, np.atleast_2d(x))

    report = {}

    a = rng.uniform(-1.5, 1.5, size=(n_checks, 2))
    b = rng.uniform(-1.5, 1.5, size=(n_checks, 2))
    gap = conj(0.5 * (a + b)) - 0.5 * (conj(a) + conj(b))
    dev = float(max(gap.max(), 0.0))
    report["convexity"] = (dev, dev <= 1e-12)

    # phi** at points of the disk; slopes live on a box large enough to hold them
    t = np.linspace(-2.0, 2.0, resolution)
    X, Y = np.meshgrid(t, t, indexing="ij")
    xs = np.stack([X.ravel(), Y.ravel()], axis=1)
    xs = np.concatenate([xs, phi.locations])
    cx = conj(xs)
    yq = disk_samples(31)
    yq = yq[np.linalg.norm(yq, axis=1) < 0.95]
    back = legendre_transform(cx, xs, yq)
    dev = float(np.max(np.abs(back - phi(yq))))
    report["involution"] = (dev, dev <= tolerance)

    vals, k = eval_potential(phi, ys)
    devs = []
    for j in range(len(phi.locations)):
        inside = ys[k == j]
        if len(inside) == 0:
            continue
        lhs = phi(inside) + conj(phi.locations[j])[0]
        devs.append(np.max(np.abs(lhs - inside @ phi.locations[j])))
    dev = float(max(devs)) if devs else 0.0
    report["attainment"] = (dev, dev <= tolerance)

    j = int(rng.integers(len(phi.locations)))
    d, v = phi.locations[j], phi.heights[j]
    xq = rng.uniform(-1.5, 1.5, size=(n_checks, 2))
    single = legendre_transform(ys @ d - v, ys, xq)
    dev = float(np.max(np.abs(single - plane_dual(d, v, xq))))
    report["plane_dual"] = (dev, dev <= tolerance)
    return report
