"""Exact planar geometry on the unit disk.

Laguerre (power) cells of a max-of-planes potential are intersections of
half-planes with the unit disk.  They are represented exactly by a closed
boundary of chords and arcs of the unit circle, which gives their area in
closed form (shoelace over the chord endpoints plus one circular segment per
arc).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import ContractViolation, DegenerateInputError

_UNIT_TOL = 1e-12
_EPS = 1e-14


@dataclass(frozen=True)
class ConvexTarget:
    """Target set Y: the closed unit disk or a convex polygon.

    Polygon vertices are stored counterclockwise and must be strictly convex.
    """

    kind: str = "unit_disk"
    vertices: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "unit_disk":
            return
        if self.kind != "convex_polygon":
            raise ContractViolation(f"unknown target kind {self.kind!r}")
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ContractViolation("polygon needs at least three 2-D vertices")
        e = np.roll(v, -1, axis=0) - v
        turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(turn <= 0):
            raise ContractViolation("polygon must be strictly convex and counterclockwise")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def unit_disk(cls) -> "ConvexTarget":
        return cls("unit_disk")

    @classmethod
    def polygon(cls, vertices) -> "ConvexTarget":
        return cls("convex_polygon", np.asarray(vertices, dtype=float))

    @property
    def area(self) -> float:
        if self.kind == "unit_disk":
            return float(np.pi)
        return abs(_shoelace(self.vertices))


def support_function(target: ConvexTarget, n) -> float:
    """Support function ``sup_{y in Y} y.n`` for a unit direction ``n``."""
    n = np.asarray(n, dtype=float)
    if abs(np.hypot(n[0], n[1]) - 1.0) > _UNIT_TOL:
        raise ContractViolation(f"direction {n} is not a unit vector")
    if target.kind == "unit_disk":
        return 1.0
    return float(np.max(target.vertices @ n))


def support_function_many(target: ConvexTarget, normals: np.ndarray) -> np.ndarray:
    """Vectorised :func:`support_function` over rows of ``normals``."""
    normals = np.asarray(normals, dtype=float)
    if target.kind == "unit_disk":
        return np.ones(len(normals))
    return np.max(normals @ target.vertices.T, axis=1)


def signed_distance(target: ConvexTarget, p) -> float:
    """Signed distance to the boundary of the target: negative inside."""
    p = np.asarray(p, dtype=float)
    if target.kind == "unit_disk":
        return float(np.hypot(p[0], p[1]) - 1.0)
    v = target.vertices
    w = np.roll(v, -1, axis=0)
    e = w - v
    # outward edge normals of a ccw polygon
    nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    gaps = np.einsum("ij,ij->i", p[None, :] - v, nrm)
    if np.all(gaps <= 0):
        return float(np.max(gaps))
    t = np.clip(np.einsum("ij,ij->i", p[None, :] - v, e) / np.einsum("ij,ij->i", e, e), 0, 1)
    closest = v + t[:, None] * e
    return float(np.min(np.linalg.norm(p[None, :] - closest, axis=1)))


@dataclass(frozen=True)
class HalfPlane:
    """The set ``{y : y.normal <= offset}`` with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.hypot(n[0], n[1]) - 1.0) > _UNIT_TOL:
            raise ContractViolation("half-plane normal must be a unit vector")
        object.__setattr__(self, "normal", n)

    @classmethod
    def from_inequality(cls, a, b) -> "HalfPlane":
        """Half-plane ``{y : y.a <= b}`` for a nonzero vector ``a``."""
        a = np.asarray(a, dtype=float)
        na = np.hypot(a[0], a[1])
        return cls(a / na, float(b) / na)


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc of the unit circle from ``theta0`` sweeping ``sweep``."""

    theta0: float
    sweep: float

    @property
    def segment_area(self) -> float:
        return 0.5 * (self.sweep - np.sin(self.sweep))


@dataclass
class DiskCell:
    """Convex subset of the unit disk bounded by chords and unit-circle arcs.

    ``boundary`` alternates :class:`Segment` and :class:`Arc` pieces in
    counterclockwise order.  A full disk is a single arc of sweep ``2*pi``;
    an empty cell has no pieces.
    """

    boundary: List[Union[Segment, Arc]] = field(default_factory=list)
    area: float = 0.0

    @property
    def is_empty(self) -> bool:
        return not self.boundary

    @property
    def polygon(self) -> np.ndarray:
        """Chord endpoints in boundary order (the polygonal part)."""
        pts = []
        for piece in self.boundary:
            if isinstance(piece, Segment):
                pts.append(piece.start)
                pts.append(piece.end)
        return np.array(pts).reshape(-1, 2)


def _shoelace(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_polygon(poly: np.ndarray, hp: HalfPlane) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against one half-plane."""
    if len(poly) == 0:
        return poly
    s = poly @ hp.normal - hp.offset
    inside = s <= 0
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    m = len(poly)
    for i in range(m):
        j = (i + 1) % m
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j]:
            t = s[i] / (s[i] - s[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out)


def disk_cell(halfplanes: Sequence[HalfPlane]) -> DiskCell:
    """Intersection of the unit disk with a set of half-planes."""
    poly = np.array([[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]])
    for hp in halfplanes:
        poly = clip_polygon(poly, hp)
        if len(poly) == 0:
            return DiskCell()
    return _intersect_with_disk(poly)


def _intersect_with_disk(poly: np.ndarray) -> DiskCell:
    segments = []
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        d = b - a
        dd = d @ d
        if dd < _EPS**2:
            continue
        # |a + t d|^2 = 1
        bq = a @ d
        disc = bq * bq - dd * (a @ a - 1.0)
        if disc <= 0:
            continue
        sq = np.sqrt(disc)
        t0 = max((-bq - sq) / dd, 0.0)
        t1 = min((-bq + sq) / dd, 1.0)
        if (t1 - t0) * np.sqrt(dd) <= _EPS:
            continue
        segments.append(Segment(a + t0 * d, a + t1 * d))

    if not segments:
        if _contains_origin(poly):
            return DiskCell([Arc(0.0, 2 * np.pi)], float(np.pi))
        return DiskCell()

    boundary: List[Union[Segment, Arc]] = []
    n = len(segments)
    for i, seg in enumerate(segments):
        boundary.append(seg)
        nxt = segments[(i + 1) % n].start
        gap = seg.end - nxt
        if gap @ gap <= 1e-24:
            continue
        t0 = np.arctan2(seg.end[1], seg.end[0])
        t1 = np.arctan2(nxt[1], nxt[0])
        sweep = (t1 - t0) % (2 * np.pi)
        if n == 1 and sweep == 0.0:
            sweep = 2 * np.pi
        boundary.append(Arc(float(t0), float(sweep)))

    cell = DiskCell(boundary)
    cell.area = cell_area(cell)
    return cell


def _contains_origin(poly: np.ndarray) -> bool:
    w = np.roll(poly, -1, axis=0)
    cross = poly[:, 0] * w[:, 1] - poly[:, 1] * w[:, 0]
    return bool(np.all(cross >= 0))


def cell_area(cell: DiskCell) -> float:
    """Exact area: shoelace over chord endpoints plus circular segments."""
    if cell.is_empty:
        return 0.0
    arcs = sum(p.segment_area for p in cell.boundary if isinstance(p, Arc))
    return max(_shoelace(cell.polygon) + arcs, 0.0)


def _cell_halfplanes(locations: np.ndarray, heights: np.ndarray, k: int):
    dk, vk = locations[k], heights[k]
    planes = []
    for j in range(len(locations)):
        if j == k:
            continue
        a = locations[j] - dk
        b = heights[j] - vk
        if a @ a == 0.0:
            if b == 0.0:
                raise DegenerateInputError(f"Diracs {k} and {j} coincide with equal heights")
            if b < 0:
                return None  # dominated everywhere: empty cell
            continue
        planes.append(HalfPlane.from_inequality(a, b))
    return planes


def laguerre_cell(diracs, heights, k: int) -> DiskCell:
    """Cell ``{y in B(0,1) : y.d_k - v_k >= y.d_j - v_j for all j}``."""
    locations = np.asarray(getattr(diracs, "locations", diracs), dtype=float)
    heights = np.asarray(heights, dtype=float)
    if not np.all(np.isfinite(heights)):
        raise ContractViolation("heights must be finite")
    if not 0 <= k < len(locations):
        raise ContractViolation(f"cell index {k} out of range")
    planes = _cell_halfplanes(locations, heights, k)
    if planes is None:
        return DiskCell()
    return disk_cell(planes)


def laguerre_areas(diracs, heights) -> np.ndarray:
    """Areas of all Laguerre cells."""
    locations = np.asarray(getattr(diracs, "locations", diracs), dtype=float)
    return np.array([laguerre_cell(locations, heights, k).area for k in range(len(locations))])


def mc_area(diracs, heights, k: int, n_samples: int, seed=0, chunk: int = 1_000_000):
    """Monte Carlo cell area by uniform rejection sampling on the disk.

    Returns ``(estimate, standard_error)``.
    """
    if n_samples < 1:
        raise ContractViolation("need at least one sample")
    locations = np.asarray(getattr(diracs, "locations", diracs), dtype=float)
    heights = np.asarray(heights, dtype=float)
    rng = np.random.default_rng(seed)
    hits = 0
    drawn = 0
    while drawn < n_samples:
        m = min(chunk, n_samples - drawn)
        y = rng.uniform(-1.0, 1.0, size=(int(m * 1.3) + 16, 2))
        y = y[np.einsum("ij,ij->i", y, y) <= 1.0][:m]
        vals = y @ locations.T - heights[None, :]
        hits += int(np.count_nonzero(np.argmax(vals, axis=1) == k))
        drawn += len(y)
    p = hits / drawn
    return np.pi * p, np.pi * np.sqrt(p * (1.0 - p) / drawn)
