"""Uniform grid on the computational square and wide-stencil directions."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .errors import ContractViolation, StencilRangeError

INTERIOR = 0
DIRAC = 1
BOUNDARY = 2


@dataclass(frozen=True)
class StencilSet:
    """Coprime lattice directions sorted by angle.

    Attributes:
        width: maximum coordinate ``max(|p|, |q|)`` of an offset.
        offsets: integer array (N, 2) of directions ``(p, q)``.
        angles: angles in ``[0, 2*pi)``, strictly increasing.
        lengths: Euclidean lengths ``sqrt(p**2 + q**2)`` in grid units.
        weights: angular weights ``(theta_{i+1} - theta_{i-1}) / 2``.
        opposite: index of the direction rotated by ``pi``.
        perpendicular: index of the direction rotated by ``pi / 2``.
    """

    width: int
    offsets: np.ndarray
    angles: np.ndarray
    lengths: np.ndarray
    weights: np.ndarray
    opposite: np.ndarray
    perpendicular: np.ndarray

    def __len__(self):
        return len(self.offsets)

    @property
    def resolution(self) -> float:
        """Angular resolution ``max_i dtheta_i``."""
        return float(self.weights.max())

    @property
    def units(self) -> np.ndarray:
        return self.offsets / self.lengths[:, None]


def build_stencil(w: int) -> StencilSet:
    """All coprime offsets with ``max(|p|, |q|) <= w``, sorted by angle."""
    if int(w) != w or w < 1:
        raise ContractViolation(f"stencil width must be a positive integer, got {w}")
    w = int(w)
    offs = [(p, q) for p in range(-w, w + 1) for q in range(-w, w + 1)
            if (p, q) != (0, 0) and gcd(abs(p), abs(q)) == 1]
    offs = np.array(offs, dtype=int)
    angles = np.mod(np.arctan2(offs[:, 1], offs[:, 0]), 2 * np.pi)
    order = np.argsort(angles, kind="stable")
    offs, angles = offs[order], angles[order]
    lengths = np.hypot(offs[:, 0], offs[:, 1])
    nxt = np.roll(angles, -1)
    nxt[-1] += 2 * np.pi
    prv = np.roll(angles, 1)
    prv[0] -= 2 * np.pi
    weights = 0.5 * (nxt - prv)

    lookup = {tuple(o): i for i, o in enumerate(offs)}
    opposite = np.array([lookup[(-p, -q)] for p, q in offs])
    perpendicular = np.array([lookup[(-q, p)] for p, q in offs])
    return StencilSet(w, offs, angles, lengths, weights, opposite, perpendicular)


def default_width(h: float) -> int:
    """Stencil width ``floor(1/sqrt(h))``, at least one."""
    return max(1, int(np.floor(1.0 / np.sqrt(h) + 1e-9)))


class Grid:
    """Uniform grid on ``[-1, 1]^2`` with a boundary layer of ``pad`` nodes.

    The padded grid has ``n = n_x + 2*pad`` nodes per side.  Nodes strictly
    inside the square carry the Monge-Ampere (or Dirac) equation; nodes on the
    square's boundary and in the layer outside it carry the Hamilton-Jacobi
    boundary condition.  Flat node indices are row-major over ``(i, j)`` with
    ``i`` the x-index.
    """

    def __init__(self, n_x: int, pad: int):
        if n_x < 5:
            raise ContractViolation("need at least 5 nodes per dimension")
        if pad < 1:
            raise ContractViolation("boundary layer must be at least one node wide")
        self.n_x = int(n_x)
        self.pad = int(pad)
        self.h = 2.0 / (n_x - 1)
        self.n = self.n_x + 2 * self.pad
        self.axis = -1.0 + (np.arange(self.n) - self.pad) * self.h
        self.X, self.Y = np.meshgrid(self.axis, self.axis, indexing="ij")

        lo, hi = self.pad, self.pad + self.n_x - 1
        idx = np.arange(self.n)
        inside = (idx > lo) & (idx < hi)
        self.interior_mask = inside[:, None] & inside[None, :]
        self.domain_mask = np.zeros((self.n, self.n), dtype=bool)
        self.domain_mask[lo:hi + 1, lo:hi + 1] = True
        self.kind = np.where(self.interior_mask, INTERIOR, BOUNDARY)

        # outward normal class of each boundary-layer node, components in {-1,0,1}
        side = np.where(idx <= lo, -1, np.where(idx >= hi, 1, 0))
        self.normal_x = np.broadcast_to(side[:, None], (self.n, self.n)).copy()
        self.normal_y = np.broadcast_to(side[None, :], (self.n, self.n)).copy()
        self.normal_x[self.interior_mask] = 0
        self.normal_y[self.interior_mask] = 0

    @property
    def size(self) -> int:
        return self.n * self.n

    def flat(self, i, j):
        return np.asarray(i) * self.n + np.asarray(j)

    def unflat(self, k):
        return np.divmod(k, self.n)

    def index_of(self, point, tol: float = 1e-9):
        """Node ``(i, j)`` at ``point``; raises if the point is off the grid."""
        point = np.asarray(point, dtype=float)
        s = (point + 1.0) / self.h + self.pad
        r = np.rint(s)
        if np.any(np.abs(s - r) > tol) or np.any(r < 0) or np.any(r >= self.n):
            raise ContractViolation(f"point {point.tolist()} is not a grid node")
        return int(r[0]), int(r[1])

    def neighbor(self, node, offset, sign: int = 1):
        """Node at ``x + sign * offset * h`` for ``node = (i, j)``."""
        i = node[0] + sign * int(offset[0])
        j = node[1] + sign * int(offset[1])
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise StencilRangeError(f"step {tuple(offset)} x {sign} from {tuple(node)} leaves the grid")
        return i, j

    def mark_diracs(self, nodes):
        for i, j in nodes:
            if not self.interior_mask[i, j]:
                raise ContractViolation(f"Dirac node {(i, j)} is not interior")
            self.kind[i, j] = DIRAC

    def restrict(self, u: np.ndarray) -> np.ndarray:
        """Values on the ``n_x`` by ``n_x`` nodes of the square."""
        p = self.pad
        return u[p:p + self.n_x, p:p + self.n_x]
