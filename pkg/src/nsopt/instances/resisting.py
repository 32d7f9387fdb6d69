"""Function consistent with an uninformative oracle on a fixed query set.

Given queries x_1..x_T, the construction interpolates inside small balls
around each query between the linear map e_1^T(x - x_i) and v^T x, where v
is a unit vector orthogonal to e_1 and every query.  Outside the balls the
function is v^T x.  Scaling by 1/7 and flooring at -1/7 yields a
1-Lipschitz function whose value and gradient at every query are 0 and
e_1/7, and which has no (1/7, 1/252)-stationary query.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import ActiveSet, OracleReply, as_vector, orthonormal_complement_vector, unit
from .base import Instance, InstanceMeta

SCALE = 1.0 / 7.0


def dedupe(queries: Sequence) -> np.ndarray:
    """Drop exact repeats, keeping first occurrences in order."""
    kept: list[np.ndarray] = []
    for q in queries:
        q = as_vector(q)
        if not any(np.array_equal(q, k) for k in kept):
            kept.append(q)
    return np.array(kept)


def interpolation_radius(points: np.ndarray) -> float:
    """A quarter of the smallest pairwise distance; 1 for a single point."""
    if len(points) < 2:
        return 1.0
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min()) / 4.0


class ResistingFunction(Instance):
    def __init__(self, queries: Sequence, d: int):
        pts = dedupe(queries)
        if pts.shape[1] != d:
            raise ValueError("queries must live in dimension d")
        rank = np.linalg.matrix_rank(pts) if len(pts) else 0
        if d - rank < 2:
            raise ValueError("need at least two free dimensions beyond the query span")
        self.points = pts
        self.r = interpolation_radius(pts)
        self.v = orthonormal_complement_vector([unit(0, d)] + list(pts), d)
        super().__init__(InstanceMeta(lipschitz=1.0, subopt_bound=1.0, dim=d, convex=False),
                         {"name": "resisting", "d": d, "queries": pts.tolist()},
                         pts[0].copy())

    # the unscaled interpolant h ------------------------------------------

    def nearest(self, x):
        diff = self.points - x
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        i = int(np.argmin(dist))
        return i, float(dist[i])

    def _g_pieces(self, x, z):
        r2 = self.r ** 2
        u = x - z
        m = float(u @ u) / r2
        e1 = unit(0, len(x))
        val = m * float(self.v @ x) + (1.0 - m) * float(u[0])
        grad = (2.0 * float(self.v @ x) / r2) * u + m * self.v - (2.0 * u[0] / r2) * u - m * e1 + e1
        return val, grad

    def h(self, x) -> tuple[float, np.ndarray, list]:
        """Value, gradient and the list of all limiting gradients of h at x."""
        x = as_vector(x)
        i, dist = self.nearest(x)
        lin = (float(self.v @ x), self.v.copy())
        if dist < self.r:
            val, grad = self._g_pieces(x, self.points[i])
            return val, grad, [grad]
        if dist == self.r:
            _, inner = self._g_pieces(x, self.points[i])
            return lin[0], lin[1], [lin[1], inner]
        return lin[0], lin[1], [lin[1]]

    def evaluate(self, x):
        hv, hg, gens = self.h(x)
        if hv > -1.0:
            return OracleReply(SCALE * hv, SCALE * hg, ActiveSet(SCALE * np.array(gens)))
        if hv < -1.0:
            return OracleReply(-SCALE, np.zeros_like(x), ActiveSet(np.zeros((1, len(x)))))
        return OracleReply(-SCALE, SCALE * hg, ActiveSet(np.vstack([SCALE * np.array(gens), np.zeros(len(x))])))


def resisting_function_build(queries: Sequence, d: int) -> ResistingFunction:
    return ResistingFunction(queries, d)
