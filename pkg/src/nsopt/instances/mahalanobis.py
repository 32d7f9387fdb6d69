"""Mahalanobis norm separating (delta, eps)-stationarity from closeness to eps-stationarity."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..core import Certificate, OracleReply, norm
from .base import Instance, InstanceMeta


def default_dim(eps: float) -> int:
    return int(math.ceil(3.0 / eps ** 2))


def mahalanobis_eval(x, eps: float, d: Optional[int] = None) -> OracleReply:
    """sqrt(x^T A x) with A = diag(2 eps^2, 1, ..., 1); subgradient 0 at the origin."""
    x = np.asarray(x, dtype=float).reshape(-1)
    d = default_dim(eps) if d is None else d
    if x.shape[0] != d:
        raise ValueError(f"expected dimension {d}")
    diag = np.ones(d)
    diag[0] = 2.0 * eps ** 2
    Ax = diag * x
    q = float(x @ Ax)
    if q == 0.0:
        return OracleReply(0.0, np.zeros(d))
    r = math.sqrt(q)
    return OracleReply(r, Ax / r)


def witness_norm(eps: float, d: int) -> float:
    """Norm of the averaged witness gradient, sqrt(2 eps^2/9 + 8/(9(d-1)))."""
    return math.sqrt(2 * eps ** 2 / 9 + 8 / (9 * (d - 1)))


def witness_center(delta: float, eps: float, d: int) -> np.ndarray:
    x0 = np.zeros(d)
    x0[0] = delta / (8 * eps)
    return x0


def mahalanobis_witness(delta: float, eps: float, d: Optional[int] = None) -> Certificate:
    """Equal-weight certificate on x0 + (delta/2) e_j, j = 2..d, at x0 = (delta/(8 eps)) e_1."""
    d = default_dim(eps) if d is None else d
    if witness_norm(eps, d) >= eps:
        raise ValueError("parameters give a witness norm >= eps")
    x0 = witness_center(delta, eps, d)
    pts = np.tile(x0, (d - 1, 1))
    pts[np.arange(d - 1), np.arange(1, d)] += delta / 2
    grads = np.array([mahalanobis_eval(p, eps, d).subgrad for p in pts])
    return Certificate.build(x0, delta, pts, np.full(d - 1, 1.0 / (d - 1)), grads)


class Mahalanobis(Instance):
    def __init__(self, eps: float, d: Optional[int] = None, delta: float = 0.5):
        self.eps = float(eps)
        d = default_dim(eps) if d is None else int(d)
        self.delta = float(delta)
        super().__init__(InstanceMeta(lipschitz=1.0, subopt_bound=self.delta / (8 * self.eps) * math.sqrt(2) * self.eps,
                                      dim=d, convex=True, domain_bound=self.delta / (8 * self.eps)),
                         {"name": "mahalanobis", "eps": self.eps, "d": d, "delta": self.delta},
                         witness_center(self.delta, self.eps, d))

    def evaluate(self, x):
        return mahalanobis_eval(x, self.eps, self.meta.dim)

    def witness(self, x, delta):
        cert = mahalanobis_witness(delta, self.eps, self.meta.dim)
        if norm(cert.center - np.asarray(x, dtype=float)) > 0:
            return None
        return cert
