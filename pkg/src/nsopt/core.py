"""
Shared primitives: vectors, oracle replies, query accounting, seeded
randomness and min-norm points of convex hulls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np


class BudgetExhausted(Exception):
    """Raised when an oracle call would exceed the query budget."""

    def __init__(self, budget: int):
        super().__init__(f"oracle budget of {budget} calls exhausted")
        self.budget = budget


class MinNormNotConverged(Exception):
    """Wolfe's method hit its iteration cap; carries the best point found."""

    def __init__(self, weights: np.ndarray, point: np.ndarray, iterations: int):
        super().__init__(f"min-norm point did not converge in {iterations} iterations")
        self.weights = weights
        self.point = point
        self.iterations = iterations


def as_vector(x: Any) -> np.ndarray:
    v = np.array(x, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValueError("vector must have positive dimension")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def dot(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(a @ b)


def norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def unit(i: int, dim: int) -> np.ndarray:
    """Standard basis vector e_i (0-based index)."""
    e = np.zeros(dim)
    e[i] = 1.0
    return e


# --------------------------------------------------------------------------
# oracle replies and subdifferential descriptors
# --------------------------------------------------------------------------


@dataclass
class ActiveSet:
    """Finite generator set whose convex hull is the full subdifferential.

    ``indices`` lists active pieces (1-based where the construction is
    indexed that way) and ``kinks`` flags the subset sitting exactly on a
    kink of their own piece.
    """

    generators: np.ndarray
    indices: tuple = ()
    kinks: tuple = ()

    def __post_init__(self):
        self.generators = np.atleast_2d(np.asarray(self.generators, dtype=float))

    @property
    def interval(self) -> tuple[float, float]:
        """(lo, hi) of a one-dimensional subdifferential."""
        if self.generators.shape[1] != 1:
            raise ValueError("interval view only exists in dimension one")
        col = self.generators[:, 0]
        return float(col.min()), float(col.max())

    def distance(self, g) -> float:
        """Euclidean distance from g to the hull of the generators."""
        g = np.asarray(g, dtype=float)
        if len(self.generators) == 1:
            return norm(self.generators[0] - g)
        _, v = min_norm_point(self.generators - g)
        return norm(v)

    def contains(self, g, tol: float = 1e-9) -> bool:
        return self.distance(g) <= tol


@dataclass
class OracleReply:
    value: float
    subgrad: np.ndarray
    active_set: Optional[ActiveSet] = None


Oracle = Callable[[np.ndarray], OracleReply]


# --------------------------------------------------------------------------
# query accounting
# --------------------------------------------------------------------------


@dataclass
class QueryRecord:
    t: int
    x: np.ndarray
    value: float
    subgrad: np.ndarray
    event: str


@dataclass
class QueryLedger:
    budget: Optional[int] = None
    records: list = field(default_factory=list)

    def __post_init__(self):
        if self.budget is not None and self.budget <= 0:
            raise ValueError("budget must be positive")

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def remaining(self) -> Optional[int]:
        if self.budget is None:
            return None
        return self.budget - self.count

    def check(self):
        if self.budget is not None and self.count >= self.budget:
            raise BudgetExhausted(self.budget)

    def append(self, x, reply: OracleReply, event: str) -> QueryRecord:
        self.check()
        rec = QueryRecord(self.count, np.array(x, dtype=float), float(reply.value),
                          np.array(reply.subgrad, dtype=float), event)
        self.records.append(rec)
        return rec


class TrackedOracle:
    """Wraps a first-order oracle with a ledger and an optional budget.

    Every call is charged before the underlying oracle runs, so a budget
    overrun raises ``BudgetExhausted`` without evaluating anything.
    """

    def __init__(self, fn: Oracle, budget: Optional[int] = None,
                 ledger: Optional[QueryLedger] = None):
        self.fn = fn
        self.ledger = ledger if ledger is not None else QueryLedger(budget)
        self.dim = getattr(getattr(fn, "meta", None), "dim", None)

    @property
    def count(self) -> int:
        return self.ledger.count

    def __call__(self, x, event: str = "query") -> OracleReply:
        x = as_vector(x)
        self.ledger.check()
        reply = self.fn(x)
        self.ledger.append(x, reply, event)
        return reply


def tracked(oracle, budget: Optional[int] = None) -> TrackedOracle:
    if isinstance(oracle, TrackedOracle):
        return oracle
    return TrackedOracle(oracle, budget)


def query(oracle, x, event: str) -> OracleReply:
    """Call an oracle, passing the event tag only to tracked oracles."""
    if isinstance(oracle, TrackedOracle):
        return oracle(x, event)
    return oracle(x)


# --------------------------------------------------------------------------
# randomness
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (seed, stream id)."""

    seed: int
    stream: int = 0

    def generator(self, sub: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed % 2**64, spawn_key=(self.stream, sub))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, self.stream * 1_000_003 + stream + 1)


# --------------------------------------------------------------------------
# min-norm primitives
# --------------------------------------------------------------------------


def min_norm_combination(g, q) -> tuple[float, np.ndarray]:
    """Minimize ||lam*g + (1-lam)*q|| over lam in [0, 1]."""
    g = np.asarray(g, dtype=float)
    q = np.asarray(q, dtype=float)
    if g.shape != q.shape:
        raise ValueError("dimension mismatch")
    diff = g - q
    denom = float(diff @ diff)
    if denom == 0.0:
        return 1.0, g.copy()
    lam = float(np.clip((q @ (q - g)) / denom, 0.0, 1.0))
    return lam, lam * g + (1.0 - lam) * q


def _unique_rows(P: np.ndarray):
    _, first, inverse = np.unique(P, axis=0, return_index=True, return_inverse=True)
    # keep original order so tie-breaks stay "lowest index wins"
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return first[order], rank[np.asarray(inverse).reshape(-1)]


def _affine_min_norm(Q: np.ndarray) -> np.ndarray:
    k = len(Q)
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = Q @ Q.T
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:k]


def _wolfe(P: np.ndarray, tol: float, max_iter: int):
    norms2 = np.einsum("ij,ij->i", P, P)
    scale = max(float(norms2.max()), np.finfo(float).tiny)
    S = [int(np.argmin(norms2))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    for it in range(max_iter):
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in S:
            return S, lam, x, it
        S.append(j)
        lam = np.append(lam, 0.0)
        first = True
        while True:
            mu = _affine_min_norm(P[S])
            if np.all(mu > 1e-14):
                lam = mu
                break
            neg = mu <= 1e-14
            step = lam - mu
            ratios = np.where(neg & (step > 0), lam / np.where(step > 0, step, 1.0), np.inf)
            i_star = int(np.argmin(ratios))
            if first and i_star == len(S) - 1 and ratios[i_star] == 0.0:
                # the entering vertex carries no weight: numerically stalled
                S.pop()
                lam = lam[:-1]
                return S, lam, lam @ P[S], it
            first = False
            theta = min(float(ratios[i_star]), 1.0)
            lam = lam + theta * (mu - lam)
            lam[i_star] = 0.0
            keep = lam > 1e-14
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[S]
    raise MinNormNotConverged(_scatter(S, lam, len(P)), x, max_iter)


def _scatter(S, lam, m):
    w = np.zeros(m)
    w[S] = lam
    return w


def min_norm_point(gs: Sequence, tol: float = 1e-9,
                   max_iter: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm point of conv(gs) by Wolfe's method.

    Returns simplex weights (one per input row) and the point itself.
    Duplicate rows are merged onto their first occurrence.
    """
    P = np.atleast_2d(np.asarray(gs, dtype=float))
    if P.size == 0:
        raise ValueError("need at least one vector")
    m, dim = P.shape
    keep, inverse = _unique_rows(P)
    U = P[keep]
    if len(U) == 1:
        w = np.zeros(m)
        w[keep[0]] = 1.0
        return w, U[0].copy()

    if dim == 1:
        col = U[:, 0]
        lo, hi = int(np.argmin(col)), int(np.argmax(col))
        if col[lo] >= 0.0:
            S, lam = [lo], np.array([1.0])
        elif col[hi] <= 0.0:
            S, lam = [hi], np.array([1.0])
        else:
            a, b = col[lo], col[hi]
            S, lam = [lo, hi], np.array([b / (b - a), -a / (b - a)])
        v = np.array([float(lam @ col[S])])
    else:
        cap = max_iter if max_iter is not None else 10 * m * dim
        try:
            S, lam, v, _ = _wolfe(U, tol, cap)
        except MinNormNotConverged as err:
            w = np.zeros(m)
            w[keep] = err.weights
            raise MinNormNotConverged(w, err.point, err.iterations) from None
    w = np.zeros(m)
    w[keep[S]] = lam
    return w, v


def orthonormal_complement_vector(vs: Sequence, dim: int, tol: float = 1e-9) -> np.ndarray:
    """Unit vector orthogonal to every vector in vs.

    Picks the first standard basis vector outside span(vs) and
    orthogonalizes it against an orthonormal basis of the span.
    """
    basis: list[np.ndarray] = []
    for v in vs:
        w = np.array(v, dtype=float).reshape(-1)
        if w.shape != (dim,):
            raise ValueError("dimension mismatch")
        for _ in range(2):
            for b in basis:
                w = w - (b @ w) * b
        n = np.linalg.norm(w)
        if n > tol:
            basis.append(w / n)
    if len(basis) >= dim:
        raise ValueError("no orthogonal complement: vectors span the space")
    for i in range(dim):
        w = unit(i, dim)
        for _ in range(2):
            for b in basis:
                w = w - (b @ w) * b
        n = np.linalg.norm(w)
        if n > tol:
            return w / n
    raise ValueError("no orthogonal complement found")


def random_orthogonal(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """Column-orthonormal matrix, Haar distributed (sign-corrected QR)."""
    if rows < cols or cols < 1:
        raise ValueError("need rows >= cols >= 1")
    G = rng.generator().standard_normal((rows, cols))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


# --------------------------------------------------------------------------
# certificates
# --------------------------------------------------------------------------


@dataclass
class Certificate:
    """Convex combination of subgradients taken inside a closed delta-ball."""

    center: np.ndarray
    delta: float
    points: np.ndarray
    weights: np.ndarray
    subgrads: np.ndarray
    g: np.ndarray
    norm: float

    @classmethod
    def build(cls, center, delta, points, weights, subgrads, prune=True):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        subgrads = np.atleast_2d(np.asarray(subgrads, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if prune:
            keep = weights > 0
            points, subgrads, weights = points[keep], subgrads[keep], weights[keep]
        weights = weights / weights.sum()
        g = weights @ subgrads
        return cls(np.asarray(center, dtype=float), float(delta), points, weights,
                   subgrads, g, norm(g))

    def __len__(self):
        return len(self.weights)
