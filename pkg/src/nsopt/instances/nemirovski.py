"""Nemirovski-type max functions used for the randomized lower bound."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp, softmax

from ..core import ActiveSet, OracleReply, RngStream, as_vector, random_orthogonal
from .base import Instance, InstanceMeta

KINK_TOL = 1e-12


def prog_alpha(x, alpha: float) -> int:
    """Largest 1-based index i with |x_i| > alpha, or 0 when there is none."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    idx = np.nonzero(np.abs(np.asarray(x, dtype=float)) > alpha)[0]
    return int(idx[-1]) + 1 if idx.size else 0


def nemirovski_eval(x, T: int, alpha: float) -> OracleReply:
    """max_i |x_i - 1| + 3*alpha*(T - i) with the lowest-index subgradient.

    On a kink (x_i == 1 at the chosen index) the subgradient is +e_i.  The
    active set lists every active index, and every kinked one contributes
    both +e_i and -e_i as generators.
    """
    x = as_vector(x)
    if x.shape[0] != T:
        raise ValueError(f"expected dimension {T}")
    offsets = 3.0 * alpha * (T - np.arange(1, T + 1))
    dev = x - 1.0
    terms = np.abs(dev) + offsets
    i = int(np.argmax(terms))
    value = float(terms[i])

    g = np.zeros(T)
    g[i] = 1.0 if dev[i] >= 0 else -1.0

    active = np.nonzero(terms >= value - KINK_TOL * (1.0 + abs(value)))[0]
    gens, kinks = [], []
    for j in active:
        e = np.zeros(T)
        if abs(dev[j]) <= KINK_TOL:
            kinks.append(int(j) + 1)
            e[j] = 1.0
            gens.append(e.copy())
            e[j] = -1.0
            gens.append(e)
        else:
            e[j] = np.sign(dev[j])
            gens.append(e)
    act = ActiveSet(np.array(gens), indices=tuple(int(j) + 1 for j in active), kinks=tuple(kinks))
    return OracleReply(value, g, act)


class Nemirovski(Instance):
    def __init__(self, T: int, alpha: float, x0=None):
        if T < 1 or alpha <= 0:
            raise ValueError("need T >= 1 and alpha > 0")
        self.T, self.alpha = int(T), float(alpha)
        # min is 3*alpha*(T-1) at the all-ones point
        f0 = 1.0 + 3.0 * alpha * (T - 1)
        super().__init__(InstanceMeta(lipschitz=1.0, subopt_bound=f0 - 3 * alpha * (T - 1), dim=self.T,
                                      convex=True, domain_bound=float(np.sqrt(T))),
                         {"name": "nemirovski", "T": self.T, "alpha": self.alpha},
                         np.zeros(self.T) if x0 is None else as_vector(x0))

    def evaluate(self, x):
        return nemirovski_eval(x, self.T, self.alpha)


def nemirovski_extended_eval(x, U: np.ndarray, T: int, alpha: float) -> OracleReply:
    """max{f_T(U^T x), 2(||x|| - 2 sqrt(T))}; ties go to the first branch."""
    x = as_vector(x)
    if U.shape != (x.shape[0], T):
        raise ValueError("U must have shape (dim(x), T)")
    inner = nemirovski_eval(U.T @ x, T, alpha)
    nx = float(np.linalg.norm(x))
    outer = 2.0 * (nx - 2.0 * np.sqrt(T))
    gens = [U @ gi for gi in inner.active_set.generators]
    if inner.value >= outer:
        branches = (1,)
        if outer >= inner.value - KINK_TOL * (1.0 + abs(inner.value)) and nx > 0:
            gens.append(2.0 * x / nx)
            branches = (1, 2)
        return OracleReply(inner.value, U @ inner.subgrad, ActiveSet(np.array(gens), indices=branches))
    assert nx > 0, "second branch cannot be active at the origin"
    return OracleReply(outer, 2.0 * x / nx, ActiveSet([2.0 * x / nx], indices=(2,)))


class NemirovskiExtended(Instance):
    """Random orthogonal embedding of the Nemirovski function with a norm barrier."""

    def __init__(self, T: int, alpha: float, dim: int, seed: int = 0, U=None):
        self.T, self.alpha = int(T), float(alpha)
        self.seed = int(seed)
        self.U = random_orthogonal(dim, self.T, RngStream(self.seed, 0)) if U is None else np.asarray(U, float)
        super().__init__(InstanceMeta(lipschitz=2.0, subopt_bound=1.0, dim=int(dim), convex=True),
                         {"name": "nemirovski-ext", "T": self.T, "alpha": self.alpha, "dim": int(dim),
                          "seed": self.seed},
                         np.zeros(int(dim)))

    def evaluate(self, x):
        return nemirovski_extended_eval(x, self.U, self.T, self.alpha)


def logsumexp_nemirovski_eval(x, T: int, alpha: float, tau: float) -> OracleReply:
    """Temperature-tau smoothing of the Nemirovski max.

    Uses one soft-max over the 2T affine terms +-(x_i - 1) + 3 alpha (T-i),
    which smooths both the absolute values and the outer max; the result
    exceeds the hard max by at most tau*log(2T).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    x = as_vector(x)
    offsets = 3.0 * alpha * (T - np.arange(1, T + 1))
    z = np.concatenate([(x - 1.0) + offsets, -(x - 1.0) + offsets]) / tau
    value = tau * float(logsumexp(z))
    p = softmax(z)
    g = p[:T] - p[T:]
    return OracleReply(value, g)


class LogSumExpNemirovski(Instance):
    def __init__(self, T: int, alpha: float, tau: float, x0=None):
        self.T, self.alpha, self.tau = int(T), float(alpha), float(tau)
        super().__init__(InstanceMeta(lipschitz=1.0, subopt_bound=1.0 + tau * np.log(2 * T), dim=self.T,
                                      convex=True, smoothness=1.0 / tau),
                         {"name": "lse-nemirovski", "T": self.T, "alpha": self.alpha, "tau": self.tau},
                         np.zeros(self.T) if x0 is None else as_vector(x0))

    def evaluate(self, x):
        return logsumexp_nemirovski_eval(x, self.T, self.alpha, self.tau)


def default_tau(eps: float, T: int) -> float:
    return eps / (10.0 * np.log(2 * T))
