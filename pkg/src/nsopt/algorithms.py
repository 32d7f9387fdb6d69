"""
Gradient-sampling style methods for (delta, eps)-stationarity.

``ingd`` takes normalized steps of length delta along the output of
``min_norm_loop``, which grows a convex combination of subgradients
sampled on segments leaving the current point until either its norm
drops below eps or the step it suggests decreases f enough.  Points on a
segment are chosen by a deterministic ``binary_search`` (needs a
smoothness constant H) or by a uniform ``random_segment_probe``.

For convex f, ``gd_then_ingd`` first runs projected subgradient descent
with iterate averaging to shrink the initial suboptimality, then hands
over to ``ingd``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (BudgetExhausted, Certificate, OracleReply, QueryLedger, RngStream, TrackedOracle,
                   as_vector, min_norm_combination, norm, query)

__all__ = [
    "ProbeStrategy", "RunTrace", "RunResult", "MinNormResult", "InnerLoopCapError",
    "binary_search", "binary_search_calls_bound", "random_segment_probe", "min_norm_loop",
    "default_k_max", "ingd", "subgradient_descent_avg", "gd_steps", "gd_then_ingd",
]

DETERMINISTIC = "deterministic-binary-search"
RANDOMIZED = "randomized-segment"


@dataclass(frozen=True)
class ProbeStrategy:
    """How the inner loop picks a point on the segment [x, x - delta*g/||g||]."""

    kind: str
    H: Optional[float] = None
    rng: Optional[RngStream] = None

    def __post_init__(self):
        if self.kind == DETERMINISTIC:
            if self.H is None or not self.H > 0:
                raise ValueError("deterministic probing needs a positive H")
        elif self.kind == RANDOMIZED:
            if self.rng is None:
                raise ValueError("randomized probing needs an rng stream")
        else:
            raise ValueError(f"unknown probe strategy {self.kind!r}")

    @classmethod
    def deterministic(cls, H: float) -> "ProbeStrategy":
        return cls(DETERMINISTIC, H=float(H))

    @classmethod
    def randomized(cls, rng: RngStream) -> "ProbeStrategy":
        return cls(RANDOMIZED, rng=rng)

    @property
    def is_deterministic(self) -> bool:
        return self.kind == DETERMINISTIC


@dataclass
class RunTrace:
    """Oracle ledger plus structured outer/inner events."""

    ledger: QueryLedger
    events: list = field(default_factory=list)

    def outer_steps(self) -> list:
        return [e for e in self.events if e["kind"] == "outer"]

    def inner_steps(self) -> list:
        return [e for e in self.events if e["kind"] == "inner"]


@dataclass
class RunResult:
    point: np.ndarray
    status: str
    g_final: np.ndarray
    trace: RunTrace
    certificate: Optional[Certificate] = None

    @property
    def oracle_calls(self) -> int:
        return self.trace.ledger.count

    @property
    def success(self) -> bool:
        return self.status == "certified-stationary"


class InnerLoopCapError(RuntimeError):
    """The min-norm loop ran past k_max; carries the best combination found."""

    def __init__(self, k_max: int, result: "MinNormResult"):
        super().__init__(f"inner loop exceeded k_max={k_max} (||g||={norm(result.g):.6g})")
        self.k_max = k_max
        self.result = result


# --------------------------------------------------------------------------
# probes
# --------------------------------------------------------------------------


def _direction(x, g, delta):
    g = as_vector(g)
    gn = norm(g)
    if gn == 0:
        raise ValueError("probe direction g must be nonzero")
    return as_vector(x), g, gn, (delta / gn) * g


def binary_search_calls_bound(delta: float, H: float, gnorm: float) -> int:
    """ceil(log2(8 delta H / ||g||)) + 2."""
    return max(0, math.ceil(math.log2(8 * delta * H / gnorm))) + 2


def binary_search(oracle, x, g, delta: float, H: float,
                  f_start: Optional[OracleReply] = None, f_end: Optional[OracleReply] = None):
    """Bisect [0, 1] for a point x - a*gbar whose directional slope along g is small.

    gbar = delta*g/||g||.  Keeps the half whose chord suggests the lower
    mean slope and stops once b - a <= ||g||/(8 delta H).  Known replies at
    the two endpoints may be passed in; every other reply is cached, so
    the cost is one call per bisection plus one per missing endpoint.
    Returns (y, reply at y, calls made).
    """
    x, g, gn, gbar = _direction(x, g, delta)
    calls = 0
    cache: dict[float, OracleReply] = {}

    def at(s: float) -> OracleReply:
        nonlocal calls
        if s not in cache:
            cache[s] = query(oracle, x - s * gbar, "probe")
            calls += 1
        return cache[s]

    if f_start is not None:
        cache[0.0] = f_start
    if f_end is not None:
        cache[1.0] = f_end
    a, b = 0.0, 1.0
    stop = gn / (8.0 * delta * H)
    while b - a > stop:
        mid = 0.5 * (a + b)
        if at(mid).value >= 0.5 * (at(a).value + at(b).value):
            b = mid
        else:
            a = mid
    reply = at(a)
    return x - a * gbar, reply, calls


def random_segment_probe(oracle, x, g, delta: float, rng):
    """y = x - (t/||g||) g with t uniform on (0, delta]; one oracle call.

    ``rng`` is an ``RngStream`` or an already-advanced numpy Generator.
    Returns (y, reply at y).
    """
    x, g, gn, _ = _direction(x, g, delta)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    t = delta * (1.0 - gen.random())
    y = x - (t / gn) * g
    return y, query(oracle, y, "probe")


# --------------------------------------------------------------------------
# inner loop
# --------------------------------------------------------------------------


@dataclass
class MinNormResult:
    """Output of the inner loop with the provenance of g.

    ``g = weights @ subgrads`` and every row of ``points`` lies within
    delta of ``x``.  When ``status`` is "descent", ``guard_point`` and
    ``guard_reply`` hold the step x - delta*g/||g|| and its reply.
    """

    x: np.ndarray
    g: np.ndarray
    status: str
    points: list
    weights: np.ndarray
    subgrads: list
    iterations: int = 0
    guard_point: Optional[np.ndarray] = None
    guard_reply: Optional[OracleReply] = None
    violations: int = 0

    def certificate(self, delta: float) -> Certificate:
        return Certificate.build(self.x, delta, self.points, self.weights, self.subgrads)


def _lipschitz(oracle) -> Optional[float]:
    fn = oracle.fn if isinstance(oracle, TrackedOracle) else oracle
    meta = getattr(fn, "meta", None)
    return getattr(meta, "lipschitz", None)


def default_k_max(L: float, eps: float) -> int:
    """ceil(64 L^2 / eps^2)."""
    return math.ceil(64.0 * L * L / (eps * eps))


def min_norm_loop(oracle, x, delta: float, eps: float, strategy: ProbeStrategy,
                  k_max: Optional[int] = None, reply: Optional[OracleReply] = None,
                  gen: Optional[np.random.Generator] = None,
                  events: Optional[list] = None, outer: int = 0) -> MinNormResult:
    """Shrink a convex combination of nearby subgradients until small or useful.

    Starts from g_0 = grad f(x).  While ||g_k|| > eps and the step
    x - delta*g_k/||g_k|| fails to decrease f by more than (delta/4)||g_k||,
    probes the segment for y_k and replaces g_k with the min-norm point of
    [g_k, grad f(y_k)].  A probe whose gradient violates
    <grad f(y_k), g_k> <= ||g_k||^2 / 2 is used anyway and counted in
    ``violations`` (and flagged on its event).
    """
    if not (delta > 0 and eps > 0):
        raise ValueError("delta and eps must be positive")
    x = as_vector(x)
    if k_max is None:
        L = _lipschitz(oracle)
        if L is None:
            raise ValueError("k_max needed when the oracle has no Lipschitz constant")
        k_max = default_k_max(L, eps)
    if reply is None:
        reply = query(oracle, x, "init")
    if not strategy.is_deterministic and gen is None:
        gen = strategy.rng.generator()

    g = np.array(reply.subgrad, dtype=float)
    points, subgrads, weights = [x], [g.copy()], np.ones(1)
    fx = reply.value
    k = violations = 0

    def result(status, gp=None, gr=None):
        return MinNormResult(x, g, status, list(points), weights.copy(), list(subgrads),
                             k, gp, gr, violations)

    while True:
        gn = norm(g)
        if gn <= eps:
            return result("small-norm")
        step = x - (delta / gn) * g
        guard = query(oracle, step, "guard")
        if fx - guard.value > 0.25 * delta * gn:
            return result("descent", step, guard)
        if k >= k_max:
            raise InnerLoopCapError(k_max, result("inner-loop-cap"))

        if strategy.is_deterministic:
            y, yr, calls = binary_search(oracle, x, g, delta, strategy.H, reply, guard)
        else:
            y, yr = random_segment_probe(oracle, x, g, delta, gen)
            calls = 1
        q = np.asarray(yr.subgrad, dtype=float)
        ok = float(q @ g) <= 0.5 * gn * gn
        violations += not ok
        lam, g_next = min_norm_combination(g, q)
        weights = np.append(lam * weights, 1.0 - lam)
        points.append(y)
        subgrads.append(q)
        if events is not None:
            events.append({"kind": "inner", "outer": outer, "k": k, "gnorm": gn,
                           "gnorm_next": norm(g_next), "probe_calls": calls,
                           "postcondition": bool(ok), "lam": lam})
        g = g_next
        k += 1


# --------------------------------------------------------------------------
# outer loop
# --------------------------------------------------------------------------


def _as_tracked(oracle, budget: Optional[int]) -> TrackedOracle:
    if isinstance(oracle, TrackedOracle):
        return oracle
    return TrackedOracle(oracle, budget)


def ingd(oracle, x1, delta: float, eps: float, strategy: ProbeStrategy,
         budget: Optional[int] = None, k_max: Optional[int] = None,
         trace: Optional[RunTrace] = None) -> RunResult:
    """Normalized steps of length delta until the inner loop certifies ||g|| <= eps.

    Every oracle call is charged to a ledger with the given budget.  The
    result is "certified-stationary" (with a certificate built from the
    inner loop's provenance), "budget-exhausted" or "inner-loop-cap".
    """
    if budget is not None and budget <= 0:
        raise ValueError("budget must be positive")
    O = _as_tracked(oracle, budget)
    if trace is None:
        trace = RunTrace(O.ledger)
    x = as_vector(x1)
    gen = None if strategy.is_deterministic else strategy.rng.generator()
    g_last = np.zeros_like(x)
    t = 0
    try:
        reply = O(x, "init")
        g_last = np.array(reply.subgrad, dtype=float)
        while True:
            t += 1
            mn = min_norm_loop(O, x, delta, eps, strategy, k_max, reply, gen, trace.events, t)
            g_last = mn.g
            if mn.status == "small-norm":
                trace.events.append({"kind": "done", "outer": t, "gnorm": norm(mn.g)})
                return RunResult(x, "certified-stationary", mn.g, trace, mn.certificate(delta))
            gn = norm(mn.g)
            trace.events.append({"kind": "outer", "outer": t, "f_before": reply.value,
                                 "f_after": mn.guard_reply.value, "gnorm": gn,
                                 "inner_iterations": mn.iterations, "violations": mn.violations,
                                 "calls": O.count})
            x, reply = mn.guard_point, mn.guard_reply
    except BudgetExhausted:
        return RunResult(x, "budget-exhausted", g_last, trace)
    except InnerLoopCapError as err:
        trace.events.append({"kind": "cap", "outer": t, "gnorm": norm(err.result.g)})
        return RunResult(x, "inner-loop-cap", err.result.g, trace)


def subgradient_descent_avg(oracle, x1, R: float, L: float, T1: int) -> np.ndarray:
    """Average of T1 projected subgradient iterates in the R-ball around x1.

    Step size R/(L sqrt(T1)); uses T1 - 1 oracle calls.
    """
    x1 = as_vector(x1)
    if T1 < 1:
        raise ValueError("T1 must be at least 1")
    eta = R / (L * math.sqrt(T1))
    x = x1.copy()
    total = x1.copy()
    for _ in range(T1 - 1):
        g = query(oracle, x, "gd").subgrad
        x = x - eta * np.asarray(g, dtype=float)
        off = norm(x - x1)
        if off > R:
            x = x1 + (x - x1) * (R / off)
        total += x
    return total / T1


def gd_steps(R: float, L: float, delta: float, eps: float) -> int:
    """T1 = ceil(L^2 R^(2/3) / (eps^2 delta^(2/3))), at least 1."""
    return max(1, math.ceil(L * L * R ** (2.0 / 3.0) / (eps * eps * delta ** (2.0 / 3.0))))


def gd_then_ingd(oracle, x1, R: float, L: float, delta: float, eps: float,
                 strategy: ProbeStrategy, budget: Optional[int] = None,
                 k_max: Optional[int] = None) -> RunResult:
    """Warm start by averaged subgradient descent, then ``ingd``; one shared ledger."""
    O = _as_tracked(oracle, budget)
    trace = RunTrace(O.ledger)
    T1 = gd_steps(R, L, delta, eps)
    x1 = as_vector(x1)
    try:
        x_gd = subgradient_descent_avg(O, x1, R, L, T1)
    except BudgetExhausted:
        return RunResult(x1, "budget-exhausted", np.zeros_like(x1), trace)
    trace.events.append({"kind": "gd", "T1": T1, "calls": O.count})
    return ingd(O, x_gd, delta, eps, strategy, k_max=k_max, trace=trace)
