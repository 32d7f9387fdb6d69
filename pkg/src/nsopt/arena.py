"""
Resisting-oracle arena.

A deterministic first-order algorithm is run against an oracle that answers
every query with value 0 and gradient e_1/7.  Afterwards the function
consistent with those answers is built on the observed queries and every
query is checked: the answers must match the function, and no query may be
(1/7, 1/252)-stationary for it.
"""

from __future__ import annotations

import math
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .algorithms import ProbeStrategy, default_k_max, ingd
from .certifier import sample_goldstein
from .core import BudgetExhausted, Certificate, MinNormNotConverged, OracleReply, RngStream, min_norm_point, unit
from .instances.resisting import SCALE, ResistingFunction

__all__ = [
    "ArenaOracle", "ArenaReport", "ProtocolError", "run_resisting", "BUILTIN_ALGORITHMS",
    "ingd_subject", "walker", "repeater", "gradient_steps", "subprocess_algorithm",
    "ARENA_DELTA", "ARENA_EPS",
]

ARENA_DELTA = 1.0 / 7.0
ARENA_EPS = 1.0 / 252.0
CONSISTENCY_TOL = 1e-9


class ProtocolError(ValueError):
    """The subject algorithm emitted a malformed query."""


class ArenaOracle:
    """Serves (0, e_1/7) to at most T queries and records them."""

    def __init__(self, T: int, d: int):
        self.T, self.d = T, d
        self.queries: list[np.ndarray] = []
        self.reply = OracleReply(0.0, SCALE * unit(0, d))

    def __call__(self, x, event: str = "query") -> OracleReply:
        try:
            x = np.asarray(x, dtype=float).reshape(-1)
        except (TypeError, ValueError) as err:
            raise ProtocolError(f"query is not numeric: {err}") from None
        if x.shape[0] != self.d:
            raise ProtocolError(f"query has dimension {x.shape[0]}, expected {self.d}")
        if not np.all(np.isfinite(x)):
            raise ProtocolError("query has non-finite entries")
        if len(self.queries) >= self.T:
            raise BudgetExhausted(self.T)
        self.queries.append(x.copy())
        return OracleReply(self.reply.value, self.reply.subgrad.copy())


@dataclass
class ArenaReport:
    queries: list
    d: int
    r: float
    v: np.ndarray
    consistency: list
    nonstationarity: list
    combination_min: list = field(default_factory=list)
    separation: float = 0.0
    algorithm: str = ""
    T: int = 0

    @property
    def verdict(self) -> bool:
        ok_cons = all(ve < CONSISTENCY_TOL and ge < CONSISTENCY_TOL for ve, ge in self.consistency)
        ok_norm = all(n > ARENA_EPS for n in self.nonstationarity)
        ok_comb = all(n > ARENA_EPS for n in self.combination_min)
        return ok_cons and ok_norm and ok_comb and self.separation <= 1.0


# --------------------------------------------------------------------------
# subject algorithms
# --------------------------------------------------------------------------


def ingd_subject(oracle, d: int):
    """Deterministic INGD aimed at (1/7, 1/252)-stationarity from the origin."""
    ingd(oracle, np.zeros(d), ARENA_DELTA, ARENA_EPS, ProbeStrategy.deterministic(1.0 / ARENA_DELTA),
         k_max=default_k_max(1.0, ARENA_EPS))


def walker(oracle, d: int):
    """x_t = t e_2, ignoring every reply."""
    t = 1
    while True:
        oracle(t * unit(1, d))
        t += 1


def repeater(oracle, d: int):
    """Queries the origin forever."""
    while True:
        oracle(np.zeros(d))


def gradient_steps(oracle, d: int, step: float = 0.1):
    """Plain gradient descent from the origin with a fixed step."""
    x = np.zeros(d)
    while True:
        x = x - step * oracle(x).subgrad


BUILTIN_ALGORITHMS: dict[str, Callable] = {
    "ingd": ingd_subject,
    "walker": walker,
    "repeat": repeater,
    "gd": gradient_steps,
}


def _fmt(x: float) -> str:
    return repr(float(x))


def subprocess_algorithm(command: str, timeout: float = 30.0) -> Callable:
    """Wrap an external program speaking the arena line protocol.

    The arena writes "DIM d" once, then for every "QUERY x_1 .. x_d" line
    read from the program answers "VALUE f GRAD g_1 .. g_d".  When the
    query budget is spent it writes "END" and closes the pipe.
    """

    def run(oracle, d: int):
        proc = subprocess.Popen(shlex.split(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                text=True, bufsize=1)
        try:
            proc.stdin.write(f"DIM {d}\n")
            proc.stdin.flush()
            while True:
                line = proc.stdout.readline()
                if not line:
                    return
                parts = line.split()
                if not parts:
                    continue
                if parts[0] != "QUERY":
                    raise ProtocolError(f"expected QUERY line, got {line.strip()!r}")
                try:
                    x = [float(p) for p in parts[1:]]
                except ValueError:
                    raise ProtocolError(f"unparsable query {line.strip()!r}") from None
                try:
                    reply = oracle(x)
                except BudgetExhausted:
                    proc.stdin.write("END\n")
                    proc.stdin.flush()
                    raise
                grad = " ".join(_fmt(g) for g in reply.subgrad)
                proc.stdin.write(f"VALUE {_fmt(reply.value)} GRAD {grad}\n")
                proc.stdin.flush()
        finally:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=timeout)
            except subprocess.TimeoutExpired:
                proc.kill()

    return run


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------


def _stencil(fn: ResistingFunction, xi: np.ndarray, delta: float) -> list:
    """Probe points where small subgradient combinations could hide.

    For every interpolation center within reach: the center, the shell
    radii r/2, r, 2r along +-v and +-e_1, and a polar grid of the (e_1, v)
    plane around the query itself.
    """
    d = len(xi)
    e1, v, r = unit(0, d), fn.v, fn.r
    dirs = [v, -v, e1, -e1, (e1 + v) / math.sqrt(2), (e1 - v) / math.sqrt(2)]
    pts = []
    for z in fn.points:
        if np.linalg.norm(z - xi) > delta + 2 * r:
            continue
        pts.append(z)
        for s in (0.5 * r, r, 2 * r):
            pts.extend(z + s * u for u in dirs)
    for rho in (0.25, 0.5, 1 / math.sqrt(3), 0.75, 0.95):
        for th in np.linspace(0, 2 * math.pi, 16, endpoint=False):
            pts.append(xi + rho * r * (math.cos(th) * e1 + math.sin(th) * v))
    return pts


def _random_combinations(grads: np.ndarray, n: int, gen: np.random.Generator) -> float:
    """Smallest norm over n random convex combinations of the rows."""
    m = len(grads)
    best = math.inf
    for _ in range(n):
        size = int(gen.integers(1, min(m, 8) + 1))
        idx = gen.choice(m, size=size, replace=False)
        w = gen.dirichlet(np.ones(size))
        best = min(best, float(np.linalg.norm(w @ grads[idx])))
    return best


def run_resisting(algorithm: Callable, T: int, d: Optional[int] = None, samples: int = 64,
                  combinations: int = 1000, seed: int = 0, name: str = "") -> ArenaReport:
    """Play the resisting oracle for T queries and audit the outcome."""
    d = T + 2 if d is None else d
    oracle = ArenaOracle(T, d)
    try:
        algorithm(oracle, d)
    except BudgetExhausted:
        pass
    if not oracle.queries:
        raise ProtocolError("algorithm made no queries")
    fn = ResistingFunction(oracle.queries, d)

    consistency = []
    for x in fn.points:
        got = fn(x)
        consistency.append((abs(got.value - oracle.reply.value),
                            float(np.linalg.norm(got.subgrad - oracle.reply.subgrad))))

    rng = RngStream(seed, 11)
    gen = rng.generator(9)
    norms, combos = [], []
    for i, x in enumerate(fn.points):
        hints = _stencil(fn, x, ARENA_DELTA)
        pts, grads = sample_goldstein(fn, x, ARENA_DELTA, samples, rng.child(i), hints)
        try:
            w, _ = min_norm_point(grads)
        except MinNormNotConverged as err:
            w = err.weights
        norms.append(Certificate.build(x, ARENA_DELTA, pts, w, grads).norm)
        combos.append(_random_combinations(grads, combinations, gen))

    # f(x_1) - inf f with inf f = -1/7; sampled confirmation of the floor
    probe = fn.points[0] + gen.standard_normal((256, d)) * 4.0
    lowest = min(min(fn(p).value for p in probe), -SCALE)
    separation = fn(oracle.queries[0]).value - lowest

    return ArenaReport([q.tolist() for q in oracle.queries], d, fn.r, fn.v, consistency, norms,
                       combos, separation, name, T)
