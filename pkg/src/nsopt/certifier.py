"""
Certificates of (delta, eps)-stationarity.

A certificate is a convex combination of subgradients observed at points
of the closed delta-ball around a center; ``certify`` searches for one with
small norm by sampling the ball and solving a min-norm problem, and
``verify_certificate`` re-checks one against the oracle.  For exact
piecewise-linear functions of one variable the eps-stationary set can be
computed exactly, which gives an independent check of the sampled side.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Certificate, MinNormNotConverged, RngStream, as_vector, min_norm_point, norm, query
from .instances.simple import PiecewiseLinear1D

__all__ = [
    "Certificate", "NotFound", "Verification", "StationarySet1D", "Claim1Report",
    "sample_goldstein", "certify", "verify_certificate", "eps_stationary_set_1d", "check_claim1_equiv",
    "goldstein_range_1d",
]

WEIGHT_TOL = 1e-12
RADIUS_TOL = 1e-12
AGGREGATE_TOL = 1e-10
SUBGRAD_TOL = 1e-9


@dataclass
class NotFound:
    """No certificate at the requested accuracy at this sampling effort.

    ``best`` is the lowest-norm certificate found; its norm upper-bounds the
    true min-norm of the Goldstein subdifferential but proves nothing about
    non-stationarity.
    """

    best: Certificate
    message: str = "no certificate found at this sampling effort"

    @property
    def norm(self) -> float:
        return self.best.norm


def _ball_samples(x: np.ndarray, delta: float, k: int, rng: RngStream) -> np.ndarray:
    # directions and radii come from separate streams, so a larger k
    # extends the sample set of a smaller one
    dim = len(x)
    dirs = rng.generator(1).standard_normal((k, dim))
    radii = delta * rng.generator(2).random(k) ** (1.0 / dim)
    n = np.linalg.norm(dirs, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return x + dirs / n * radii[:, None]


def _clip_to_ball(p: np.ndarray, x: np.ndarray, delta: float) -> np.ndarray:
    d = norm(p - x)
    if d <= delta:
        return p
    if delta == 0:
        return x.copy()
    return x + (p - x) * (delta / d)


def sample_goldstein(oracle, x, delta: float, k: int = 0, rng: Optional[RngStream] = None,
                     hints: Optional[Sequence] = None, expand: bool = True):
    """Subgradients gathered inside the closed delta-ball around x.

    Probes x itself, each hint (clipped into the ball), then k uniform
    samples.  With ``expand`` every generator of a probe's active set is
    included alongside the oracle's representative.  Returns the probe
    points and the matching subgradients, row by row.
    """
    x = as_vector(x)
    probes = [x]
    for h in hints if hints is not None else ():
        probes.append(_clip_to_ball(as_vector(h), x, delta))
    if k > 0 and delta > 0:
        if rng is None:
            raise ValueError("random samples need an rng stream")
        probes.extend(_ball_samples(x, delta, k, rng))

    points, grads = [], []
    for p in probes:
        reply = query(oracle, p, "certify")
        points.append(p)
        grads.append(reply.subgrad)
        if expand and reply.active_set is not None:
            for gen in reply.active_set.generators:
                if not np.array_equal(gen, reply.subgrad):
                    points.append(p)
                    grads.append(gen)
    return np.array(points), np.array(grads)


def certify(oracle, x, delta: float, eps: float, k: Optional[int] = None,
            rng: Optional[RngStream] = None, hints: Optional[Sequence] = None, expand: bool = True):
    """Search for g in the Goldstein delta-subdifferential at x with ||g|| <= eps.

    Returns a ``Certificate`` on success and ``NotFound`` otherwise.  The
    default sampling effort is 16 probes per dimension.
    """
    x = as_vector(x)
    if k is None:
        k = 16 * len(x)
    if k > 0 and rng is None:
        rng = RngStream(0)
    points, grads = sample_goldstein(oracle, x, delta, k, rng, hints, expand)
    try:
        weights, _ = min_norm_point(grads)
    except MinNormNotConverged as err:
        weights = err.weights
    cert = Certificate.build(x, delta, points, weights, grads)
    if cert.norm <= eps:
        return cert
    return NotFound(cert)


@dataclass
class Verification:
    ok: bool
    reasons: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def verify_certificate(oracle, cert: Certificate) -> Verification:
    """Re-check every certificate invariant, re-querying the oracle at each probe."""
    reasons = []
    w = np.asarray(cert.weights, dtype=float)
    P = np.atleast_2d(cert.points)
    G = np.atleast_2d(cert.subgrads)
    if not (len(w) == len(P) == len(G)) or len(w) == 0:
        return Verification(False, ["shape: probe, weight and subgradient counts differ"])
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(P)) and np.all(np.isfinite(G))):
        return Verification(False, ["finite: non-finite entries"])
    if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        reasons.append(f"weights: not on the simplex (sum={w.sum():.17g}, min={w.min():.3g})")
    dist = np.linalg.norm(P - cert.center, axis=1)
    if np.any(dist > cert.delta * (1 + RADIUS_TOL)):
        reasons.append(f"radius: probe at distance {dist.max():.17g} > delta={cert.delta:.17g}")
    agg = w @ G
    if norm(agg - cert.g) > AGGREGATE_TOL:
        reasons.append(f"aggregate: weighted sum differs from g by {norm(agg - cert.g):.3g}")
    if abs(norm(cert.g) - cert.norm) > AGGREGATE_TOL:
        reasons.append("norm: stored norm differs from ||g||")
    for j, (p, s) in enumerate(zip(P, G)):
        reply = oracle(p)
        if norm(reply.subgrad - s) <= SUBGRAD_TOL:
            continue
        if reply.active_set is not None and reply.active_set.contains(s, SUBGRAD_TOL):
            continue
        reasons.append(f"subgradient: probe {j} carries a vector outside the subdifferential")
        break
    return Verification(not reasons, reasons)


# --------------------------------------------------------------------------
# exact one-dimensional analysis
# --------------------------------------------------------------------------


@dataclass
class StationarySet1D:
    """Sorted, disjoint closed intervals; infinite ends are +-inf floats."""

    intervals: list
    epsilon: Fraction

    def distance(self, x) -> Fraction | float:
        x = Fraction(x)
        best = math.inf
        for lo, hi in self.intervals:
            if (lo == -math.inf or lo <= x) and (hi == math.inf or x <= hi):
                return Fraction(0)
            gap = (lo - x) if lo != -math.inf and x < lo else (x - hi)
            best = min(best, gap)
        return best

    def __contains__(self, x):
        return self.distance(x) == 0


def eps_stationary_set_1d(inst, eps) -> StationarySet1D:
    """Exact set of points carrying a subgradient of magnitude <= eps."""
    if not isinstance(inst, PiecewiseLinear1D):
        raise TypeError("needs an exact piecewise-linear instance of one variable")
    e = Fraction(eps)
    b, s = inst.breaks, inst.slopes
    raw = []
    for j, slope in enumerate(s):
        if abs(slope) <= e:
            lo = b[j - 1] if j > 0 else -math.inf
            hi = b[j] if j < len(b) else math.inf
            raw.append((lo, hi))
    for j, bp in enumerate(b):
        lo_s, hi_s = s[j], s[j + 1]
        if min(lo_s, hi_s) <= e and max(lo_s, hi_s) >= -e:
            raw.append((bp, bp))
    raw.sort(key=lambda t: (t[0], t[1]))
    merged: list = []
    for lo, hi in raw:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return StationarySet1D(merged, e)


@dataclass
class Claim1Report:
    delta: float
    eps: float
    checked: int
    disagreements: list
    boundary_cases: int
    cross_checked: int = 0
    certify_mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements and not self.certify_mismatches


def _claim1_points(inst: PiecewiseLinear1D, delta: float, grid: int, stat: StationarySet1D):
    lo = float(inst.breaks[0]) - 0.25 - delta
    hi = float(inst.breaks[-1]) + 0.25 + delta
    pts = set(np.linspace(lo, hi, grid).tolist())
    specials = [float(bp) for bp in inst.breaks]
    for a, c in stat.intervals:
        specials += [float(e) for e in (a, c) if math.isfinite(e)]
    for p in specials:
        pts.update((p, p - delta, p + delta))
    return np.array(sorted(pts))


def goldstein_range_1d(inst: PiecewiseLinear1D, xs, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest subgradient over each closed ball [x - delta, x + delta].

    Piece j lies between breaks j-1 and j; a ball touching a break picks up
    the slopes on both sides of it.
    """
    xs = np.asarray(xs, dtype=float)
    bps = np.array([float(b) for b in inst.breaks])
    left = np.searchsorted(bps, xs - delta, "left")
    right = np.searchsorted(bps, xs + delta, "right")
    lo = np.full(xs.shape, np.inf)
    hi = np.full(xs.shape, -np.inf)
    for j, slope in enumerate(inst.slopes):
        hit = (left <= j) & (j <= right)
        lo = np.where(hit, np.minimum(lo, float(slope)), lo)
        hi = np.where(hit, np.maximum(hi, float(slope)), hi)
    return lo, hi


def _distances(stat: StationarySet1D, xs: np.ndarray) -> np.ndarray:
    dist = np.full(xs.shape, np.inf)
    for lo, hi in stat.intervals:
        dist = np.minimum(dist, np.maximum(np.maximum(float(lo) - xs, xs - float(hi)), 0.0))
    return dist


def check_claim1_equiv(inst, delta: float, eps: float, grid: int = 10_000,
                       boundary_tol: float = 1e-9, stride: int = 25) -> Claim1Report:
    """Compare sampled (delta, eps)-stationarity with delta-closeness to the eps-stationary set.

    The sampled side is the range of subgradients met on the closed ball,
    computed for the whole grid at once; every ``stride``-th point is also
    run through ``certify`` (with the ball's ends and its breakpoints as
    hints), which must agree.  The exact side is the distance to
    ``eps_stationary_set_1d``, redone in rationals near the threshold.
    Points where the two disagree are reported unless the exact distance is
    within ``boundary_tol`` of delta (open versus closed ball).
    """
    if not isinstance(inst, PiecewiseLinear1D) or inst.meta.dim != 1:
        raise TypeError("needs an exact piecewise-linear instance of one variable")
    stat = eps_stationary_set_1d(inst, eps)
    xs = _claim1_points(inst, delta, grid, stat)
    lo, hi = goldstein_range_1d(inst, xs, delta)
    sampled = (lo <= eps) & (hi >= -eps)
    dist = _distances(stat, xs).astype(object)
    near = np.abs(np.asarray(dist, dtype=float) - delta) <= 1e-6
    for i in np.flatnonzero(near):
        dist[i] = stat.distance(xs[i])
    exact = np.array([d < Fraction(delta) for d in dist])

    disagreements, boundary = [], 0
    for i in np.flatnonzero(sampled != exact):
        if abs(float(dist[i]) - delta) <= boundary_tol:
            boundary += 1
        else:
            disagreements.append((float(xs[i]), bool(sampled[i]), bool(exact[i]), float(dist[i])))

    bps = [float(b) for b in inst.breaks]
    mismatches, crossed = [], 0
    for x, flag in zip(xs[::stride], sampled[::stride]):
        # rounding of x +- delta decides whether a break right at the edge is seen
        if any(abs(abs(b - x) - delta) <= boundary_tol for b in bps):
            continue
        i, j = bisect_left(bps, x - delta), bisect_right(bps, x + delta)
        hints = [[x - delta], [x + delta]] + [[b] for b in bps[i:j]]
        found = isinstance(certify(inst, [x], delta, eps, k=0, hints=hints), Certificate)
        crossed += 1
        if found != flag:
            mismatches.append((float(x), found, bool(flag)))
    return Claim1Report(delta, eps, len(xs), disagreements, boundary, crossed, mismatches)
