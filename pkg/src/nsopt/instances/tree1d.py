"""Binary-tree family of one-dimensional convex hard functions.

Level i carries two open segments of (0, 1), left and right of 1/2, of width
8^-(i+1).  A word sigma picks one segment per level; composing the
increasing affine maps phi^i_sigma_i gives a nested chain of intervals
I_{sigma_1..sigma_k} whose innermost member is the argmin.  On the region
between two consecutive nested intervals the function is a two-piece
"V" transported by the affine maps, so every slope is that of some level's
V.

Two offset schedules are available for the vertical maps
Phi^i(y) = c_i + y/8^(i+1):

* ``"uniform"``: c_i = 1/2 at every level, as originally stated, and the tails 1 - x, x.  This is
  not convex for every sigma (e.g. a 1 followed by a 0 makes the slope
  drop from -31/33 to -255/254).
* ``"convex"`` (default): level 1 unchanged, deeper offsets chosen so the
  steepest slope of level i+1 equals the shallowest slope of level i, and
  tails steepened to the adjacent slope when needed.  This keeps every
  interval, the argmin, the 2-Lipschitz bound and the 1/2 slope floor.

Everything is exact rational arithmetic; floats only appear at the oracle
boundary.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..core import RngStream
from .base import InstanceMeta
from .simple import PiecewiseLinear1D

MAX_DEPTH = 32
HALF = Fraction(1, 2)


def width(i: int) -> Fraction:
    """Width 8^-(i+1) of the level-i segments."""
    return Fraction(1, 8 ** (i + 1))


def segment(i: int, bit: int) -> tuple[Fraction, Fraction]:
    """Endpoints of the open segment I^i_bit."""
    w = width(i)
    if bit == 0:
        return HALF - 2 * w, HALF - w
    return HALF + w, HALF + 2 * w


class Affine:
    """x -> a*x + b with exact coefficients."""

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = Fraction(a), Fraction(b)

    def __call__(self, x):
        return self.a * x + self.b

    def inverse(self, y):
        return (Fraction(y) - self.b) / self.a

    def compose(self, inner: "Affine") -> "Affine":
        """self o inner."""
        return Affine(self.a * inner.a, self.a * inner.b + self.b)

    def __eq__(self, other):
        return isinstance(other, Affine) and (self.a, self.b) == (other.a, other.b)

    def __repr__(self):
        return f"Affine({self.a}, {self.b})"


IDENTITY = Affine(1, 0)


def phi(i: int, bit: int) -> Affine:
    """Increasing affine map of (0, 1) onto I^i_bit."""
    lo, hi = segment(i, bit)
    return Affine(hi - lo, lo)


def offsets(depth: int, schedule: str = "convex") -> list[Fraction]:
    """Offsets c_1..c_depth of the vertical maps Phi^i(y) = c_i + y/8^(i+1)."""
    if schedule == "uniform":
        return [HALF] * depth
    if schedule != "convex":
        raise ValueError(f"unknown schedule {schedule!r}")
    cs = [HALF]
    for i in range(1, depth):
        drop = 1 - cs[-1] - width(i)
        shallow = drop / (HALF + width(i))
        steep_next = shallow * (HALF - 2 * width(i + 1))
        cs.append(1 - width(i + 1) - steep_next)
    return cs


def big_phi(i: int, c: Fraction) -> Affine:
    return Affine(width(i), c)


def vee(i: int, bit: int, c: Fraction) -> tuple[Affine, Affine, Fraction, Fraction]:
    """The two pieces of h^i_bit on [0,1] minus I^i_bit, and the gap endpoints.

    h(0) = h(1) = 1 and h equals Phi^i(1) at both gap endpoints.
    """
    lo, hi = segment(i, bit)
    floor = c + width(i)
    left = Affine((floor - 1) / lo, 1)
    right_slope = (1 - floor) / (1 - hi)
    right = Affine(right_slope, 1 - right_slope)
    return left, right, lo, hi


def printed_h1(i: int) -> tuple[Affine, Affine]:
    """Closed-form pieces of h^i_1 as printed, for cross-checking ``vee``."""
    m = 8 ** (i + 1)
    return (Affine(-Fraction(m - 2, m + 2), 1),
            Affine(Fraction(m - 2, m - 4), -Fraction(2, m - 4)))


class Tree1D(PiecewiseLinear1D):
    """f^N_sigma as an exact piecewise-linear instance.

    ``scale`` multiplies the whole function (1/2 gives the 1-Lipschitz
    variant).  Subgradients at breakpoints are left derivatives.
    """

    def __init__(self, sigma: Sequence[int], scale=1, schedule: str = "convex"):
        sigma = tuple(int(b) for b in sigma)
        N = len(sigma)
        if N < 2 or N > MAX_DEPTH:
            raise ValueError(f"word length must be in [2, {MAX_DEPTH}]")
        if any(b not in (0, 1) for b in sigma):
            raise ValueError("sigma must be a 0/1 word")
        self.sigma, self.N, self.schedule = sigma, N, schedule
        self.scale = Fraction(scale)
        self.cs = offsets(N, schedule)

        # psi_k = phi^1 o ... o phi^k, Psi_k = Phi^1 o ... o Phi^k
        self.psi = [IDENTITY]
        self.Psi = [IDENTITY]
        for k in range(1, N + 1):
            self.psi.append(self.psi[-1].compose(phi(k, sigma[k - 1])))
            self.Psi.append(self.Psi[-1].compose(big_phi(k, self.cs[k - 1])))

        left_pieces, right_pieces = [], []
        for k in range(N):
            hl, hr, lo, hi = vee(k + 1, sigma[k], self.cs[k])
            # f = Psi_k o h o psi_k^{-1} on the level-k annulus
            left_pieces.append(self._transport(k, hl))
            right_pieces.append(self._transport(k, hr))
        floor = self.Psi[N](1)

        L = [self.psi[k](0) for k in range(N + 1)]
        R = [self.psi[k](1) for k in range(N + 1)]
        breaks = L + R[::-1]
        slopes = [s for s, _ in left_pieces] + [Fraction(0)] + [s for s, _ in right_pieces[::-1]]
        intercepts = [c for _, c in left_pieces] + [floor] + [c for _, c in right_pieces[::-1]]

        lt_slope, lt_icpt = Fraction(-1), Fraction(1)
        rt_slope, rt_icpt = Fraction(1), Fraction(0)
        if schedule == "convex":
            if slopes[0] < -1:
                lt_slope, lt_icpt = slopes[0], intercepts[0]
            if slopes[-1] > 1:
                rt_slope, rt_icpt = slopes[-1], intercepts[-1]
        slopes = [lt_slope] + slopes + [rt_slope]
        intercepts = [lt_icpt] + intercepts + [rt_icpt]
        slopes = [s * self.scale for s in slopes]
        intercepts = [c * self.scale for c in intercepts]

        max_slope = max(abs(s) for s in slopes)
        meta = InstanceMeta(lipschitz=float(2 * self.scale), subopt_bound=float(self.scale),
                            dim=1, convex=(schedule == "convex"), domain_bound=1.0)
        assert max_slope <= 2 * self.scale
        descriptor = {"name": "tree1d", "N": N, "sigma": "".join(map(str, sigma)),
                      "scale": str(self.scale), "schedule": schedule}
        super().__init__(breaks, slopes, intercepts, meta, descriptor, kink_rule="left",
                         x0=np.zeros(1))

    def _transport(self, k: int, h: Affine) -> tuple[Fraction, Fraction]:
        # slope is preserved because Phi^i and phi^i share their derivative
        composed = self.Psi[k].compose(h).compose(Affine(1 / self.psi[k].a, -self.psi[k].b / self.psi[k].a))
        return composed.a, composed.b

    # tree structure -------------------------------------------------------

    def interval(self, k: int) -> tuple[Fraction, Fraction]:
        """Endpoints of I_{sigma_1..sigma_k} (k = 0 gives (0, 1))."""
        return self.psi[k](0), self.psi[k](1)

    def min_interval(self) -> tuple[Fraction, Fraction]:
        return self.interval(self.N)

    def min_value(self) -> Fraction:
        return self.scale * self.Psi[self.N](1)


def random_sigma(N: int, rng: RngStream) -> tuple[int, ...]:
    return tuple(int(b) for b in rng.generator().integers(0, 2, size=N))


def tree1d_build(sigma, scaled: bool = False, schedule: str = "convex") -> Tree1D:
    return Tree1D(sigma, scale=HALF if scaled else 1, schedule=schedule)


def tree1d_min_interval(inst: Tree1D) -> tuple[Fraction, Fraction]:
    return inst.min_interval()


def lemma_depth(delta: float) -> int:
    """k = floor(sqrt(log(1/delta)) / 4)."""
    return int(math.floor(0.25 * math.sqrt(math.log(1.0 / delta))))


def separation_bound(k: int) -> Fraction:
    """Lower bound 1/(4 * 8^(k(k+3)/2)) on the gap between the edges of I_k and I_N.

    The nested maps phi^j have derivative 8^-(j+1), so the gap is at least
    prod_j 8^-(j+1) * (1/2 - 2/8^(k+2)).
    """
    return Fraction(1, 4 * 8 ** (k * (k + 3) // 2))


def printed_separation_bound(k: int) -> Fraction:
    """The bound with an extra factor 2^k, as printed; it fails already at k = 1."""
    return 2 ** k * separation_bound(k)


def delta_neighbourhood_inside(inst: Tree1D, delta, k: int) -> bool:
    """Whether every x with dist(x, I_N) < delta lies in I_k (exact)."""
    d = Fraction(delta)
    lo_n, hi_n = inst.min_interval()
    lo_k, hi_k = inst.interval(k)
    return lo_k <= lo_n - d and hi_n + d <= hi_k
