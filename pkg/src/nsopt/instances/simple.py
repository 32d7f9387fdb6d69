"""Elementary instances: quadratic, linear, constant, exact piecewise-linear 1D."""

from __future__ import annotations

from bisect import bisect_left
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..core import ActiveSet, OracleReply, as_vector, norm
from .base import Instance, InstanceMeta


class Quadratic(Instance):
    """f(x) = 0.5*||x||^2, Lipschitz on the ball of radius ``radius``."""

    def __init__(self, dim: int = 2, radius: float = 4.0, x0=None):
        x0 = np.full(dim, 2.0 / np.sqrt(dim)) if x0 is None else as_vector(x0)
        r0 = norm(x0)
        super().__init__(
            InstanceMeta(lipschitz=radius, subopt_bound=0.5 * r0 ** 2, dim=dim, convex=True,
                         smoothness=1.0, domain_bound=max(r0, 1e-12)),
            {"name": "quadratic", "dim": dim, "radius": radius}, x0)

    def evaluate(self, x):
        return OracleReply(0.5 * float(x @ x), x.copy())


class Linear(Instance):
    def __init__(self, v: Sequence[float]):
        self.v = as_vector(v)
        super().__init__(InstanceMeta(lipschitz=max(norm(self.v), 1e-12), subopt_bound=np.inf,
                                      dim=len(self.v), convex=True, smoothness=0.0),
                         {"name": "linear", "v": list(map(float, self.v))})

    def evaluate(self, x):
        return OracleReply(float(self.v @ x), self.v.copy())


class Constant(Instance):
    def __init__(self, dim: int = 1, c: float = 0.0):
        self.c = float(c)
        super().__init__(InstanceMeta(lipschitz=1.0, subopt_bound=0.0, dim=dim, convex=True,
                                      smoothness=0.0),
                         {"name": "constant", "dim": dim, "c": self.c})

    def evaluate(self, x):
        return OracleReply(self.c, np.zeros_like(x))


class PiecewiseLinear1D(Instance):
    """Continuous piecewise-linear function on the real line in exact arithmetic.

    Piece ``j`` covers ``[breaks[j-1], breaks[j]]`` and has the affine form
    ``slopes[j]*x + intercepts[j]``; pieces 0 and -1 are unbounded.  At a
    breakpoint the reported subgradient is the left or right derivative
    according to ``kink_rule``; the full interval goes in the active set.
    """

    def __init__(self, breaks, slopes, intercepts, meta: InstanceMeta, descriptor: dict,
                 kink_rule: str = "left", x0=None):
        self.breaks = [Fraction(b) for b in breaks]
        self.slopes = [Fraction(s) for s in slopes]
        self.intercepts = [Fraction(c) for c in intercepts]
        if len(self.slopes) != len(self.breaks) + 1 or len(self.intercepts) != len(self.slopes):
            raise ValueError("need one more piece than breakpoints")
        if any(a >= b for a, b in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if kink_rule not in ("left", "right"):
            raise ValueError("kink_rule must be 'left' or 'right'")
        self.kink_rule = kink_rule
        super().__init__(meta, descriptor, x0)

    @classmethod
    def from_values(cls, breaks, slopes, value_at_first, **kw):
        """Build intercepts by continuity from the value at the first breakpoint."""
        breaks = [Fraction(b) for b in breaks]
        slopes = [Fraction(s) for s in slopes]
        intercepts = [Fraction(value_at_first) - slopes[0] * breaks[0]]
        for j, b in enumerate(breaks):
            val = slopes[j] * b + intercepts[j]
            intercepts.append(val - slopes[j + 1] * b)
        return cls(breaks, slopes, intercepts, **kw)

    # exact evaluation -----------------------------------------------------

    def locate(self, x: Fraction) -> tuple[int, bool]:
        """Piece index containing x and whether x is exactly a breakpoint.

        At a breakpoint the index of the piece to its left is returned.
        """
        j = bisect_left(self.breaks, x)
        on_break = j < len(self.breaks) and self.breaks[j] == x
        return j, on_break

    def exact_value(self, x) -> Fraction:
        x = Fraction(x)
        j, _ = self.locate(x)
        return self.slopes[j] * x + self.intercepts[j]

    def exact_subdifferential(self, x) -> tuple[Fraction, Fraction]:
        x = Fraction(x)
        j, on_break = self.locate(x)
        if on_break:
            return self.slopes[j], self.slopes[j + 1]
        return self.slopes[j], self.slopes[j]

    def evaluate(self, x):
        xf = Fraction(float(x[0]))
        j, on_break = self.locate(xf)
        value = self.slopes[j] * xf + self.intercepts[j]
        if on_break:
            lo, hi = self.slopes[j], self.slopes[j + 1]
            g = lo if self.kink_rule == "left" else hi
            active = ActiveSet([[float(lo)], [float(hi)]], indices=(j, j + 1), kinks=(j,))
        else:
            g = self.slopes[j]
            active = ActiveSet([[float(g)]], indices=(j,))
        return OracleReply(float(value), np.array([float(g)]), active)

    def breakpoint_values(self) -> list[tuple[Fraction, Fraction]]:
        """(left-piece value, right-piece value) at every breakpoint."""
        return [(self.slopes[j] * b + self.intercepts[j], self.slopes[j + 1] * b + self.intercepts[j + 1])
                for j, b in enumerate(self.breaks)]

    def scaled(self, factor) -> "PiecewiseLinear1D":
        factor = Fraction(factor)
        m = self.meta
        meta = InstanceMeta(lipschitz=m.lipschitz * float(factor), subopt_bound=m.subopt_bound * float(factor),
                            dim=1, convex=m.convex, domain_bound=m.domain_bound)
        return PiecewiseLinear1D(self.breaks, [s * factor for s in self.slopes],
                                 [c * factor for c in self.intercepts], meta,
                                 dict(self.descriptor, scale=str(factor)), self.kink_rule, self.x0)


def abs_1d() -> PiecewiseLinear1D:
    """f(x) = |x| with the +1 subgradient at the kink."""
    meta = InstanceMeta(lipschitz=1.0, subopt_bound=1.0, dim=1, convex=True, domain_bound=1.0)
    return PiecewiseLinear1D([0], [-1, 1], [0, 0], meta, {"name": "abs"}, kink_rule="right",
                             x0=np.array([1.0]))


def linear_1d(slope=1) -> PiecewiseLinear1D:
    """f(x) = slope*x as an exact piecewise instance with one nominal breakpoint."""
    slope = Fraction(slope)
    meta = InstanceMeta(lipschitz=max(abs(float(slope)), 1e-12), subopt_bound=np.inf, dim=1, convex=True)
    return PiecewiseLinear1D([0], [slope, slope], [0, 0], meta, {"name": "linear1d", "slope": str(slope)})
