from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import OracleReply, as_vector


@dataclass(frozen=True)
class InstanceMeta:
    lipschitz: float
    subopt_bound: float
    dim: int
    convex: bool
    smoothness: Optional[float] = None
    domain_bound: Optional[float] = None

    def __post_init__(self):
        if not self.lipschitz > 0:
            raise ValueError("Lipschitz constant must be positive")
        if self.domain_bound is not None and self.subopt_bound > self.lipschitz * self.domain_bound * (1 + 1e-12):
            raise ValueError("suboptimality bound exceeds L*R")


@dataclass
class Instance:
    """Base class for test functions with an exact first-order oracle.

    Subclasses implement ``evaluate``; calling the instance validates the
    query dimension first.  ``descriptor`` holds the construction
    parameters and ``x0`` a default starting point.
    """

    meta: InstanceMeta
    descriptor: dict = field(default_factory=dict)
    x0: Optional[np.ndarray] = None

    def __call__(self, x) -> OracleReply:
        x = as_vector(x)
        if x.shape[0] != self.meta.dim:
            raise ValueError(f"query has dimension {x.shape[0]}, instance expects {self.meta.dim}")
        return self.evaluate(x)

    def evaluate(self, x: np.ndarray) -> OracleReply:
        raise NotImplementedError

    def value(self, x) -> float:
        return self(x).value

    def witness(self, x, delta):
        """Exact certificate generator; only some constructions provide one."""
        return None

    def witness_points(self, x, delta):
        cert = self.witness(x, delta)
        return None if cert is None else cert.points

    @property
    def name(self) -> str:
        return self.descriptor.get("name", type(self).__name__)

    def start(self) -> np.ndarray:
        if self.x0 is None:
            return np.zeros(self.meta.dim)
        return np.array(self.x0, dtype=float)
