"""Parse "name:key=value,key=value" descriptors into instances."""

from __future__ import annotations

from typing import Any, Optional

from ..core import RngStream
from .mahalanobis import Mahalanobis
from .nemirovski import LogSumExpNemirovski, Nemirovski, NemirovskiExtended, default_tau
from .simple import Constant, Linear, Quadratic, abs_1d, linear_1d
from .tree1d import Tree1D, random_sigma


def parse_descriptor(text: str) -> tuple[str, dict[str, str]]:
    name, _, rest = text.partition(":")
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            if not item:
                continue
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"malformed descriptor item {item!r}")
            params[key.strip()] = value.strip()
    return name.strip(), params


def format_descriptor(name: str, params: dict[str, Any]) -> str:
    if not params:
        return name
    return name + ":" + ",".join(f"{k}={v}" for k, v in params.items())


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", " ").split()]


def build_instance(text: str, eps: Optional[float] = None):
    """Instantiate a zoo member from its descriptor string.

    ``eps`` fills parameters whose default depends on the target accuracy
    (the smoothing temperature of lse-nemirovski).
    """
    name, p = parse_descriptor(text)
    if name == "quadratic":
        return Quadratic(dim=int(p.get("dim", 2)), radius=float(p.get("radius", 4.0)))
    if name == "abs":
        return abs_1d()
    if name == "linear":
        v = _floats(p["v"]) if "v" in p else [float(p.get("slope", 1.0))]
        return linear_1d(v[0]) if len(v) == 1 else Linear(v)
    if name == "constant":
        return Constant(dim=int(p.get("dim", 1)), c=float(p.get("c", 0.0)))
    if name == "nemirovski":
        T = int(p.get("T", 16))
        return Nemirovski(T, float(p.get("alpha", 1.0 / (9 * T))))
    if name == "nemirovski-ext":
        T = int(p.get("T", 16))
        return NemirovskiExtended(T, float(p.get("alpha", 1.0 / (9 * T))), int(p.get("dim", 2 * T)),
                                  seed=int(p.get("seed", 0)))
    if name == "lse-nemirovski":
        T = int(p.get("T", 16))
        if "tau" in p:
            tau = float(p["tau"])
        elif eps is not None:
            tau = default_tau(eps, T)
        else:
            raise ValueError("lse-nemirovski needs tau= or an eps to derive it")
        return LogSumExpNemirovski(T, float(p.get("alpha", 1.0 / (9 * T))), tau)
    if name == "tree1d":
        if "sigma" in p:
            sigma = tuple(int(c) for c in p["sigma"])
        else:
            sigma = random_sigma(int(p.get("N", 6)), RngStream(int(p.get("seed", 0)), 7))
        scale = "1/2" if p.get("scaled", "0") in ("1", "true", "yes") else p.get("scale", "1")
        return Tree1D(sigma, scale=scale, schedule=p.get("schedule", "convex"))
    if name == "mahalanobis":
        eps = float(p.get("eps", 0.25))
        d = int(p["d"]) if "d" in p else None
        return Mahalanobis(eps, d, delta=float(p.get("delta", 0.5)))
    raise ValueError(f"unknown instance {name!r}")
