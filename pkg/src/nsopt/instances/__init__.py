"""Hard-function zoo with exact first-order oracles."""

from .base import Instance, InstanceMeta
from .mahalanobis import Mahalanobis, mahalanobis_eval, mahalanobis_witness, witness_norm
from .nemirovski import (LogSumExpNemirovski, Nemirovski, NemirovskiExtended, logsumexp_nemirovski_eval,
                         nemirovski_eval, nemirovski_extended_eval, prog_alpha)
from .registry import build_instance, parse_descriptor
from .resisting import ResistingFunction, resisting_function_build
from .simple import Constant, Linear, PiecewiseLinear1D, Quadratic, abs_1d, linear_1d
from .tree1d import Tree1D, tree1d_build, tree1d_min_interval

__all__ = [
    "Instance", "InstanceMeta", "Mahalanobis", "mahalanobis_eval", "mahalanobis_witness", "witness_norm",
    "LogSumExpNemirovski", "Nemirovski", "NemirovskiExtended", "logsumexp_nemirovski_eval",
    "nemirovski_eval", "nemirovski_extended_eval", "prog_alpha", "build_instance", "parse_descriptor",
    "ResistingFunction", "resisting_function_build", "Constant", "Linear", "PiecewiseLinear1D",
    "Quadratic", "abs_1d", "linear_1d", "Tree1D", "tree1d_build", "tree1d_min_interval",
]
