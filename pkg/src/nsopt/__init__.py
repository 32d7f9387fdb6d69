"""Finding (delta, eps)-stationary points of nonsmooth Lipschitz functions.

Exact first-order oracles for a zoo of test functions, gradient-sampling
methods with a deterministic line search, certificates of
(delta, eps)-stationarity, and checks of the matching lower-bound
constructions.
"""

from .algorithms import ProbeStrategy, RunResult, gd_then_ingd, ingd, min_norm_loop
from .certifier import NotFound, certify, verify_certificate
from .core import Certificate, OracleReply, RngStream, TrackedOracle, min_norm_point
from .instances import build_instance

__all__ = [
    "ProbeStrategy", "RunResult", "gd_then_ingd", "ingd", "min_norm_loop", "NotFound", "certify",
    "verify_certificate", "Certificate", "OracleReply", "RngStream", "TrackedOracle", "min_norm_point",
    "build_instance",
]
__version__ = "0.1.0"
