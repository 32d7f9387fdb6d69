"""
Command-line front end.

Subcommands ``run``, ``certify``, ``arena``, ``scaling`` and ``claim1``.
Exit codes: 0 success, 1 usage or configuration error, 2 budget exhausted
(or inner-loop cap), 3 no certificate found.  ``NSOPT_SEED`` sets the
default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from collections import defaultdict
from typing import Optional, Sequence

import numpy as np

from .algorithms import ProbeStrategy, RunResult, gd_then_ingd, ingd
from .arena import BUILTIN_ALGORITHMS, ProtocolError, run_resisting, subprocess_algorithm
from .certifier import Certificate, certify, check_claim1_equiv
from .core import RngStream, as_vector
from .instances import build_instance
from .instances.simple import PiecewiseLinear1D
from .io import (ExperimentConfig, ScalingRow, certificate_to_doc, dumps, fmt, report_to_doc,
                 rows_to_csv, write_trace)

EXIT_OK, EXIT_ERROR, EXIT_BUDGET, EXIT_NOT_FOUND = 0, 1, 2, 3
ALGOS = ("ingd-det", "ingd-rand", "gd-ingd-det", "gd-ingd-rand")
PROBE_STREAM = 1


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    try:
        return int(os.environ.get("NSOPT_SEED", "0"))
    except ValueError:
        return 0


def _vector(text: Optional[str]):
    if text is None:
        return None
    return [float(t) for t in text.replace(",", " ").split()]


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _write(path: Optional[str], doc):
    if path:
        with open(path, "w") as fh:
            fh.write(dumps(doc) + "\n")


# --------------------------------------------------------------------------
# one run
# --------------------------------------------------------------------------


def execute(cfg: ExperimentConfig, seed: Optional[int] = None) -> tuple[object, RunResult]:
    """Build the instance and run the configured algorithm once."""
    if cfg.algo not in ALGOS:
        raise UsageError(f"unknown algorithm {cfg.algo!r}; choose from {', '.join(ALGOS)}")
    if not cfg.delta > 0:
        raise UsageError("delta must be positive for a run")
    inst = build_instance(cfg.instance, eps=cfg.eps)
    meta = inst.meta
    x0 = as_vector(cfg.x0) if cfg.x0 is not None else inst.start()
    seed = cfg.seed if seed is None else seed
    if cfg.algo.endswith("det"):
        H = cfg.H if cfg.H is not None else (meta.smoothness or meta.lipschitz / cfg.delta)
        strategy = ProbeStrategy.deterministic(H)
    else:
        strategy = ProbeStrategy.randomized(RngStream(seed, PROBE_STREAM))
    if cfg.algo.startswith("gd-"):
        if not meta.convex:
            raise UsageError("the subgradient warm start needs a convex instance")
        R = cfg.R if cfg.R is not None else meta.domain_bound
        if R is None:
            raise UsageError("instance has no domain bound; pass --R")
        res = gd_then_ingd(inst, x0, R, meta.lipschitz, cfg.delta, cfg.eps, strategy, cfg.budget)
    else:
        res = ingd(inst, x0, cfg.delta, cfg.eps, strategy, cfg.budget)
    return inst, res


def _config(args, **over) -> ExperimentConfig:
    doc = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = json.load(fh)
    for key in ("instance", "algo", "delta", "eps", "seed", "budget", "H", "R", "trace", "cert"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    if getattr(args, "x0", None) is not None:
        doc["x0"] = _vector(args.x0)
    doc.update(over)
    doc.setdefault("seed", default_seed())
    return ExperimentConfig.from_doc(doc)


def cmd_run(args) -> int:
    cfg = _config(args)
    _, res = execute(cfg)
    if cfg.trace:
        write_trace(cfg.trace, res.trace.ledger.records)
    doc = {"type": "run", "config": cfg.to_doc(), "status": res.status, "point": res.point,
           "g_final": res.g_final, "oracle_calls": res.oracle_calls,
           "certificate": certificate_to_doc(res.certificate) if res.certificate is not None else None}
    _write(cfg.cert, doc)
    gn = float(np.linalg.norm(res.g_final))
    print(f"status={res.status} oracle_calls={res.oracle_calls} norm={fmt(gn)}")
    return EXIT_OK if res.success else EXIT_BUDGET


# --------------------------------------------------------------------------
# certify
# --------------------------------------------------------------------------


def _hints(inst, x, delta, kind: str):
    if kind == "none":
        return None
    if kind == "witness":
        pts = inst.witness_points(x, delta)
        return None if pts is None else list(pts)
    if kind == "breakpoints":
        if not isinstance(inst, PiecewiseLinear1D):
            raise UsageError("breakpoint hints need a piecewise-linear 1D instance")
        return [[float(b)] for b in inst.breaks if abs(float(b) - x[0]) <= delta]
    if kind == "axes":
        d = len(x)
        return [x + s * delta * np.eye(d)[i] for i in range(d) for s in (1.0, -1.0)]
    raise UsageError(f"unknown hint kind {kind!r}")


def cmd_certify(args) -> int:
    inst = build_instance(args.instance, eps=args.eps)
    x = as_vector(_vector(args.point)) if args.point else inst.start()
    if args.delta < 0 or not args.eps > 0:
        raise UsageError("need delta >= 0 and eps > 0")
    hints = _hints(inst, x, args.delta, args.hints)
    k = args.k if args.k is not None else (0 if hints else 16 * len(x))
    seed = args.seed if args.seed is not None else default_seed()
    res = certify(inst, x, args.delta, args.eps, k=k, rng=RngStream(seed, 2), hints=hints)
    found = isinstance(res, Certificate)
    cert = res if found else res.best
    _write(args.cert, certificate_to_doc(cert, found=found, eps=args.eps, instance=args.instance))
    print(f"{'found' if found else 'not-found'} norm={fmt(cert.norm)} probes={len(cert)}")
    return EXIT_OK if found else EXIT_NOT_FOUND


# --------------------------------------------------------------------------
# arena
# --------------------------------------------------------------------------


def cmd_arena(args) -> int:
    if args.subprocess:
        alg, name = subprocess_algorithm(args.subprocess), args.subprocess
    else:
        if args.algo not in BUILTIN_ALGORITHMS:
            raise UsageError(f"unknown arena algorithm {args.algo!r}")
        alg, name = BUILTIN_ALGORITHMS[args.algo], args.algo
    seed = args.seed if args.seed is not None else default_seed()
    rep = run_resisting(alg, args.T, args.d, seed=seed, name=name)
    _write(args.report, report_to_doc(rep))
    print(f"verdict={'true' if rep.verdict else 'false'} queries={len(rep.queries)} r={fmt(rep.r)} "
          f"min_norm={fmt(min(rep.nonstationarity))}")
    return EXIT_OK if rep.verdict else EXIT_ERROR


# --------------------------------------------------------------------------
# scaling
# --------------------------------------------------------------------------


def _slope(pairs: list[tuple[float, float]]) -> Optional[float]:
    xs = np.log([p[0] for p in pairs])
    ys = np.log([max(p[1], 1.0) for p in pairs])
    if len(set(xs.tolist())) < 2:
        return None
    return float(np.polyfit(xs, ys, 1)[0])


def scaling_summary(rows: Sequence[ScalingRow]) -> dict:
    """Least-squares log-log slopes of median oracle calls against 1/eps and 1/delta."""
    med: dict = defaultdict(list)
    for r in rows:
        med[(r.instance, r.algo, r.delta, r.eps)].append(r.oracle_calls)
    cells = {k: statistics.median(v) for k, v in med.items()}
    by_eps, by_delta = defaultdict(list), defaultdict(list)
    for (inst, algo, delta, eps), m in cells.items():
        by_eps[(inst, algo, delta)].append((1.0 / eps, m))
        by_delta[(inst, algo, eps)].append((1.0 / delta, m))
    out = {"median_calls": [{"instance": k[0], "algo": k[1], "delta": k[2], "eps": k[3], "median": v}
                            for k, v in cells.items()],
           "slope_vs_inv_eps": [], "slope_vs_inv_delta": []}
    for (inst, algo, delta), pairs in by_eps.items():
        s = _slope(sorted(pairs))
        if s is not None:
            out["slope_vs_inv_eps"].append({"instance": inst, "algo": algo, "delta": delta, "slope": s})
    for (inst, algo, eps), pairs in by_delta.items():
        s = _slope(sorted(pairs))
        if s is not None:
            out["slope_vs_inv_delta"].append({"instance": inst, "algo": algo, "eps": eps, "slope": s})
    return out


def scaling_rows(instances, algos, deltas, epss, seeds, budget) -> list[ScalingRow]:
    rows = []
    for inst in instances:
        for algo in algos:
            for delta in deltas:
                for eps in epss:
                    for seed in seeds:
                        cfg = ExperimentConfig(instance=inst, algo=algo, delta=delta, eps=eps,
                                               seed=seed, budget=budget)
                        t0 = time.perf_counter()
                        _, res = execute(cfg)
                        ms = 1000.0 * (time.perf_counter() - t0)
                        rows.append(ScalingRow(inst, algo, delta, eps, seed, res.oracle_calls,
                                               res.success, float(np.linalg.norm(res.g_final)), ms))
    return rows


def cmd_scaling(args) -> int:
    seed0 = args.seed if args.seed is not None else default_seed()
    seeds = list(range(seed0, seed0 + args.seeds))
    rows = scaling_rows(args.instance, args.algo, _floats(args.deltas), _floats(args.epss), seeds,
                        args.budget)
    text = rows_to_csv(rows)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    summary = scaling_summary(rows)
    _write(args.summary, summary)
    for s in summary["slope_vs_inv_eps"]:
        print(f"slope vs 1/eps {s['instance']} {s['algo']} delta={fmt(s['delta'])}: {s['slope']:.3f}",
              file=sys.stderr)
    for s in summary["slope_vs_inv_delta"]:
        print(f"slope vs 1/delta {s['instance']} {s['algo']} eps={fmt(s['eps'])}: {s['slope']:.3f}",
              file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# claim 1
# --------------------------------------------------------------------------


def cmd_claim1(args) -> int:
    inst = build_instance(args.instance)
    if not isinstance(inst, PiecewiseLinear1D) or inst.meta.dim != 1:
        raise UsageError("claim1 needs an exact piecewise-linear instance of one variable")
    rep = check_claim1_equiv(inst, args.delta, args.eps, args.grid)
    print(f"checked={rep.checked} disagreements={len(rep.disagreements)} boundary={rep.boundary_cases}")
    for x, a, b, dist in rep.disagreements[:10]:
        print(f"  x={fmt(x)} sampled={a} exact={b} dist={fmt(dist)}")
    return EXIT_OK if rep.ok else EXIT_ERROR


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = Parser(prog="nsopt", description="Nonsmooth first-order methods, certificates and lower-bound checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    r = sub.add_parser("run", help="run one algorithm and write its trace and certificate")
    r.add_argument("--config", help="JSON config file; flags override its entries")
    r.add_argument("--instance")
    r.add_argument("--algo", choices=ALGOS)
    r.add_argument("--delta", type=float)
    r.add_argument("--eps", type=float)
    r.add_argument("--budget", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--H", type=float, help="smoothness for the binary search (default: instance H or L/delta)")
    r.add_argument("--R", type=float, help="distance bound for the warm start (default: instance bound)")
    r.add_argument("--x0", help="start point, space or comma separated")
    r.add_argument("--trace", help="JSONL trace output path")
    r.add_argument("--cert", help="certificate document output path")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="search for a (delta, eps) certificate at a point")
    c.add_argument("--instance", required=True)
    c.add_argument("--point")
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--k", type=int, help="uniform ball samples (default 16*dim, or 0 with hints)")
    c.add_argument("--hints", default="none", choices=("none", "witness", "breakpoints", "axes"))
    c.add_argument("--seed", type=int)
    c.add_argument("--cert")
    c.set_defaults(func=cmd_certify)

    a = sub.add_parser("arena", help="play the resisting oracle against an algorithm")
    a.add_argument("--algo", default="ingd")
    a.add_argument("--subprocess", help="external program speaking the line protocol")
    a.add_argument("--T", type=int, default=50)
    a.add_argument("--d", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--report")
    a.set_defaults(func=cmd_arena)

    s = sub.add_parser("scaling", help="oracle-call counts over a (delta, eps) grid")
    s.add_argument("--instance", action="append", required=True)
    s.add_argument("--algo", action="append", required=True, choices=ALGOS)
    s.add_argument("--deltas", required=True)
    s.add_argument("--epss", required=True)
    s.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    s.add_argument("--seed", type=int, help="first seed")
    s.add_argument("--budget", type=int, default=100000)
    s.add_argument("--csv")
    s.add_argument("--summary")
    s.set_defaults(func=cmd_scaling)

    q = sub.add_parser("claim1", help="compare sampled and exact stationarity on a 1D instance")
    q.add_argument("--instance", required=True)
    q.add_argument("--delta", type=float, required=True)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--grid", type=int, default=10000)
    q.set_defaults(func=cmd_claim1)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ProtocolError, ValueError, KeyError, TypeError, OSError) as err:
        print(f"nsopt {args.command}: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
