"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the "acceptance criteria" section of the terminal summary.
"""

import math
import statistics
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from nsopt.algorithms import ProbeStrategy, gd_then_ingd, ingd
from nsopt.arena import ARENA_EPS, ingd_subject, repeater, run_resisting, walker
from nsopt.certifier import Certificate, certify, check_claim1_equiv, verify_certificate
from nsopt.cli import main, scaling_rows, scaling_summary
from nsopt.core import RngStream, norm, unit
from nsopt.instances import Mahalanobis, Nemirovski, abs_1d, build_instance, nemirovski_eval, prog_alpha
from nsopt.instances.mahalanobis import mahalanobis_eval
from nsopt.instances.tree1d import (Tree1D, delta_neighbourhood_inside, lemma_depth, random_sigma,
                                    separation_bound)


def strategy_for(inst, delta, det, seed):
    if det:
        return ProbeStrategy.deterministic(inst.meta.smoothness or inst.meta.lipschitz / delta)
    return ProbeStrategy.randomized(RngStream(seed, 1))


def random_case(gen: np.random.Generator, n: int):
    """One zoo instance with a random start; cycles through the families."""
    kind = n % 8
    if kind == 0:
        d = int(gen.integers(1, 6))
        inst = build_instance(f"quadratic:dim={d}")
        u = gen.standard_normal(d)
        return inst, u / norm(u) * gen.uniform(0.2, 2.0)
    if kind == 1:
        return abs_1d(), np.array([gen.uniform(-2, 2)])
    if kind == 2:
        inst = build_instance(f"nemirovski:T={int(gen.integers(3, 12))}")
    elif kind == 3:
        inst = build_instance(f"nemirovski-ext:T={int(gen.integers(2, 6))},seed={n}")
    elif kind == 4:
        inst = build_instance(f"lse-nemirovski:T={int(gen.integers(3, 10))},tau=0.05")
    elif kind == 5:
        inst = build_instance(f"mahalanobis:eps=0.5,d={int(gen.integers(4, 16))}")
    else:
        schedule = "convex" if kind == 6 else "uniform"
        inst = build_instance(f"tree1d:N={int(gen.integers(2, 8))},seed={n},schedule={schedule}")
        return inst, np.array([gen.uniform(-0.5, 1.5)])
    return inst, inst.start() + 0.3 * gen.standard_normal(inst.meta.dim)


def emitted_certificates(target: int):
    """Certificates from INGD, the convex pipeline and the sampling certifier."""
    gen = RngStream(31).generator()
    out, n = [], 0
    while len(out) < target:
        inst, x0 = random_case(gen, n)
        delta, eps = gen.uniform(0.05, 0.2), gen.uniform(0.1, 0.3)
        route = n % 3
        if route == 0:
            res = ingd(inst, x0, delta, eps, strategy_for(inst, delta, n % 2 == 0, n), budget=3000)
            cert = res.certificate
        elif route == 1 and inst.meta.convex and inst.meta.domain_bound is not None:
            res = gd_then_ingd(inst, inst.start(), inst.meta.domain_bound, inst.meta.lipschitz, 0.2, 0.3,
                               strategy_for(inst, 0.2, False, n), budget=20000)
            cert = res.certificate
        else:
            res = certify(inst, x0, delta, 2.0 * inst.meta.lipschitz, k=32, rng=RngStream(n, 4))
            cert = res if isinstance(res, Certificate) else None
        if cert is not None:
            out.append((inst, cert))
        n += 1
    return out


def mutate(inst, cert, kind: str, gen):
    w, P, G = cert.weights.copy(), cert.points.copy(), cert.subgrads.copy()
    j = int(gen.integers(len(w)))
    u = gen.standard_normal(P.shape[1])
    u /= norm(u)
    if kind == "weights":
        w[j] += 0.1
        return Certificate(cert.center, cert.delta, P, w, G, w @ G, norm(w @ G))
    if kind == "radius":
        P[j] = cert.center + 1.5 * cert.delta * u
        return Certificate(cert.center, cert.delta, P, w, G, cert.g, cert.norm)
    # every subgradient has norm at most L, so this one is outside the subdifferential
    G[j] = G[j] + 3.0 * max(inst.meta.lipschitz, float(np.abs(G).max()), 1.0) * u
    return Certificate(cert.center, cert.delta, P, w, G, w @ G, norm(w @ G))


class TestAcceptance:
    def test_01_descent_invariant(self, report):
        t0 = time.perf_counter()
        gen = RngStream(1).generator()
        steps = violations = 0
        for n in range(200):
            inst, x0 = random_case(gen, n)
            delta, eps = gen.uniform(0.05, 0.2), gen.uniform(0.1, 0.3)
            res = ingd(inst, x0, delta, eps, strategy_for(inst, delta, n % 2 == 0, n), budget=3000)
            records = res.trace.ledger.records
            x, fx = x0, inst(x0).value
            for e in res.trace.outer_steps():
                # re-evaluate the accepted iterate with a fresh oracle call
                x_next = records[e["calls"] - 1].x
                f_next = inst(x_next).value
                steps += 1
                ok = (fx - f_next > delta / 4 * e["gnorm"] and abs(norm(x_next - x) - delta) <= 1e-9 * max(1, delta)
                      and f_next == e["f_after"])
                violations += not ok
                x, fx = x_next, f_next
        elapsed = time.perf_counter() - t0
        ok = violations == 0 and steps > 0
        report("1", "descent invariant", ok, f"200 runs, {steps} outer steps, {violations} violations, {elapsed:.1f}s")
        assert ok

    def test_02_inner_loop_bound(self, report):
        t0 = time.perf_counter()
        gen = RngStream(2).generator()
        checked = bad_decrease = bad_iters = bad_calls = skipped = 0
        for n in range(40):
            desc = "quadratic:dim=3" if n % 2 == 0 else f"lse-nemirovski:T={int(gen.integers(4, 10))},tau=0.01"
            inst = build_instance(desc)
            L, H = inst.meta.lipschitz, inst.meta.smoothness
            delta, eps = gen.uniform(0.05, 0.3), gen.uniform(0.005, 0.05)
            x0 = inst.start() + 0.5 * gen.standard_normal(inst.meta.dim)
            res = ingd(inst, x0, delta, eps, ProbeStrategy.deterministic(H), budget=20000)
            per_outer: dict = {}
            for e in res.trace.inner_steps():
                per_outer[e["outer"]] = per_outer.get(e["outer"], 0) + 1
                bad_calls += e["probe_calls"] > math.ceil(math.log2(8 * delta * H / eps)) + 2
                if not e["postcondition"]:
                    skipped += 1
                    continue
                checked += 1
                g2, n2 = e["gnorm"] ** 2, e["gnorm_next"] ** 2
                bad_decrease += n2 > g2 - g2 ** 2 / (16 * L * L) + 1e-9
            bad_iters += sum(k > math.ceil(16 * L * L / eps ** 2) for k in per_outer.values())
        elapsed = time.perf_counter() - t0
        ok = checked > 0 and bad_decrease == bad_iters == bad_calls == 0
        report("2", "inner-loop bound", ok,
               f"{checked} inner steps with postcondition ({skipped} without), decrease violations {bad_decrease}, "
               f"iteration-cap violations {bad_iters}, probe-call violations {bad_calls}, {elapsed:.1f}s")
        assert ok

    def test_03_certificate_soundness(self, report):
        t0 = time.perf_counter()
        certs = emitted_certificates(1000)
        gen = RngStream(3).generator()
        rejected_good = accepted_bad = 0
        kinds = ("weights", "radius", "subgradient")
        for i, (inst, cert) in enumerate(certs):
            rejected_good += not verify_certificate(inst, cert)
            kind = kinds[i % 3]
            v = verify_certificate(inst, mutate(inst, cert, kind, gen))
            accepted_bad += bool(v) or not any(r.startswith(kind) for r in v.reasons)
        elapsed = time.perf_counter() - t0
        ok = rejected_good == accepted_bad == 0
        report("3", "certificate soundness", ok,
               f"{len(certs)} emitted, {rejected_good} rejected; {len(certs)} mutated, {accepted_bad} not caught, "
               f"{elapsed:.1f}s")
        assert ok

    def test_04a_mahalanobis_certificate(self, report):
        eps, d, delta = 0.25, 48, 0.5
        m = Mahalanobis(eps, d, delta=delta)
        x0 = m.start()
        cert = certify(m, x0, delta, eps, k=0, hints=m.witness_points(x0, delta))
        closed = math.sqrt(2 * eps ** 2 / 9 + 8 / (9 * 47))
        ok = isinstance(cert, Certificate) and abs(cert.norm - closed) <= 1e-9 and cert.norm < eps \
            and bool(verify_certificate(m, cert))
        report("4a", "Mahalanobis certificate", ok,
               f"norm {cert.norm:.12f} vs closed form {closed:.12f} (< eps={eps})")
        assert ok

    @pytest.mark.xfail(strict=True, reason="at eps=0.25 the distance delta/(8 eps) is delta/2; the lemma needs eps < 1/8")
    def test_04b_mahalanobis_distance(self, report):
        eps, d, delta = 0.25, 48, 0.5
        x0 = Mahalanobis(eps, d, delta=delta).start()
        # the only eps-stationary point is 0: every other gradient has norm >= sqrt(2) eps
        pts = RngStream(4).generator().standard_normal((2000, d))
        floor = min(norm(mahalanobis_eval(p, eps, d).subgrad) for p in pts)
        dist = norm(x0)
        # the same check at parameters meeting the lemma's hypothesis
        e2, d2 = 0.1, 300
        m2 = Mahalanobis(e2, d2, delta=delta)
        c2 = certify(m2, m2.start(), delta, e2, k=0, hints=m2.witness_points(m2.start(), delta))
        ok = dist > delta
        report("4b", "Mahalanobis distance", ok,
               f"distance {dist:.4f} vs delta {delta} (gradient floor off 0: {floor:.4f} > eps); "
               f"at eps={e2}, d={d2}: norm {c2.norm:.4f} < {e2}, distance {norm(m2.start()):.4f} > {delta}")
        assert floor > eps and norm(m2.start()) > delta and c2.norm < e2
        assert ok

    def test_05_nemirovski_floor(self, report):
        T, delta = 16, 0.5
        inst = Nemirovski(T, 1 / (9 * T))
        x = np.zeros(T)
        hints = [s * delta * unit(i, T) for i in range(T) for s in (1.0, -1.0)]
        res = certify(inst, x, delta, 1e-6, k=10_000, rng=RngStream(5), hints=hints)
        ok = res.norm >= 0.25 - 1e-9
        report("5", "Nemirovski norm floor", ok, f"best norm {res.norm:.12f} >= 0.25 over 10^4 samples + 32 hints")
        assert ok

    def test_06_zero_chain(self, report):
        gen = RngStream(6).generator()
        bad = 0
        for n in range(500):
            T = int(gen.integers(2, 20))
            alpha = 1 / (9 * T)
            i = int(gen.integers(1, T + 1))
            x = np.concatenate([gen.uniform(-2, 2, i - 1), gen.uniform(-alpha, alpha, T - i + 1)])
            assert prog_alpha(x, alpha) < i
            y = x + gen.uniform(-0.499 * alpha, 0.499 * alpha, T)
            z = y.copy()
            z[i:] = 0.0
            a, b = nemirovski_eval(y, T, alpha), nemirovski_eval(z, T, alpha)
            bad += not (a.value == b.value and np.array_equal(a.subgrad, b.subgrad))
        report("6", "zero-chain property", bad == 0, f"500 pairs, {bad} violations")
        assert bad == 0

    def test_07_tree1d_lemmas(self, report):
        t0 = time.perf_counter()
        gen = RngStream(7)
        failures = []
        for n in range(50):
            N = 2 + n % 11
            sigma = random_sigma(N, gen.child(n))
            inst = Tree1D(sigma)
            lo, hi = inst.min_interval()
            s = inst.slopes
            if not all(a == b for a, b in inst.breakpoint_values()):
                failures.append((sigma, "continuity"))
            if not all(a <= b for a, b in zip(s, s[1:])):
                failures.append((sigma, "convexity"))
            if not all(abs(v) <= 2 for v in s):
                failures.append((sigma, "2-Lipschitz"))
            pieces = [(inst.breaks[j - 1] if j else None, inst.breaks[j] if j < len(inst.breaks) else None)
                      for j in range(len(s))]
            if not all(abs(v) >= Fraction(1, 2) for v, piece in zip(s, pieces) if piece != (lo, hi)):
                failures.append((sigma, "slope floor"))
            if inst.exact_value(0) - inst.min_value() > 1:
                failures.append((sigma, "range"))
            for k in range(N):
                a, b = inst.interval(k)
                c, d = inst.interval(k + 1)
                if not a < c < d < b:
                    failures.append((sigma, f"nesting {k}"))
                sibling = Tree1D(sigma[:k] + (1 - sigma[k],) + sigma[k + 1:])
                e, f = sibling.interval(k + 1)
                if not (d <= e or f <= c):
                    failures.append((sigma, f"disjointness {k}"))
                if min(lo - a, b - hi) < separation_bound(k):
                    failures.append((sigma, f"separation {k}"))
            for delta in (1e-3, 1e-6):
                if not delta_neighbourhood_inside(inst, delta, lemma_depth(delta)):
                    failures.append((sigma, f"distance lemma {delta}"))
        elapsed = time.perf_counter() - t0
        report("7", "tree1d lemmas", not failures,
               f"50 words, N <= 12, exact arithmetic, {len(failures)} failures, {elapsed:.1f}s")
        assert not failures, failures[:5]

    def test_08_claim1(self, report):
        t0 = time.perf_counter()
        instances = [("abs", abs_1d())] + [(f"tree1d#{n}", Tree1D(random_sigma(2 + n % 9, RngStream(n, 8))))
                                           for n in range(20)]
        total = disagreements = boundary = crossed = mismatches = 0
        for _, inst in instances:
            for delta in (0.05, 0.1):
                for eps in (0.2, 0.3):
                    rep = check_claim1_equiv(inst, delta, eps, grid=10_000)
                    total += rep.checked
                    disagreements += len(rep.disagreements)
                    boundary += rep.boundary_cases
                    crossed += rep.cross_checked
                    mismatches += len(rep.certify_mismatches)
        elapsed = time.perf_counter() - t0
        ok = disagreements == mismatches == 0
        report("8", "Claim 1 equivalence", ok,
               f"{len(instances)} instances x 4 (delta, eps), {total} points, {disagreements} disagreements, "
               f"{boundary} on the ball boundary, {crossed} certify cross-checks with {mismatches} mismatches, "
               f"{elapsed:.1f}s")
        assert ok

    def test_09_arena(self, report):
        t0 = time.perf_counter()
        lines, ok = [], True
        for name, alg in (("ingd", ingd_subject), ("walker", walker), ("repeat", repeater)):
            rep = run_resisting(alg, 50, name=name)
            cons = max(max(c) for c in rep.consistency)
            this = (rep.d == 52 and rep.verdict and cons < 1e-9 and min(rep.nonstationarity) > ARENA_EPS
                    and min(rep.combination_min) > ARENA_EPS)
            ok &= this
            lines.append(f"{name}: consistency {cons:.1e}, min norm {min(rep.nonstationarity):.4f}, "
                         f"min combination {min(rep.combination_min):.4f}")
        elapsed = time.perf_counter() - t0
        report("9", "arena", ok, "; ".join(lines) + f" (threshold {ARENA_EPS:.5f}), {elapsed:.1f}s")
        assert ok

    @staticmethod
    def pipeline_cases():
        cases = [(f"tree1d:N=6,seed={s},scaled=1", s) for s in range(3)] + [("quadratic", s) for s in range(3)]
        for desc, seed in cases:
            inst = build_instance(desc)
            for delta in (0.05, 0.1):
                for eps in (0.1, 0.2):
                    yield desc, inst, seed, delta, eps

    def test_10a_pipeline_certified(self, report):
        t0 = time.perf_counter()
        runs = bad = 0
        for desc, inst, seed, delta, eps in self.pipeline_cases():
            res = gd_then_ingd(inst, inst.start(), inst.meta.domain_bound, inst.meta.lipschitz, delta, eps,
                               strategy_for(inst, delta, False, seed), budget=10 ** 6)
            runs += 1
            bad += not (res.status == "certified-stationary" and res.certificate.norm <= eps
                        and verify_certificate(inst, res.certificate))
        elapsed = time.perf_counter() - t0
        report("10a", "convex pipeline certificates", bad == 0, f"{runs} runs, {bad} unverified, {elapsed:.1f}s")
        assert bad == 0

    @pytest.mark.xfail(strict=True, reason="the warm start alone costs more calls than INGD needs on these instances")
    def test_10b_pipeline_cheaper(self, report):
        calls: dict = {}
        for desc, inst, seed, delta, eps in self.pipeline_cases():
            if delta != 0.05:
                continue
            family = desc.split(":")[0]
            x0 = inst.start()
            pipe = gd_then_ingd(inst, x0, inst.meta.domain_bound, inst.meta.lipschitz, delta, eps,
                                strategy_for(inst, delta, False, seed), budget=10 ** 6)
            plain = ingd(inst, x0, delta, eps, strategy_for(inst, delta, False, seed), budget=10 ** 6)
            calls.setdefault(family, ([], []))
            calls[family][0].append(pipe.oracle_calls)
            calls[family][1].append(plain.oracle_calls)
        med = {f: (statistics.median(a), statistics.median(b)) for f, (a, b) in calls.items()}
        ok = all(p < q for p, q in med.values())
        report("10b", "pipeline cheaper than INGD at delta=0.05", ok,
               ", ".join(f"{f}: pipeline {p:g} vs INGD {q:g} median calls" for f, (p, q) in med.items()))
        assert ok

    def test_11_scaling_trend(self, report):
        t0 = time.perf_counter()
        rows = scaling_rows(["quadratic"], ["ingd-det"], [0.1], [0.2, 0.1, 0.05, 0.025, 0.0125], range(5), 10 ** 6)
        summary = scaling_summary(rows)
        slope = summary["slope_vs_inv_eps"][0]["slope"]
        medians = [m["median"] for m in sorted(summary["median_calls"], key=lambda m: -m["eps"])]
        in_band = 2.0 <= slope <= 4.0
        elapsed = time.perf_counter() - t0
        report("11", "scaling trend (soft)", in_band,
               f"slope {slope:.3f} vs band [2, 4]; median calls {medians}; "
               f"{'in band' if in_band else 'warn-only, outside band'}; {elapsed:.1f}s")
        if not in_band:
            warnings.warn(f"oracle-call slope vs 1/eps is {slope:.3f}, outside [2, 4]")
        assert all(r.success for r in rows) and math.isfinite(slope)

    def test_12_determinism(self, report, tmp_path, capsys):
        d = tmp_path / "out"
        d.mkdir()

        def files():
            # same paths both times: run documents embed their config
            main(["run", "--instance", "nemirovski:T=16,alpha=0.0069", "--algo", "ingd-rand", "--seed", "7",
                  "--trace", str(d / "trace.jsonl"), "--cert", str(d / "run.json")])
            main(["run", "--instance", "tree1d:N=6,seed=3,scaled=1", "--algo", "gd-ingd-rand", "--delta", "0.1",
                  "--eps", "0.2", "--seed", "5", "--trace", str(d / "trace2.jsonl"), "--cert", str(d / "run2.json")])
            main(["certify", "--instance", "mahalanobis:eps=0.5,d=12", "--delta", "0.3", "--eps", "0.5",
                  "--k", "200", "--seed", "9", "--cert", str(d / "cert.json")])
            main(["scaling", "--instance", "quadratic", "--instance", "nemirovski:T=8", "--algo", "ingd-det",
                  "--algo", "ingd-rand", "--deltas", "0.1,0.2", "--epss", "0.2", "--seeds", "2",
                  "--csv", str(d / "rows.csv")])
            out = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
            # wall_time_ms is a measurement, not a function of the seed
            out["rows.csv"] = b"\n".join(line.rsplit(b",", 1)[0] for line in out["rows.csv"].splitlines())
            return out

        a, b = files(), files()
        capsys.readouterr()
        same = [k for k in a if a[k] == b[k]]
        ok = len(same) == len(a) == 6 and all(a.values())
        report("12", "determinism", ok,
               f"{len(same)}/{len(a)} artifacts byte-identical (traces, certificates, CSV rows without wall time)")
        assert ok
