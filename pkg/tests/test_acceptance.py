"""Desk-scale acceptance runs, one test per criterion.

Each criterion function takes a worker count and returns
``(passed, detail, csv_text)``.  The last test reruns all of them with 8
workers and compares the CSV text byte for byte against the 1-worker run.
Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy import integrate

from conftest import ACCEPTANCE_LINES
from logtransport import cocycle, equidistribution, quantum, transport
from logtransport.potentials import Potential
from logtransport.torus import Dynamics, continued_fraction, golden_mean

pytestmark = pytest.mark.slow

F4 = Potential.cosine(4.0)
GOLDEN = Dynamics.shift([golden_mean()], dioph_class="DC", A=1.0, c=0.3)
SEED = 20240611
HALF_DECADES = [float(f"{10 ** (e / 2):.6g}") for e in range(4, 13)]

_results: dict = {}


def pmap(fn, items, workers):
    if workers <= 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def plain_product(f, d, x, z, n):
    from logtransport.potentials import evaluate
    M = np.eye(2, dtype=complex)
    for v in evaluate(f, d.iterates(x, np.arange(1, n + 1))):
        M = np.array([[v - z, -1.0], [1.0, 0.0]]) @ M
    return M


# -- criteria ---------------------------------------------------------------------------------


def c1_cocycle(workers):
    d = Dynamics.shift([golden_mean()])
    rng = np.random.default_rng(SEED)
    worst_rel, worst_det, worst_id = 0.0, 0.0, 0.0
    for n in (1, 10, 50, 100, 200, 300):
        for x in rng.random((4, 1)) - 0.5:
            M = plain_product(F4, d, x, 0.3, n)
            A = cocycle.transfer(F4, d, x, 0.3, n)
            worst_rel = max(worst_rel, np.linalg.norm(A.matrix() - M, 2) / np.linalg.norm(M, 2))
    for n in (10, 100, 1000, 10 ** 4, -10 ** 4):
        A = cocycle.transfer(F4, d, [0.2], 0.7, n)
        worst_det = max(worst_det, abs(A.det - 1))
    for k, j in [(1, 1), (7, 50), (50, 50), (33, 12), (50, 1)]:
        x = rng.random(1) - 0.5
        lhs = cocycle.transfer(F4, d, x, 0.1, k + j)
        rhs = cocycle.transfer(F4, d, d.iterates(x, [j])[0], 0.1, k) @ cocycle.transfer(F4, d, x, 0.1, j)
        worst_id = max(worst_id, np.linalg.norm(lhs.matrix() - rhs.matrix(), 2) / np.linalg.norm(rhs.matrix(), 2))
    ok = worst_rel < 1e-10 and worst_det < 1e-9 and worst_id < 1e-10
    return ok, f"rel={worst_rel:.2e} det={worst_det:.2e} identity={worst_id:.2e}", \
        table(["rel", "det", "identity"], [(worst_rel, worst_det, worst_id)])


def c2_lyapunov(workers):
    ests = [cocycle.lyapunov(F4, GOLDEN, 0.0, n, 10 ** 4, SEED, workers) for n in (50, 100, 200)]
    last = ests[-1]
    mono = all(b.mean <= a.mean + 2 * math.hypot(a.stderr, b.stderr) for a, b in zip(ests, ests[1:]))
    ok = last.mean >= math.log(2) - 0.02 and mono
    return ok, f"L_200={last.mean:.4f} (ln2-0.02={math.log(2) - 0.02:.4f}) monotone={mono}", \
        table(["n", "mean", "stderr"], [(e.n, e.mean, e.stderr) for e in ests])


def c3_normalization(workers):
    rng = np.random.default_rng(SEED)
    cases = [(int(rng.integers(4, 65)), float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.5, 5.0)),
              float(rng.random() - 0.5)) for _ in range(5)]

    def one(case):
        L, T, lam, x = case
        op = quantum.build(Potential.cosine(lam), GOLDEN, [x], L)
        a = quantum.amplitudes(op, T).a
        ref = quantum.time_average_oracle(op, T)
        return L, T, lam, float(np.max(np.abs(a - ref)) / np.max(np.abs(ref))), abs(math.fsum(a) - 1)

    rows = pmap(one, cases, workers)
    grid = pmap(lambda T: quantum.adaptive_profile(F4, GOLDEN, [0.0], T), HALF_DECADES, workers)
    mass = max([r[4] for r in rows] + [abs(p.total() - 1) for p in grid])
    rel = max(r[3] for r in rows)
    ok = rel < 1e-6 and mass < 1e-8
    return ok, f"oracle rel={rel:.2e} mass error={mass:.2e}", table(["L", "T", "lambda", "rel", "mass"], rows)


def c4_ballistic(workers):
    Ts = [10.0, 20.0, 40.0, 80.0]
    profs = pmap(lambda T: quantum.adaptive_profile(Potential.zero(), GOLDEN, [0.0], T, L_start=16), Ts, workers)
    m = [quantum.moments(p, 2) for p in profs]
    slope = float(np.polyfit(np.log(Ts), np.log(m), 1)[0])
    return abs(slope - 2.0) <= 0.1, f"slope={slope:.4f}", \
        table(["T", "moment", "L"], [(T, v, p.L) for T, v, p in zip(Ts, m, profs)]) + f"slope,{slope!r}\n"


def c5_log_transport(workers):
    profs = pmap(lambda T: quantum.adaptive_profile(F4, GOLDEN, [0.0], T), HALF_DECADES, workers)
    m = np.array([quantum.moments(p, 2) for p in profs])
    est = transport.fit_beta_log(transport.MomentSeries(2.0, HALF_DECADES, m))
    ratio = m / np.log(HALF_DECADES) ** (2 * 2.5)
    C = float(ratio.max())
    L_max = max(p.L for p in profs)
    ok = math.isfinite(est.beta) and est.residual < 0.2 and math.isfinite(C) and L_max <= 512
    return ok, f"beta_log={est.beta:.2e} residual={est.residual:.1e} C={C:.3g} L_max={L_max}", \
        table(["T", "moment", "ratio", "L"], [(T, v, r, p.L) for T, v, r, p in zip(HALF_DECADES, m, ratio, profs)])


def c6_dt(workers):
    Ts, gamma = [1e2, 1e3, 1e4, 1e5], 2.5
    rows = []
    for T in Ts:
        I = transport.dt_integral(F4, GOLDEN, [0.0], T, gamma, workers=workers)
        B = transport.dt_outside_bound(F4, GOLDEN, [0.0], T, gamma, integral=I)
        prof = quantum.adaptive_profile(F4, GOLDEN, [0.0], T, min_L=I.N_used + 1)
        P = quantum.outside_probability(prof, I.N_used).P
        rows.append((T, I.N_used, I.log_value, B.log_bound, P))
    slope = float(np.polyfit(np.log(Ts), [r[2] for r in rows], 1)[0])
    dominated = all(P <= 1e3 * math.exp(lb) for *_, lb, P in rows)
    return slope <= -1 and dominated, f"slope={slope:.1f} P<=1e3*bound on all T: {dominated}", \
        table(["T", "N", "log_integral", "log_bound", "P"], rows) + f"slope,{slope!r}\n"


def _L_ref(workers):
    if "L_ref" not in _results:
        _results["L_ref"] = {}
    if workers not in _results["L_ref"]:
        _results["L_ref"][workers] = cocycle.lyapunov_reference(F4, GOLDEN, 0.0, 4096, SEED, workers=workers)
    return _results["L_ref"][workers]


def c7_deviation(workers):
    L = _L_ref(workers)
    rows = []
    for k in (100, 200):
        m = cocycle.deviation_measure(F4, GOLDEN, 0.0, k, 0.9, L, 10 ** 4, SEED, workers)
        rows.append((k, m.measure, m.stderr))
    ok = all(v >= 0.5 - 3 * s for _, v, s in rows)
    return ok, " ".join(f"k={k}: {v:.3f}+-{s:.3f}" for k, v, s in rows), table(["k", "measure", "stderr"], rows)


def c8_inclusion(workers):
    L = _L_ref(workers)
    rows = []
    for k in (50, 100):
        z_edge = math.exp(-0.9 * k * L / F4.sup_norm_bound)
        r = cocycle.inclusion_check(F4, GOLDEN, 0.0, 0.999j * z_edge, k, 0.9, L, num_samples=1000, seed=SEED)
        rows.append((k, r.violations, r.tested, r.N0, r.N1, r.sup_error))
    ok = all(r[1] == 0 for r in rows)
    return ok, " ".join(f"k={k}: {v}/{t} violations" for k, v, t, *_ in rows), \
        table(["k", "violations", "tested", "N0", "N1", "sup_error"], rows)


def c9_equidistribution(workers):
    rows, ok = [], True
    cf = continued_fraction(golden_mean(), 20)
    for n in (5, 8, 11):
        r = equidistribution.first_visit_check(cf, n, (0.1, 0.1 + 1.5 / cf.q(n)))
        rows.append(("first-visit", n, r.max_first_hit, r.bound))
        ok &= r.passed
    multi = Dynamics.shift([golden_mean(), math.sqrt(2) - 1], dioph_class="DC", A=2.0, c=0.05)
    for d, x in ((GOLDEN, [0.0]), (multi, [0.0, 0.0])):
        for N in (10 ** 3, 10 ** 4, 10 ** 5):
            b = equidistribution.fejer_hit_bound(d, x, N ** (-1 / (d.dim + d.frequency.A)), N)
            rows.append((f"fejer-{d.dim}d", N, b.lhs, b.rhs))
            ok &= b.lhs <= b.rhs
    worst = 0.0
    for R in (1, 4, 16, 64):
        mean, _ = integrate.quad(lambda t: equidistribution.fejer_kernel(R, t), -math.pi, math.pi, limit=500,
                                 points=[0.0], epsabs=1e-13, epsrel=1e-13)
        xs = np.linspace(-math.pi, math.pi, 1001)
        gap = float(np.max(np.abs(equidistribution.fejer_kernel(R, xs) - equidistribution.fejer_series(R, xs))))
        worst = max(worst, abs(mean / (2 * math.pi) - 1), gap)
        ok &= bool(np.all(equidistribution.fejer_kernel(R, xs) >= 0))
    rows.append(("kernel", 0, worst, 1e-8))
    ok &= worst < 1e-8
    return ok, f"{len(rows) - 1} bounds checked, kernel identity error={worst:.1e}", \
        table(["check", "level", "lhs", "rhs"], rows)


def c10_first_hit(workers):
    L = _L_ref(workers)
    k = 100
    j_max = math.ceil(k ** 2.1)
    phases = np.random.default_rng(SEED).random((100, 1)) - 0.5
    hits = pmap(lambda x: cocycle.growth_first_hit(F4, GOLDEN, x, 0.0, k, 0.8, L, j_max), list(phases), workers)
    found = sum(h is not None for h in hits)
    return found == 100, f"{found}/100 phases hit, max j={max(h or 0 for h in hits)} (j_max={j_max})", \
        table(["phase", "j"], [(float(x[0]), -1 if h is None else h) for x, h in zip(phases, hits)])


CRITERIA = [
    (1, "cocycle correctness", c1_cocycle, 10),
    (2, "Lyapunov benchmark", c2_lyapunov, 30),
    (3, "normalization and evolution oracle", c3_normalization, 60),
    (4, "ballistic control", c4_ballistic, 300),
    (5, "log-transport envelope", c5_log_transport, 1200),
    (6, "DT criterion decay", c6_dt, 1800),
    (7, "deviation-set measure", c7_deviation, 120),
    (8, "inclusion chain", c8_inclusion, 300),
    (9, "equidistribution suite", c9_equidistribution, 120),
    (10, "first-hit growth", c10_first_hit, 300),
]


def run(idx, workers):
    key = (idx, workers)
    if key not in _results:
        num, name, fn, limit = CRITERIA[idx - 1]
        t0 = time.perf_counter()
        ok, detail, text = fn(workers)
        elapsed = time.perf_counter() - t0
        _results[key] = (bool(ok), detail, text, elapsed, limit)
    return _results[key]


@pytest.mark.parametrize("idx", [c[0] for c in CRITERIA], ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_criterion(idx):
    ok, detail, _, elapsed, limit = run(idx, 1)
    in_time = elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    line = f"criterion {idx:2d} {status}  {CRITERIA[idx - 1][1]}: {detail} [{elapsed:.1f}s, limit {limit}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert in_time, line


def test_criterion11_determinism():
    t0 = time.perf_counter()
    mismatched = [idx for idx, *_ in CRITERIA if run(idx, 1)[2] != run(idx, 8)[2]]
    status = "PASS" if not mismatched else "FAIL"
    line = (f"criterion 11 {status}  determinism: CSVs from 1 and 8 workers "
            f"{'identical' if not mismatched else f'differ for {mismatched}'} [{time.perf_counter() - t0:.1f}s]")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not mismatched
