"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script. The
Monte Carlo criteria (2 and 3) use the Weibull(1, 0.4), d = 2, a = 1
regime; their pre-build long-run values are recorded in the project notes.
"""
import itertools
import math
import sys
import time

import numpy as np
import pytest

import heavyldp as H

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}

TITLES = {
    1: "rate-function exactness",
    2: "normalized exceedance ratio near -1 (n = 10, 30, 100)",
    3: "single big jump frequency (eps = 0.5)",
    4: "contraction consistency",
    5: "ceding optimality against the grid oracle",
    6: "reinsurer strategy",
    7: "subexponential ratio",
    8: "assumption checker",
    9: "sampler laws",
    10: "lognormal no-improvement regime",
}


def record(k: int, ok: bool, elapsed: float, limit: float, detail: str):
    ok = ok and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {TITLES[k]} ({elapsed:.1f}s / <{limit:g}s) {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


WEIBULL_04 = H.IncrementSpec(H.RadiusDistribution(H.weibull(1.0, 0.4)), H.uniform_directions(2))
MC_SEED = 20261014


def test_criterion_01_rate_exactness():
    t = time.perf_counter()
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1000, 3)) * rng.uniform(0, 10, (1000, 1))
    worst = 0.0
    for beta in (0.3, 0.5, 0.9):
        rf = H.RateFunction.from_exponent(H.weibull(1.0, beta))
        got = rf(x)
        want = np.array([math.sqrt(math.fsum(v * v for v in row)) ** beta for row in x])
        worst = max(worst, float(np.max(np.abs(got - want))))
    lg = H.RateFunction.from_exponent(H.lognormal_type(2.0))
    lg_ok = lg(np.zeros(2)) == 0.0 and lg([1e-9, 0]) == 1.0 and np.all(lg(x) == 1.0)
    record(1, worst <= 1e-12 and lg_ok, time.perf_counter() - t, 1,
           f"max |I - |x|^beta| = {worst:.1e}; lognormal jump ok = {bool(lg_ok)}")


@pytest.mark.slow
def test_criterion_02_exceedance_ratio():
    t = time.perf_counter()
    ratios = {}
    for n in (10, 30, 100):
        est = H.estimate_exceedance(WEIBULL_04, H.Norm(), n, 1.0, 10**6, MC_SEED)
        assert est.hits >= 100
        ratios[n] = est.ratio
    in_band = all(abs(r + 1) <= 0.4 for r in ratios.values())
    dev = [abs(ratios[n] + 1) for n in (10, 30, 100)]
    trend = dev[0] >= dev[1] >= dev[2]
    detail = ", ".join(f"n={n}: {r:.4f}" for n, r in ratios.items())
    record(2, in_band and trend, time.perf_counter() - t, 300,
           f"ratios {detail}; in -1 +/- 0.4: {in_band}; |ratio+1| nonincreasing: {trend}")


@pytest.mark.slow
def test_criterion_03_big_jump():
    t = time.perf_counter()
    freq = {}
    for n in (10, 30, 100):
        res = H.big_jump_diagnostic(WEIBULL_04, [1.0, 0.0], n, 1.0, 0.5, 10**6, MC_SEED)
        assert res.status == "ok" and res.exceed_count >= 30
        freq[n] = res.conditional_freq
    floor = freq[30] >= 0.8
    trend = freq[10] <= freq[30] <= freq[100]
    detail = ", ".join(f"n={n}: {f:.4f}" for n, f in freq.items())
    record(3, floor and trend, time.perf_counter() - t, 300,
           f"freq {detail}; n=30 >= 0.8: {floor}; nondecreasing: {trend}")


def test_criterion_04_contraction():
    t = time.perf_counter()
    m = H.EllipsoidMap(np.array([[2.0, 0.5], [0.5, 1.0]]))
    mapped_spec = H.IncrementSpec(WEIBULL_04.radius, WEIBULL_04.direction, m)
    plain = H.simulate_sharded(WEIBULL_04, 30, 10**4, seed=4)
    ell = H.simulate_sharded(mapped_spec, 30, 10**4, seed=4)
    pushed = m.forward(plain.s_n)
    rel = float(np.max(np.linalg.norm(ell.s_n - pushed, axis=1) / np.linalg.norm(pushed, axis=1)))
    sets = [H.BallComplement(1.0), H.HalfSpace([0.6, 0.8], 0.8), H.Cone(0.7, [H.SphereCap([0, 1], 0.5)])]
    same = []
    for inner in sets:
        a = H.estimate_set_probability(mapped_spec, H.Mapped(inner, m), 30, 10**4, seed=4).hits
        b = H.estimate_set_probability(WEIBULL_04, inner, 30, 10**4, seed=4).hits
        same.append((a, b))
    ok = rel <= 1e-10 and all(a == b for a, b in same)
    record(4, ok, time.perf_counter() - t, 30, f"max relative deviation {rel:.1e}; hits (mapped, plain) {same}")


def test_criterion_05_ceding_optimality():
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    step_levels = 20
    worst_obj = worst_prem = -math.inf
    worst_identity = 0.0
    ties = 0
    for i in range(50):
        d = 2 + i % 2
        a = rng.uniform(0.5, 5.0, d)
        p = rng.uniform(0.5, 2.0, d)
        Q = H.ceding_optimal_Q(np.diag(a))
        obj = H.objective(Q, a, 1.0)
        prem = H.premium(Q, p)
        worst_identity = max(worst_identity, float(np.max(np.abs(a * Q.q - a.min()) / a.min())))
        grid = np.arange(1, step_levels + 1) / step_levels
        cand = np.array(list(itertools.product(grid, repeat=d)))
        cand = cand[cand.max(axis=1) == 1.0]
        g_obj = np.min(1.0 / (a * cand), axis=1)
        g_prem = ((1.0 - cand) * p).sum(axis=1)
        worst_obj = max(worst_obj, float(g_obj.max() - obj))
        tied = g_obj >= obj - 1e-6
        ties += int(tied.sum())
        if tied.any():
            worst_prem = max(worst_prem, float(prem - g_prem[tied].min()))
        bf = H.brute_force_optimal(a, 1.0, 1 / step_levels, p)
        assert H.objective(bf, a, 1.0) <= obj + 1e-9
    ok = worst_obj <= 1e-9 and worst_prem <= 1e-9 and worst_identity <= 4 * np.finfo(float).eps
    record(5, ok, time.perf_counter() - t, 60,
           f"max(grid obj - closed form) = {worst_obj:.2e}; premium excess over {ties} ties = {worst_prem:.2e}; "
           f"|AQ - min a I| rel = {worst_identity:.1e}")


def test_criterion_06_reinsurer():
    t = time.perf_counter()
    A = np.diag([1.0, 2.0])
    checks = []
    for c in (1.01, 2.0, 10.0):
        Q = H.reinsurer_Q(A, c)
        rep = H.improvement_check(Q, A, 1.0, 0.5)
        checks.append(
            bool(np.all((Q.q > 0) & (Q.q < 1))) and rep.objective == c * 1.0
            and rep.exponent_after < rep.exponent_before and rep.improved
        )
    try:
        H.reinsurer_Q(A, 1.0)
        rejected = False
    except H.ConstraintError:
        rejected = True
    record(6, all(checks) and rejected, time.perf_counter() - t, 1,
           f"c in (1.01, 2, 10) ok = {checks}; c = max 1/a_j rejected = {rejected}")


def test_criterion_07_subexponential_ratio():
    t = time.perf_counter()
    parts, ok = [], True
    xs = 10.0 ** np.arange(3, 9)
    for beta in (0.4, 0.5, 0.9):
        d = H.RadiusDistribution(H.weibull(1.0, beta))
        vals = [H.subexp_ratio(d, x) for x in xs]
        mono = all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] > 1
        close = abs(vals[-1] - 1) <= 0.05
        ok &= mono and close
        parts.append(f"beta={beta}: r(1e8)={vals[-1]:.5f} monotone={mono} within 0.05={close}")
    record(7, ok, time.perf_counter() - t, 1, "; ".join(parts))


def test_criterion_08_assumption_checker():
    t = time.perf_counter()
    grid = np.logspace(0, 6, 25)
    families = [
        H.weibull(1.0, 0.5),
        H.lognormal_type(2.0),
        H.stretched_exp(0.7, 3.0),
        H.piecewise_concave([(1, 1), (10, 4), (100, 10), (1000, 25)], alpha=1.0),
    ]
    passes = [H.check_assumption_A1(e, grid).passed for e in families]
    bad = H.check_assumption_A1(H.piecewise_concave([(1, 1), (10, 2), (100, 20), (1000, 30)]), grid)
    ok = all(passes) and not bad.concave and bad.concave_witness == 10.0
    record(8, ok, time.perf_counter() - t, 1,
           f"built-ins pass = {passes}; violation detected = {not bad.concave} at witness {bad.concave_witness}")


def test_criterion_09_sampler_laws():
    t = time.perf_counter()
    n = 10**6
    bound = 5 / math.sqrt(n)
    devs = {}
    for name, exp in [("weibull", H.weibull(1.0, 0.5)), ("lognormal", H.lognormal_type(2.0)),
                      ("stretched", H.stretched_exp(0.7, 3.0))]:
        dist = H.RadiusDistribution(exp)
        r = np.sort(H.sample_radius(dist, np.random.default_rng(9), n))
        grid = np.linspace(*np.quantile(r, [0.001, 0.999]), 100)
        emp = 1.0 - np.searchsorted(r, grid, side="right") / n
        devs[name] = float(np.max(np.abs(emp - dist.tail(grid))))
    means = {}
    laws = {"uniform": H.uniform_directions(2),
            "caps": H.cap_mixture(2, [([1, 1], 0.4, 1.0), ([-1, -1], 0.4, 1.0)], base_weight=0.5)}
    for name, law in laws.items():
        u = H.sample_direction(law, np.random.default_rng(10), n)
        means[name] = float(np.linalg.norm(u.mean(axis=0)))
    ok = max(devs.values()) <= bound and max(means.values()) <= 0.005
    record(9, ok, time.perf_counter() - t, 60,
           "sup tail deviation " + ", ".join(f"{k}={v:.1e}" for k, v in devs.items())
           + f" (bound {bound:.1e}); mean norm " + ", ".join(f"{k}={v:.1e}" for k, v in means.items()))


def test_criterion_10_lognormal_regime():
    t = time.perf_counter()
    A = np.diag([1.0, 2.0])
    rep = H.improvement_check(H.ceding_optimal_Q(A), A, 1.0, H.lognormal_type(2.0))
    rep0 = H.improvement_check(H.ceding_optimal_Q(A), A, 1.0, 0.0)
    ok = rep.status == rep0.status == "no_improvement_regime" and not rep.improved
    record(10, ok, time.perf_counter() - t, 1, f"status = {rep.status}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
