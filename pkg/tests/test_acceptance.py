"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy import optimize

from conftest import basis_enumeration_scale
from gluskin import cli, records
from gluskin import experiments as ex
from gluskin import measure as ms
from gluskin import optimizer as opt
from gluskin.lp import l1_membership_scale
from gluskin.polytope import CrossPolytope, decompose_alpha, random_coefficient_matrix, verify_decomposition_inclusion
from gluskin.sampling import Seed, normals


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_01_measure_oracle_agreement(report):
    t0 = time.perf_counter()
    inside = {}
    for n in (1, 2, 4, 8):
        # h with oracle value 0.2
        h = optimize.brentq(lambda x: ms.l1_ball_measure_oracle(n, x) - 0.2, 1e-3, 4.0 * n, xtol=1e-12)
        truth = ms.l1_ball_measure_oracle(n, h)
        P = CrossPolytope.standard(n)
        hits = 0
        for s in range(100):
            est = ms.gaussian_measure_mc(P, h, 10 ** 5, Seed(s, n))
            hits += est.ci_low <= truth <= est.ci_high
        inside[n] = hits
    wall = time.perf_counter() - t0
    ok = all(v >= 95 for v in inside.values()) and wall <= 60
    report(1, ok, f"runs inside 99% CI per n {inside}, {wall:.1f} s")


def test_02_simple_bound(report):
    t0 = time.perf_counter()
    out = {}
    for r in (4, 6):
        for h in (0.25, 0.5):
            out[(r, h)] = ex.check_simple_bound(8, r, h, 50, 10 ** 5, Seed(2, r * 10 + int(4 * h)))
    wall = time.perf_counter() - t0
    worst = max(v["max_excess"] for v in out.values())
    ok = all(v["passed"] for v in out.values()) and wall <= 120
    report(2, ok, f"200 polytopes, max(ci_high - bound) = {worst:.2e}, {wall:.1f} s")


def test_03_crosspol2_bound(report):
    out = {}
    for delta in (0.25, 0.5):
        for k in (4, 8):
            for h in (0.25, 0.5):
                out[(delta, k, h)] = ex.check_crosspol2_bound(8, k, h, delta, 50, 10 ** 5,
                                                              Seed(3, k * 100 + int(4 * delta) * 10 + int(4 * h)))
    viol = sum(v["violations"] for v in out.values())
    worst = max(v["max_excess"] for v in out.values())
    report(3, viol == 0, f"{50 * len(out)} polytopes, {viol} violations, max excess {worst:.2e}")


def test_04_tilt_decay(report):
    c = opt.CALIBRATED_C_TILT
    rows = ex.tilt_family_estimates([16], [4, 8, 12], samples=10 ** 6, seed=1)
    k = np.array([r["k"] for r in rows], dtype=float)
    y = np.log([r["estimate"] for r in rows])
    slope, icpt = np.polyfit(k, y, 1)
    r2 = 1.0 - np.sum((y - (slope * k + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    dominated = all(2.0 * math.exp(-c * r["k"]) >= r["ci_high"] for r in rows)
    ok = slope <= -c and dominated and r2 >= 0.99
    report(4, ok, f"slope {slope:.4f} vs -c_tilt {-c}, R^2 {r2:.4f}, 2e^(-ck) dominates: {dominated}")


def test_05_symmetrization(report):
    out = [ex.check_symmetrization(n, r, 50, 10 ** 5, Seed(5, 10 * n + r)) for n in (2, 3) for r in range(1, n)]
    fails = sum(v["failures"] for v in out)
    report(5, fails == 0, f"{50 * len(out)} instances, {fails} failures, "
                          f"min margin {min(v['min_margin'] for v in out):.4f}")


def test_06_lp_correctness(report):
    rng = np.random.default_rng(6)
    err_enum = 0.0
    for _ in range(200):
        m = int(rng.integers(3, 7))
        y = rng.standard_normal((3, m))
        x = rng.standard_normal(3)
        err_enum = max(err_enum, abs(l1_membership_scale(x, y).scale - basis_enumeration_scale(x, y)))
    err_basis = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 21))
        y = rng.standard_normal((n, n))
        x = rng.standard_normal(n)
        want = np.abs(np.linalg.solve(y, x)).sum()
        err_basis = max(err_basis, abs(l1_membership_scale(x, y).scale - want) / max(1.0, want))
    ok = err_enum <= 1e-9 and err_basis <= 1e-9
    report(6, ok, f"max error vs enumeration {err_enum:.1e}, vs basis solve {err_basis:.1e}")


def test_07_exponent_recovery(report):
    t0 = time.perf_counter()
    fit = opt.exponent_fit([9900.0, 10000.0])
    wall = time.perf_counter() - t0
    ok = abs(fit.slope - 5 / 9) <= 0.01 and abs(fit.s_tilde_slope - 8 / 9) <= 0.01 and wall <= 5
    report(7, ok, f"rho slope {fit.slope:.5f} (5/9 = {5 / 9:.5f}), s~ slope {fit.s_tilde_slope:.5f} "
                  f"(8/9 = {8 / 9:.5f}), {wall:.2f} s")


def test_08_tail_sums(report):
    p = opt.feasible_parameters(math.log(1e4))
    t = opt.check_tail_sums(p)
    ok = t.ok and t.exact and t.log_total <= math.log(0.5)
    report(8, ok, f"log sum1 {t.log_sum1:.2f}, log sum2 {t.log_sum2:.2f}, "
                  f"log total {t.log_total:.2f}, slack {t.slack:.2f}")


def test_09_discretization_slack(report):
    t0 = time.perf_counter()
    n = 20
    rec = ex.run_discretization_slack(n, 8000, float(n) ** -3, math.sqrt(n), 100, Seed(9))
    wall = time.perf_counter() - t0
    ok = rec.empirical_rate >= 0.99 and wall <= 180
    report(9, ok, f"rate {rec.empirical_rate} (max slack {rec.extra['max_slack']:.4f}), {wall:.1f} s")


def test_10_span_distance(report):
    rec = ex.run_span_distance_experiment(60, 40, 10, 10.0, 0.5, np.eye(40), 200, Seed(10))
    report(10, rec.empirical_rate >= 0.99, f"event frequency {rec.empirical_rate} over 200 trials")


def test_11_decomposition(report):
    gamma = normals(Seed(11, 1), 6 * 60).reshape(6, 60)
    failures = 0
    worst = 0.0
    for s in range(1000):
        A = random_coefficient_matrix(60, 6, Seed(11, 2).child(s))
        alpha = (0.05, 0.1, 0.2, 0.3, 0.5)[s % 5]
        sp = decompose_alpha(A, alpha)
        a, f1, f2 = A.entries, sp.f1.entries, sp.f2.entries
        scale = verify_decomposition_inclusion(A, alpha, gamma)
        worst = max(worst, scale)
        good = (np.array_equal(f1 + f2, a) and not np.any((f1 != 0) & (f2 != 0))
                and np.all(np.count_nonzero(f1, axis=0) <= 1 / alpha)
                and np.all(np.linalg.norm(f2, axis=0) <= math.sqrt(alpha))
                and scale <= 2 + 1e-9)
        failures += not good
    report(11, failures == 0, f"1000 matrices, {failures} failures, worst inclusion scale {worst:.6f}")


REPLAY_RUNS = [
    ["sample", "--n", 4, "--m", 12, "--directions", 200, "--bm-restarts", 1],
    ["measure", "--family", "l1ball", "--n", 4, "--h", 2.0, "--samples", 30000],
    ["measure", "--family", "gluskin", "--n", 3, "--m", 9, "--samples", 30000],
    ["measure", "--family", "tail", "--n", 8, "--k", 4, "--h", 8.0, "--samples", 30000],
    ["verify-lemma", "--name", "span-distance", "--n", 20, "--u", 12, "--k", 4, "--tau", 2.0, "--delta", 0.5,
     "--trials", 20],
    ["verify-lemma", "--name", "discretization-slack", "--n", 6, "--m", 216, "--trials", 10],
    ["verify-lemma", "--name", "event-e1", "--n", 4, "--m", 64, "--alpha", 0.25, "--s", 4, "--s-tilde", 4,
     "--i2-size", 2, "--trials", 5],
    ["verify-lemma", "--name", "event-e2", "--n", 4, "--m", 64, "--alpha", 0.25, "--s-tilde", 1.5, "--delta", 0.5,
     "--tau", 1.0, "--i2-size", 2, "--trials", 5],
    ["verify-lemma", "--name", "simple-bound", "--n", 6, "--r", 3, "--h", 0.5, "--polytopes", 4,
     "--samples", 20000],
    ["verify-lemma", "--name", "crosspol2-bound", "--n", 6, "--k", 4, "--h", 0.5, "--delta", 0.5,
     "--polytopes", 4, "--samples", 20000],
    ["verify-lemma", "--name", "symmetrization", "--n", 3, "--r", 1, "--polytopes", 4, "--samples", 20000],
    ["optimize", "--log-n", 100],
    ["optimize", "--log-n", 100, "--sweep", 5],
    ["pipeline", "--n", 3, "--samples", 500, "--matrices", 2],
    ["calibrate", "--n-list", "8", "--k-list", "2,4", "--samples", 30000, "--trials", 2],
]


def test_12_replay_determinism(report, tmp_path, monkeypatch):
    monkeypatch.setenv(records.OUTPUT_DIR_ENV, str(tmp_path))
    bad = []
    for i, argv in enumerate(REPLAY_RUNS):
        path = tmp_path / f"run{i}.json"
        code = cli.main([str(a) for a in argv] + ["--seed", str(12 + i), "--workers", "1", "--output", str(path)])
        if code == 2 or not path.exists():
            bad.append((" ".join(map(str, argv[:3])), "run"))
            continue
        for w in (1, 3):
            if cli.replay(str(path), workers=w, out=open("/dev/null", "w")) != 0:
                bad.append((" ".join(map(str, argv[:3])), w))
    report(12, not bad, f"{len(REPLAY_RUNS)} experiments replayed at 1 and 3 workers, mismatches {bad}")
