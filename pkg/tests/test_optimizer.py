import math

import mpmath
import numpy as np
import pytest

from gluskin import optimizer as opt
from gluskin.errors import Infeasible, InvalidParameters


def shape(log_n, x, **kw):
    return opt.ParameterSet.from_s_tilde(log_n, x, **kw)


def slack_of(p, name):
    return {n: s for n, _, s in opt.constraint_check(p)}[name]


def test_solution_shape_satisfies_constraints():
    p = shape(100.0, 800.0 / 9.0)
    bad = [(n, s) for n, ok, s in opt.constraint_check(p) if not ok]
    assert not bad


def test_small_s_tilde_violates():
    L = 100.0
    p = shape(L, 2 * math.log(L) - 0.5)
    assert slack_of(p, "4 s~ >= 4 log^2 n") < 0


def test_slacks_are_continuous():
    L, x = 100.0, 85.0
    a = opt.constraint_check(shape(L, x))
    b = opt.constraint_check(shape(L, x + math.log(1.01)))
    for (_, _, s1), (_, _, s2) in zip(a, b):
        assert abs(s1 - s2) <= 5 * math.log(1.01)


def test_tau_formula():
    L = 50.0
    p = shape(L, 40.0)
    t = opt.tau_formula(p).log_value
    mpmath.mp.dps = 60
    n = mpmath.e ** 50
    st = mpmath.e ** 40
    alpha = n * mpmath.log(n) / st ** 2
    want = mpmath.log(mpmath.log(n) * max(mpmath.sqrt(n / st), mpmath.sqrt(n / (st ** 2 * alpha))))
    assert t == pytest.approx(float(want), abs=1e-10)
    # s~^2 alpha = s~ puts both arguments level
    q = shape(L, 30.0, log_alpha=-30.0)
    a = 0.5 * (q.log_n - q.log_s_tilde)
    assert opt.tau_formula(q).log_value == pytest.approx(math.log(L) + a)
    # s~ alpha >= 1: log n sqrt(n / s~)
    q = shape(L, 30.0, log_alpha=-20.0)
    assert opt.tau_formula(q).log_value == pytest.approx(math.log(L) + 0.5 * (L - 30.0))


def test_alpha_formula():
    L = 100.0
    c = opt.default_constants()
    x = 0.5 * (math.log(2 * c.C_prime) + L + math.log(L))
    a = opt.alpha_formula(shape(L, x))
    assert a.log_value == pytest.approx(-math.log(2), abs=1e-12)
    assert opt.alpha_formula(shape(L, x - 0.1)).note == "exceeds 1/2"
    a = opt.alpha_formula(shape(L, 8 * L / 9))
    assert a.log_value == pytest.approx(-7 * L / 9 + math.log(L), abs=1e-9)
    assert slack_of(shape(L, 80.0), "s~^2 alpha / n >= C log n") == pytest.approx(math.log(c.C_prime / c.C_p2))


def test_rho_formula_branches():
    L = 100.0
    p = shape(L, 80.0, log_s=99.0)
    huge = shape(L, 80.0, log_s=2 * L)
    assert opt.rho_formula(huge).note == opt.RHO_BRANCHES[0]
    q = shape(L, 80.0, log_alpha=-80.0)
    b = opt.rho_branches(q)
    assert b[1] == pytest.approx(b[2], abs=1e-12)
    assert p.log_rho <= opt.rho_formula(p).log_value + 1e-12


def test_optimum_balances_first_two_branches():
    for L in (1000.0, 10000.0):
        b = opt.rho_branches(opt.feasible_parameters(L))
        assert abs(b[0] - b[1]) <= 2 * math.log(L)


def test_tail_sums_limits():
    n = 10 ** 4
    L = math.log(n)
    p = opt.feasible_parameters(L)
    small = opt.ParameterSet(p.log_n, p.log_s, p.log_s_tilde, p.log_tau, p.log_alpha, -500.0, p.constants)
    assert opt.check_tail_sums(small).log_sum1 < -1e5
    big_s = opt.ParameterSet(p.log_n, p.log_s + 3.0, p.log_s_tilde, p.log_tau, p.log_alpha, -500.0, p.constants)
    t = opt.check_tail_sums(big_s)
    assert t.log_sum2 < opt.check_tail_sums(small).log_sum2 and t.ok


def test_tail_sum_single_term():
    n = 1000
    p = shape(math.log(n), 0.0, log_rho=-3.0)
    got = float(opt.tail_sum1_terms(p, n, [n - 1])[0])
    want = 2 * math.log(n) + (1 - p.delta) * (math.log(8) + 1 - 3.0 + p.log_tau + 0.5 * p.log_alpha)
    assert got == pytest.approx(want, abs=1e-10)


def test_tail_sums_large_n_use_sufficient_conditions():
    p = opt.feasible_parameters(100.0)
    t = opt.check_tail_sums(p)
    assert not t.exact and t.ok


def test_feasible_at_20():
    p = opt.feasible_parameters(20.0)
    assert all(s >= -opt.SLACK_TOL for _, _, s in opt.constraint_check(p))
    c = p.constants
    assert p.log_rho <= math.log(c.c_prime) + 20.0 - 0.5 * math.log(4 * c.C_s * 20.0 ** 2)


def test_doubling_c_prime():
    c = opt.default_constants()
    for L in (20.0, 100.0):
        a = opt.feasible_parameters(L, c.replace(c_prime=1e-6))
        b = opt.feasible_parameters(L, c.replace(c_prime=2e-6))
        assert not opt.rho_star(a).note.startswith("cap")
        assert b.log_rho - a.log_rho == pytest.approx(math.log(2), abs=1e-12)


def test_infeasible_small_n():
    with pytest.raises(Infeasible) as e:
        opt.feasible_parameters(math.log(16))
    assert e.value.binding
    with pytest.raises(InvalidParameters):
        opt.feasible_parameters(1.0)


def test_rho_monotone_over_grid():
    grid = np.geomspace(math.log(2000.0), 1e4, 25)
    rhos = [opt.feasible_parameters(L).log_rho for L in grid]
    assert all(b >= a for a, b in zip(rhos, rhos[1:]))


def test_exponent_slope_range():
    fit = opt.exponent_fit(np.geomspace(100.0, 1e4, 8))
    assert all(0.5 < q["slope"] < 0.6 for q in fit.points)
    fit = opt.exponent_fit([9900.0, 10000.0])
    assert abs(fit.slope - 5 / 9) <= 0.01
    assert abs(fit.s_tilde_slope - 8 / 9) <= 0.01


def test_exponent_fit_errors():
    with pytest.raises(InvalidParameters):
        opt.exponent_fit([100.0, 100.0])
    with pytest.raises(InvalidParameters):
        opt.exponent_fit([100.0])


def test_no_overflow_at_largest_n():
    p = opt.feasible_parameters(1e4)
    vals = [p.log_s, p.log_s_tilde, p.log_tau, p.log_alpha, p.log_rho]
    assert all(math.isfinite(v) for v in vals)
    assert all(math.isfinite(s) for _, _, s in opt.constraint_check(p))
