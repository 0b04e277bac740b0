"""The parameter system behind the n^{5/9} lower bound.

Every quantity is held as a natural logarithm so the system can be
evaluated at n = e^10000. Notation: L = log n, x = log s~.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import Infeasible, InvalidParameters
from .measure import CalibrationConstants

LOG_N_MAX = 1e4
SLACK_TOL = 1e-9
EXACT_TAIL_LOG_N = math.log(1e6)

# calibrate_tilt_constant([16], [4, 8, 12], samples=10**6, seed=1) -> 0.7328, rounded down
CALIBRATED_C_TILT = 0.73


def default_constants():
    return CalibrationConstants().replace(provenance_tag="calibrated", c_tilt=CALIBRATED_C_TILT)


@dataclass(frozen=True)
class FormulaValue:
    log_value: float
    note: str = ""

    @property
    def value(self):
        return math.exp(self.log_value)


@dataclass(frozen=True)
class ParameterSet:
    """m = n^3, eps = n^-3 and delta = 1/log n are implied by log_n."""

    log_n: float
    log_s: float
    log_s_tilde: float
    log_tau: float
    log_alpha: float
    log_rho: float
    constants: CalibrationConstants = field(default_factory=default_constants)

    def __post_init__(self):
        for name in ("log_n", "log_s", "log_s_tilde", "log_tau", "log_alpha", "log_rho"):
            v = getattr(self, name)
            if not math.isfinite(v) or abs(v) > 100 * LOG_N_MAX:
                raise InvalidParameters(f"{name} out of range: {v}")
        if not (0 < self.log_n <= LOG_N_MAX):
            raise InvalidParameters("need 0 < log_n <= 1e4")

    @property
    def log_m(self):
        return 3.0 * self.log_n

    @property
    def log_eps(self):
        return -3.0 * self.log_n

    @property
    def delta(self):
        return 1.0 / self.log_n

    @classmethod
    def from_s_tilde(cls, log_n, log_s_tilde, constants=None, log_s=None, log_alpha=None,
                     log_tau=None, log_rho=None):
        """Fill unspecified entries from the closed forms: s = C_s s~ log n,
        alpha and tau from their formulas, rho = largest value the
        constraints allow (see :func:`rho_star`)."""
        c = constants or default_constants()
        lL = math.log(log_n)
        if log_s is None:
            log_s = math.log(c.C_s) + log_s_tilde + lL
        stub = cls(float(log_n), float(log_s), float(log_s_tilde), 0.0, -1.0, 0.0, c)
        if log_alpha is None:
            log_alpha = alpha_formula(stub).log_value
        stub = replace(stub, log_alpha=float(log_alpha))
        if log_tau is None:
            log_tau = tau_formula(stub).log_value
        stub = replace(stub, log_tau=float(log_tau))
        if log_rho is None:
            log_rho = rho_star(stub).log_value
        return replace(stub, log_rho=float(log_rho))

    def to_dict(self):
        return {"log_n": self.log_n, "log_s": self.log_s, "log_s_tilde": self.log_s_tilde,
                "log_tau": self.log_tau, "log_alpha": self.log_alpha, "log_rho": self.log_rho,
                "constants": self.constants.to_dict()}


def alpha_formula(p):
    """alpha = C' n log n / s~^2; noted when it exceeds 1/2."""
    c = p.constants
    v = math.log(c.C_prime) + p.log_n + math.log(p.log_n) - 2.0 * p.log_s_tilde
    return FormulaValue(v, "exceeds 1/2" if v > -math.log(2.0) else "")


def tau_formula(p):
    """tau = sqrt(C_p1) log n max(sqrt(n/s~), sqrt(n/(s~^2 alpha)))."""
    a = 0.5 * (p.log_n - p.log_s_tilde)
    b = 0.5 * (p.log_n - 2.0 * p.log_s_tilde - p.log_alpha)
    v = 0.5 * math.log(p.constants.C_p1) + math.log(p.log_n) + max(a, b)
    return FormulaValue(v, "sqrt(n/s~)" if a >= b else "sqrt(n/(s~^2 alpha))")


RHO_BRANCHES = ("n/sqrt(s)", "s~^3/(n^2.5 sqrt(alpha) log n)", "s~^3.5/(n^2.5 log n)")


def rho_branches(p):
    lL = math.log(p.log_n)
    return (
        p.log_n - 0.5 * p.log_s,
        3.0 * p.log_s_tilde - 2.5 * p.log_n - 0.5 * p.log_alpha - lL,
        3.5 * p.log_s_tilde - 2.5 * p.log_n - lL,
    )


def rho_formula(p):
    """c' min of the three branches; the note names the active branch."""
    b = rho_branches(p)
    i = int(np.argmin(b))
    return FormulaValue(math.log(p.constants.c_prime) + b[i], RHO_BRANCHES[i])


def rho_caps(p):
    """Upper limits on log rho imposed by the tilt, tail-sum and rho <= n constraints."""
    c = p.constants
    return {
        "tilt": math.log(c.c_tilt) + p.log_n - math.log(4.0 * c.C_span) - 0.5 * (math.log(2.0) + p.log_s),
        "tail-sum": math.log(c.c_sum) + 2.5 * p.log_s_tilde - 2.0 * p.log_n - p.log_tau - 0.5 * p.log_alpha,
        "rho<=n": p.log_n,
    }


def rho_star(p):
    """The formula value, lowered to the caps when they bind."""
    f = rho_formula(p)
    best = f
    for name, v in rho_caps(p).items():
        if v < best.log_value:
            best = FormulaValue(v, f"cap:{name}")
    return best


def constraint_check(p):
    """[(name, satisfied, slack)] with slack = log(rhs) - log(lhs)."""
    c = p.constants
    L, lL = p.log_n, math.log(p.log_n)
    x, ls, la, lt, lr = p.log_s_tilde, p.log_s, p.log_alpha, p.log_tau, p.log_rho
    log4 = math.log(4.0)
    rows = [
        ("n >= s", L - ls),
        ("s >= 4 s~", ls - log4 - x),
        ("4 s~ >= 4 log^2 n", x - 2 * lL),
        ("s >= C s~ log n", ls - math.log(c.C_s) - x - lL),
        ("C s~ log n >= 4 C log^3 n", x - log4 - 2 * lL),
        ("s~^2 alpha / n >= C log n", 2 * x + la - L - math.log(c.C_p2) - lL),
        ("tau^2 s~^2 alpha / n >= C log^2 n", 2 * lt + 2 * x + la - L - math.log(c.C_p1) - 2 * lL),
        ("tau^2 s~ / n >= C log^2 n", 2 * lt + x - L - math.log(c.C_p1) - 2 * lL),
        ("4 C rho sqrt(2s) <= c n", math.log(c.c_tilt) + L - math.log(4 * c.C_span) - lr - 0.5 * (math.log(2) + ls)),
        ("n^2 rho tau sqrt(alpha) / s~^2.5 <= c", math.log(c.c_sum) - (2 * L + lr + lt + 0.5 * la - 2.5 * x)),
        ("alpha <= 1/2", -math.log(2) - la),
        ("tau >= C_span", lt - math.log(c.C_span)),
        ("rho <= n", L - lr),
    ]
    return [(name, slack >= -SLACK_TOL, slack) for name, slack in rows]


def _min_slack(log_n, x, constants):
    rows = constraint_check(ParameterSet.from_s_tilde(log_n, x, constants))
    name, _, slack = min(rows, key=lambda r: r[2])
    return slack, name


def _bisect(f, a, b, iters=200):
    """f(a) False, f(b) True; returns the boundary approached from the True side."""
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if f(mid):
            b = mid
        else:
            a = mid
        if b - a <= 1e-13 * max(1.0, abs(b)):
            break
    return b


def feasible_parameters(log_n, constants=None, grid=4001):
    """Parameter set maximizing rho subject to every constraint.

    The feasible values of log s~ are found on a grid over (0, log n] and the
    interval ends refined by bisection; log rho is concave in log s~ there,
    so a golden-section search locates the maximum.
    """
    if not (math.log(16.0) <= log_n <= LOG_N_MAX):
        raise InvalidParameters("need log 16 <= log_n <= 1e4")
    c = constants or default_constants()
    ok = lambda x: _min_slack(log_n, x, c)[0] >= -0.1 * SLACK_TOL
    xs = np.linspace(0.0, log_n, grid)[1:]
    flags = [ok(x) for x in xs]
    if not any(flags):
        slacks = [_min_slack(log_n, x, c) for x in xs]
        _, binding = max(slacks, key=lambda r: r[0])
        raise Infeasible(f"no feasible s~ at log n = {log_n}; binding constraint: {binding}", binding=binding)
    first = flags.index(True)
    last = len(flags) - 1 - flags[::-1].index(True)
    lo = xs[first] if first == 0 else _bisect(ok, xs[first - 1], xs[first])
    hi = xs[last] if last == len(xs) - 1 else _bisect(ok, xs[last + 1], xs[last])

    def f(x):
        return ParameterSet.from_s_tilde(log_n, x, c).log_rho

    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(300):
        if b - a <= 1e-12 * max(1.0, abs(b)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    best = max((lo, hi, x1, x2), key=f)
    return ParameterSet.from_s_tilde(log_n, float(best), c)


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


@dataclass(frozen=True)
class TailSums:
    log_sum1: float
    log_sum2: float
    ok: bool
    exact: bool

    @property
    def log_total(self):
        return float(np.logaddexp(self.log_sum1, self.log_sum2))

    @property
    def slack(self):
        """log(1/2) - log(total); nonnegative when ok."""
        return -math.log(2.0) - self.log_total


def tail_sum1_terms(p, n, ps):
    """Log of C(n,p)^2 (8 e rho tau sqrt(alpha (n-p)) / (n-p))^((1-delta)(n-p))."""
    j = n - np.asarray(ps, dtype=float)
    base = math.log(8.0) + 1.0 + p.log_rho + p.log_tau + 0.5 * p.log_alpha - 0.5 * np.log(j)
    return 2.0 * _log_binom(n, np.asarray(ps, dtype=float)) + (1.0 - p.delta) * j * base


def check_tail_sums(p):
    """Both union-bound sums of the final estimate, in log domain.

    For n up to 1e6 the sums are evaluated term by term; beyond that the
    two sufficient inequalities (tilt and tail-sum constraints) stand in,
    and the returned log sums are -inf when they hold.
    """
    if p.log_n > EXACT_TAIL_LOG_N + 1e-12:
        rows = {name: sat for name, sat, _ in constraint_check(p)}
        ok = rows["4 C rho sqrt(2s) <= c n"] and rows["n^2 rho tau sqrt(alpha) / s~^2.5 <= c"]
        v = -math.inf if ok else math.inf
        return TailSums(v, v, ok, exact=False)
    n = int(round(math.exp(p.log_n)))
    s_tilde = math.exp(p.log_s_tilde)
    split = math.ceil(n - s_tilde)  # first p with p >= n - s~
    ps1 = np.arange(0, max(split, 0))
    ps2 = np.arange(max(split, 0), n + 1)
    log1 = float(logsumexp(tail_sum1_terms(p, n, ps1))) if ps1.size else -math.inf
    s = math.exp(p.log_s)
    log2 = math.log(2.0) + float(logsumexp(2.0 * _log_binom(n, ps2.astype(float)))) - p.constants.c_tilt * s
    total = float(np.logaddexp(log1, log2))
    return TailSums(log1, log2, total <= -math.log(2.0), exact=True)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    s_tilde_slope: float
    points: list


def exponent_fit(log_n_list, constants=None):
    """Slope of log rho* against log n between the last two points, and the
    same for log s~; per-point values carry the local slopes."""
    ls = [float(v) for v in log_n_list]
    if len(ls) < 2:
        raise InvalidParameters("need at least two log_n values")
    if any(b <= a for a, b in zip(ls, ls[1:])):
        raise InvalidParameters("log_n values must be strictly increasing")
    sets = [feasible_parameters(v, constants) for v in ls]
    points = []
    for i, (v, p) in enumerate(zip(ls, sets)):
        j0, j1 = (i - 1, i) if i > 0 else (0, 1)
        dl = ls[j1] - ls[j0]
        points.append({
            "log_n": v,
            "log_rho": p.log_rho,
            "log_s_tilde": p.log_s_tilde,
            "slope": (sets[j1].log_rho - sets[j0].log_rho) / dl,
            "s_tilde_slope": (sets[j1].log_s_tilde - sets[j0].log_s_tilde) / dl,
            "active": rho_star(p).note,
        })
    return ExponentFit(points[-1]["slope"], points[-1]["s_tilde_slope"], points)
