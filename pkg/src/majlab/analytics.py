"""Closed-form bound and constant evaluation.

Pure, reentrant functions: same inputs, same outputs, no hidden state.
All logs are natural.  Numeric conventions that the functions pin down:

* ``neg_entropy(x) = x log x + (1-x) log(1-x)`` (non-positive on (0,1)).
* The large-deviation exponent for the one-day Blue shrink event is
  ``shrink_exponent(d, next_frac, today_frac)
    = d * next_frac * gstar(today_frac) + 2 * neg_entropy(today_frac)``
  where ``gstar(y) = 1 - y/2 - (3/2) y^(1/3) (1-y)^(2/3)``.  ``gstar`` is
  algebraically identical to the optimized exponential-moment factor
  ``-g_y(t_y)`` with ``t_y = log(1/y - 1)/3`` and
  ``g_y(t) = (1 - e^-t)(y (e^2t + e^t + 2)/2 - 1)``; both routes are
  exposed and asserted to agree so a transcription slip in either form
  cannot pass silently.  Note the entropy term takes the *today* fraction.
* Failure-probability reports carry explicit numeric terms only where an
  explicit constant exists; asymptotic pieces are reported as bare exponent
  stems (the Omega(.) argument), never with invented constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

#: Berry-Esseen constant (Shevtsova's bound for the i.i.d. CLT error).
C_BE = 0.56

#: Constant of the two-binomial point-mass bound (2 * C_BE).
POINT_MASS_CONST = 1.12


# -- normal distribution ------------------------------------------------------


def normal_cdf(a: float) -> float:
    """Standard normal CDF via erfc; absolute error below 1e-12."""
    return 0.5 * math.erfc(-a / math.sqrt(2.0))


def normal_cdf_centered(a: float) -> float:
    """normal_cdf(a) - 1/2 (odd in a)."""
    return 0.5 - 0.5 * math.erfc(a / math.sqrt(2.0))


# -- day-1 shrink constants ---------------------------------------------------


def day1_critical_coeff(c: float) -> float:
    """Largest usable day-1 shrink coefficient at Chebyshev scale c.

    normal_cdf_centered(2 - 1/c) - C_BE/c; increasing in c, ~0.415 at c=10.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    return normal_cdf_centered(2.0 - 1.0 / c) - C_BE / c


def day1_chebyshev_const(c: float, D: float) -> float:
    """7 / (12 (D_c - D)^2); requires D strictly below day1_critical_coeff(c)."""
    dc = day1_critical_coeff(c)
    if D >= dc:
        raise ValueError(f"D must be below the critical coefficient {dc:.6f}")
    return 7.0 / (12.0 * (dc - D) ** 2)


def day1_bound(
    n: int, p: float, delta: float, c: float, D: float
) -> tuple[float, float]:
    """Day-1 Blue-count threshold and failure probability.

    Returns ``(n/2 - D min(n, delta sqrt(pn)),
    min(1, day1_chebyshev_const(c, D) / min(n, p delta^2)))``.  Preconditions
    (0 < c <= min(p delta, sqrt(p(1-p)n)), 0 < D < D_c) are enforced, not
    clamped.
    """
    cmax = min(p * delta, math.sqrt(p * (1.0 - p) * n))
    if not 0 < c <= cmax:
        raise ValueError(f"need 0 < c <= min(p*delta, sqrt(p(1-p)n)) = {cmax:.6f}")
    if not 0 < D:
        raise ValueError("D must be positive")
    const = day1_chebyshev_const(c, D)  # also checks D < D_c
    threshold = n / 2.0 - D * min(float(n), delta * math.sqrt(p * n))
    fail = min(1.0, const / min(float(n), p * delta * delta))
    return threshold, fail


# -- second-day large-deviation machinery ------------------------------------


def neg_entropy(x: float) -> float:
    """x log x + (1-x) log(1-x) on (0,1); equals -log 2 at 1/2."""
    if not 0.0 < x < 1.0:
        raise ValueError("argument must be in (0, 1)")
    return x * math.log(x) + (1.0 - x) * math.log1p(-x)


def shrink_exponent_factor(y: float) -> float:
    """gstar(y) = 1 - y/2 - (3/2) y^(1/3) (1-y)^(2/3), for y in (0, 1)."""
    if not 0.0 < y < 1.0:
        raise ValueError("argument must be in (0, 1)")
    return 1.0 - 0.5 * y - 1.5 * y ** (1.0 / 3.0) * (1.0 - y) ** (2.0 / 3.0)


def shrink_exponent_factor_direct(y: float) -> float:
    """gstar(y) evaluated through the optimizing tilt t_y = log(1/y - 1)/3."""
    if not 0.0 < y < 1.0:
        raise ValueError("argument must be in (0, 1)")
    t = math.log(1.0 / y - 1.0) / 3.0
    g = (1.0 - math.exp(-t)) * (y * (math.exp(2 * t) + math.exp(t) + 2.0) / 2.0 - 1.0)
    return -g


def shrink_exponent(d: float, next_frac: float, today_frac: float) -> float:
    """Exponent F of the one-day shrink bound (entropy term on today's fraction)."""
    if d <= 0:
        raise ValueError("d must be positive")
    return d * next_frac * shrink_exponent_factor(today_frac) + 2.0 * neg_entropy(
        today_frac
    )


def step2_condition(a: float, b: float) -> bool:
    """True iff b a^2 > (3/2) log 2, the hypothesis of the day-2 shrink step."""
    if a <= 0 or not 0.0 < b < 0.5:
        raise ValueError("need a > 0 and b in (0, 1/2)")
    return b * a * a > 1.5 * math.log(2.0)


def step2_fail_bound(n: int, p: float, a: float, b: float) -> float:
    """min(1, (1/b) exp(-n F(pn, b, 1/2 - a/sqrt(pn)))).

    Bounds the probability that Blue fails to drop below b*n on day 2 given
    |B_1| <= n/2 - a n / sqrt(pn).
    """
    if a <= 0 or not 0.0 < b < 0.5:
        raise ValueError("need a > 0 and b in (0, 1/2)")
    today = 0.5 - a / math.sqrt(p * n)
    if today <= 0.0:
        return 0.0  # day-1 camp already empty; nothing can fail
    log_bound = -math.log(b) - n * shrink_exponent(p * n, b, today)
    if log_bound >= 0.0:
        return 1.0
    return min(1.0, math.exp(log_bound))


# -- degree and tail helpers --------------------------------------------------


def degree_threshold(eps: float) -> tuple[float, float]:
    """(N_eps, alpha_eps) = (4/eps + 4, exp(-(8/eps + 7))).

    For n >= N_eps and pn >= (1+eps) log n, the minimum degree is at least
    alpha_eps * pn except with probability n^(-eps/2).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    return 4.0 / eps + 4.0, math.exp(-(8.0 / eps + 7.0))


def chernoff_upper(p: float, m: float, t: float) -> float:
    """Tail bound for X ~ Bin(Y, p) with Y supported on [0, m]:

    Pr(X >= pm + t) <= exp(-max(t^2 / (2(pm + t)), t^2 / (2(1-p)m))).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if m <= 0 or t <= 0:
        raise ValueError("m and t must be positive")
    expo = max(t * t / (2.0 * (p * m + t)), t * t / (2.0 * (1.0 - p) * m))
    return math.exp(-expo)


def berry_esseen_bound(n: int, p: float) -> float:
    """CLT sup-gap bound for n (+/-)Bernoulli(p) summands:

    C_BE (1 - 2 sigma^2) / (sigma sqrt(n)) with sigma = sqrt(p(1-p)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    sigma = math.sqrt(p * (1.0 - p))
    return C_BE * (1.0 - 2.0 * sigma * sigma) / (sigma * math.sqrt(n))


def point_mass_bound(n1: int, n2: int, p: float) -> float:
    """Bound on Pr(X1 = X2 + d) for independent Bin(n1,p), Bin(n2,p):

    1.12 (1 - 2 sigma^2) / (sigma sqrt(n1 + n2)), uniform in d.
    """
    if n1 + n2 < 1:
        raise ValueError("n1 + n2 must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    sigma = math.sqrt(p * (1.0 - p))
    return POINT_MASS_CONST * (1.0 - 2.0 * sigma * sigma) / (
        sigma * math.sqrt(n1 + n2)
    )


def isolated_moments(b0: int, n: int, p: float) -> tuple[float, float]:
    """Exact mean and variance of the isolated-vertex count within a fixed
    b0-subset of a G(n,p) graph."""
    if not 0 <= b0 <= n:
        raise ValueError("need 0 <= b0 <= n")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    q1 = (1.0 - p) ** (n - 1)
    mean = b0 * q1
    var = (
        b0 * (b0 - 1) * p * (1.0 - p) ** (2 * n - 3)
        + b0 * q1
        - b0 * (1.0 - p) ** (2 * n - 2)
    )
    return mean, var


def subcon_avg_deg_check(lam: float, delta_exp: float, eps: float) -> bool:
    """Admissibility of (delta, eps) for the sub-connectivity average-degree
    guarantee: 0 < delta < 1 - lam, 0 < eps < 1, eps log(e/eps) <= delta/4."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must be in (0, 1)")
    if not (0.0 < delta_exp < 1.0 - lam and 0.0 < eps < 1.0):
        return False
    return eps * math.log(math.e / eps) <= delta_exp / 4.0


def subcon_avg_deg_check_theorem(lam: float, eps: float) -> bool:
    """Theorem-level variant of the admissibility test: eps log(e/eps) <= lam/4."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must be in (0, 1)")
    if not 0.0 < eps < 1.0:
        return False
    return eps * math.log(math.e / eps) <= lam / 4.0


# -- theorem-level reports ----------------------------------------------------


@dataclass
class BoundReport:
    """Evaluated bound terms vs. hypotheses for one parameter point.

    ``terms`` holds explicit numeric values; keys ending in
    ``_exponent_stem`` are the arguments of exp(-Omega(.)) / n^(-Omega(.))
    pieces whose constants are not explicit (asymptotic, no constant
    implied).  ``flags`` records which hypotheses hold at these inputs.
    """

    inputs: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        """JSON-ready record; the three field names are a fixed contract."""
        return {"inputs": dict(self.inputs), "terms": dict(self.terms),
                "flags": dict(self.flags)}


def theorem1_failure_bound(n: int, p: float, delta: float, lam: float) -> BoundReport:
    """Failure-probability report for the deterministic unanimity guarantee.

    Explicit terms: 14 / min(n, p delta^2) for day 1, the fully explicit
    day-2 shrink bound at (a, b) = (0.21 min(sqrt(pn), p delta), 0.25), and
    2 n^(-lam/2) for the spectral phase.  Pieces and hypothesis flags are
    attached; nothing is raised for out-of-regime inputs.
    """
    c, D, b = 10.0, 0.21, 0.25
    pn = p * n
    pdelta = p * delta
    dc = day1_critical_coeff(c)
    c_cd = day1_chebyshev_const(c, D)
    a = D * min(math.sqrt(pn), pdelta) if pn > 0 else 0.0

    day1 = 14.0 / min(float(n), pdelta * delta) if pdelta > 0 else math.inf
    step2 = step2_fail_bound(n, p, a, b) if a > 0 and 0 < pn else 1.0
    step3 = 2.0 * n ** (-lam / 2.0)
    _, alpha = degree_threshold(lam)

    sigma_ok = math.sqrt(p * (1.0 - p) * n) if 0.0 < p < 1.0 else 0.0
    flags = {
        "pn_ge_threshold": pn >= (1.0 + lam) * math.log(n),
        "pn_le_n_minus_10": pn <= n - 10,
        "p_delta_ge_10": pdelta >= 10.0,
        "c10_admissible": min(pdelta, sigma_ok) >= c,
        "step2_condition": a > 0 and step2_condition(a, b),
        "D_below_critical": D < dc,
    }
    terms = {
        "day1": day1,
        "step2": step2,
        "step3": step3,
        "total": min(1.0, day1 + step2 + step3),
        "c": c,
        "D": D,
        "D_critical": dc,
        "day1_chebyshev_const": c_cd,
        "a": a,
        "b": b,
        "F_value": shrink_exponent(pn, b, 0.5 - a / math.sqrt(pn))
        if a > 0 and 0.5 - a / math.sqrt(pn) > 0
        else math.nan,
        "alpha_lambda": alpha,
    }
    inputs = {"n": n, "p": p, "delta": delta, "lambda": lam}
    return BoundReport(inputs=inputs, terms=terms, flags=flags)


def lazy_failure_bound(
    n: int,
    p: float,
    delta: float,
    lam: float,
    p_ac: float,
    p_up: float,
    c: float = 10.0,
    D: float = 0.21,
) -> BoundReport:
    """Failure-probability report for the lazy-variant unanimity guarantee.

    The only explicit term is the day-1 bound
    ``2 C(c, D) / (p_up^2 p_ac^2 min(n, p p_ac delta^2))``; the remaining
    pieces are asymptotic and reported as bare exponent stems.
    """
    dc = day1_critical_coeff(c)
    c_cd = day1_chebyshev_const(c, D)
    ppac = p * p_ac
    denom = p_up**2 * p_ac**2 * min(float(n), ppac * delta * delta)
    day1 = 2.0 * c_cd / denom if denom > 0 else math.inf

    flags = {
        "p_pac_n_ge_threshold": ppac * n >= (1.0 + lam) * math.log(n),
        "pup_pac2_pdelta_ge_10": p_up * p_ac**2 * p * delta >= 10.0,
        "c_admissible": 0
        < c
        <= min(ppac * delta, math.sqrt(ppac * (1.0 - ppac) * n))
        if 0.0 < ppac < 1.0
        else False,
        "D_below_critical": D < dc,
    }
    terms = {
        "day1": day1,
        "c": c,
        "D": D,
        "D_critical": dc,
        "day1_chebyshev_const": c_cd,
        "step2_exponent_stem": p_up**2 * p_ac**4 * p * delta * delta,
        "step3_poly_value": n ** (-lam / 4.0),
        "update_poly_exponent_stem": p_up * p_ac,
    }
    inputs = {
        "n": n, "p": p, "delta": delta, "lambda": lam,
        "p_ac": p_ac, "p_up": p_up,
    }
    return BoundReport(inputs=inputs, terms=terms, flags=flags)
