"""Brute-force ground truth at small scale.

Three independent computation routes that the rest of the package is checked
against:

* full graph enumeration (n <= 6): every one of the 2^C(n,2) graphs is run
  to fixation and weighted by p^e (1-p)^(C-e), giving exact outcome
  probabilities and exact day-1 statistics;
* binomial convolutions: the day-1 membership probability of a single vertex
  is an exact functional of Bin(|R'|, p) - Bin(|B'|, p), and pair
  probabilities factor once the connecting edge is conditioned on, giving
  exact E|B_1| and Var|B_1| up to n = 2000 with no sampling;
* activation/update enumeration (n <= 5): one lazy transition enumerated
  over graphs x per-vertex status (inactive / active / updating).
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from ._batch import adjacency_from_presence, run_batch
from .dynamics import Coloring

ENUM_N_MAX = 6
LAZY_ENUM_N_MAX = 5
MOMENTS_N_MAX = 2000


@lru_cache(maxsize=8)
def _graph_cubes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All graphs on n vertices: (2^C, n, n) int8 cubes + edge counts."""
    npairs = n * (n - 1) // 2
    masks = np.arange(1 << npairs, dtype=np.int64)
    presence = ((masks[:, None] >> np.arange(npairs)[None, :]) & 1).astype(np.uint8)
    adj = adjacency_from_presence(presence, n)
    return adj, presence.sum(axis=1).astype(np.int64)


def _graph_weights(ecounts: np.ndarray, npairs: int, p: float) -> np.ndarray:
    # log-space keeps weights sane for p near 0 or 1
    if p == 0.0:
        return (ecounts == 0).astype(np.float64)
    if p == 1.0:
        return (ecounts == npairs).astype(np.float64)
    logw = ecounts * np.log(p) + (npairs - ecounts) * np.log1p(-p)
    return np.exp(logw)


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")


def exact_win_prob(
    n: int, p: float, c0: Coloring, max_days: int | None = None
) -> tuple[float, float, float]:
    """Exact (Pr Red wins, Pr Blue wins, Pr neither) by graph enumeration."""
    if n > ENUM_N_MAX:
        raise ValueError(f"exact_win_prob enumerates graphs only up to n={ENUM_N_MAX}")
    if c0.n != n:
        raise ValueError("coloring size mismatch")
    _check_p(p)
    if max_days is None:
        max_days = 4 * n + 8
    adj, ecounts = _graph_cubes(n)
    w = _graph_weights(ecounts, n * (n - 1) // 2, p)
    rec = run_batch(adj, np.asarray(c0.red), max_days)
    if rec["truncated"].any():
        raise RuntimeError("enumeration run truncated; raise max_days")
    pr_red = float(w[rec["winner"] == 1].sum())
    pr_blue = float(w[rec["winner"] == -1].sum())
    pr_none = float(w[rec["winner"] == 0].sum())
    return pr_red, pr_blue, pr_none


def exact_day1_distribution(n: int, p: float, c0: Coloring) -> np.ndarray:
    """Exact pmf of |B_1| (length n+1) under one synchronous day, by enumeration."""
    if n > ENUM_N_MAX:
        raise ValueError(f"enumeration only up to n={ENUM_N_MAX}")
    _check_p(p)
    adj, ecounts = _graph_cubes(n)
    w = _graph_weights(ecounts, n * (n - 1) // 2, p)
    ell = np.where(np.asarray(c0.red), 1, -1).astype(np.int16)
    d = np.einsum("kij,j->ki", adj.astype(np.int16), ell)
    new = np.where(d > 0, 1, np.where(d < 0, -1, ell[None, :]))
    b1 = (new == -1).sum(axis=1)
    dist = np.zeros(n + 1)
    np.add.at(dist, b1, w)
    return dist


# -- day-1 statistics by binomial convolution --------------------------------


def _diff_pmf(r: int, b: int, p: float) -> tuple[np.ndarray, int]:
    """pmf of Bin(r, p) - Bin(b, p); entry i holds value i - b."""
    pr = binom.pmf(np.arange(r + 1), r, p)
    pb = binom.pmf(np.arange(b + 1), b, p)
    return np.convolve(pr, pb[::-1]), b


def _prob_below_and_at(pmf_off: tuple[np.ndarray, int], t: int) -> tuple[float, float]:
    pmf, off = pmf_off
    idx = t + off
    below = float(pmf[: max(idx, 0)].sum())
    at = float(pmf[idx]) if 0 <= idx < pmf.size else 0.0
    return below, at


def _membership_prob(pmf_off, shift: int, is_blue: bool) -> float:
    """Pr(v in B_1) when delta(v) = D + shift: strict negativity, plus the
    tie kept by currently-Blue vertices."""
    below, at = _prob_below_and_at(pmf_off, -shift)
    return below + (at if is_blue else 0.0)


def exact_day1_vertex_prob(n: int, p: float, c0: Coloring, v: int) -> float:
    """Exact Pr(v in B_1) for one synchronous day on G(n,p)."""
    _check_p(p)
    if not 0 <= v < n or c0.n != n:
        raise ValueError("bad vertex or coloring size")
    is_red = bool(c0.red[v])
    r = c0.red_count - (1 if is_red else 0)
    b = c0.blue_count - (0 if is_red else 1)
    return _membership_prob(_diff_pmf(r, b, p), 0, not is_red)


def exact_day1_moments(n: int, p: float, c0: Coloring) -> tuple[float, float]:
    """Exact (E|B_1|, Var|B_1|), with pair terms conditioned on the joining edge.

    O(n^2) via cached difference pmfs; capped at n = 2000.
    """
    if n > MOMENTS_N_MAX:
        raise ValueError(f"exact_day1_moments capped at n={MOMENTS_N_MAX}")
    if c0.n != n:
        raise ValueError("coloring size mismatch")
    _check_p(p)
    R, B = c0.red_count, c0.blue_count

    # single-vertex probabilities (identical within a camp)
    p_single = {}
    for is_red in (True, False):
        if (R if is_red else B) == 0:
            continue
        r = R - (1 if is_red else 0)
        b = B - (0 if is_red else 1)
        p_single[is_red] = _membership_prob(_diff_pmf(r, b, p), 0, not is_red)

    mean = R * p_single.get(True, 0.0) + B * p_single.get(False, 0.0)

    var = 0.0
    for is_red, count in ((True, R), (False, B)):
        if count:
            q = p_single[is_red]
            var += count * q * (1.0 - q)

    # pairs, by unordered color combo; within a combo all pairs are alike
    for cu, cv, npairs in (
        (True, True, R * (R - 1) // 2),
        (True, False, R * B),
        (False, False, B * (B - 1) // 2),
    ):
        if npairs == 0:
            continue
        r = R - int(cu) - int(cv)
        b = B - int(not cu) - int(not cv)
        pmf_off = _diff_pmf(r, b, p)
        su = 1 if cu else -1  # u's color as seen by v across the edge
        sv = 1 if cv else -1
        e_u = _membership_prob(pmf_off, sv, not cu)
        e_v = _membership_prob(pmf_off, su, not cv)
        f_u = _membership_prob(pmf_off, 0, not cu)
        f_v = _membership_prob(pmf_off, 0, not cv)
        p_uv = p * e_u * e_v + (1.0 - p) * f_u * f_v
        cov = p_uv - p_single[cu] * p_single[cv]
        var += 2.0 * npairs * cov

    return float(mean), float(var)


def exact_lazy_day1_distribution(
    n: int, p: float, p_ac: float, p_up: float, c0: Coloring
) -> np.ndarray:
    """Exact pmf of |B_1| (length n+1) after one lazy transition.

    Enumerates graphs x per-vertex status (inactive / active-only /
    updating); n <= 5.
    """
    if n > LAZY_ENUM_N_MAX:
        raise ValueError(f"lazy enumeration only up to n={LAZY_ENUM_N_MAX}")
    _check_p(p)
    for name, v in (("p_ac", p_ac), ("p_up", p_up)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    if c0.n != n:
        raise ValueError("coloring size mismatch")

    adj, ecounts = _graph_cubes(n)
    wg = _graph_weights(ecounts, n * (n - 1) // 2, p)
    adj16 = adj.astype(np.int16)
    ell = np.where(np.asarray(c0.red), 1, -1).astype(np.int16)

    status_w = (1.0 - p_ac, p_ac * (1.0 - p_up), p_ac * p_up)
    dist = np.zeros(n + 1)
    for status in itertools.product((0, 1, 2), repeat=n):
        w = 1.0
        for s in status:
            w *= status_w[s]
        if w == 0.0:
            continue
        act = np.array([s >= 1 for s in status])
        upd = np.array([s == 2 for s in status])
        d = np.einsum("kij,j->ki", adj16, np.where(act, ell, 0).astype(np.int16))
        new = np.where(upd[None, :],
                       np.where(d > 0, 1, np.where(d < 0, -1, ell[None, :])),
                       ell[None, :])
        b1 = (new == -1).sum(axis=1)
        contrib = np.zeros(n + 1)
        np.add.at(contrib, b1, wg)
        dist += w * contrib
    return dist
