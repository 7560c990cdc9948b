"""Operator norms of centered adjacency matrices and the spectral shrink check.

``centered_opnorm`` computes the largest singular value of M = A - x J
(J all-ones) by power iteration on M^2 with the rank-one term applied
implicitly, so a matvec costs O(edge_count + n).  Squaring makes the sign
of the extreme eigenvalue irrelevant (M is indefinite).  The start vector
is a fixed pseudo-random vector (derived from an internal constant stream,
so results are reproducible); a structured start such as an
ones-orthogonalized pattern is avoided because on regular graphs it stays
exactly orthogonal to the ones eigenvector and converges to the wrong
singular value.  If the iteration fails to converge, a single
stream-driven random restart is taken.

``shrink_check`` verifies, step by step on a recorded trajectory, the
deterministic inequality tying |B_{t+1}| and the squared average degree of
the next-day Blue camp to norm^2 (1-b) / (1/2-b)^2 |B_t|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .dynamics import Trajectory
from .graphs import Graph, sample_gnp
from .rng import RngStream, derive_stream


class OpnormResult(NamedTuple):
    value: float
    converged: bool
    iterations: int


def _adjacency_matvec(g: Graph) -> Callable[[np.ndarray], np.ndarray]:
    if g.layout == "dense":
        mat = g.adjacency_bool().astype(np.float64)
        return lambda v: mat @ v
    indptr, indices = g.indptr, g.indices

    def matvec(v: np.ndarray) -> np.ndarray:
        vals = v[indices]
        cs = np.empty(vals.size + 1, dtype=np.float64)
        cs[0] = 0.0
        np.cumsum(vals, out=cs[1:])
        return cs[indptr[1:]] - cs[indptr[:-1]]

    return matvec


_START_SEED = 0x5EC7_0A11


def _start_vector(n: int) -> np.ndarray:
    # fixed per size; generic direction with overlap on every eigenspace
    v = derive_stream(_START_SEED, n).double_block(n) - 0.5
    if not v.any():
        v[0] = 1.0
    return v / np.linalg.norm(v)


def _power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    tol: float,
    max_iter: int,
) -> OpnormResult:
    est_prev = None
    est = 0.0
    for it in range(1, max_iter + 1):
        w = matvec(v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return OpnormResult(0.0, True, it)
        if est_prev is not None and abs(est - est_prev) < tol:
            return OpnormResult(est, True, it)
        est_prev = est
        z = matvec(w)
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return OpnormResult(est, True, it)
        v = z / nz
    return OpnormResult(est, False, max_iter)


def _centered_opnorm_from_matvec(
    base: Callable[[np.ndarray], np.ndarray],
    n: int,
    tol: float,
    max_iter: int | None,
    rng: RngStream | None,
) -> OpnormResult:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = 10 * n
    res = _power_iteration(base, _start_vector(n), tol, max_iter)
    if not res.converged and rng is not None:
        v = 2.0 * rng.double_block(n) - 1.0
        nv = np.linalg.norm(v)
        if nv > 0:
            retry = _power_iteration(base, v / nv, tol, max_iter)
            best = max(res, retry, key=lambda r: r.value)
            return OpnormResult(
                best.value, res.converged or retry.converged,
                res.iterations + retry.iterations,
            )
    return res


def centered_opnorm(
    g: Graph,
    x: float,
    tol: float = 1e-9,
    max_iter: int | None = None,
    rng: RngStream | None = None,
) -> OpnormResult:
    """Largest singular value of A - x * ones * ones^T.

    Returns (value, converged, iterations); ``converged`` is False when
    max_iter (default 10n) ran out, with the last estimate reported.
    """
    av = _adjacency_matvec(g)
    ones = np.ones(g.n)

    def m(v: np.ndarray) -> np.ndarray:
        return av(v) - x * v.sum() * ones

    return _centered_opnorm_from_matvec(m, g.n, tol, max_iter, rng)


def default_x_grid(p: float) -> np.ndarray:
    """{p} plus 21 evenly spaced points in [0, 2p]."""
    return np.unique(np.concatenate([np.linspace(0.0, 2.0 * p, 21), [p]]))


def min_opnorm(
    g: Graph,
    x_grid,
    tol: float = 1e-9,
    max_iter: int | None = None,
    rng: RngStream | None = None,
) -> tuple[float, float]:
    """Minimum of centered_opnorm over the grid; ties keep the earliest x."""
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=np.float64))
    if x_grid.size == 0:
        raise ValueError("x_grid must be nonempty")
    best_x = None
    best = math.inf
    for x in x_grid:
        res = centered_opnorm(g, float(x), tol=tol, max_iter=max_iter, rng=rng)
        if res.value < best:
            best = res.value
            best_x = float(x)
    return best_x, best


@dataclass
class ShrinkStep:
    """One checked step of the spectral shrink inequality."""

    day: int
    blue_t: int
    blue_next: int
    avg_degree_next: float
    lhs: float
    rhs: float
    passed: bool


def shrink_check(
    g: Graph, traj: Trajectory, b: float, norm: float, slack: float = 1e-9
) -> list[ShrinkStep]:
    """Evaluate the shrink inequality on every eligible step of a trajectory.

    Steps with |B_t| > b*n are outside the inequality's hypothesis and are
    skipped, as are steps with an empty next-day Blue camp.  Requires the
    trajectory to carry snapshots.
    """
    if traj.snapshots is None:
        raise ValueError("trajectory has no snapshots; rerun with snapshots=True")
    if not 0.0 < b < 0.5:
        raise ValueError("b must be in (0, 1/2)")
    n = g.n
    factor = norm * norm * (1.0 - b) / (0.5 - b) ** 2
    reports = []
    for t in range(len(traj.snapshots) - 1):
        blue_t = n - int(traj.snapshots[t].sum())
        if blue_t > b * n:
            continue
        next_mask = ~traj.snapshots[t + 1]
        blue_next = int(next_mask.sum())
        if blue_next == 0:
            continue
        avg_deg = float(g.degrees[next_mask].mean())
        lhs = blue_next * avg_deg * avg_deg
        rhs = factor * blue_t
        reports.append(
            ShrinkStep(
                day=t, blue_t=blue_t, blue_next=blue_next,
                avg_degree_next=avg_deg, lhs=lhs, rhs=rhs,
                passed=lhs <= rhs + slack * max(1.0, rhs),
            )
        )
    return reports


def norm_concentration(
    n: int,
    p: float,
    samples: int,
    rng: RngStream,
    tol: float = 1e-9,
    max_iter: int | None = None,
) -> np.ndarray:
    """Sample ratios ||A - E A|| / sqrt(pn) over fresh G(n,p) draws.

    E A has p off the diagonal and 0 on it, so the centered matvec is
    A v - p (sum(v) - v_i).  Requires pn >= 1.
    """
    if p * n < 1:
        raise ValueError("need p*n >= 1")
    ratios = np.empty(samples, dtype=np.float64)
    scale = math.sqrt(p * n)
    for i in range(samples):
        g = sample_gnp(n, p, rng)
        av = _adjacency_matvec(g)

        def m(v: np.ndarray) -> np.ndarray:
            return av(v) - p * (v.sum() - v)

        res = _centered_opnorm_from_matvec(m, n, tol, max_iter, rng)
        ratios[i] = res.value / scale
    return ratios
