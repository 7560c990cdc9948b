"""Vectorized small-n deterministic engine.

Runs many (graph, coloring) instances in lockstep with dense int8
adjacency cubes.  Used by the ensemble harness for tiny n (where per-trial
Python overhead would dominate) and by the exact oracle, which enumerates
every graph on n <= 6 vertices.  The update rule and the stopping rules are
the same as in :mod:`majlab.dynamics`; cross-path equality is pinned by
tests.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as _k

#: largest n for the batched ensemble path
BATCH_N_MAX = 12


def pair_index_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(u, v) arrays of the canonical pair order, pair k = (u[k], v[k])."""
    u, v = np.triu_indices(n, k=1)
    return u.astype(np.int64), v.astype(np.int64)


def adjacency_from_presence(presence: np.ndarray, n: int) -> np.ndarray:
    """(k, C) pair presence -> (k, n, n) int8 symmetric adjacency cubes."""
    k = presence.shape[0]
    u, v = pair_index_table(n)
    adj = np.zeros((k, n, n), dtype=np.int8)
    adj[:, u, v] = presence
    adj[:, v, u] = presence
    return adj


def sample_adjacency_batch(
    master_seed: int, stream_indices: np.ndarray, n: int, p: float
) -> np.ndarray:
    """One sparse-protocol G(n,p) per stream, as adjacency cubes.

    Bit-identical to ``graphs.sample_gnp`` with the csr layout on the same
    streams (same kernel, same draw order).
    """
    npairs = n * (n - 1) // 2
    kk = stream_indices.shape[0]
    presence = np.zeros((kk, npairs), dtype=np.uint8)
    if p >= 1.0:
        presence[:] = 1
    elif p > 0.0:
        _k.batch_sparse_presence(
            int(master_seed), stream_indices.astype(np.uint64), n, p, presence
        )
    return adjacency_from_presence(presence, n)


def run_batch(adj: np.ndarray, red0: np.ndarray, max_days: int) -> dict:
    """Run the deterministic dynamics on every instance to fixation.

    adj: (k, n, n) int8; red0: (k, n) bool or (n,) bool broadcast to all.
    Returns per-trial record arrays (see keys below); ``blue`` holds the
    day-0/1/2 Blue counts with absorbing values carried forward.
    """
    k, n, _ = adj.shape
    if red0.ndim == 1:
        red0 = np.broadcast_to(red0, (k, n))
    ell = np.where(red0, 1, -1).astype(np.int8)

    winner = np.zeros(k, dtype=np.int8)
    t_win = np.full(k, -1, dtype=np.int32)
    period = np.zeros(k, dtype=np.int8)
    t_star = np.full(k, -1, dtype=np.int32)
    done = np.zeros(k, dtype=bool)
    blue = np.zeros((k, 3), dtype=np.int64)

    bc = (ell == -1).sum(axis=1)
    blue[:, 0] = bc
    for d in (1, 2):
        blue[:, d] = bc
    red_all = bc == 0
    blue_all = bc == n
    newly = red_all | blue_all
    winner[newly] = np.where(red_all[newly], 1, -1)
    t_win[newly] = 0
    period[newly] = 1
    t_star[newly] = 0
    done |= newly

    prev = None
    adj16 = adj.astype(np.int16)
    for day in range(1, max_days + 1):
        d = np.einsum("kij,kj->ki", adj16, ell.astype(np.int16))
        new = np.where(d > 0, 1, np.where(d < 0, -1, ell)).astype(np.int8)
        bc = (new == -1).sum(axis=1)
        if day <= 2:
            blue[:, day:] = bc[:, None]

        red_all = bc == 0
        blue_all = bc == n
        newly = (red_all | blue_all) & ~done
        winner[newly] = np.where(red_all[newly], 1, -1)
        t_win[newly] = day
        period[newly] = 1
        t_star[newly] = day
        done |= newly

        eq1 = (new == ell).all(axis=1) & ~done
        period[eq1] = 1
        t_star[eq1] = day - 1
        done |= eq1

        if prev is not None:
            eq2 = (new == prev).all(axis=1) & ~done
            period[eq2] = 2
            t_star[eq2] = day - 2
            done |= eq2

        prev = ell
        ell = new
        if done.all() and day >= 2:
            break

    truncated = ~done
    conv_day = np.where(
        winner != 0, t_win, np.where(period > 0, t_star, np.int32(max_days))
    ).astype(np.int32)
    return {
        "winner": winner,
        "t_win": t_win,
        "period": period,
        "t_star": t_star,
        "truncated": truncated,
        "blue": blue,
        "conv_day": conv_day,
    }
