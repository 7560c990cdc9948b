"""The majority-dynamics state machine.

Synchronous rule: on each day every vertex adopts the color held by the
majority of its neighbors the previous day, keeping its color on a tie
(isolated vertices never change).  The lazy variant draws, per transition,
an activation set A (each vertex w.p. ``p_ac``) and an update set U within A
(each active vertex w.p. ``p_up``); updating vertices apply the majority
rule restricted to their *active* neighbors, everyone else keeps their
color.  A vertex with no active neighbors is a tie.

Runs stop at the first unanimity, at fixation (deterministic variant only:
the coloring repeats with period 1 or 2, which is guaranteed to happen),
or when ``max_days`` is reached (reported as truncated).  The lazy variant
is stochastic and has no sound repeat detector, so it runs to unanimity or
``max_days``.

Lazy draw protocol (fixed): each transition consumes n activation doubles
then n update doubles, in vertex order; update draws are made for every
vertex but consulted only for active ones, so consumption never depends on
outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, pack_bool
from .rng import RngStream


@dataclass(frozen=True)
class LazyParams:
    """Activation and update rates of the lazy variant."""

    p_ac: float
    p_up: float

    def __post_init__(self):
        for name in ("p_ac", "p_up"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


class Coloring:
    """Two-state vertex assignment with cached camp counts (1 bit per vertex)."""

    __slots__ = ("red", "red_count")

    def __init__(self, red: np.ndarray):
        red = np.asarray(red, dtype=bool)
        if red.ndim != 1:
            raise ValueError("red mask must be 1-dimensional")
        red = red.copy()
        red.setflags(write=False)
        self.red = red
        self.red_count = int(red.sum())

    @classmethod
    def from_red_prefix(cls, n: int, red_count: int) -> "Coloring":
        if not 0 <= red_count <= n:
            raise ValueError("red_count out of range")
        mask = np.zeros(n, dtype=bool)
        mask[:red_count] = True
        return cls(mask)

    @property
    def n(self) -> int:
        return self.red.size

    @property
    def blue_count(self) -> int:
        return self.n - self.red_count

    @property
    def gap(self) -> float:
        """red_count - n/2; half-integer for odd n."""
        return self.red_count - self.n / 2.0

    def ell(self) -> np.ndarray:
        """Spin view: +1 for Red, -1 for Blue."""
        return np.where(self.red, np.int8(1), np.int8(-1))

    def swapped(self) -> "Coloring":
        return Coloring(~self.red)

    def __eq__(self, other) -> bool:
        return isinstance(other, Coloring) and np.array_equal(self.red, other.red)

    def __hash__(self):
        return hash(self.red.tobytes())


@dataclass
class Trajectory:
    """Per-day summaries of one run plus the terminal classification.

    ``winner`` is "Red"/"Blue" when unanimity was reached (at day ``t_win``),
    else None.  For deterministic runs that fixate without unanimity,
    ``period`` is 1 or 2 with the repeating block starting at day ``t_star``
    (unanimity is recorded as period 1 at ``t_win``).  ``truncated`` means
    ``max_days`` was hit first.
    """

    winner: str | None
    t_win: int | None
    period: int | None
    t_star: int | None
    truncated: bool
    blue_counts: list[int]
    snapshots: list[np.ndarray] | None = field(default=None, repr=False)
    fixation_pair: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False
    )

    def to_record(self) -> dict:
        """JSON-ready record; field names are a fixed external contract."""
        return {
            "winner": self.winner,
            "t_win": self.t_win,
            "period": self.period,
            "t_star": self.t_star,
            "truncated": self.truncated,
            "blue_counts": list(self.blue_counts),
        }


def _red_neighbor_counts(g: Graph, red: np.ndarray) -> np.ndarray:
    if g.layout == "dense":
        words = g.bits.shape[1]
        packed = pack_bool(red, words)
        return np.bitwise_count(g.bits & packed).sum(axis=1, dtype=np.int64)
    vals = red[g.indices]
    cs = np.empty(vals.size + 1, dtype=np.int64)
    cs[0] = 0
    np.cumsum(vals, out=cs[1:])
    return cs[g.indptr[1:]] - cs[g.indptr[:-1]]


def _masked_neighbor_counts(g: Graph, mask: np.ndarray) -> np.ndarray:
    # same contraction as above with an arbitrary boolean vertex weight
    return _red_neighbor_counts(g, mask)


def delta_all(g: Graph, red: np.ndarray) -> np.ndarray:
    """delta(v) = (#Red neighbors) - (#Blue neighbors) for every vertex."""
    rn = _red_neighbor_counts(g, red)
    return 2 * rn - g.degrees


def delta(g: Graph, c: Coloring, v: int) -> int:
    """Red-minus-Blue neighbor count of one vertex; in [-d(v), d(v)]."""
    if not 0 <= v < g.n:
        raise ValueError("vertex out of range")
    nb = g.neighbors(v)
    rn = int(c.red[nb].sum())
    return 2 * rn - int(g.degrees[v])


def _step_red(g: Graph, red: np.ndarray) -> np.ndarray:
    d = delta_all(g, red)
    return (d > 0) | ((d == 0) & red)


def majority_step(g: Graph, c: Coloring) -> Coloring:
    """One synchronous day; the input coloring is untouched."""
    if c.n != g.n:
        raise ValueError("coloring size does not match graph")
    return Coloring(_step_red(g, np.asarray(c.red)))


def _lazy_step_red(
    g: Graph, red: np.ndarray, params: LazyParams, rng: RngStream
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = g.n
    act = rng.double_block(n) < params.p_ac
    upd = act & (rng.double_block(n) < params.p_up)
    red_active = red & act
    rn = _masked_neighbor_counts(g, red_active)
    an = _masked_neighbor_counts(g, act)
    d = 2 * rn - an
    new_red = red.copy()
    new_red[upd] = (d[upd] > 0) | ((d[upd] == 0) & red[upd])
    return new_red, act, upd


def lazy_step(
    g: Graph, c: Coloring, params: LazyParams, rng: RngStream
) -> tuple[Coloring, np.ndarray, np.ndarray]:
    """One lazy transition; returns (coloring, activation set, update set)."""
    if c.n != g.n:
        raise ValueError("coloring size does not match graph")
    new_red, act, upd = _lazy_step_red(g, np.asarray(c.red), params, rng)
    return Coloring(new_red), act, upd


def run(
    g: Graph,
    c0: Coloring,
    variant: str | LazyParams = "deterministic",
    max_days: int = 1,
    rng: RngStream | None = None,
    snapshots: bool = False,
) -> Trajectory:
    """Iterate the dynamics from c0; see the module docstring for stopping rules."""
    if max_days < 1:
        raise ValueError("max_days must be >= 1")
    if c0.n != g.n:
        raise ValueError("coloring size does not match graph")
    lazy = isinstance(variant, LazyParams)
    if not lazy and variant != "deterministic":
        raise ValueError(f"unknown variant {variant!r}")
    if lazy and rng is None:
        raise ValueError("lazy variant needs an RngStream")

    n = g.n
    red = np.asarray(c0.red).copy()
    blue_counts = [int(n - red.sum())]
    snaps = [red.copy()] if snapshots else None

    def finish(winner, t_win, period, t_star, truncated, pair=None):
        return Trajectory(
            winner=winner, t_win=t_win, period=period, t_star=t_star,
            truncated=truncated, blue_counts=blue_counts, snapshots=snaps,
            fixation_pair=pair,
        )

    bc = blue_counts[0]
    if bc == 0:
        return finish("Red", 0, 1, 0, False, (red.copy(), red.copy()))
    if bc == n:
        return finish("Blue", 0, 1, 0, False, (red.copy(), red.copy()))

    prev: np.ndarray | None = None
    for day in range(1, max_days + 1):
        if lazy:
            new_red, _, _ = _lazy_step_red(g, red, variant, rng)
        else:
            new_red = _step_red(g, red)
        bc = int(n - new_red.sum())
        blue_counts.append(bc)
        if snaps is not None:
            snaps.append(new_red.copy())
        if bc == 0:
            return finish("Red", day, 1, day, False, (new_red, new_red.copy()))
        if bc == n:
            return finish("Blue", day, 1, day, False, (new_red, new_red.copy()))
        if not lazy:
            if np.array_equal(new_red, red):
                return finish(None, None, 1, day - 1, False, (red, new_red))
            if prev is not None and np.array_equal(new_red, prev):
                return finish(None, None, 2, day - 2, False, (prev, red))
        prev = red
        red = new_red
    return finish(None, None, None, None, True)
