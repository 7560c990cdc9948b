"""G(n,p) sampling and immutable graph storage.

Two layouts back the same adjacency contract:

* ``"csr"``: sorted neighbor lists + offsets (good for sparse graphs),
* ``"dense"``: packed bit-matrix, one row of ``ceil(n/64)`` u64 words per
  vertex (doubles as the adjacency matrix for spectral work).

Layout is auto-selected at sampling time: dense iff ``p*n >= DENSE_THRESHOLD``
(default 64, the point where bitwise row updates beat CSR traversal).
Graphs are immutable after construction and safe to share across threads.

Vertices are 0-indexed.  Canonical edge order is ascending ``(u, v)`` with
``u < v``; the serialization format is line 1 ``"n m"`` followed by ``m``
lines ``"u v"`` in canonical order, ASCII decimal, LF-terminated.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .rng import RngStream

#: Dense bit-matrix is used when p*n reaches this value.
DENSE_THRESHOLD = 64.0

_U64_ONE = np.uint64(1)


def _words_for(n: int) -> int:
    return (n + 63) >> 6


def pack_bool(mask: np.ndarray, words: int) -> np.ndarray:
    """Pack a boolean vector into little-endian u64 words (bit j = vertex j)."""
    raw = np.packbits(mask, bitorder="little")
    out = np.zeros(words * 8, dtype=np.uint8)
    out[: raw.size] = raw
    return out.view(np.uint64)


@dataclass(frozen=True)
class Graph:
    """Immutable adjacency of one sampled (or explicitly built) graph."""

    n: int
    layout: str
    degrees: np.ndarray
    edge_count: int
    indptr: np.ndarray | None = field(default=None, repr=False)
    indices: np.ndarray | None = field(default=None, repr=False)
    bits: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.degrees, self.indptr, self.indices, self.bits):
            if arr is not None:
                arr.setflags(write=False)

    # -- queries ----------------------------------------------------------

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor array of vertex v."""
        if self.layout == "csr":
            return self.indices[self.indptr[v] : self.indptr[v + 1]]
        unpacked = np.unpackbits(
            self.bits[v].view(np.uint8), bitorder="little", count=self.n
        )
        return np.nonzero(unpacked)[0].astype(np.int32)

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        if self.layout == "dense":
            return bool((self.bits[u, v >> 6] >> np.uint64(v & 63)) & _U64_ONE)
        row = self.neighbors(u)
        j = np.searchsorted(row, v)
        return bool(j < row.size and row[j] == v)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges in canonical ascending (u, v) order."""
        if self.layout == "csr":
            rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
            keep = self.indices > rows
            return np.column_stack([rows[keep], self.indices[keep].astype(np.int64)])
        unpacked = np.unpackbits(
            self.bits.view(np.uint8).reshape(self.n, -1),
            axis=1,
            bitorder="little",
            count=self.n,
        ).astype(bool)
        u, v = np.nonzero(np.triu(unpacked, k=1))
        return np.column_stack([u, v])

    def adjacency_bool(self) -> np.ndarray:
        """(n, n) boolean adjacency matrix (materialized; use for n <= a few 1000)."""
        if self.layout == "dense":
            return np.unpackbits(
                self.bits.view(np.uint8).reshape(self.n, -1),
                axis=1,
                bitorder="little",
                count=self.n,
            ).astype(bool)
        out = np.zeros((self.n, self.n), dtype=bool)
        rows = np.repeat(np.arange(self.n), self.degrees)
        out[rows, self.indices] = True
        return out

    # -- conversions -------------------------------------------------------

    def with_layout(self, layout: str) -> "Graph":
        """Same edge set in the requested layout."""
        if layout == self.layout:
            return self
        return from_edges(self.n, self.edges(), layout=layout)

    # -- consistency -------------------------------------------------------

    def validate(self) -> None:
        """Assert structural invariants; raises AssertionError on violation."""
        assert int(self.degrees.sum()) == 2 * self.edge_count
        assert self.degrees.shape == (self.n,)
        if self.layout == "csr":
            assert self.indptr[0] == 0 and self.indptr[-1] == 2 * self.edge_count
            for v in range(self.n):
                nb = self.neighbors(v)
                assert (np.diff(nb) > 0).all(), "unsorted or duplicate neighbors"
                assert not (nb == v).any(), "self loop"
                assert nb.size == self.degrees[v]
            e = self.edges()
            for u, v in e[: min(len(e), 4096)]:
                assert self.has_edge(v, u), "asymmetric adjacency"
        else:
            a = self.adjacency_bool()
            assert not a.diagonal().any(), "self loop"
            assert (a == a.T).all(), "asymmetric adjacency"
            assert (a.sum(axis=1) == self.degrees).all()


def from_edges(n: int, edges, layout: str = "csr") -> Graph:
    """Build a graph from an iterable of (u, v) pairs (any orientation)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                   dtype=np.int64).reshape(-1, 2)
    if e.size:
        if (e < 0).any() or (e >= n).any():
            raise ValueError("vertex id out of range")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        if (lo == hi).any():
            raise ValueError("self loops are not allowed")
        ks = lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)
        ks = np.unique(ks)
    else:
        ks = np.empty(0, dtype=np.int64)
    return _from_positions(n, ks, layout)


def _from_positions(n: int, positions: np.ndarray, layout: str) -> Graph:
    if layout not in ("csr", "dense"):
        raise ValueError(f"unknown layout {layout!r}")
    m = int(positions.size)
    if layout == "csr":
        indptr, indices, degrees = _k.build_csr(positions, n)
        return Graph(n=n, layout="csr", degrees=degrees, edge_count=m,
                     indptr=indptr, indices=indices)
    words = _words_for(n)
    bits = np.zeros((n, words), dtype=np.uint64)
    degrees = np.zeros(n, dtype=np.int64)
    if m:
        indptr, indices, degrees = _k.build_csr(positions, n)
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        cols = indices.astype(np.int64)
        np.bitwise_or.at(
            bits, (rows, cols >> 6), _U64_ONE << (cols & 63).astype(np.uint64)
        )
    return Graph(n=n, layout="dense", degrees=degrees, edge_count=m, bits=bits)


def _dense_threshold_u64(p: float) -> np.uint64:
    """Edge iff u64 draw < round(p * 2**64); exact at p's own float precision."""
    t = int(round(p * 2.0**64))
    return np.uint64(min(max(t, 0), (1 << 64) - 1))


def sample_gnp(n: int, p: float, rng: RngStream, layout: str | None = None) -> Graph:
    """Sample G(n,p): each unordered pair is an edge independently w.p. p.

    Layout defaults to dense iff ``p*n >= DENSE_THRESHOLD``.  p=0 and p=1
    are handled without consuming draws.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if layout is None:
        layout = "dense" if p * n >= DENSE_THRESHOLD else "csr"
    npairs = n * (n - 1) // 2
    if p == 0.0:
        return _from_positions(n, np.empty(0, dtype=np.int64), layout)
    if p == 1.0:
        return _from_positions(n, np.arange(npairs, dtype=np.int64), layout)

    if layout == "dense":
        words = _words_for(n)
        bits = np.zeros((n, words), dtype=np.uint64)
        degrees = np.zeros(n, dtype=np.int64)
        ec = _k.sample_dense_bits(rng._state, n, _dense_threshold_u64(p), bits, degrees)
        return Graph(n=n, layout="dense", degrees=degrees, edge_count=int(ec),
                     bits=bits)

    expect = p * npairs
    cap = int(expect + 8.0 * math.sqrt(expect + 1.0)) + 64
    while True:
        buf = np.empty(cap, dtype=np.int64)
        attempt = rng.clone()
        cnt = _k.sample_sparse_positions(attempt._state, npairs, p, buf)
        if cnt >= 0:
            rng._state[:] = attempt._state
            return _from_positions(n, buf[:cnt], "csr")
        cap *= 2


def sample_gnp_pairwise(n: int, p: float, rng: RngStream,
                        layout: str = "csr") -> Graph:
    """Reference sampler: one uniform double per canonical pair, edge iff u < p.

    O(n^2) draws; used for protocol/distribution cross-checks in tests.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    npairs = n * (n - 1) // 2
    u = rng.double_block(npairs)
    ks = np.nonzero(u < p)[0].astype(np.int64)
    return _from_positions(n, ks, layout)


def sample_gnp_scan(n: int, p: float, rng: RngStream) -> Graph:
    """Per-pair Bernoulli scan coupled to the geometric-skip sampler.

    Consumes one double per edge (plus a terminator), exactly like the skip
    sampler, and examines every pair: pair j since the last edge is an edge
    iff u < 1 - (1-p)**(j+1), evaluated by residual rescaling.  Driven by the
    same stream it reproduces ``sample_gnp``'s sparse edge set.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("scan sampler requires 0 < p < 1")
    npairs = n * (n - 1) // 2
    q = 1.0 - p
    edges = []
    u = rng.next_double()
    cum = 1.0
    k = 0
    for lo in range(n):
        for hi in range(lo + 1, n):
            cum *= q
            if u < 1.0 - cum:
                edges.append(k)
                u = rng.next_double()
                cum = 1.0
            k += 1
    return _from_positions(n, np.asarray(edges, dtype=np.int64), "csr")


def min_degree(g: Graph) -> int:
    """Minimum vertex degree; 0 for the empty graph."""
    return int(g.degrees.min()) if g.n else 0


def save_edge_list(g: Graph, fp) -> None:
    """Write the canonical edge-list text format to a file object or path."""
    if isinstance(fp, (str, bytes)):
        with open(fp, "w", newline="\n", encoding="utf-8") as f:
            save_edge_list(g, f)
        return
    fp.write(f"{g.n} {g.edge_count}\n")
    for u, v in g.edges():
        fp.write(f"{u} {v}\n")


def load_edge_list(fp, layout: str | None = None) -> Graph:
    """Read the edge-list text format; layout defaults to the density rule."""
    if isinstance(fp, (str, bytes)):
        with open(fp, "r", encoding="utf-8") as f:
            return load_edge_list(f, layout)
    header = fp.readline().split()
    if len(header) != 2:
        raise ValueError("bad header, expected 'n m'")
    n, m = int(header[0]), int(header[1])
    edges = np.loadtxt(io.StringIO(fp.read()), dtype=np.int64, ndmin=2) if m else \
        np.empty((0, 2), dtype=np.int64)
    if edges.shape[0] != m:
        raise ValueError(f"expected {m} edges, found {edges.shape[0]}")
    if layout is None:
        phat_n = 4.0 * m / max(n - 1, 1) / 2.0
        layout = "dense" if phat_n >= DENSE_THRESHOLD else "csr"
    return from_edges(n, edges, layout=layout)
