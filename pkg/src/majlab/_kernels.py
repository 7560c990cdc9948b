"""Low-level numba kernels: the PRNG core and the G(n,p) samplers.

Every random decision in the package flows through the routines here, so a
result is reproducible from ``(master_seed, stream_index)`` alone.  The
algorithms are fixed forever:

* stream derivation: SplitMix64.  State word ``j`` of stream ``i`` under
  master seed ``m`` is the SplitMix64 output at counter ``4*i + j + 1``,
  i.e. ``mix64(m + (4*i + j + 1) * GOLDEN_GAMMA)`` (all mod 2**64).
* generator: xoshiro256** (Blackman/Vigna), 256-bit shift-register state.
* uniform doubles: ``(next_u64() >> 11) * 2**-53``, in [0, 1).

Sampling protocols (documented here because they define reproducibility):

* dense G(n,p): one u64 per unordered pair in canonical order
  ``(0,1), (0,2), ..., (0,n-1), (1,2), ...``; the pair is an edge iff the
  draw is below ``round(p * 2**64)``.
* sparse G(n,p): geometric skip sampling.  One double ``u`` is consumed per
  edge produced (plus one terminating draw); the number of pairs skipped is
  ``floor(log1p(-u) / log1p(-p))``.  Under the coupling "pair j since the
  last edge is an edge iff u < 1 - (1-p)**(j+1)" this is a per-pair
  Bernoulli(p) process over the same canonical pair order.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

GOLDEN_GAMMA = 0x9E3779B97F4A7C15

#: Number of distinct uniform doubles: doubles are (u64 >> 11) * 2**-53.
DOUBLE_DENOM = float(1 << 53)


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True)
def derive_state_words(master_seed, stream_index):
    out = np.empty(4, dtype=np.uint64)
    for j in range(4):
        k = uint64(4) * uint64(stream_index) + uint64(j + 1)
        out[j] = _mix64(uint64(master_seed) + k * uint64(GOLDEN_GAMMA))
    # xoshiro forbids the all-zero state; unreachable in practice, kept exact.
    if out[0] | out[1] | out[2] | out[3] == uint64(0):
        out[0] = uint64(GOLDEN_GAMMA)
    return out


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (uint64(64) - k))


@njit(cache=True, nogil=True, inline="always")
def next_u64(s):
    result = _rotl(s[1] * uint64(5), uint64(7)) * uint64(9)
    t = s[1] << uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], uint64(45))
    return result


@njit(cache=True, nogil=True, inline="always")
def next_double(s):
    return (next_u64(s) >> uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def one_u64(s):
    return next_u64(s)


@njit(cache=True, nogil=True)
def fill_u64(s, out):
    for i in range(out.shape[0]):
        out[i] = next_u64(s)


@njit(cache=True, nogil=True)
def fill_double(s, out):
    for i in range(out.shape[0]):
        out[i] = next_double(s)


@njit(cache=True, nogil=True)
def sample_dense_bits(s, n, thresh, bits, degrees):
    """Fill a packed (n, ceil(n/64)) bit-matrix with a G(n,p) sample.

    One u64 draw per canonical pair; edge iff draw < thresh.  Returns the
    edge count.
    """
    ec = 0
    for u in range(n):
        for v in range(u + 1, n):
            if next_u64(s) < thresh:
                bits[u, v >> 6] |= uint64(1) << uint64(v & 63)
                bits[v, u >> 6] |= uint64(1) << uint64(u & 63)
                degrees[u] += 1
                degrees[v] += 1
                ec += 1
    return ec


@njit(cache=True, nogil=True)
def sample_sparse_positions(s, npairs, p, out):
    """Geometric-skip sampler over linear pair indices 0..npairs-1.

    Writes ascending edge positions into ``out``; returns the edge count,
    or -1 if ``out`` is too small (caller retries with a fresh state copy).
    """
    log1mp = math.log1p(-p)
    cap = out.shape[0]
    pos = 0
    cnt = 0
    while True:
        u = next_double(s)
        skip = math.log1p(-u) / log1mp
        if skip >= npairs - pos:
            return cnt
        pos += int(skip)
        if pos >= npairs:
            return cnt
        if cnt == cap:
            return -1
        out[cnt] = pos
        cnt += 1
        pos += 1


@njit(cache=True, nogil=True)
def build_csr(positions, n):
    """CSR adjacency from ascending linear pair indices.

    Per-row neighbor lists come out sorted because edges arrive in canonical
    (u, v) order.
    """
    m = positions.shape[0]
    us = np.empty(m, dtype=np.int32)
    vs = np.empty(m, dtype=np.int32)
    degrees = np.zeros(n, dtype=np.int64)
    twon1 = 2.0 * n - 1.0
    for i in range(m):
        k = positions[i]
        u = int((twon1 - math.sqrt(twon1 * twon1 - 8.0 * k)) / 2.0)
        # float sqrt can land one row off; fix exactly in integers
        while u > 0 and u * (2 * n - u - 1) // 2 > k:
            u -= 1
        while k - u * (2 * n - u - 1) // 2 >= n - 1 - u:
            u += 1
        v = k - u * (2 * n - u - 1) // 2 + u + 1
        us[i] = u
        vs[i] = v
        degrees[u] += 1
        degrees[v] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    for r in range(n):
        indptr[r + 1] = indptr[r] + degrees[r]
    cursor = indptr[:n].copy()
    indices = np.empty(2 * m, dtype=np.int32)
    for i in range(m):
        indices[cursor[us[i]]] = vs[i]
        cursor[us[i]] += 1
        indices[cursor[vs[i]]] = us[i]
        cursor[vs[i]] += 1
    return indptr, indices, degrees


@njit(cache=True, nogil=True)
def batch_sparse_presence(master_seed, stream_indices, n, p, presence):
    """Sample one sparse G(n,p) per stream index into a pair-presence matrix.

    presence: (k, n*(n-1)//2) uint8, zeroed by the caller.  Each trial uses
    exactly the scalar sparse protocol on its own stream.
    """
    npairs = n * (n - 1) // 2
    log1mp = math.log1p(-p)
    for t in range(stream_indices.shape[0]):
        s = derive_state_words(master_seed, stream_indices[t])
        pos = 0
        while True:
            u = next_double(s)
            skip = math.log1p(-u) / log1mp
            if skip >= npairs - pos:
                break
            pos += int(skip)
            if pos >= npairs:
                break
            presence[t, pos] = 1
            pos += 1


@njit(cache=True, nogil=True)
def batch_bernoulli_draws(master_seed, stream_indices, n, p_true, out):
    """Per stream: n uniform doubles in index order, out[t, i] = u < p_true.

    Matches the scalar protocol used by the random coloring schemes.
    """
    for t in range(stream_indices.shape[0]):
        s = derive_state_words(master_seed, stream_indices[t])
        for i in range(n):
            out[t, i] = next_double(s) < p_true
