"""Counter-based randomness.

Every uniform used by the samplers is a pure function of a 64-bit key and a
64-bit counter, so a uniform attached to a vertex subset can be recomputed on
demand and two samplers that share a key see the same randomness.

Subset encoding: a subset of vertices (0-based) is sorted and radix-encoded
with radix ``2**16``::

    code({v_1 < v_2 < ... < v_s}) = sum_i (v_i + 1) * 2**(16 * (i - 1))

The empty set has code 0.  Vertices must be below ``2**16 - 1`` and subsets
have at most 3 elements (code stays below ``2**48``), which covers the desk
scale this package targets.
"""
from __future__ import annotations

import hashlib
from typing import Iterable

import numpy as np

RADIX_BITS = 16
MAX_VERTEX = (1 << RADIX_BITS) - 2
MAX_SUBSET_SIZE = 3

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(*parts: object) -> int:
    """Hash an arbitrary tuple of seed material into a 64-bit key.

    Uses BLAKE2b over the ``repr`` of the parts, so the result is stable
    across processes and Python versions (unlike ``hash``).
    """
    h = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def uniforms(key: int, counters: np.ndarray | Iterable[int]) -> np.ndarray:
    """Uniforms in [0, 1) for each counter under ``key`` (53-bit resolution)."""
    c = np.asarray(counters, dtype=np.uint64)
    k = np.uint64(int(key) & _MASK64)
    with np.errstate(over="ignore"):
        z = _mix(np.atleast_1d(k + _mix(c + _GOLDEN)) ^ k)
    out = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    return out.reshape(c.shape)


def subset_code(subset: Iterable[int]) -> int:
    """Canonical radix code of a vertex subset (order and repeats ignored)."""
    verts = sorted(set(int(v) for v in subset))
    if len(verts) > MAX_SUBSET_SIZE:
        raise ValueError(f"subsets of size > {MAX_SUBSET_SIZE} are not encodable")
    code = 0
    for i, v in enumerate(verts):
        if not 0 <= v <= MAX_VERTEX:
            raise ValueError(f"vertex {v} outside encodable range")
        code |= (v + 1) << (RADIX_BITS * i)
    return code


def tuple_codes(index_arrays: list[np.ndarray]) -> np.ndarray:
    """Vectorized :func:`subset_code` of the set ``{i_1, ..., i_s}``.

    ``index_arrays`` holds ``s`` broadcastable integer arrays; entry ``n`` of
    the result is the code of the set formed by the ``n``-th entries.
    Repeated vertices collapse, as for :func:`subset_code`.
    """
    if not index_arrays:
        return np.zeros((), dtype=np.uint64)
    stacked = np.stack(np.broadcast_arrays(*index_arrays), axis=-1).astype(np.int64)
    if stacked.shape[-1] > MAX_SUBSET_SIZE:
        raise ValueError(f"subsets of size > {MAX_SUBSET_SIZE} are not encodable")
    s = np.sort(stacked, axis=-1)
    new = np.ones_like(s, dtype=bool)
    new[..., 1:] = s[..., 1:] != s[..., :-1]
    rank = np.cumsum(new, axis=-1) - 1
    terms = np.where(new, (s + 1).astype(np.uint64) << (np.uint64(RADIX_BITS) * rank.astype(np.uint64)), np.uint64(0))
    return np.bitwise_or.reduce(terms, axis=-1)


def random_subset(n: int, k: int, key: int) -> np.ndarray:
    """First ``k`` entries of a forward Fisher-Yates shuffle of ``range(n)``.

    The result is a uniformly random ordered ``k``-tuple of distinct
    vertices; sort it to get a uniform ``k``-subset.
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} of {n} elements without replacement")
    perm = np.arange(n)
    u = uniforms(key, np.arange(k))
    for i in range(k):
        j = i + min(int(u[i] * (n - i)), n - i - 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:k].copy()
