"""Ground state energy solvers and rounding procedures.

Every solver works on the canonical tensor ``T[n, z] = sum_e J^e_z(W^e_n)``
(see :func:`gselab.arrays.canonical_tensor`), so plain, layered and
color-table instances share one code path.  Energies are normalized by
``k**r`` as in :func:`gselab.arrays.energy`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial, prod

import numpy as np

from . import rng
from .arrays import (
    FractionalPartition,
    IntegerPartition,
    StateDistribution,
    as_partition,
    canonical_tensor,
    einsum_subscripts,
    repeated_index_mask,
)
from .errors import ArgumentError, CapacityError, InfeasibleError
from .graphon import StepKernel

ENUMERATION_GUARD = 20_000_000
IMPROVE_TOL = 1e-12
MAX_SWEEPS = 1000
PIVOT_TOL = 1e-10
_BATCH_CELLS = 1 << 22


@dataclass(frozen=True)
class GseResult:
    value: float
    argmax: IntegerPartition | FractionalPartition
    solver: str  # "exact" | "local" | "ascent"
    restarts: int
    certificate: str  # "exact" | "heuristic"


@dataclass
class Instance:
    """Canonical tensor of an instance plus its dimensions."""

    T: np.ndarray
    k: int
    q: int
    r: int

    @classmethod
    def of(cls, G, J) -> "Instance":
        if isinstance(G, Instance):
            return G
        T = np.asarray(canonical_tensor(G, J), dtype=float)
        r = T.ndim // 2
        return cls(T, T.shape[0], T.shape[-1], r)

    def energy(self, x) -> float:
        w = as_partition(x).weights
        return _tensor_energy(self.T, w) / self.k**self.r

    def zero_diagonal(self) -> "Instance":
        T = self.T.copy()
        T[repeated_index_mask(self.k, self.r)] = 0.0
        return Instance(T, self.k, self.q, self.r)

    def batch_energy(self, S: np.ndarray) -> np.ndarray:
        """Energies of integer assignments, one per row of ``S`` (shape ``(N, k)``)."""
        k, q, r = self.k, self.q, self.r
        flat = self.T.reshape(k**r, q**r)
        tuples = np.indices((k,) * r).reshape(r, -1)
        weights = q ** np.arange(r - 1, -1, -1)
        out = np.empty(S.shape[0])
        step = max(1, _BATCH_CELLS // k**r)
        rows = np.arange(k**r)
        for start in range(0, S.shape[0], step):
            s = S[start : start + step]
            zcode = np.zeros((s.shape[0], k**r), dtype=np.int64)
            for j in range(r):
                zcode += s[:, tuples[j]] * weights[j]
            out[start : start + step] = flat[rows[None, :], zcode].sum(axis=1)
        return out / k**r


def _tensor_energy(T: np.ndarray, w: np.ndarray) -> float:
    r = T.ndim // 2
    ns, zs = einsum_subscripts(r)
    spec = ns + zs + "," + ",".join(n + z for n, z in zip(ns, zs)) + "->"
    return float(np.einsum(spec, T, *([w] * r), optimize=True))


def _tensor_derivative(T: np.ndarray, w: np.ndarray, beta: np.ndarray) -> float:
    """``d/dt sum T[n,z] prod_j (w + t beta)[n_j, z_j]`` at ``t = 0``."""
    r = T.ndim // 2
    ns, zs = einsum_subscripts(r)
    spec = ns + zs + "," + ",".join(n + z for n, z in zip(ns, zs)) + "->"
    total = 0.0
    for j in range(r):
        factors = [beta if i == j else w for i in range(r)]
        total += float(np.einsum(spec, T, *factors, optimize=True))
    return total


# ---------------------------------------------------------------------------
# microcanonical count vectors

def admissible_counts(k: int, a: StateDistribution) -> list[tuple[int, ...]]:
    """Class-count vectors ``c`` with ``|c_i / k - a_i| <= 1/k`` and ``sum c = k``."""
    ranges = []
    for ai in a.masses:
        lo = max(0, int(np.ceil(k * ai - 1 - 1e-9)))
        hi = int(np.floor(k * ai + 1 + 1e-9))
        ranges.append(range(lo, hi + 1))
    return [c for c in itertools.product(*ranges) if sum(c) == k]


def target_counts(k: int, a: StateDistribution) -> np.ndarray:
    """``floor(k a_i)`` completed by largest remainder, ties to the lower class index."""
    exact = k * a.masses
    base = np.floor(exact + 1e-12).astype(np.int64)
    rem = exact - base
    short = k - int(base.sum())
    order = sorted(range(a.q), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        base[i] += 1
    return base


def multiset_assignments(counts) -> np.ndarray:
    """All distinct assignments of ``sum(counts)`` vertices with the given class counts."""
    counts = [int(c) for c in counts]
    k = sum(counts)
    n = factorial(k)
    for c in counts:
        n //= factorial(c)
    if n > ENUMERATION_GUARD:
        raise CapacityError(f"{n} assignments exceed the enumeration guard {ENUMERATION_GUARD}")
    out = np.empty((n, k), dtype=np.int64)
    row = 0

    def fill(cls: int, free: tuple[int, ...], current: np.ndarray):
        nonlocal row
        if cls == len(counts) - 1:
            current[list(free)] = cls
            out[row] = current
            row += 1
            return
        for chosen in itertools.combinations(free, counts[cls]):
            current[list(chosen)] = cls
            rest = tuple(v for v in free if v not in chosen)
            fill(cls + 1, rest, current)

    if k:
        fill(0, tuple(range(k)), np.zeros(k, dtype=np.int64))
    return out


def _all_assignments(k: int, q: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    powers = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


# ---------------------------------------------------------------------------
# integer solvers

def gse_integer_exact(G, J=None, micro: StateDistribution | None = None, exact_counts=None) -> GseResult:
    """Exact integer GSE by enumeration.

    Without ``micro`` all ``q**k`` assignments are enumerated (guard
    ``q**k <= 2e7``).  With ``micro`` only partitions in the relaxed set
    (every class count within 1 of ``k a_i``) are enumerated, one multiset
    at a time; ``exact_counts`` pins the class counts instead.  Ties keep
    the first assignment in enumeration order.
    """
    inst = Instance.of(G, J)
    k, q = inst.k, inst.q
    if micro is not None or exact_counts is not None:
        if exact_counts is not None:
            count_list = [tuple(int(c) for c in exact_counts)]
            if len(count_list[0]) != q or sum(count_list[0]) != k or min(count_list[0]) < 0:
                raise InfeasibleError(f"class counts {count_list[0]} do not partition {k} vertices into {q} classes")
        else:
            if micro.q != q:
                raise ArgumentError(f"state distribution has {micro.q} classes, instance has {q}")
            count_list = admissible_counts(k, micro)
            if not count_list:
                raise InfeasibleError(f"no integer partition of {k} vertices matches masses {micro.masses}")
        total = sum(factorial(k) // prod(factorial(c) for c in cs) for cs in count_list)
        if total > ENUMERATION_GUARD:
            raise CapacityError(f"{total} constrained partitions exceed the guard {ENUMERATION_GUARD}")
        best_val, best_s = -np.inf, None
        for cs in count_list:
            S = multiset_assignments(cs)
            vals = inst.batch_energy(S)
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_s = float(vals[i]), S[i]
        return GseResult(best_val, IntegerPartition(best_s, q), "exact", 1, "exact")
    total = q**k
    if total > ENUMERATION_GUARD:
        raise CapacityError(f"q**k = {total} exceeds the enumeration guard {ENUMERATION_GUARD}")
    step = max(1, _BATCH_CELLS // max(1, k**inst.r))
    best_val, best_s = -np.inf, None
    for start in range(0, total, step):
        S = _all_assignments(k, q, start, min(total, start + step))
        vals = inst.batch_energy(S)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_s = float(vals[i]), S[i]
    return GseResult(best_val, IntegerPartition(best_s, q), "exact", 1, "exact")


def _single_move_gains(inst: Instance, s: np.ndarray) -> np.ndarray:
    """``k**r`` times the energy change of moving vertex ``v`` to state ``a``."""
    T, k = inst.T, inst.k
    ar = np.arange(k)
    if inst.r == 2:
        R = T[:, ar, :, s].sum(axis=0)  # R[v, a] = sum_j T[v, j, a, s_j]
        C = T[ar, :, s, :].sum(axis=0)  # C[v, a] = sum_i T[i, v, s_i, a]
        D = T[ar, ar]  # D[v, a, b] = T[v, v, a, b]
        own = D[ar, :, s]  # T[v, v, a, s_v]
        own_t = D[ar, s, :]  # T[v, v, s_v, a]
        diag = np.einsum("vaa->va", D)
        contrib = R - own + C - own_t + diag
        return contrib - contrib[ar, s][:, None]
    base = inst.batch_energy(s[None, :])[0]
    cand = np.repeat(s[None, :], k * inst.q, axis=0)
    cand[np.arange(k * inst.q), np.repeat(ar, inst.q)] = np.tile(np.arange(inst.q), k)
    return (inst.batch_energy(cand) - base).reshape(k, inst.q) * k**inst.r


def _swap_gains(inst: Instance, s: np.ndarray) -> np.ndarray:
    """``k**r`` times the energy change of exchanging the states of ``u`` and ``v``."""
    T, k = inst.T, inst.k
    if inst.r == 2:
        single = _single_move_gains(inst, s)
        su, sv = s[:, None], s[None, :]
        U, V = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")

        def P(a, b):
            return T[U, V, a, b] + T[V, U, b, a]

        corr = P(sv, su) + P(su, sv) - P(sv, sv) - P(su, su)
        gains = single[np.arange(k)[:, None], sv] + single[np.arange(k)[None, :], su].T + corr
        gains = np.where(su != sv, gains, -np.inf)
        return gains
    base = inst.batch_energy(s[None, :])[0]
    pairs = [(u, v) for u in range(k) for v in range(u + 1, k) if s[u] != s[v]]
    gains = np.full((k, k), -np.inf)
    if pairs:
        cand = np.repeat(s[None, :], len(pairs), axis=0)
        for i, (u, v) in enumerate(pairs):
            cand[i, u], cand[i, v] = s[v], s[u]
        vals = (inst.batch_energy(cand) - base) * k**inst.r
        for (u, v), g in zip(pairs, vals):
            gains[u, v] = g
    return gains


def _hill_climb(inst: Instance, s: np.ndarray, swaps: bool) -> np.ndarray:
    s = s.copy()
    scale = max(1.0, float(np.max(np.abs(inst.T))))
    for _ in range(MAX_SWEEPS * max(1, inst.k)):
        if swaps:
            g = _swap_gains(inst, s)
            u, v = np.unravel_index(int(np.argmax(g)), g.shape)
            if not g[u, v] > IMPROVE_TOL * scale:
                break
            s[u], s[v] = s[v], s[u]
        else:
            g = _single_move_gains(inst, s)
            v, a = np.unravel_index(int(np.argmax(g)), g.shape)
            if not g[v, a] > IMPROVE_TOL * scale:
                break
            s[v] = a
    return s


def gse_integer_local(G, J=None, restarts: int = 10, seed: int = 0,
                      micro: StateDistribution | None = None, exact_counts=None) -> GseResult:
    """Steepest-ascent hill climbing over integer partitions.

    Unconstrained runs use single-vertex moves.  With ``micro`` (or
    ``exact_counts``) every admissible class-count vector gets ``restarts``
    runs from random partitions with those counts, and moves swap the states
    of two vertices so the counts are preserved.  The best run wins; ties
    keep the earliest run.
    """
    inst = Instance.of(G, J)
    k, q = inst.k, inst.q
    if exact_counts is not None:
        count_list = [np.asarray(exact_counts, dtype=np.int64)]
    elif micro is not None:
        count_list = [np.array(c) for c in admissible_counts(k, micro)]
        if not count_list:
            raise InfeasibleError(f"no integer partition of {k} vertices matches masses {micro.masses}")
    else:
        count_list = [None]
    best_val, best_s = -np.inf, None
    n = max(1, int(restarts))
    for ci, counts in enumerate(count_list):
        for t in range(n):
            gen = np.random.default_rng(rng.derive_seed("gse-local", int(seed), ci, t))
            if counts is None:
                s0 = gen.integers(0, q, size=k)
            else:
                s0 = gen.permutation(np.repeat(np.arange(q), counts))
            s = _hill_climb(inst, s0, swaps=counts is not None)
            val = float(inst.batch_energy(s[None, :])[0])
            if val > best_val:
                best_val, best_s = val, s
    return GseResult(best_val, IntegerPartition(best_s, q), "local", n, "heuristic")


# ---------------------------------------------------------------------------
# fractional ascent and rounding

def _row_candidates(inst: Instance, w: np.ndarray, v: int) -> np.ndarray:
    """``k**r`` times the energy with row ``v`` replaced by each unit vector."""
    q = inst.q
    if inst.r == 2:
        T = inst.T
        others = w.copy()
        others[v] = 0.0
        R = np.einsum("jab,jb->a", T[v], others)
        C = np.einsum("iab,ia->b", T[:, v], others)
        D = np.einsum("aa->a", T[v, v])
        rest = np.einsum("ijab,ia,jb->", T, others, others)
        return rest + R + C + D
    out = np.empty(q)
    for a in range(q):
        trial = w.copy()
        trial[v] = 0.0
        trial[v, a] = 1.0
        out[a] = _tensor_energy(inst.T, trial)
    return out


def _ascend(inst: Instance, w: np.ndarray) -> np.ndarray:
    """Cyclic row-wise ascent: move a row to its best vertex if that does not lose energy."""
    w = w.copy()
    # rows enter affinely when repeated-index entries vanish: always move
    affine = not np.any(inst.T[repeated_index_mask(inst.k, inst.r)])
    current = _tensor_energy(inst.T, w)
    for _ in range(MAX_SWEEPS):
        start = current
        for v in range(inst.k):
            cand = _row_candidates(inst, w, v)
            a = int(np.argmax(cand))
            if affine or cand[a] >= current:
                w[v] = 0.0
                w[v, a] = 1.0
                current = float(cand[a])
        if current - start < IMPROVE_TOL * max(1.0, abs(current)):
            break
    return w


def gse_fractional_ascent(G, J=None, restarts: int = 20, seed: int = 0, starts=None) -> GseResult:
    """Fractional GSE by row-wise coordinate ascent from several starts.

    The energy is affine in each row of ``x`` once repeated-index entries are
    zero, so on such instances every visited row lands on a vertex and the
    terminal partition is integral.  Elsewhere a row is moved only when the
    move does not decrease the energy.  Restart 0 starts from the uniform
    partition, the others from random Dirichlet rows; ``starts`` adds
    explicit starting partitions in front.
    """
    inst = Instance.of(G, J)
    k, q = inst.k, inst.q
    initial = [as_partition(x).weights for x in (starts or [])]
    for t in range(max(1, int(restarts))):
        if t == 0:
            initial.append(np.full((k, q), 1.0 / q))
        else:
            gen = np.random.default_rng(rng.derive_seed("gse-ascent", int(seed), t))
            initial.append(gen.dirichlet(np.ones(q), size=k))
    best_val, best_w = -np.inf, None
    for w0 in initial:
        w = _ascend(inst, w0)
        val = _tensor_energy(inst.T, w) / k**inst.r
        if val > best_val:
            best_val, best_w = val, w
    return GseResult(best_val, FractionalPartition(best_w), "ascent", len(initial), "heuristic")


def round_to_integer(G, J, x) -> IntegerPartition:
    """Round each fractional row of ``x`` to a vertex in one pass.

    Rows are visited in order and set to the state that maximizes the energy
    of the repeated-index-free instance, where the energy is affine in the
    row, so that energy never decreases.  Integral rows are left alone.
    """
    inst = Instance.of(G, J).zero_diagonal()
    w = np.array(as_partition(x).weights)
    frac = [v for v in range(inst.k) if not np.all((w[v] == 0) | (w[v] == 1))]
    w = _ascend_once(inst, w, frac)
    return IntegerPartition(np.argmax(w, axis=1), inst.q)


def _ascend_once(inst: Instance, w: np.ndarray, rows) -> np.ndarray:
    for v in rows:
        cand = _row_candidates(inst, w, v)
        a = int(np.argmax(cand))
        w[v] = 0.0
        w[v, a] = 1.0
    return w


def rounding_loss_bound(r: int, k: int, q: int, g_norm: float, j_norm: float) -> float:
    """Stated bound ``r**2 / (2k) * q**r * ||G|| ||J||`` for :func:`round_to_integer`."""
    return r**2 / (2 * k) * q**r * g_norm * j_norm


# ---------------------------------------------------------------------------
# microcanonical rounding

def _null_vector(A: np.ndarray) -> np.ndarray | None:
    """First basis vector of the null space of ``A`` from reduced row echelon form."""
    M = A.astype(float).copy()
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(M[r:, c])))
        if abs(M[p, c]) <= PIVOT_TOL:
            continue
        M[[r, p]] = M[[p, r]]
        M[r] /= M[r, c]
        for i in range(rows):
            if i != r:
                M[i] -= M[i, c] * M[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    if not free:
        return None
    f = free[0]
    beta = np.zeros(cols)
    beta[f] = 1.0
    for i, c in enumerate(pivots):
        beta[c] = -M[i, f]
    return beta


def _snap(w: np.ndarray) -> np.ndarray:
    w = np.where(np.abs(w) < 1e-12, 0.0, w)
    return np.where(np.abs(w - 1.0) < 1e-12, 1.0, w)


def _bad_rows(w: np.ndarray) -> list[int]:
    return [v for v in range(w.shape[0]) if np.count_nonzero(w[v] > 0) >= 2]


@dataclass
class MicroRoundingTrace:
    """Fractional-entry counts before the first and after every elimination step."""

    fractional_counts: list[int] = field(default_factory=list)
    final_bad: int = 0


def round_microcanonical(G, J, x, a: StateDistribution, trace: MicroRoundingTrace | None = None) -> IntegerPartition:
    """Round an ``a``-fractional partition into the relaxed class-mass set.

    While at least ``q + 1`` rows are fractional, pick the first ``q + 1`` of
    them, find a direction in the null space of their ``2q + 1`` row and
    column sum constraints, and move along it to the boundary on the side
    where the first-order energy change is nonnegative (ties move to the
    upper boundary).  Each step removes at least one fractional entry.

    The at most ``q`` remaining fractional rows are then rounded with class
    counts ``floor`` or ``ceil`` of their column sums (largest remainder),
    trying every such assignment and keeping the best, which lands in the
    relaxed set by construction.
    """
    inst = Instance.of(G, J)
    k, q = inst.k, inst.q
    w = np.array(as_partition(x).weights, dtype=float)
    if a.q != q:
        raise ArgumentError(f"state distribution has {a.q} classes, partition has {q}")
    if np.max(np.abs(w.mean(axis=0) - a.masses)) > 1e-9:
        raise ArgumentError("partition column means differ from the class masses")
    if trace is not None:
        trace.fractional_counts.append(_frac_count(w))
    while True:
        bad = _bad_rows(w)
        if len(bad) < q + 1:
            break
        S = bad[: q + 1]
        entries = [(v, i) for v in S for i in range(q) if 0 < w[v, i] < 1]
        A = np.zeros((2 * q + 1, len(entries)))
        for col, (v, i) in enumerate(entries):
            A[i, col] = 1.0  # column sums over S
            A[q + S.index(v), col] = 1.0  # row sums
        vec = _null_vector(A)
        if vec is None:
            raise InfeasibleError("constraint system has no null direction")
        beta = np.zeros_like(w)
        for (v, i), b in zip(entries, vec):
            beta[v, i] = b
        vals = np.array([w[v, i] for v, i in entries])
        up = [(1 - x0) / b if b > 0 else -x0 / b for x0, b in zip(vals, vec) if b != 0]
        down = [x0 / b if b > 0 else (x0 - 1) / b for x0, b in zip(vals, vec) if b != 0]
        t2, t1 = min(up), min(down)
        c1 = _tensor_derivative(inst.T, w, beta)
        t0 = t2 if c1 >= 0 else -t1
        w = _snap(w + t0 * beta)
        w = np.clip(w, 0.0, 1.0)
        if trace is not None:
            trace.fractional_counts.append(_frac_count(w))
    bad = _bad_rows(w)
    if trace is not None:
        trace.final_bad = len(bad)
    fixed = np.argmax(w, axis=1)
    if not bad:
        return IntegerPartition(fixed, q)
    sums = w[bad].sum(axis=0)
    base = np.floor(sums + 1e-9).astype(np.int64)
    rem = sums - base
    extra = len(bad) - int(base.sum())
    for i in sorted(range(q), key=lambda i: (-rem[i], i))[:extra]:
        base[i] += 1
    cands = multiset_assignments(base)
    S = np.repeat(fixed[None, :], cands.shape[0], axis=0)
    S[:, bad] = cands
    vals = inst.batch_energy(S)
    return IntegerPartition(S[int(np.argmax(vals))], q)


def _frac_count(w: np.ndarray) -> int:
    return int(np.count_nonzero((w > 0) & (w < 1)))


def micro_rounding_bound(r: int, k: int, q: int, g_norm: float, j_norm: float) -> float:
    """Stated bound ``5**r q**(r+1) / k * ||G|| ||J||`` for :func:`round_microcanonical`."""
    return 5**r * q ** (r + 1) / k * g_norm * j_norm


def in_relaxed_set(p: IntegerPartition, a: StateDistribution) -> bool:
    """Every class fraction within ``1/k`` of its mass."""
    return bool(np.all(np.abs(p.counts() - p.k * a.masses) <= 1 + 1e-9))


def transport_partition(x, a: StateDistribution, b: StateDistribution) -> FractionalPartition:
    """Move class masses from ``a`` to ``b`` monotonically.

    Every class with ``b_i < a_i`` keeps the fraction ``b_i / a_i`` of each
    row's weight; the freed weight of each row is split among the classes
    with ``b_i > a_i`` in proportion to ``b_i - a_i``.  Column means become
    ``b`` and each entry only moves in the direction of ``b_i - a_i``.
    """
    w = np.array(as_partition(x).weights, dtype=float)
    if a.q != w.shape[1] or b.q != w.shape[1]:
        raise ArgumentError("state distributions and partition disagree on q")
    if np.max(np.abs(w.mean(axis=0) - a.masses)) > 1e-9:
        raise ArgumentError("partition column means differ from a")
    am, bm = a.masses, b.masses
    donors = bm < am
    receivers = bm > am
    if not donors.any():
        return FractionalPartition(w)
    scale = np.where(donors, bm / np.where(am > 0, am, 1.0), 1.0)
    freed = (w * (1 - scale)).sum(axis=1)
    out = w * scale
    share = np.where(receivers, bm - am, 0.0)
    out += freed[:, None] * share[None, :] / share.sum()
    return FractionalPartition.normalized(out)


def continuity_bound(r: int, g_norm: float, j_norm: float, a, b) -> float:
    a = np.asarray(getattr(a, "masses", a))
    b = np.asarray(getattr(b, "masses", b))
    return r * g_norm * j_norm * float(np.abs(a - b).sum())


# ---------------------------------------------------------------------------
# continuum reference for step kernels

def _simplex_grid(q: int, n: int) -> np.ndarray:
    pts = [c for c in itertools.product(range(n + 1), repeat=q - 1) if sum(c) <= n]
    return np.array([list(c) + [n - sum(c)] for c in pts], dtype=float) / n


def kernel_gse_reference(W, J, restarts: int = 20, seed: int = 0, resolution: int | None = None) -> GseResult:
    """Continuum GSE of a step kernel by multi-start row-wise grid ascent.

    The energy of a step kernel under an assignment of states to points only
    depends on the average state weights on each step, so the continuum
    optimum is a fractional optimum over the ``m`` steps with mass-weighted
    cells.  Rows are not affine when the kernel has mass on the diagonal
    cells, so each row is maximized over a simplex grid (fine one-dimensional
    grid when ``q = 2``) and then refined locally.  Starts include every
    integer assignment when ``q**m`` is small.
    """
    if not isinstance(W, StepKernel):
        raise ArgumentError("reference oracle needs a StepKernel")
    inst = Instance.of(W.weighted_array(), J)
    m, q = inst.k, inst.q
    n = resolution or (400 if q == 2 else max(4, int(round(4000 ** (1 / (q - 1))))))
    grid = _simplex_grid(q, n)
    starts = []
    if q**m <= 4096:
        for s in itertools.product(range(q), repeat=m):
            w = np.zeros((m, q))
            w[np.arange(m), s] = 1.0
            starts.append(w)
    starts.append(np.full((m, q), 1.0 / q))
    for t in range(max(0, restarts)):
        gen = np.random.default_rng(rng.derive_seed("kernel-reference", int(seed), t))
        starts.append(gen.dirichlet(np.ones(q), size=m))
    best_val, best_w = -np.inf, None
    for w in starts:
        w = _grid_ascent(inst, w.copy(), grid, n)
        val = _tensor_energy(inst.T, w) / m**inst.r
        if val > best_val:
            best_val, best_w = val, w
    return GseResult(best_val, FractionalPartition.normalized(best_w), "ascent", len(starts), "heuristic")


def _grid_ascent(inst: Instance, w: np.ndarray, grid: np.ndarray, n: int) -> np.ndarray:
    current = _tensor_energy(inst.T, w)
    for _ in range(MAX_SWEEPS):
        start = current
        for v in range(inst.k):
            best_row, best = w[v].copy(), current
            for pts in (grid, _local_grid(w[v], n)):
                vals = _row_values(inst, w, v, pts)
                i = int(np.argmax(vals))
                if vals[i] > best:
                    best, best_row = float(vals[i]), pts[i]
            w[v] = best_row
            current = best
        if current - start < IMPROVE_TOL * max(1.0, abs(current)):
            break
    return w


def _local_grid(row: np.ndarray, n: int, levels: int = 3) -> np.ndarray:
    # successively finer grids around the current row, clipped to the simplex
    pts = [row]
    q = row.size
    for lvl in range(1, levels + 1):
        h = 1.0 / (n * 10**lvl)
        for d in itertools.product((-2, -1, 0, 1, 2), repeat=q - 1):
            p = row.copy()
            p[:-1] += h * np.array(d)
            p[-1] = 1.0 - p[:-1].sum()
            if np.all(p >= 0):
                pts.append(p)
    return np.array(pts)


def _row_values(inst: Instance, w: np.ndarray, v: int, pts: np.ndarray) -> np.ndarray:
    """Energy (times ``k**r``) with row ``v`` replaced by each point of ``pts``."""
    r = inst.r
    # energy is a polynomial in row v of degree <= r; evaluate by substitution
    out = np.empty(pts.shape[0])
    if r == 2:
        T = inst.T
        others = w.copy()
        others[v] = 0.0
        Rv = np.einsum("jab,jb->a", T[v], others)
        Cv = np.einsum("iab,ia->b", T[:, v], others)
        rest = np.einsum("ijab,ia,jb->", T, others, others)
        out[:] = rest + pts @ Rv + pts @ Cv + np.einsum("pa,ab,pb->p", pts, T[v, v], pts)
        return out
    for i, p in enumerate(pts):
        trial = w.copy()
        trial[v] = p
        out[i] = _tensor_energy(inst.T, trial)
    return out


def loss_terms(r: int, q: int) -> int:
    """``(q - 1)(3q + 2)**r + q * q**r``: the constant assembled in the elimination argument."""
    return (q - 1) * (3 * q + 2) ** r + q * q**r

