"""Constraint satisfaction formulas and MAX-rCSP.

A formula on ``n`` variables with states ``0..q-1`` is a multiset of
constraints ``(f, e)``: a truth table ``f`` of shape ``(q,) * r`` and an
edge ``e`` of ``r`` variables.  Its evaluation representation stores, for
every edge ``e`` and state tuple ``z``, how many constraints on ``e`` are
satisfied by ``z``.  The MAX-rCSP density is a layered ground state energy
of that representation with indicator interactions.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .arrays import LayeredRArray, RArray, canonical_interactions
from .errors import ArgumentError, CapacityError, DimensionError, DomainError
from .gse import ENUMERATION_GUARD
from .stats import TrialStatistics

_BATCH = 1 << 16


@dataclass(frozen=True)
class Constraint:
    table: np.ndarray
    edge: tuple[int, ...]

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim < 1 or len(set(t.shape)) != 1:
            raise DimensionError(f"constraint table must be q x ... x q, got shape {t.shape}")
        if len(self.edge) != t.ndim:
            raise DimensionError(f"edge {self.edge} does not have arity {t.ndim}")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "edge", tuple(int(v) for v in self.edge))


@dataclass(frozen=True)
class Formula:
    """Multiset of constraints on variables ``0..n-1``.

    ``d`` bounds every entry of the evaluation representation.  Tables are
    0/1 by default; real tables in ``[-d, d]`` give weighted formulas.
    """

    n: int
    q: int
    r: int
    constraints: tuple[Constraint, ...] = field(default_factory=tuple)
    d: float = 1

    def __post_init__(self):
        cons = tuple(self.constraints)
        for c in cons:
            if c.table.shape != (self.q,) * self.r:
                raise DimensionError(f"table shape {c.table.shape} does not match q={self.q}, r={self.r}")
            if any(not 0 <= v < self.n for v in c.edge):
                raise DomainError(f"edge {c.edge} uses a variable outside 0..{self.n - 1}")
            if np.any(np.abs(c.table) > self.d):
                raise DomainError(f"constraint table exceeds the bound d={self.d}")
        object.__setattr__(self, "constraints", cons)

    def __len__(self) -> int:
        return len(self.constraints)

    @property
    def is_boolean(self) -> bool:
        return all(np.all((c.table == 0) | (c.table == 1)) for c in self.constraints)


def eval_tensor(F: Formula) -> np.ndarray:
    """``E[e, z]`` = number (or total weight) of constraints on ``e`` satisfied by ``z``.

    Shape ``(n,) * r + (q,) * r``; raises :class:`DomainError` when an entry
    exceeds ``d`` in absolute value.
    """
    E = np.zeros((F.n,) * F.r + (F.q,) * F.r)
    for c in F.constraints:
        E[c.edge] += c.table
    if np.any(np.abs(E) > F.d + 1e-12):
        raise DomainError(f"evaluation representation exceeds the bound d={F.d}")
    return E


def eval_rep(F: Formula) -> LayeredRArray:
    """Evaluation representation as a ``[q]^r``-layered r-array."""
    E = eval_tensor(F)
    layers = []
    for z in itertools.product(range(F.q), repeat=F.r):
        layer = E[(Ellipsis,) + z]
        if F.is_boolean:
            layer = layer.astype(np.int64)
        layers.append((z, RArray(layer)))
    return LayeredRArray(layers)


def indicator_interactions(q: int, r: int):
    """Layer ``z`` has coefficient 1 on state tuple ``z`` and 0 elsewhere."""
    return canonical_interactions(q, r)


def max_csp_exact(F: Formula, return_assignment: bool = False):
    """``max_sigma n**-r sum_{(f, e)} f(sigma(e))`` by enumerating all ``q**n`` assignments."""
    total = F.q**F.n
    if total > ENUMERATION_GUARD:
        raise CapacityError(f"q**n = {total} exceeds the enumeration guard {ENUMERATION_GUARD}")
    powers = F.q ** np.arange(F.n - 1, -1, -1, dtype=np.int64)
    best, best_sigma = -np.inf, None
    for start in range(0, total, _BATCH):
        idx = np.arange(start, min(total, start + _BATCH), dtype=np.int64)
        sigma = (idx[:, None] // powers[None, :]) % F.q
        vals = np.zeros(idx.size)
        for c in F.constraints:
            vals += c.table[tuple(sigma[:, v] for v in c.edge)]
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_sigma = float(vals[i]), sigma[i]
    value = best / F.n**F.r
    return (value, best_sigma) if return_assignment else value


def sample_formula(F: Formula, k: int, seed: int) -> Formula:
    """Induced subformula on a uniform ``k``-subset of variables, relabeled to ``0..k-1``."""
    if not 0 < k <= F.n:
        raise ArgumentError(f"sample size k={k} must lie in 1..{F.n}")
    S = np.sort(rng.random_subset(F.n, k, rng.derive_seed("formula-sample", int(seed))))
    pos = {int(v): i for i, v in enumerate(S)}
    kept = [
        Constraint(c.table, tuple(pos[v] for v in c.edge))
        for c in F.constraints
        if all(v in pos for v in c.edge)
    ]
    return Formula(k, F.q, F.r, tuple(kept), F.d)


def tilde_density(H: Formula, G: Formula, guard: int = 10**6) -> float:
    """Density of the monomial template of ``H`` in the evaluation of ``G``.

    Edge ``e`` of ``H`` carries ``A -> prod_z A(z) ** eval(H)[e, z]``; the
    result averages ``prod_e`` of these over all maps ``V(H) -> V(G)``.
    """
    if (H.q, H.r) != (G.q, G.r):
        raise ArgumentError(f"formulas use different state sets or arities: q={H.q},{G.q} r={H.r},{G.r}")
    if G.n**H.n > guard:
        raise CapacityError(f"{G.n}**{H.n} maps exceed the guard {guard}")
    EH, EG = eval_tensor(H), eval_tensor(G)
    zaxes = tuple(range(G.r, 2 * G.r))
    factors = []
    for e in itertools.product(range(H.n), repeat=H.r):
        expo = EH[e]
        if not np.any(expo):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            P = np.prod(np.where(expo == 0, 1.0, EG**expo), axis=zaxes)
        factors.append((e, P))
    if not factors:
        return 1.0
    maps = np.array(list(itertools.product(range(G.n), repeat=H.n)), dtype=np.int64)
    prodv = np.ones(maps.shape[0])
    for e, P in factors:
        prodv *= P[tuple(maps[:, v] for v in e)]
    return float(prodv.mean())


def estimate_max_csp(F: Formula, k: int, trials: int, seed: int, reference: float | None = None) -> TrialStatistics:
    """Per-trial ``alpha(sample_formula(F, k, seed_i))`` with ``seed_i`` derived from ``seed``."""
    est = np.array([
        max_csp_exact(sample_formula(F, k, rng.derive_seed(seed, "max-csp", i)))
        for i in range(trials)
    ])
    return TrialStatistics(est, reference)


# ---------------------------------------------------------------------------
# instance builders

def xor_table(q: int = 2) -> np.ndarray:
    return 1.0 - np.eye(q)


def complete_xor(n: int) -> Formula:
    """XOR constraint on every ordered pair of distinct variables."""
    t = xor_table(2)
    cons = tuple(Constraint(t, (i, j)) for i in range(n) for j in range(n) if i != j)
    return Formula(n, 2, 2, cons)


def random_formula(n: int, q: int, r: int, m: int, seed: int, d: int | None = None) -> Formula:
    """``m`` random 0/1 constraints on random edges, duplicates capped at ``d``."""
    gen = np.random.default_rng(rng.derive_seed("random-formula", int(seed)))
    cons = []
    for _ in range(m):
        table = (gen.random((q,) * r) < 0.5).astype(float)
        edge = tuple(int(v) for v in gen.integers(0, n, size=r))
        cons.append(Constraint(table, edge))
    if d is None:
        E = np.zeros((n,) * r + (q,) * r)
        for c in cons:
            E[c.edge] += c.table
        d = max(1, int(E.max()))
    return Formula(n, q, r, tuple(cons), d)
