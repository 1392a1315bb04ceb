"""Homomorphism densities of decorated templates.

A template ``F`` on vertices ``0..k-1`` decorates some edges ``(i_1..i_r)``
with a function of the host's entry; every other edge carries the constant
1.  For a host r-array ``G`` on ``n`` vertices::

    t(F, G) = n**-k sum_{phi: [k] -> [n]} prod_e F_e(G[phi(e)])

and ``t_inj`` averages over injective maps only.  Step kernels are accepted
as hosts for ``t`` (vertices then carry the step masses).
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from math import factorial, perm, prod
from typing import Iterator, Mapping

import numpy as np

from . import rng
from .arrays import as_rarray
from .errors import ArgumentError, CapacityError, DimensionError, DomainError
from .graphon import StepKernel, sample_g, sample_without_replacement
from .stats import TrialStatistics

MOBIUS_GUARD = 4
INJECTIVE_GUARD = 5_000_000


@dataclass(frozen=True)
class Decoration:
    """Function applied to host entries.

    kinds: ``"table"`` (finite color lookup), ``"poly"`` (polynomial with
    ``coefficients[i]`` multiplying ``x**i``), ``"product"`` (pointwise
    product of ``factors``).
    """

    kind: str
    table: tuple = ()
    coefficients: tuple = ()
    factors: tuple = ()

    @classmethod
    def from_table(cls, mapping: Mapping) -> "Decoration":
        return cls("table", table=tuple(sorted(mapping.items(), key=lambda kv: repr(kv[0]))))

    @classmethod
    def poly(cls, coefficients) -> "Decoration":
        return cls("poly", coefficients=tuple(float(c) for c in coefficients))

    @classmethod
    def constant(cls, c: float = 1.0) -> "Decoration":
        return cls.poly([c])

    @classmethod
    def identity(cls) -> "Decoration":
        return cls.poly([0.0, 1.0])

    def __post_init__(self):
        if self.kind not in ("table", "poly", "product"):
            raise DomainError(f"unknown decoration kind {self.kind!r}")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if self.kind == "poly":
            out = np.zeros(values.shape)
            for c in reversed(self.coefficients):
                out = out * values + c
            return out
        if self.kind == "product":
            out = np.ones(values.shape)
            for f in self.factors:
                out = out * f(values)
            return out
        lookup = dict(self.table)
        flat = values.ravel().tolist()
        try:
            return np.array([lookup[v] for v in flat], dtype=float).reshape(values.shape)
        except KeyError as exc:
            raise DomainError(f"decoration has no value for color {exc.args[0]!r}") from None

    def sup(self, domain=None) -> float:
        """Sup norm; polynomials need the set of host values as ``domain``."""
        if self.kind == "table":
            return max((abs(v) for _, v in self.table), default=0.0)
        if self.kind == "product":
            return float(prod(f.sup(domain) for f in self.factors))
        if len(self.coefficients) <= 1:
            return abs(self.coefficients[0]) if self.coefficients else 0.0
        if domain is None:
            raise ArgumentError("sup norm of a polynomial decoration needs a domain")
        return float(np.max(np.abs(self(np.asarray(domain, dtype=float)))))

    def __mul__(self, other: "Decoration") -> "Decoration":
        mine = self.factors if self.kind == "product" else (self,)
        theirs = other.factors if other.kind == "product" else (other,)
        return Decoration("product", factors=mine + theirs)


class DecoratedTemplate:
    """Decorated r-graph on ``k`` vertices; undecorated edges are the constant 1."""

    def __init__(self, k: int, r: int, decorations: Mapping[tuple, Decoration] | None = None):
        self.k, self.r = int(k), int(r)
        decs = {}
        for e, f in (decorations or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != self.r or any(not 0 <= v < self.k for v in e):
                raise DimensionError(f"edge {e} is not an r-tuple of vertices 0..{self.k - 1}")
            if f.kind == "table" and f.sup() > 1 + 1e-12:
                raise DomainError(f"decoration on {e} exceeds 1 in sup norm")
            decs[e] = decs[e] * f if e in decs else f
        self.decorations: dict[tuple, Decoration] = decs

    def __repr__(self) -> str:
        return f"DecoratedTemplate(k={self.k}, r={self.r}, edges={sorted(self.decorations)})"

    def inf_norm(self, domain=None) -> float:
        """Largest sup norm over the edge decorations (1 for a bare template)."""
        return max([1.0 if not self.decorations else 0.0] + [f.sup(domain) for f in self.decorations.values()])

    def product(self, other: "DecoratedTemplate") -> "DecoratedTemplate":
        """Disjoint union, whose density is the product of the two densities."""
        if other.r != self.r:
            raise DimensionError("templates of different arity")
        decs = dict(self.decorations)
        for e, f in other.decorations.items():
            decs[tuple(v + self.k for v in e)] = f
        return DecoratedTemplate(self.k + other.k, self.r, decs)

    def quotient(self, partition: list[list[int]]) -> "DecoratedTemplate":
        """Merge each block into one vertex; parallel edges multiply decorations."""
        block = {v: i for i, b in enumerate(partition) for v in b}
        if sorted(block) != list(range(self.k)):
            raise ArgumentError("not a partition of the template's vertices")
        decs: dict[tuple, Decoration] = {}
        for e, f in self.decorations.items():
            be = tuple(block[v] for v in e)
            decs[be] = decs[be] * f if be in decs else f
        return DecoratedTemplate(len(partition), self.r, decs)


def single_edge(r: int = 2, decoration: Decoration | None = None) -> DecoratedTemplate:
    return DecoratedTemplate(r, r, {tuple(range(r)): decoration or Decoration.identity()})


def loop_constant(r: int = 2) -> DecoratedTemplate:
    """One vertex whose loop carries the constant 1."""
    return DecoratedTemplate(1, r, {(0,) * r: Decoration.constant(1.0)})


def _host(G) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(G, StepKernel):
        return G.values, G.masses
    G = as_rarray(G)
    return G.values, np.full(G.k, 1.0 / G.k)


def _letters(k: int) -> str:
    letters = string.ascii_letters
    if k > len(letters):
        raise CapacityError(f"templates are limited to {len(letters)} vertices")
    return letters[:k]


def t_hom(F: DecoratedTemplate, G) -> float:
    """Homomorphism density of ``F`` in an r-array or step kernel ``G``."""
    values, masses = _host(G)
    if values.ndim != F.r:
        raise DimensionError(f"template arity {F.r} differs from host arity {values.ndim}")
    if F.k == 0:
        return 1.0
    letters = _letters(F.k)
    specs, operands = [], []
    for e, f in F.decorations.items():
        specs.append("".join(letters[v] for v in e))
        operands.append(f(values))
    for v in range(F.k):
        specs.append(letters[v])
        operands.append(masses)
    return float(np.einsum(",".join(specs) + "->", *operands, optimize=True))


def hom_count(F: DecoratedTemplate, G) -> float:
    G = as_rarray(G)
    return t_hom(F, G) * G.k**F.k


def inj_count(F: DecoratedTemplate, G) -> float:
    """Sum of decorated products over injective maps ``V(F) -> V(G)``."""
    G = as_rarray(G)
    n = G.k
    if F.k > n:
        raise ArgumentError(f"template has {F.k} vertices, host only {n}")
    if perm(n, F.k) > INJECTIVE_GUARD:
        raise CapacityError(f"{perm(n, F.k)} injective maps exceed the guard {INJECTIVE_GUARD}")
    maps = np.array(list(itertools.permutations(range(n), F.k)), dtype=np.int64).reshape(-1, F.k)
    total = np.ones(maps.shape[0])
    for e, f in F.decorations.items():
        P = f(G.values)
        total *= P[tuple(maps[:, v] for v in e)]
    return float(total.sum())


def t_inj(F: DecoratedTemplate, G) -> float:
    G = as_rarray(G)
    if F.k > G.k:
        raise ArgumentError(f"template has {F.k} vertices, host only {G.k}")
    return inj_count(F, G) / perm(G.k, F.k)


def set_partitions(k: int) -> Iterator[list[list[int]]]:
    """Set partitions of ``0..k-1`` via restricted growth strings, in lexicographic order."""
    if k == 0:
        yield []
        return
    a = [0] * k

    def blocks():
        out: list[list[int]] = [[] for _ in range(max(a) + 1)]
        for v, b in enumerate(a):
            out[b].append(v)
        return out

    while True:
        yield blocks()
        # next restricted growth string
        i = k - 1
        while i > 0 and a[i] == max(a[:i]) + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        for j in range(i + 1, k):
            a[j] = 0


def mobius_inj(F: DecoratedTemplate, G) -> float:
    """Injective count from homomorphism counts of all quotients of ``F``.

    ``inj(F, G) = sum_P (-1)**(k - |P|) prod_{S in P} (|S| - 1)! hom(F/P, G)``.
    """
    if F.k > MOBIUS_GUARD:
        raise CapacityError(f"partition enumeration limited to {MOBIUS_GUARD} template vertices")
    total = 0.0
    for P in set_partitions(F.k):
        coef = (-1) ** (F.k - len(P)) * prod(factorial(len(S) - 1) for S in P)
        total += coef * hom_count(F.quotient(P), G)
    return total


def hom_from_inj(F: DecoratedTemplate, G) -> float:
    """``hom(F, G) = sum_P inj(F/P, G)``: each map factors through its kernel partition."""
    if F.k > MOBIUS_GUARD:
        raise CapacityError(f"partition enumeration limited to {MOBIUS_GUARD} template vertices")
    n = as_rarray(G).k
    return float(sum(inj_count(F.quotient(P), G) for P in set_partitions(F.k) if len(P) <= n))


def injectivity_gap_bound(F: DecoratedTemplate, G) -> float:
    """``2 |V(F)| ||F|| / |V(G)|``."""
    values, _ = _host(G)
    dom = np.unique(values)
    return 2 * F.k * F.inf_norm(dom) / values.shape[0]


def concentration_envelope(eps: float, k: int, template_size: int) -> float:
    """``2 exp(-eps**2 k / (4 |V(F)|**2))``."""
    return float(2 * np.exp(-(eps**2) * k / (4 * template_size**2)))


def density_estimate(F: DecoratedTemplate, host, k: int, trials: int, seed: int) -> TrialStatistics:
    """Per-trial ``t(F, G(k, host))`` against the exact ``t(F, host)``.

    Finite hosts are sampled without replacement, step kernels via
    :func:`gselab.graphon.sample_g`.
    """
    if k < F.k:
        raise ArgumentError(f"sample size {k} is smaller than the template ({F.k} vertices)")
    reference = t_hom(F, host)
    est = np.empty(trials)
    for i in range(trials):
        s = rng.derive_seed(seed, "density", i)
        if isinstance(host, StepKernel):
            sample = sample_g(host, k, s).array
        else:
            sample = sample_without_replacement(host, k, s)
        est[i] = t_hom(F, sample)
    return TrialStatistics(est, reference)


def random_template(k: int, r: int, colors, seed: int, density: float = 0.5) -> DecoratedTemplate:
    """Template with random ``[-1, 1]`` tables on a random subset of edges."""
    gen = np.random.default_rng(rng.derive_seed("random-template", int(seed)))
    decs = {}
    for e in itertools.product(range(k), repeat=r):
        if gen.random() < density:
            decs[e] = Decoration.from_table({c: float(gen.uniform(-1, 1)) for c in colors})
    return DecoratedTemplate(k, r, decs)

