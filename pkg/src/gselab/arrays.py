"""Dense r-arrays, interaction arrays, partitions and the energy functional.

An r-array on ``k`` vertices is a numpy array of shape ``(k,) * r``.  The
energy of an r-array ``G`` with respect to interaction coefficients ``J``
(shape ``(q,) * r``) and a ``k x q`` row-stochastic matrix ``x`` is::

    E_x(G, J) = k**-r * sum_z sum_n J[z] * G[n] * prod_j x[n_j, z_j]

Layered versions sum this over a finite layer set.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field
from math import comb
from typing import Hashable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError

ROW_SUM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RArray:
    """Dense real (or integer-colored) r-array on ``k`` vertices."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim < 1 or len(set(v.shape)) != 1:
            raise DimensionError(f"r-array must be k x ... x k, got shape {v.shape}")
        if v.dtype.kind not in "biuf":
            raise DomainError(f"r-array entries must be numeric, got dtype {v.dtype}")
        if v.dtype.kind == "f" and not np.all(np.isfinite(v)):
            raise DomainError("r-array entries must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def r(self) -> int:
        return self.values.ndim

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @classmethod
    def from_flat(cls, values: Sequence[float], r: int) -> "RArray":
        flat = np.asarray(values)
        k = round(len(flat) ** (1.0 / r))
        if k**r != len(flat):
            raise DimensionError(f"{len(flat)} values is not a perfect {r}-th power")
        return cls(flat.reshape((k,) * r))


def as_rarray(a) -> RArray:
    return a if isinstance(a, RArray) else RArray(np.asarray(a))


class _Layers(Mapping):
    """Ordered, immutable mapping from layer keys to per-layer objects."""

    _kind = "layer"

    def __init__(self, layers: Mapping[Hashable, object] | Sequence[tuple[Hashable, object]]):
        items = list(layers.items()) if isinstance(layers, Mapping) else list(layers)
        if not items:
            raise DimensionError(f"a layered {self._kind} needs at least one layer")
        self._layers = {key: self._coerce(val) for key, val in items}
        if len(self._layers) != len(items):
            raise DimensionError("duplicate layer keys")
        self._check()

    def _coerce(self, val):
        return val

    def _check(self):
        pass

    def __getitem__(self, key):
        return self._layers[key]

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._layers)

    def __len__(self) -> int:
        return len(self._layers)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({list(self._layers)})"

    @property
    def inf_norm(self) -> float:
        return max(layer.inf_norm for layer in self._layers.values())


class LayeredRArray(_Layers):
    """r-arrays sharing ``(r, k)`` indexed by a finite ordered layer set."""

    _kind = "r-array"

    def _coerce(self, val):
        return as_rarray(val)

    def _check(self):
        shapes = {layer.values.shape for layer in self._layers.values()}
        if len(shapes) != 1:
            raise DimensionError(f"layers have different shapes: {sorted(shapes)}")

    @property
    def r(self) -> int:
        return next(iter(self._layers.values())).r

    @property
    def k(self) -> int:
        return next(iter(self._layers.values())).k


@dataclass(frozen=True)
class InteractionArray:
    """Interaction coefficients indexed by ``[q]^r``.

    ``kind == "real"``: ``coefficients`` has shape ``(q,) * r``.
    ``kind == "table"``: ``coefficients`` has shape ``(q,) * r + (len(colors),)``
    and cell ``z`` is the lookup table ``colors[c] -> coefficients[z + (c,)]``.
    """

    coefficients: np.ndarray
    colors: tuple | None = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if not np.all(np.isfinite(c)):
            raise DomainError("interaction coefficients must be finite")
        if self.colors is not None:
            colors = tuple(self.colors)
            if c.ndim < 2 or c.shape[-1] != len(colors) or len(set(c.shape[:-1])) != 1:
                raise DimensionError(f"table interaction has shape {c.shape} for {len(colors)} colors")
            if len(set(colors)) != len(colors):
                raise DomainError("duplicate colors")
            object.__setattr__(self, "colors", colors)
        elif c.ndim < 1 or len(set(c.shape)) != 1:
            raise DimensionError(f"interaction must be q x ... x q, got shape {c.shape}")
        object.__setattr__(self, "coefficients", _frozen(c))

    @property
    def kind(self) -> str:
        return "real" if self.colors is None else "table"

    @property
    def r(self) -> int:
        return self.coefficients.ndim - (self.colors is not None)

    @property
    def q(self) -> int:
        return self.coefficients.shape[0]

    @property
    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    def apply(self, g: np.ndarray) -> np.ndarray:
        """Cellwise values ``J_z(G_n)``, shape ``(q,) * r + g.shape``."""
        g = np.asarray(g)
        if self.colors is None:
            return np.multiply.outer(self.coefficients, g)
        lookup = {c: i for i, c in enumerate(self.colors)}
        try:
            idx = np.vectorize(lambda v: lookup[v.item() if hasattr(v, "item") else v], otypes=[int])(g)
        except KeyError as exc:
            raise DomainError(f"color {exc.args[0]!r} has no table entry") from None
        return self.coefficients[..., idx]


class LayeredInteraction(_Layers):
    """Interaction arrays indexed by the same layer set as a LayeredRArray."""

    _kind = "interaction"

    def _coerce(self, val):
        return val if isinstance(val, InteractionArray) else InteractionArray(np.asarray(val, dtype=float))

    def _check(self):
        shapes = {(j.q, j.r) for j in self._layers.values()}
        if len(shapes) != 1:
            raise DimensionError(f"interaction layers disagree on (q, r): {sorted(shapes)}")

    @property
    def q(self) -> int:
        return next(iter(self._layers.values())).q

    @property
    def r(self) -> int:
        return next(iter(self._layers.values())).r


@dataclass(frozen=True)
class FractionalPartition:
    """Row-stochastic ``k x q`` matrix of state weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise DimensionError(f"partition weights must be k x q, got shape {w.shape}")
        if np.any(w < -ROW_SUM_TOL) or np.any(w > 1 + ROW_SUM_TOL):
            raise DomainError("partition weights must lie in [0, 1]")
        if w.shape[0] and np.max(np.abs(w.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise DomainError("partition rows must sum to 1 (tolerance 1e-12)")
        object.__setattr__(self, "weights", _frozen(np.clip(w, 0.0, 1.0)))

    @classmethod
    def normalized(cls, weights) -> "FractionalPartition":
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(w / w.sum(axis=1, keepdims=True))

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def q(self) -> int:
        return self.weights.shape[1]

    def is_integer(self) -> bool:
        return bool(np.all((self.weights == 0) | (self.weights == 1)))

    def column_means(self) -> np.ndarray:
        return self.weights.mean(axis=0)

    def fractional_entries(self) -> int:
        w = self.weights
        return int(np.count_nonzero((w > 0) & (w < 1)))


@dataclass(frozen=True)
class IntegerPartition:
    """Assignment of each of ``k`` vertices to one of ``q`` states."""

    assignment: np.ndarray
    q: int

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 1 or (a.size and a.dtype.kind not in "iu"):
            raise DimensionError("assignment must be a 1-d integer array")
        if a.size and (a.min() < 0 or a.max() >= self.q):
            raise DomainError(f"assignment values must lie in [0, {self.q})")
        object.__setattr__(self, "assignment", _frozen(a.astype(np.int64)))

    @property
    def k(self) -> int:
        return self.assignment.shape[0]

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.q)

    def to_fractional(self) -> FractionalPartition:
        w = np.zeros((self.k, self.q))
        w[np.arange(self.k), self.assignment] = 1.0
        return FractionalPartition(w)

    @classmethod
    def from_fractional(cls, x: FractionalPartition) -> "IntegerPartition":
        if not x.is_integer():
            raise ArgumentError("partition has fractional entries")
        return cls(np.argmax(x.weights, axis=1), x.q)


@dataclass(frozen=True)
class StateDistribution:
    """Class masses ``a`` in the probability simplex over ``q`` states."""

    masses: np.ndarray = field()

    def __post_init__(self):
        a = np.asarray(self.masses, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise DimensionError("state distribution must be a non-empty vector")
        if np.any(a < 0) or abs(a.sum() - 1.0) > ROW_SUM_TOL:
            raise DomainError("state distribution must be nonnegative and sum to 1 (tolerance 1e-12)")
        object.__setattr__(self, "masses", _frozen(a))

    @property
    def q(self) -> int:
        return self.masses.shape[0]


def as_partition(x) -> FractionalPartition:
    if isinstance(x, FractionalPartition):
        return x
    if isinstance(x, IntegerPartition):
        return x.to_fractional()
    return FractionalPartition(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# energy

def _contract(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``M[z] = sum_n g[n] prod_j x[n_j, z_j]`` by contracting one axis at a time."""
    m = g
    for _ in range(g.ndim):
        # contract leading vertex axis, append a state axis at the end
        m = np.tensordot(m, x, axes=([0], [0]))
    return m


def energy(G, J: InteractionArray, x) -> float:
    """Energy of ``G`` under interaction ``J`` and (fractional) partition ``x``.

    Uses the two-stage contraction: first ``M[z] = sum_n G[n] prod_j x[n_j, z_j]``
    is built axis by axis (``k**r * q`` work per axis instead of ``q**r k**r``
    total), then ``sum_z J[z] M[z] / k**r`` is formed in z-major order.
    Table interactions are evaluated via their canonical form.
    """
    G = as_rarray(G)
    x = as_partition(x)
    if not isinstance(J, InteractionArray):
        J = InteractionArray(np.asarray(J, dtype=float))
    if G.r != J.r or G.k != x.k or J.q != x.q:
        raise DimensionError(
            f"shape mismatch: G (r={G.r}, k={G.k}), J (r={J.r}, q={J.q}), x (k={x.k}, q={x.q})"
        )
    if J.kind == "table":
        cells = J.apply(G.values)  # (q,)*r + (k,)*r
        total = 0.0
        for z in itertools.product(range(J.q), repeat=J.r):
            total += _single_state_mass(cells[z], x.weights, z)
        return total / G.k**G.r
    m = _contract(np.asarray(G.values, dtype=float), x.weights)
    return float(np.sum(J.coefficients * m)) / G.k**G.r


def _single_state_mass(g: np.ndarray, w: np.ndarray, z: tuple[int, ...]) -> float:
    m = g
    for zj in z:
        m = np.tensordot(m, w[:, zj], axes=([0], [0]))
    return float(m)


def _layer_pairs(W, J) -> list[tuple[RArray, InteractionArray]]:
    if isinstance(W, LayeredRArray) or isinstance(J, LayeredInteraction):
        if not (isinstance(W, LayeredRArray) and isinstance(J, LayeredInteraction)):
            raise DimensionError("layered arrays need layered interactions and vice versa")
        if set(W) != set(J):
            raise DimensionError(f"layer sets differ: {list(W)} vs {list(J)}")
        return [(W[e], J[e]) for e in W]
    if not isinstance(J, InteractionArray):
        J = InteractionArray(np.asarray(J, dtype=float))
    return [(as_rarray(W), J)]


def layered_energy(W, J, x) -> float:
    """Sum of per-layer energies over a common layer set."""
    return float(sum(energy(g, j, x) for g, j in _layer_pairs(W, J)))


def canonical_tensor(W, J) -> np.ndarray:
    """``T[n, z] = sum_e J^e_z(W^e_n)``, shape ``(k,) * r + (q,) * r``.

    Every energy of ``(W, J)`` equals ``k**-r sum T[n, z] prod_j x[n_j, z_j]``.
    """
    pairs = _layer_pairs(W, J)
    r, q = pairs[0][1].r, pairs[0][1].q
    for g, j in pairs:
        if g.r != r or j.r != r or j.q != q:
            raise DimensionError("all layers must share r and q")
    total = None
    for g, j in pairs:
        cells = j.apply(g.values)
        total = cells if total is None else total + cells
    # (q,)*r + (k,)*r -> (k,)*r + (q,)*r
    return np.moveaxis(total, tuple(range(r)), tuple(range(r, 2 * r)))


def canonical_interactions(q: int, r: int) -> LayeredInteraction:
    """Indicator interactions: layer ``z`` has coefficient 1 at cell ``z`` only."""
    layers = []
    for z in itertools.product(range(q), repeat=r):
        c = np.zeros((q,) * r)
        c[z] = 1.0
        layers.append((z, InteractionArray(c)))
    return LayeredInteraction(layers)


def canonical_form(W, J) -> LayeredRArray:
    """Real ``[q]^r``-layered array whose layer ``z`` is ``sum_e J^e_z(W^e)``.

    Paired with :func:`canonical_interactions` it has the same energy as
    ``(W, J)`` for every partition.
    """
    t = canonical_tensor(W, J)
    r = t.ndim // 2
    q = t.shape[-1]
    return LayeredRArray([(z, RArray(t[(Ellipsis,) + z])) for z in itertools.product(range(q), repeat=r)])


def repeated_index_mask(k: int, r: int) -> np.ndarray:
    """Boolean mask of index tuples in ``[k]^r`` with at least one repeat."""
    grids = np.indices((k,) * r)
    mask = np.zeros((k,) * r, dtype=bool)
    for a, b in itertools.combinations(range(r), 2):
        mask |= grids[a] == grids[b]
    return mask


def zero_diagonal(G):
    """Zero every entry whose index tuple repeats a coordinate.

    Works on a single r-array or on every layer of a LayeredRArray.
    """
    if isinstance(G, LayeredRArray):
        return LayeredRArray([(e, zero_diagonal(G[e])) for e in G])
    G = as_rarray(G)
    v = np.array(G.values, copy=True)
    v[repeated_index_mask(G.k, G.r)] = 0
    return RArray(v)


def is_zero_diagonal(G) -> bool:
    if isinstance(G, LayeredRArray):
        return all(is_zero_diagonal(G[e]) for e in G)
    G = as_rarray(G)
    return not np.any(G.values[repeated_index_mask(G.k, G.r)])


def diagonal_energy_bound(r: int, k: int, q: int, g_norm: float, j_norm: float) -> float:
    """``C(r,2) / k * q**r * ||G|| ||J||``: effect of :func:`zero_diagonal` on energies."""
    return comb(r, 2) / k * q**r * g_norm * j_norm


def einsum_subscripts(r: int) -> tuple[str, str]:
    """Index letters for vertex axes and state axes of an r-array."""
    letters = string.ascii_lowercase
    return letters[:r], letters[r : 2 * r]
