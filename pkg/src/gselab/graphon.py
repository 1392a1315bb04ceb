"""Step-function graphons and vertex sampling.

Two graphon models are provided:

* :class:`StepKernel` -- a function on ``[0,1]^r`` that is constant on
  products of ``m`` steps with masses ``lambda_1..lambda_m`` (the naive or
  averaged-naive form).
* :class:`FullStepGraphon` -- a function with one coordinate per nonempty
  subset of ``[r]`` (optionally also the empty set), each coordinate cut into
  ``g_S`` equal cells.

Sampling draws one uniform ``U_S`` per vertex subset ``S`` of size at most
``r``.  ``U_S`` is a pure function of the seed and the sorted subset (see
:mod:`gselab.rng`), so the plain sample, the averaged sample and every
re-draw of higher-order uniforms can be coupled exactly.

For an edge ``e = (i_1, ..., i_r)`` the coordinate of the position set
``P`` of ``[r]`` is fed the uniform of the vertex set ``{i_j : j in P}``.
When ``e`` repeats a vertex these sets collapse: a naive kernel sees the same
singleton uniform twice, and a full graphon's pair coordinate ``{1, 2}`` on
``(i, i)`` reads ``U_{i}``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .arrays import ROW_SUM_TOL, RArray, as_rarray, repeated_index_mask
from .errors import ArgumentError, DimensionError, DomainError, UnsupportedError

HIGHER_TAG = "higher-order"


@dataclass(frozen=True)
class StepKernel:
    """Step function on ``[0,1]^r`` with ``m`` steps per axis."""

    masses: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.masses, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if lam.ndim != 1 or lam.size == 0 or np.any(lam <= 0):
            raise DomainError("step masses must be a non-empty vector of positive reals")
        if abs(lam.sum() - 1.0) > ROW_SUM_TOL:
            raise DomainError("step masses must sum to 1 (tolerance 1e-12)")
        if v.ndim < 1 or any(s != lam.size for s in v.shape):
            raise DimensionError(f"values shape {v.shape} does not match {lam.size} steps")
        if not np.all(np.isfinite(v)):
            raise DomainError("kernel values must be finite")
        for name, a in (("masses", lam), ("values", v)):
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def uniform(cls, values) -> "StepKernel":
        v = np.asarray(values, dtype=float)
        return cls(np.full(v.shape[0], 1.0 / v.shape[0]), v)

    @classmethod
    def constant(cls, c: float, r: int = 2) -> "StepKernel":
        return cls(np.ones(1), np.full((1,) * r, float(c)))

    @property
    def r(self) -> int:
        return self.values.ndim

    @property
    def m(self) -> int:
        return self.masses.size

    @property
    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def cell_weights(self) -> np.ndarray:
        """Measure of each cell, ``prod_j lambda[c_j]``."""
        w = self.masses
        for _ in range(self.r - 1):
            w = np.multiply.outer(w, self.masses)
        return w

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.cell_weights() * self.values**2)))

    @property
    def l1_norm(self) -> float:
        return float(np.sum(self.cell_weights() * np.abs(self.values)))

    def step_of(self, u: np.ndarray) -> np.ndarray:
        """Index of the step containing each point of ``u`` in ``[0, 1)``."""
        edges = np.cumsum(self.masses)[:-1]
        return np.searchsorted(edges, u, side="right")

    def refine(self, factor: int) -> "StepKernel":
        """Same function with every step split into ``factor`` equal parts."""
        lam = np.repeat(self.masses / factor, factor)
        v = self.values
        for ax in range(self.r):
            v = np.repeat(v, factor, axis=ax)
        return StepKernel(lam / lam.sum(), v)

    def weighted_array(self) -> RArray:
        """``m``-vertex array ``A`` with ``m**-r * sum A[n] f(n) == integral W f``.

        Cell values are scaled by ``m**r * prod_j lambda[n_j]`` so that the
        uniform vertex average of the array reproduces the mass-weighted
        integral of the kernel for any function constant on cells.
        """
        return RArray(self.values * self.cell_weights() * self.m**self.r)


def subset_coordinates(r: int, include_empty: bool = False) -> list[tuple[int, ...]]:
    """Coordinate order used by :class:`FullStepGraphon`: by size, then lexicographic."""
    coords: list[tuple[int, ...]] = [()] if include_empty else []
    for size in range(1, r + 1):
        coords.extend(itertools.combinations(range(r), size))
    return coords


@dataclass(frozen=True)
class FullStepGraphon:
    """Step graphon with one coordinate per (nonempty) subset of ``[r]``.

    ``values`` has one axis per coordinate, in :func:`subset_coordinates`
    order, and axis ``i`` has ``grids[i]`` equal cells.  ``colored`` marks a
    finite-color valued graphon whose entries are labels rather than reals.
    """

    r: int
    grids: tuple[int, ...]
    values: np.ndarray
    include_empty: bool = False
    colored: bool = False

    def __post_init__(self):
        coords = subset_coordinates(self.r, self.include_empty)
        grids = tuple(int(g) for g in self.grids)
        v = np.asarray(self.values)
        if len(grids) != len(coords) or any(g < 1 for g in grids):
            raise DimensionError(f"need {len(coords)} positive grid sizes, got {grids}")
        if v.shape != grids:
            raise DimensionError(f"values shape {v.shape} does not match grids {grids}")
        if not self.colored:
            v = v.astype(float)
            if not np.all(np.isfinite(v)):
                raise DomainError("graphon values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "values", v)

    @property
    def coordinates(self) -> list[tuple[int, ...]]:
        return subset_coordinates(self.r, self.include_empty)

    @property
    def inf_norm(self) -> float:
        if self.colored:
            raise UnsupportedError("sup norm of a color-valued graphon")
        return float(np.max(np.abs(self.values)))

    def averaged(self) -> StepKernel:
        """Average out every non-singleton coordinate (uniform cells).

        Requires all singleton grids to be equal so the result is a
        :class:`StepKernel` with uniform masses.
        """
        if self.colored:
            raise UnsupportedError("averaging a color-valued graphon")
        coords = self.coordinates
        drop = tuple(i for i, c in enumerate(coords) if len(c) != 1)
        avg = self.values.mean(axis=drop) if drop else self.values
        gs = {self.grids[i] for i, c in enumerate(coords) if len(c) == 1}
        if len(gs) != 1:
            raise UnsupportedError("singleton coordinates must share one grid to form a step kernel")
        return StepKernel.uniform(avg)

    @classmethod
    def from_naive(cls, kernel: StepKernel, include_empty: bool = False) -> "FullStepGraphon":
        """Embed a uniform-mass kernel; higher coordinates get a single cell."""
        if not np.allclose(kernel.masses, 1.0 / kernel.m, rtol=0, atol=1e-15):
            raise UnsupportedError("only uniform-mass kernels embed into uniform grids")
        coords = subset_coordinates(kernel.r, include_empty)
        grids = tuple(kernel.m if len(c) == 1 else 1 for c in coords)
        return cls(kernel.r, grids, kernel.values.reshape(grids), include_empty)


@dataclass(frozen=True)
class SampledGraph:
    """A sampled r-array plus the seed material that reproduces it."""

    array: RArray
    seed: int
    higher_seed: int | None
    include_empty: bool = False

    @property
    def k(self) -> int:
        return self.array.k

    def uniform(self, subset: Sequence[int]) -> float:
        """The uniform ``U_S`` attached to vertex subset ``S`` in this sample."""
        s = sorted(set(int(v) for v in subset))
        if not s:
            return _empty_uniform(self.seed, self.higher_seed)
        return float(_subset_uniforms(self.seed, self.higher_seed, [np.array([v]) for v in s])[0])

    @property
    def singleton_uniforms(self) -> np.ndarray:
        return _singletons(self.seed, self.k)

    def uniforms(self, max_size: int | None = None) -> dict[tuple[int, ...], float]:
        """All uniforms ``U_S`` for subsets of ``[k]`` up to ``max_size`` (default ``r``)."""
        size = self.array.r if max_size is None else max_size
        out = {(): self.uniform(())} if self.include_empty else {}
        for s in range(1, size + 1):
            for sub in itertools.combinations(range(self.k), s):
                out[sub] = self.uniform(sub)
        return out


# ---------------------------------------------------------------------------
# uniforms

def _key(seed: int, higher_seed: int | None, size: int) -> int:
    if size <= 1 or higher_seed is None:
        return rng.derive_seed("U", int(seed))
    return rng.derive_seed("U", int(seed), HIGHER_TAG, int(higher_seed))


def _singletons(seed: int, k: int) -> np.ndarray:
    return rng.uniforms(_key(seed, None, 1), rng.tuple_codes([np.arange(k)]))


def _empty_uniform(seed: int, higher_seed: int | None) -> float:
    return float(rng.uniforms(_key(seed, higher_seed, 0), np.zeros(1, dtype=np.uint64))[0])


def _subset_uniforms(seed: int, higher_seed: int | None, index_arrays: list[np.ndarray]) -> np.ndarray:
    """Uniform of the vertex set formed entrywise by ``index_arrays``.

    Entries whose set collapses to a singleton use the singleton key, so a
    repeated-vertex edge reads the vertex's own uniform.
    """
    codes = rng.tuple_codes(index_arrays)
    stacked = np.stack(np.broadcast_arrays(*index_arrays), axis=-1)
    s = np.sort(stacked, axis=-1)
    distinct = 1 + np.sum(s[..., 1:] != s[..., :-1], axis=-1)
    out = np.empty(codes.shape)
    for size in np.unique(distinct):
        sel = distinct == size
        out[sel] = rng.uniforms(_key(seed, higher_seed, int(size)), codes[sel])
    return out


def _check_k(W, k: int) -> None:
    if k < W.r:
        raise ArgumentError(f"sample size k={k} must be at least r={W.r}")


def _sample_naive(W: StepKernel, k: int, seed: int) -> np.ndarray:
    steps = W.step_of(_singletons(seed, k))
    return W.values[np.ix_(*([steps] * W.r))]


def _sample_full(W: FullStepGraphon, k: int, seed: int, higher_seed: int | None) -> np.ndarray:
    grids = np.indices((k,) * W.r)
    cells = []
    for coord, g in zip(W.coordinates, W.grids):
        if not coord:
            u = np.full((k,) * W.r, _empty_uniform(seed, higher_seed))
        else:
            u = _subset_uniforms(seed, higher_seed, [grids[j] for j in coord])
        cells.append(np.minimum((u * g).astype(np.int64), g - 1))
    return W.values[tuple(cells)]


def sample_g(W, k: int, seed: int, higher_seed: int | None = None) -> SampledGraph:
    """Plain sample ``G(k, W)``.

    ``higher_seed`` re-keys the uniforms of subsets with two or more
    vertices (and the empty set) while keeping singleton uniforms; it is the
    hook used to re-draw higher-order randomness under a fixed vertex sample.
    """
    _check_k(W, k)
    if isinstance(W, StepKernel):
        arr = _sample_naive(W, k, seed)
    elif isinstance(W, FullStepGraphon):
        arr = _sample_full(W, k, seed, higher_seed)
    else:
        raise UnsupportedError(f"cannot sample from {type(W).__name__}")
    return SampledGraph(RArray(arr), int(seed), higher_seed, getattr(W, "include_empty", False))


def sample_h(W, k: int, seed: int, higher_seed: int | None = None) -> SampledGraph:
    """Averaged sample ``H(k, W)``: non-singleton coordinates integrated out.

    The entry of every edge (repeated vertices included) is the averaged
    kernel evaluated at the singleton uniforms, so ``H`` depends on the
    singleton uniforms only.  For a :class:`StepKernel` this is exactly
    :func:`sample_g`.
    """
    _check_k(W, k)
    if isinstance(W, FullStepGraphon):
        if W.colored:
            raise UnsupportedError("averaged sampling needs a real-valued graphon")
        coords = W.coordinates
        drop = tuple(i for i, c in enumerate(coords) if len(c) != 1)
        avg = W.values.mean(axis=drop) if drop else W.values
        u = _singletons(seed, k)
        gs = [g for c, g in zip(coords, W.grids) if len(c) == 1]
        cells = [np.minimum((u * g).astype(np.int64), g - 1) for g in gs]
        arr = avg[np.ix_(*cells)]
    elif isinstance(W, StepKernel):
        arr = _sample_naive(W, k, seed)
    else:
        raise UnsupportedError(f"cannot sample from {type(W).__name__}")
    return SampledGraph(RArray(arr), int(seed), higher_seed, getattr(W, "include_empty", False))


def coupled_samples(W, k: int, seed: int, higher_seed: int | None = None) -> tuple[SampledGraph, SampledGraph]:
    """``(G(k, W), H(k, W))`` built from one shared uniform family."""
    return sample_g(W, k, seed, higher_seed), sample_h(W, k, seed, higher_seed)


def samp_exchangeable(f: FullStepGraphon, n: int, seed: int) -> RArray:
    """Draw an ``n^r`` array with entries ``f(U_empty, U_{i_1}, ..., U_e)``."""
    if not f.include_empty:
        raise ArgumentError("exchangeable sampling needs the empty-set coordinate")
    if n < 1:
        raise ArgumentError("n must be positive")
    return RArray(_sample_full(f, n, seed, None))


def graphon_of_graph(G) -> StepKernel:
    """Step kernel of an r-array: ``k`` equal steps, repeated-index cells set to 0."""
    G = as_rarray(G)
    v = np.array(G.values, dtype=float)
    v[repeated_index_mask(G.k, G.r)] = 0.0
    return StepKernel.uniform(v)


def induced_subarray(G, vertices: Sequence[int]) -> RArray:
    G = as_rarray(G)
    idx = np.asarray(vertices, dtype=np.int64)
    return RArray(G.values[np.ix_(*([idx] * G.r))])


def sample_without_replacement(G, k: int, seed: int) -> RArray:
    """Induced sub-r-array ``G(k, G)`` on a uniform ordered ``k``-tuple of distinct vertices."""
    G = as_rarray(G)
    if k > G.k:
        raise ArgumentError(f"cannot sample {k} of {G.k} vertices without replacement")
    return induced_subarray(G, rng.random_subset(G.k, k, rng.derive_seed("without-replacement", int(seed))))


def coupled_without_replacement(G, k: int, seed: int) -> tuple[RArray, RArray]:
    """``(G(k, G), G(k, W_G))`` coupled through the singleton uniforms.

    The with-replacement sample picks vertex ``floor(U_i * |V(G)|)`` for each
    ``i``; when those picks are distinct the without-replacement sample reuses
    them, otherwise it falls back to an independent Fisher-Yates draw.
    """
    G = as_rarray(G)
    W = graphon_of_graph(G)
    with_repl = sample_g(W, k, seed)
    picks = W.step_of(with_repl.singleton_uniforms)
    if len(set(picks.tolist())) == k:
        without = induced_subarray(G, picks)
    else:
        without = sample_without_replacement(G, k, seed)
    return without, with_repl.array
