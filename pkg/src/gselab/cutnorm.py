"""Cut norm, cut distance and cut decompositions.

For an r-array ``A`` the cut norm is ``max |A(S_1, ..., S_r)|`` over one
vertex subset per axis, with unnormalized box sums.  For a
:class:`~gselab.graphon.StepKernel` the same maximum is taken over unions of
steps with mass-weighted sums; the objective is multilinear in the fraction
of each step included, so unions of whole steps attain the supremum over
measurable sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from . import rng
from .arrays import RArray, as_rarray
from .errors import ArgumentError, CapacityError, DimensionError
from .graphon import StepKernel, sample_h
from .stats import TrialStatistics

ENUMERATION_GUARD = 24  # max (r - 1) * n free bits for exact enumeration
_CHUNK = 1 << 12


@dataclass(frozen=True)
class CutNormResult:
    """Cut norm value with a witness box (one index array per axis)."""

    value: float
    witness: tuple[np.ndarray, ...]
    sign: int
    exact: bool


def _box_weights(A) -> tuple[np.ndarray, np.ndarray | None]:
    """Array whose plain box sums are the (mass-weighted) box integrals."""
    if isinstance(A, StepKernel):
        return A.values * A.cell_weights(), A.masses
    return np.asarray(as_rarray(A).values, dtype=float), None


def _bits(n: int, masks: np.ndarray) -> np.ndarray:
    return ((masks[None, :] >> np.arange(n)[:, None]) & 1).astype(float)


def _best_2d(B: np.ndarray) -> tuple[float, int, int, np.ndarray]:
    """Exact cut norm of a matrix: enumerate column sets, rows in closed form.

    Returns ``(value, column_mask, sign, row_marginal)``; ties keep the
    smallest column mask and prefer the positive sign.
    """
    n_rows, n_cols = B.shape
    best = (-1.0, 0, 1)
    total = 1 << n_cols
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        M = B @ _bits(n_cols, masks)
        pos = np.sum(np.clip(M, 0.0, None), axis=0)
        neg = -np.sum(np.clip(M, None, 0.0), axis=0)
        vals = np.maximum(pos, neg)
        i = int(np.argmax(vals))
        if vals[i] > best[0]:
            best = (float(vals[i]), int(masks[i]), 1 if pos[i] >= neg[i] else -1)
    value, mask, sign = best
    col = _bits(n_cols, np.array([mask]))[:, 0]
    return value, mask, sign, B @ col


def _mask_to_index(mask: int, n: int) -> np.ndarray:
    return np.array([i for i in range(n) if (mask >> i) & 1], dtype=np.int64)


def cut_norm_exact(A) -> CutNormResult:
    """Exact cut norm by enumeration over the last ``r - 1`` axes.

    The first axis is optimized in closed form: for a fixed choice of the
    other subsets, include index ``i`` iff its marginal has the sign being
    maximized.  Raises :class:`CapacityError` when ``(r - 1) * n > 24``.
    Ties between boxes are broken towards the smallest encoding
    ``sum_j mask_j * 2**(n * (j - 2))`` (so the last axis is most
    significant), then towards the positive sign.
    """
    B, _ = _box_weights(A)
    r, n = B.ndim, B.shape[0]
    if r == 1:
        pos, neg = B[B > 0].sum(), -B[B < 0].sum()
        sign = 1 if pos >= neg else -1
        return CutNormResult(float(max(pos, neg)), (np.flatnonzero(sign * B > 0),), sign, True)
    if (r - 1) * n > ENUMERATION_GUARD:
        raise CapacityError(
            f"exact cut norm needs (r-1)*n <= {ENUMERATION_GUARD}, got {(r - 1) * n}; use the heuristic"
        )
    value, masks, sign, marg = _best_nd(B)
    first = np.flatnonzero(sign * marg > 0)
    witness = (first,) + tuple(_mask_to_index(m, n) for m in masks)
    return CutNormResult(float(value), witness, sign, True)


def _best_nd(B: np.ndarray) -> tuple[float, list[int], int, np.ndarray]:
    if B.ndim == 2:
        value, mask, sign, marg = _best_2d(B)
        return value, [mask], sign, marg
    n = B.shape[-1]
    best = None
    for mask in range(1 << n):
        ind = _bits(n, np.array([mask]))[:, 0]
        sub = np.tensordot(B, ind, axes=([B.ndim - 1], [0]))
        value, masks, sign, marg = _best_nd(sub)
        if best is None or value > best[0]:
            best = (value, masks + [mask], sign, marg)
    return best


def box_sum(B: np.ndarray, witness) -> float:
    sub = B[np.ix_(*witness)] if all(len(w) for w in witness) else np.zeros(0)
    return float(sub.sum())


def cut_norm_heuristic(A, restarts: int = 8, seed: int = 0) -> CutNormResult:
    """Lower bound on the cut norm by alternating maximization.

    With all axes but one fixed, the best subset on the free axis is the set
    of indices with positive marginal.  Each restart cycles over axes until
    the box value stops increasing.  Restart 0 starts from full index sets,
    restart 1 from the largest entry, the rest from random nonempty subsets;
    both signs are tried.
    """
    B, _ = _box_weights(A)
    r, n = B.ndim, B.shape[0]
    gen = np.random.default_rng(rng.derive_seed("cut-heuristic", int(seed)))
    best: CutNormResult | None = None
    for t in range(max(1, restarts)):
        random_start = [_random_nonempty(gen, n) for _ in range(r)]
        for sign in (1, -1):
            if t == 0:
                ind = [np.ones(n) for _ in range(r)]
            elif t == 1:
                ind = _peak_start(sign * B)
            else:
                ind = [s.copy() for s in random_start]
            value = _indicator_sum(sign * B, ind)
            for _ in range(100 * r):
                improved = False
                for ax in range(r):
                    marg = _marginal(sign * B, ind, ax)
                    ind[ax] = (marg > 0).astype(float)
                    new = float(np.sum(np.clip(marg, 0.0, None)))
                    if new > value + 1e-15:
                        value, improved = new, True
                if not improved:
                    break
            value = _indicator_sum(sign * B, ind)
            if best is None or value > best.value:
                best = CutNormResult(
                    max(value, 0.0), tuple(np.flatnonzero(i) for i in ind), sign, False
                )
    return best


def _random_nonempty(gen: np.random.Generator, n: int) -> np.ndarray:
    v = (gen.random(n) < 0.5).astype(float)
    v[gen.integers(n)] = 1.0
    return v


def _peak_start(B: np.ndarray) -> list[np.ndarray]:
    # singleton box at the largest entry
    peak = np.unravel_index(int(np.argmax(B)), B.shape)
    ind = [np.zeros(B.shape[0]) for _ in range(B.ndim)]
    for v, i in zip(ind, peak):
        v[i] = 1.0
    return ind


def _marginal(B: np.ndarray, ind: list[np.ndarray], axis: int) -> np.ndarray:
    m = np.moveaxis(B, axis, 0)
    others = [ind[j] for j in range(B.ndim) if j != axis]
    for v in reversed(others):
        m = m @ v
    return m


def _indicator_sum(B: np.ndarray, ind: list[np.ndarray]) -> float:
    return float(ind[0] @ _marginal(B, ind, 0))


def cut_norm(A, oracle: str = "exact", restarts: int = 8, seed: int = 0) -> CutNormResult:
    if oracle == "exact":
        return cut_norm_exact(A)
    if oracle == "heuristic":
        return cut_norm_heuristic(A, restarts, seed)
    raise ArgumentError(f"unknown cut norm oracle {oracle!r}")


def cut_distance(F, G, oracle: str = "exact") -> float:
    """``n**-r * ||F - G||_cut`` for two arrays on the same vertex set."""
    F, G = as_rarray(F), as_rarray(G)
    if F.values.shape != G.values.shape:
        raise DimensionError(f"shape mismatch {F.values.shape} vs {G.values.shape}")
    diff = np.asarray(F.values, dtype=float) - np.asarray(G.values, dtype=float)
    return cut_norm(RArray(diff), oracle).value / F.k**F.r


# ---------------------------------------------------------------------------
# cut decomposition

@dataclass(frozen=True)
class CutTerm:
    coefficient: float
    rectangle: tuple[np.ndarray, ...]
    measure: float
    box_integral: float
    l2_drop: float


@dataclass
class CutDecomposition:
    """``W = sum_i d_i 1_{S_i^1 x ... x S_i^r} + remainder``.

    Norms are those of the kernel embedding: for an ``n``-vertex array every
    vertex carries mass ``1/n``, so ``l2`` is ``(n**-r sum A**2)**0.5`` and the
    cut norm is normalized by ``n**r``.
    """

    eps: float
    masses: np.ndarray
    terms: list[CutTerm]
    remainder: np.ndarray
    remainder_cut_norm: float
    certificate: str  # "exact" | "lower-bound"
    w_l2: float
    l2_history: list[float] = field(default_factory=list)

    @property
    def s(self) -> int:
        return len(self.terms)

    @property
    def coefficient_l1(self) -> float:
        return float(sum(abs(t.coefficient) for t in self.terms))

    def approximation(self) -> np.ndarray:
        B = np.zeros_like(self.remainder)
        for t in self.terms:
            B[np.ix_(*t.rectangle)] += t.coefficient
        return B

    def remainder_kernel(self) -> StepKernel:
        return StepKernel(self.masses, self.remainder)


def cut_decompose(W, eps: float, oracle: str = "exact", seed: int = 0, restarts: int = 8) -> CutDecomposition:
    """Greedy cut decomposition.

    While the remainder's cut norm (per ``oracle``) is at least
    ``eps * ||W||_2``, take the witness box, set its coefficient to the
    remainder's average on the box and subtract.  Every step removes at least
    ``eps**2 ||W||_2**2`` of squared l2 mass, so at most ``1/eps**2`` terms
    are produced.  With the heuristic oracle the terminal remainder bound is
    only a lower-bound certificate.
    """
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    kernel = W if isinstance(W, StepKernel) else StepKernel.uniform(np.asarray(as_rarray(W).values, dtype=float))
    masses = kernel.masses
    weights = kernel.cell_weights()
    R = np.array(kernel.values, dtype=float)
    w_l2 = kernel.l2_norm
    threshold = eps * w_l2
    cap = ceil(1.0 / eps**2)
    terms: list[CutTerm] = []
    history = [w_l2]
    certificate = "exact" if oracle == "exact" else "lower-bound"
    while True:
        res = cut_norm(StepKernel(masses, R), oracle, restarts, rng.derive_seed(seed, len(terms)))
        if w_l2 == 0 or res.value < threshold or len(terms) >= cap:
            break
        rect = res.witness
        measure = float(np.prod([masses[ix].sum() for ix in rect]))
        integral = box_sum(R * weights, rect)
        d = integral / measure
        before = float(np.sum(weights * R**2))
        R[np.ix_(*rect)] -= d
        after = float(np.sum(weights * R**2))
        terms.append(CutTerm(d, rect, measure, integral, before - after))
        history.append(float(np.sqrt(max(after, 0.0))))
    return CutDecomposition(eps, masses, terms, R, res.value, certificate, w_l2, history)


# ---------------------------------------------------------------------------
# sampling experiment

def cutnorm_sampling_experiment(W: StepKernel, k: int, trials: int, seed: int, oracle: str = "exact") -> TrialStatistics:
    """Deviation of ``k**-r ||H(k, W)||_cut`` from ``||W||_cut`` over trials."""
    reference = cut_norm(W, oracle, seed=seed).value
    est = np.empty(trials)
    for i in range(trials):
        H = sample_h(W, k, rng.derive_seed(seed, "cutnorm-sampling", i)).array
        est[i] = cut_norm(H, oracle, seed=seed).value / k**W.r
    return TrialStatistics(est, reference)
