"""Quadratic assignment, maximum acyclic subgraph and clustered cost arrays.

``QAP(G, J) = n**-r max_rho sum_i J[i] G[rho(i)]`` over permutations
``rho``.  When the cost ``J`` is close in L1 to a step function with ``q``
steps of masses ``a``, the problem reduces to a microcanonical ground state
energy of ``G`` with the ``q x ... x q`` array of step values as interaction
and class masses ``a``; :func:`estimate_qap` estimates it from two
independent vertex samples.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import ceil, factorial

import numpy as np

from . import rng
from .arrays import InteractionArray, RArray, StateDistribution, as_rarray
from .errors import ArgumentError, CapacityError, DimensionError
from .graphon import StepKernel, sample_g
from .gse import gse_integer_exact
from .stats import TrialStatistics

PERMUTATION_GUARD = 9
_BATCH = 20_000


def qap_exact(G, J) -> float:
    """Exact QAP value by enumerating all ``n!`` permutations (``n <= 9``)."""
    G, J = as_rarray(G), as_rarray(J)
    if G.values.shape != J.values.shape:
        raise DimensionError(f"G and J shapes differ: {G.values.shape} vs {J.values.shape}")
    n, r = G.k, G.r
    if n > PERMUTATION_GUARD:
        raise CapacityError(f"n = {n} exceeds the permutation guard {PERMUTATION_GUARD}")
    g = np.asarray(G.values, dtype=float)
    j = np.asarray(J.values, dtype=float)
    best = -np.inf
    perms = itertools.permutations(range(n))
    while True:
        chunk = np.array(list(itertools.islice(perms, _BATCH)), dtype=np.int64)
        if chunk.size == 0:
            break
        chunk = chunk.reshape(-1, n)
        idx = tuple(
            chunk.reshape((-1,) + (1,) * a + (n,) + (1,) * (r - 1 - a)) for a in range(r)
        )
        vals = np.sum(g[idx] * j, axis=tuple(range(1, r + 1)))
        best = max(best, float(vals.max()))
    return best / n**r


def ac_matrix(n: int) -> np.ndarray:
    """``J[i, j] = 1{j >= i}`` (diagonal included)."""
    return np.triu(np.ones((n, n)))


def ac_exact(G) -> float:
    """Maximum acyclic subgraph density ``n**-2 max_rho sum G[i, j] 1{rho(j) >= rho(i)}``."""
    G = as_rarray(G)
    if G.r != 2:
        raise DimensionError("acyclic subgraph density is defined for 2-arrays")
    return qap_exact(G, ac_matrix(G.k))


@dataclass(frozen=True)
class TriangularKernel:
    """The acyclic-subgraph cost ``J(x, y) = 1{y >= x}`` on ``[0, 1]^2``."""

    r: int = 2

    @property
    def inf_norm(self) -> float:
        return 1.0


def distance_kernel(points, p: float = 1) -> StepKernel:
    """Uniform step kernel ``J[i, j] = ||x_i - x_j||_p`` for points in ``[0, 1]^d``."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[0] == 1 and x.shape[1] > 1:
        x = x.T
    diff = x[:, None, :] - x[None, :, :]
    ordp = np.inf if p == np.inf else p
    return StepKernel.uniform(np.linalg.norm(diff, ord=ordp, axis=-1))


@dataclass(frozen=True)
class ClusterFit:
    """Step approximation ``J'`` of a cost kernel with its exact L1 error.

    ``membership[s]`` is the class of step ``s`` of the original kernel
    (``None`` for the triangular kernel, whose classes are ``q`` equal
    intervals).
    """

    kernel: StepKernel
    error: float
    method: str
    eps: float
    membership: np.ndarray | None
    certified: bool

    @property
    def q(self) -> int:
        return self.kernel.m

    @property
    def masses(self) -> StateDistribution:
        return StateDistribution(self.kernel.masses)


def _class_average(J: StepKernel, member: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Mass-weighted average of ``J`` on each product of classes."""
    r = J.r
    onehot = np.zeros((J.m, q))
    onehot[np.arange(J.m), member] = J.masses
    num = J.values
    for _ in range(r):
        num = np.tensordot(num, onehot, axes=([0], [0]))
    class_mass = onehot.sum(axis=0)
    den = class_mass
    for _ in range(r - 1):
        den = np.multiply.outer(den, class_mass)
    return num / den, class_mass


def l1_error(J: StepKernel, member: np.ndarray, values: np.ndarray) -> float:
    """``||J - J'||_1`` where ``J'`` takes ``values[class(s_1), ..., class(s_r)]`` on step cells."""
    expanded = values[np.ix_(*([member] * J.r))]
    return float(np.sum(J.cell_weights() * np.abs(J.values - expanded)))


def _fit_from_membership(J: StepKernel, member: np.ndarray, eps: float, method: str) -> ClusterFit:
    _, member = np.unique(member, return_inverse=True)
    q = int(member.max()) + 1
    vals, mass = _class_average(J, member, q)
    err = l1_error(J, member, vals)
    kernel = StepKernel(mass / mass.sum(), vals)
    return ClusterFit(kernel, err, method, eps, member, err <= eps * J.inf_norm + 1e-12)


def cluster_fit(J, eps: float, method: str = "generic", points=None, p: float = 1,
                budget: int | None = None) -> ClusterFit:
    """Approximate a cost kernel by a step function with few steps.

    Methods:

    ``triangular``
        ``J = 1{y >= x}``: ``q = ceil(2/eps)`` equal intervals, ``J'`` is 1
        above the diagonal blocks, 0 below and 1/2 on them, so
        ``||J - J'||_1 = 1/(2q)``.
    ``geometric``
        ``J`` is a function of embedded points (``points``, one row per
        step, coordinates in ``[0, 1]^d``): steps are grouped by the cell of a
        grid with ``beta = ceil(2 d**(1/p) / eps)`` intervals per axis and
        ``J'`` is the cell average.
    ``step``
        ``J' = J``.
    ``generic``
        Greedy agglomerative merging of steps: merge the pair whose merged
        cell average has the smallest L1 error, while that error stays within
        ``eps ||J||_inf`` (or until ``budget`` classes remain).

    The error is always computed by exact integration over step cells;
    ``certified`` records whether it is within ``eps ||J||_inf``.
    """
    if not eps > 0:
        raise ArgumentError("eps must be positive")
    if method == "triangular":
        if not isinstance(J, TriangularKernel):
            raise ArgumentError("the triangular method needs a TriangularKernel")
        q = ceil(2 / eps)
        vals = np.triu(np.ones((q, q)), 1) + 0.5 * np.eye(q)
        err = q * (1.0 / q**2) * 0.5
        return ClusterFit(StepKernel.uniform(vals), err, method, eps, None, err <= eps)
    if isinstance(J, TriangularKernel):
        raise ArgumentError(f"method {method!r} needs a step kernel")
    if not isinstance(J, StepKernel):
        J = StepKernel.uniform(np.asarray(as_rarray(J).values, dtype=float))
    if method == "step":
        return _fit_from_membership(J, np.arange(J.m), eps, method)
    if method == "geometric":
        if points is None:
            raise ArgumentError("the geometric method needs the point embedding")
        x = np.asarray(points, dtype=float).reshape(J.m, -1)
        d = x.shape[1]
        root = 1.0 if p == np.inf else d ** (1.0 / p)
        beta = ceil(2 * root / eps)
        cells = np.minimum((x * beta).astype(np.int64), beta - 1)
        _, member = np.unique(cells, axis=0, return_inverse=True)
        return _fit_from_membership(J, member.ravel(), eps, method)
    if method == "generic":
        return _generic_fit(J, eps, budget)
    raise ArgumentError(f"unknown cluster method {method!r}")


def _generic_fit(J: StepKernel, eps: float, budget: int | None) -> ClusterFit:
    member = np.arange(J.m)
    limit = eps * J.inf_norm
    while True:
        q = int(member.max()) + 1
        if q == 1 or (budget is not None and q <= budget):
            break
        best = None
        for a, b in itertools.combinations(range(q), 2):
            trial = np.where(member == b, a, member)
            trial = np.where(trial > b, trial - 1, trial)
            vals, _ = _class_average(J, trial, q - 1)
            err = l1_error(J, trial, vals)
            if best is None or err < best[0]:
                best = (err, trial)
        if budget is None and best[0] > limit:
            break
        member = best[1]
    return _fit_from_membership(J, member, eps, "generic")


def blow_up(fit: ClusterFit, n: int) -> RArray:
    """``n``-vertex array of ``J'`` with vertex ``i`` in the class containing ``(i + 1/2) / n``."""
    edges = np.cumsum(fit.kernel.masses)[:-1]
    cls = np.searchsorted(edges, (np.arange(n) + 0.5) / n, side="right")
    return RArray(fit.kernel.values[np.ix_(*([cls] * fit.kernel.r))])


def qap_to_micro(W, fit: ClusterFit) -> tuple[RArray, InteractionArray, StateDistribution]:
    """Microcanonical instance ``(W, J'', a)`` whose value is ``Q(W, J')``.

    ``J''`` is the ``q x ... x q`` array of step values of ``J'`` and ``a``
    the step masses; a step kernel ``W`` is passed as its mass-weighted array.
    """
    if isinstance(W, StepKernel):
        W = W.weighted_array()
    W = as_rarray(W)
    if W.r != fit.kernel.r:
        raise DimensionError("W and the cost kernel have different arity")
    return W, InteractionArray(fit.kernel.values), fit.masses


def _cost_classes(fit: ClusterFit, J, u: np.ndarray) -> np.ndarray:
    if fit.membership is None:
        return np.minimum((u * fit.q).astype(np.int64), fit.q - 1)
    return fit.membership[J.step_of(u)]


def estimate_qap(W: StepKernel, J, k: int, eps: float, trials: int, seed: int,
                 method: str = "triangular", points=None, p: float = 1,
                 reference: float | None = None, fit: ClusterFit | None = None) -> TrialStatistics:
    """Two-sample QAP estimate, one value per trial.

    Trial ``i`` samples ``G(k, W)`` and, independently, ``k`` uniform points
    for the cost side (streams separated by tags).  The class counts of the
    cost sample fix the microcanonical constraint, and the estimate is the
    exact GSE of the ``W`` sample with the clustered step values as
    interaction and exactly those class counts.
    """
    if fit is None:
        fit = cluster_fit(J, eps, method, points, p)
    inter = InteractionArray(fit.kernel.values)
    est = np.empty(trials)
    for i in range(trials):
        sw = rng.derive_seed(seed, "qap", i, "W")
        sj = rng.derive_seed(seed, "qap", i, "J")
        Gs = sample_g(W, k, sw).array
        u = rng.uniforms(rng.derive_seed("qap-cost", sj), np.arange(k))
        counts = np.bincount(_cost_classes(fit, J, u), minlength=fit.q)
        est[i] = gse_integer_exact(Gs, inter, exact_counts=counts).value
    return TrialStatistics(est, reference)
