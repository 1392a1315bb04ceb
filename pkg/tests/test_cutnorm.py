import itertools
from math import ceil

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gselab.cutnorm import (
    box_sum,
    cut_decompose,
    cut_distance,
    cut_norm,
    cut_norm_exact,
    cut_norm_heuristic,
    cutnorm_sampling_experiment,
)
from gselab.errors import CapacityError
from gselab.graphon import StepKernel


def brute_cut_norm(A):
    """Max |box sum| over all choices of one subset per axis."""
    A = np.asarray(A, dtype=float)
    n, r = A.shape[0], A.ndim
    subsets = [np.array(s, dtype=bool) for s in itertools.product([False, True], repeat=n)]
    best = 0.0
    for choice in itertools.product(subsets, repeat=r):
        if any(not s.any() for s in choice):
            continue
        best = max(best, abs(A[np.ix_(*[np.flatnonzero(s) for s in choice])].sum()))
    return best


def test_constant_array():
    assert cut_norm_exact(np.full((2, 2), -3.0)).value == pytest.approx(12.0)


def test_checkerboard_example():
    res = cut_norm_exact(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    assert res.value == pytest.approx(1.0)
    assert res.sign == 1
    assert [w.tolist() for w in res.witness] == [[0], [0]]


def test_constant_kernel():
    assert cut_norm_exact(StepKernel(np.array([0.3, 0.7]), np.full((2, 2), -0.4))).value == pytest.approx(0.4)


@pytest.mark.parametrize("r,n", [(2, 4), (2, 5), (3, 3)])
def test_exact_matches_brute_force(r, n):
    gen = np.random.default_rng(r * 10 + n)
    for _ in range(5):
        A = gen.uniform(-1, 1, (n,) * r)
        res = cut_norm_exact(A)
        assert res.value == pytest.approx(brute_cut_norm(A), abs=1e-12)
        assert abs(box_sum(A, res.witness)) == pytest.approx(res.value, abs=1e-12)


def test_kernel_cut_norm_uses_masses():
    lam = np.array([0.2, 0.8])
    V = np.array([[1.0, -2.0], [0.5, 1.0]])
    W = StepKernel(lam, V)
    brute = max(
        abs(sum(lam[i] * lam[j] * V[i, j] for i in S for j in T))
        for S in ([0], [1], [0, 1])
        for T in ([0], [1], [0, 1])
    )
    assert cut_norm_exact(W).value == pytest.approx(brute)


def test_exact_guard():
    with pytest.raises(CapacityError):
        cut_norm_exact(np.zeros((25, 25)))


def test_heuristic_examples():
    assert cut_norm_heuristic(np.array([[1.0, -1.0], [-1.0, 1.0]]), restarts=4).value == pytest.approx(1.0)
    assert cut_norm_heuristic(np.zeros((4, 4))).value == 0.0
    u, v = np.array([1.0, 2.0, 0.5]), np.array([0.3, 1.0, 2.0])
    rank1 = np.outer(u, v)
    assert cut_norm_heuristic(rank1).value == pytest.approx(cut_norm_exact(rank1).value)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_heuristic_is_a_lower_bound(seed):
    A = np.random.default_rng(seed).uniform(-1, 1, (6, 6))
    h = cut_norm_heuristic(A, restarts=4, seed=seed)
    assert h.value <= cut_norm_exact(A).value + 1e-12
    assert abs(box_sum(A, h.witness)) == pytest.approx(h.value, abs=1e-12)
    assert not h.exact


def test_cut_distance():
    gen = np.random.default_rng(3)
    F = gen.uniform(-1, 1, (3, 3))
    G = gen.uniform(-1, 1, (3, 3))
    assert cut_distance(F, F) == 0.0
    assert cut_distance(F, F - 0.25) == pytest.approx(0.25)
    assert cut_distance(F, G) == pytest.approx(brute_cut_norm(F - G) / 9)


def test_decompose_indicator_rectangle():
    A = np.zeros((4, 4))
    A[np.ix_([0, 1], [1, 2, 3])] = 1.0
    dec = cut_decompose(A, 0.5)
    assert dec.s == 1
    assert dec.terms[0].coefficient == pytest.approx(1.0)
    assert np.allclose(dec.remainder, 0.0)


def test_decompose_zero():
    assert cut_decompose(np.zeros((3, 3)), 0.5).s == 0


@pytest.mark.parametrize("eps", [0.5, 0.25])
def test_decompose_postconditions(eps):
    gen = np.random.default_rng(int(eps * 100))
    A = gen.uniform(-1, 1, (12, 12))
    dec = cut_decompose(A, eps)
    w2 = dec.w_l2
    assert dec.s <= ceil(1 / eps**2)
    assert dec.coefficient_l1 <= w2 / eps + 1e-9
    # recheck the remainder with an independent call
    assert cut_norm_exact(dec.remainder).value / 144 < eps * w2
    assert all(b <= a + 1e-12 for a, b in zip(dec.l2_history, dec.l2_history[1:]))
    assert all(t.l2_drop >= eps**2 * w2**2 - 1e-12 for t in dec.terms)
    assert np.allclose(dec.approximation() + dec.remainder, A)


def test_sampling_experiment_trivial_cases():
    const = cutnorm_sampling_experiment(StepKernel.constant(0.6), 5, 10, 0)
    assert np.allclose(const.deviations, 0.0)
    zero = cutnorm_sampling_experiment(StepKernel.constant(0.0), 5, 10, 0)
    assert np.all(zero.estimates == 0.0)


def test_sampling_deviation_shrinks_with_k():
    W = StepKernel.uniform(np.random.default_rng(8).uniform(-1, 1, (3, 3)))
    small = cutnorm_sampling_experiment(W, 4, 100, 1)
    large = cutnorm_sampling_experiment(W, 12, 100, 1)
    assert large.median_deviation <= small.median_deviation


def test_cut_norm_oracle_names():
    A = np.eye(3)
    assert cut_norm(A, "exact").exact
    assert not cut_norm(A, "heuristic").exact
    with pytest.raises(ValueError):
        cut_norm(A, "bogus")
