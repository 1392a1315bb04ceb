import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gselab.arrays import InteractionArray, IntegerPartition, RArray, StateDistribution, energy, zero_diagonal
from gselab.errors import CapacityError, InfeasibleError
from gselab.graphon import StepKernel
from gselab.gse import (
    MicroRoundingTrace,
    admissible_counts,
    continuity_bound,
    gse_fractional_ascent,
    gse_integer_exact,
    gse_integer_local,
    in_relaxed_set,
    kernel_gse_reference,
    micro_rounding_bound,
    multiset_assignments,
    round_microcanonical,
    round_to_integer,
    rounding_loss_bound,
    transport_partition,
)

from conftest import random_instance, random_partition

CUT = InteractionArray(np.array([[0.0, 1.0], [1.0, 0.0]]))


def brute_gse(G, J, counts_ok=None):
    """Max energy over all integer assignments, evaluated one by one."""
    G = np.asarray(G.values if isinstance(G, RArray) else G, dtype=float)
    k, q = G.shape[0], J.q
    best = -np.inf
    for s in itertools.product(range(q), repeat=k):
        p = IntegerPartition(np.array(s), q)
        if counts_ok is not None and not counts_ok(p.counts()):
            continue
        best = max(best, energy(G, J, p))
    return best


def test_zero_interaction():
    G = RArray(np.random.default_rng(0).uniform(-1, 1, (4, 4)))
    zero = InteractionArray(np.zeros((2, 2)))
    assert gse_integer_exact(G, zero).value == 0.0
    assert gse_integer_local(G, zero).value == 0.0
    assert gse_fractional_ascent(G, zero).value == 0.0


def test_maxcut_triangle():
    G = np.ones((3, 3)) - np.eye(3)
    res = gse_integer_exact(G, CUT)
    assert res.value == pytest.approx(4 / 9)
    assert sorted(res.argmax.counts().tolist()) == [1, 2]


def test_micro_two_vertices():
    G = np.array([[0.0, 1.0], [1.0, 0.0]])
    res = gse_integer_exact(G, CUT, micro=StateDistribution(np.array([0.5, 0.5])))
    assert res.value == pytest.approx(0.5)


def test_single_vertex():
    J = InteractionArray(np.array([[0.3, -1.0], [2.0, -0.7]]))
    G = np.array([[2.0]])
    assert gse_integer_exact(G, J).value == pytest.approx(max(0.3, -0.7) * 2.0)


@pytest.mark.parametrize("r,k,q", [(2, 5, 2), (2, 4, 3), (3, 4, 2)])
def test_exact_matches_brute_force(r, k, q):
    gen = np.random.default_rng(100 * r + 10 * k + q)
    for _ in range(4):
        G, J = random_instance(gen, k, q, r)
        assert gse_integer_exact(G, J).value == pytest.approx(brute_gse(G, J), abs=1e-12)


def test_micro_exact_matches_brute_force():
    gen = np.random.default_rng(9)
    a = StateDistribution(np.array([0.3, 0.7]))
    for _ in range(5):
        G, J = random_instance(gen, 6, 2, 2)
        ok = lambda c: np.all(np.abs(c - 6 * a.masses) <= 1)
        res = gse_integer_exact(G, J, micro=a)
        assert res.value == pytest.approx(brute_gse(G, J, ok), abs=1e-12)
        assert in_relaxed_set(res.argmax, a)


def test_exact_counts_and_infeasible():
    G, J = random_instance(np.random.default_rng(1), 5, 3, 2)
    res = gse_integer_exact(G, J, exact_counts=[2, 2, 1])
    assert res.argmax.counts().tolist() == [2, 2, 1]
    with pytest.raises(InfeasibleError):
        gse_integer_exact(G, J, exact_counts=[2, 2, 2])


def test_enumeration_guard():
    with pytest.raises(CapacityError):
        gse_integer_exact(np.zeros((30, 30)), CUT)


def test_count_helpers():
    assert admissible_counts(4, StateDistribution(np.array([0.5, 0.5]))) == [(1, 3), (2, 2), (3, 1)]
    rows = multiset_assignments([2, 1])
    assert sorted(map(tuple, rows.tolist())) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_local_matches_exact():
    gen = np.random.default_rng(21)
    hits = 0
    for _ in range(100):
        G, J = random_instance(gen, 6, 2, 2)
        hits += abs(gse_integer_local(G, J, restarts=20).value - gse_integer_exact(G, J).value) < 1e-9
    assert hits >= 95


def test_local_micro_respects_counts():
    gen = np.random.default_rng(5)
    a = StateDistribution(np.array([0.25, 0.75]))
    G, J = random_instance(gen, 8, 2, 2)
    res = gse_integer_local(G, J, restarts=5, micro=a)
    assert in_relaxed_set(res.argmax, a)
    assert res.value <= gse_integer_exact(G, J, micro=a).value + 1e-12


def test_ascent_on_zero_diagonal_is_integral_and_optimal():
    gen = np.random.default_rng(33)
    for _ in range(20):
        G, J = random_instance(gen, 5, 2, 2, zero_diag=True)
        res = gse_fractional_ascent(G, J, restarts=20)
        assert res.argmax.is_integer()
        assert res.value == pytest.approx(gse_integer_exact(G, J).value, abs=1e-9)


def test_round_to_integer_examples():
    G = np.ones((3, 3)) - np.eye(3)
    uniform = np.full((3, 2), 0.5)
    assert energy(G, CUT, uniform) == pytest.approx(1 / 3)
    p = round_to_integer(G, CUT, uniform)
    assert energy(G, CUT, p) >= 1 / 3 - 1e-12
    s = IntegerPartition(np.array([0, 1, 1]), 2)
    assert round_to_integer(G, CUT, s).assignment.tolist() == [0, 1, 1]
    assert round_to_integer(G, InteractionArray(np.ones((1, 1))), np.ones((3, 1))).assignment.tolist() == [0, 0, 0]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.sampled_from([2, 3]), q=st.integers(2, 3))
def test_rounding_properties(seed, r, q):
    gen = np.random.default_rng(seed)
    k = 4 if r == 3 else 6
    G, J = random_instance(gen, k, q, r)
    x = random_partition(gen, k, q)
    Z = zero_diagonal(G)
    p = round_to_integer(G, J, x)
    assert energy(Z, J, p) >= energy(Z, J, x) - 1e-9
    loss = energy(G, J, x) - energy(G, J, p)
    assert loss <= rounding_loss_bound(r, k, q, G.inf_norm, J.inf_norm)


def test_micro_rounding_balanced_counts():
    G, J = random_instance(np.random.default_rng(2), 4, 2, 2)
    a = StateDistribution(np.array([0.5, 0.5]))
    p = round_microcanonical(G, J, np.full((4, 2), 0.5), a)
    assert p.counts().tolist() == [2, 2]


def test_micro_rounding_integer_fixed_point():
    G, J = random_instance(np.random.default_rng(3), 4, 2, 2)
    s = IntegerPartition(np.array([0, 1, 1, 0]), 2)
    assert round_microcanonical(G, J, s, StateDistribution(np.array([0.5, 0.5]))).assignment.tolist() == [0, 1, 1, 0]


def _a_fractional(gen, k, q):
    """Random fractional partition together with its column means."""
    x = random_partition(gen, k, q)
    return x, StateDistribution(x.mean(axis=0) / x.mean(axis=0).sum())


def test_micro_rounding_properties():
    gen = np.random.default_rng(44)
    for _ in range(30):
        G, J = random_instance(gen, 10, 2, 2)
        x, a = _a_fractional(gen, 10, 2)
        trace = MicroRoundingTrace()
        p = round_microcanonical(G, J, x, a, trace)
        assert in_relaxed_set(p, a)
        c = trace.fractional_counts
        assert all(b < a_ for a_, b in zip(c, c[1:]))
        assert energy(G, J, x) - energy(G, J, p) <= micro_rounding_bound(2, 10, 2, G.inf_norm, J.inf_norm)


def test_transport_examples():
    gen = np.random.default_rng(6)
    x, a = _a_fractional(gen, 5, 3)
    assert np.allclose(transport_partition(x, a, a).weights, x)
    w = np.zeros((4, 2))
    w[:, 0] = 1.0
    out = transport_partition(w, StateDistribution(np.array([1.0, 0.0])), StateDistribution(np.array([0.0, 1.0])))
    assert np.allclose(out.weights[:, 1], 1.0)


def test_transport_continuity():
    gen = np.random.default_rng(7)
    for _ in range(30):
        G, J = random_instance(gen, 5, 3, 2)
        x, a = _a_fractional(gen, 5, 3)
        b = StateDistribution(gen.dirichlet(np.ones(3)))
        y = transport_partition(x, a, b)
        assert np.allclose(y.weights.mean(axis=0), b.masses)
        gap = abs(energy(G, J, x) - energy(G, J, y))
        assert gap <= continuity_bound(2, G.inf_norm, J.inf_norm, a, b) + 1e-9


def test_kernel_reference_maxcut():
    W = StepKernel(np.array([0.5, 0.5]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert kernel_gse_reference(W, CUT).value == pytest.approx(0.5, abs=1e-12)


def test_kernel_reference_against_grid_search():
    # m = 2, q = 2: the continuum value is a maximum over two row weights in [0, 1]
    gen = np.random.default_rng(12)
    lam = np.array([0.4, 0.6])
    for _ in range(5):
        V = gen.uniform(-1, 1, (2, 2))
        J = gen.uniform(-1, 1, (2, 2))
        t = np.linspace(0, 1, 401)
        best = -np.inf
        for s in t:
            for u in t:
                x = np.array([[s, 1 - s], [u, 1 - u]])
                best = max(best, float(np.einsum("i,j,ij,ia,jb,ab->", lam, lam, V, x, x, J)))
        ref = kernel_gse_reference(StepKernel(lam, V), InteractionArray(J)).value
        assert ref >= best - 1e-12
        assert ref <= best + 1e-4
