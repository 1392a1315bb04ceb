from math import comb

import numpy as np
import pytest

from gselab import rng
from gselab.errors import DimensionError, DomainError
from gselab.graphon import (
    FullStepGraphon,
    StepKernel,
    coupled_samples,
    coupled_without_replacement,
    graphon_of_graph,
    sample_g,
    sample_h,
    samp_exchangeable,
)


def test_constant_kernel_samples_constant():
    W = StepKernel.constant(0.7)
    for seed in range(5):
        assert np.all(sample_g(W, 6, seed).array.values == 0.7)
        assert np.all(sample_h(W, 6, seed).array.values == 0.7)


def test_sampling_is_seed_deterministic():
    W = StepKernel(np.array([0.2, 0.3, 0.5]), np.arange(9.0).reshape(3, 3))
    a, b = sample_g(W, 7, 11), sample_g(W, 7, 11)
    assert np.array_equal(a.array.values, b.array.values)
    assert np.array_equal(a.singleton_uniforms, b.singleton_uniforms)
    assert not np.array_equal(a.array.values, sample_g(W, 7, 12).array.values)


def test_naive_kernel_h_equals_g():
    W = StepKernel(np.array([0.5, 0.25, 0.25]), np.random.default_rng(0).uniform(-1, 1, (3, 3, 3)))
    for seed in range(20):
        g, h = coupled_samples(W, 5, seed)
        assert np.array_equal(g.array.values, h.array.values)


def test_graphon_of_graph_example():
    W = graphon_of_graph(np.array([[5.0, 1.0], [2.0, 7.0]]))
    assert np.allclose(W.masses, [0.5, 0.5])
    assert np.array_equal(W.values, [[0.0, 1.0], [2.0, 0.0]])
    assert not np.any(graphon_of_graph(np.zeros((3, 3))).values)


def test_graphon_of_graph_sup_norm():
    G = np.random.default_rng(4).uniform(-3, 3, (4, 4))
    off = G[~np.eye(4, dtype=bool)]
    assert graphon_of_graph(G).inf_norm == np.max(np.abs(off))


def test_cell_frequencies_match_masses():
    # sampled entry (0, 1) of a 0/1 graph kernel lands in cell (i, j) with probability 1/9
    G = np.arange(9.0).reshape(3, 3)
    W = StepKernel.uniform(G)
    trials = 10_000
    seen = np.array([sample_g(W, 3, s).array.values[0, 1] for s in range(trials)])
    for v in range(9):
        p = 1 / 9
        sigma = np.sqrt(p * (1 - p) / trials)
        assert abs(np.mean(seen == v) - p) <= 3 * sigma


def test_h_averages_out_pair_coordinate():
    # constant on singletons, +-1 balanced on the pair coordinate
    vals = np.zeros((1, 1, 2))
    vals[..., 0], vals[..., 1] = 1.0, -1.0
    W = FullStepGraphon(2, (1, 1, 2), vals)
    assert not np.any(sample_h(W, 5, 3).array.values)


def test_h_independent_of_higher_uniforms():
    W = FullStepGraphon(2, (2, 2, 3), np.random.default_rng(2).uniform(size=(2, 2, 3)))
    base = sample_h(W, 4, 9, higher_seed=1).array.values
    for hs in range(2, 6):
        assert np.array_equal(sample_h(W, 4, 9, higher_seed=hs).array.values, base)


def test_g_averages_to_h_over_pair_redraws():
    W = FullStepGraphon(2, (2, 2, 4), np.random.default_rng(7).uniform(size=(2, 2, 4)))
    k, seed, draws = 3, 5, 10_000
    H = sample_h(W, k, seed).array.values
    acc = np.zeros((k, k))
    acc2 = np.zeros((k, k))
    for hs in range(draws):
        g = sample_g(W, k, seed, higher_seed=hs).array.values
        acc += g
        acc2 += g**2
    mean = acc / draws
    sd = np.sqrt(np.maximum(acc2 / draws - mean**2, 1e-12) / draws)
    off = ~np.eye(k, dtype=bool)
    assert np.all(np.abs(mean - H)[off] <= 3 * sd[off] + 1e-12)


def test_exchangeable_constant_and_shared_randomness():
    const = FullStepGraphon(2, (1, 1, 1, 1), np.full((1, 1, 1, 1), 0.25), include_empty=True)
    assert np.all(samp_exchangeable(const, 4, 0).values == 0.25)
    two = np.array([0.0, 1.0]).reshape(2, 1, 1, 1)
    f = FullStepGraphon(2, (2, 1, 1, 1), two, include_empty=True)
    for seed in range(20):
        v = samp_exchangeable(f, 4, seed).values
        assert np.all(v == v.flat[0])


def test_exchangeable_ordered_pair_symmetry():
    # indicator of U_{1} < U_{2} on a fine grid; ties within a cell count as 0
    g = 64
    fine = (np.arange(g)[:, None] < np.arange(g)[None, :]).astype(float).reshape(1, g, g, 1)
    f = FullStepGraphon(2, (1, g, g, 1), fine, include_empty=True)
    trials = 10_000
    hits = sum(samp_exchangeable(f, 2, s).values[0, 1] for s in range(trials))
    p = 0.5 * (1 - 1 / g)
    assert abs(hits / trials - p) <= 3 * np.sqrt(p * (1 - p) / trials)


def test_coupling_collision_rate():
    k0, k, trials = 50, 5, 10_000
    G = np.random.default_rng(1).integers(0, 2, (k0, k0)).astype(float)
    np.fill_diagonal(G, 0.0)
    differ = 0
    for s in range(trials):
        a, b = coupled_without_replacement(G, k, s)
        differ += not np.array_equal(a.values, b.values)
    # a mismatch needs two picks to collide
    bound = comb(k, 2) / k0
    assert differ / trials <= bound + 3 * np.sqrt(bound * (1 - bound) / trials)


def test_subset_uniforms_depend_only_on_sorted_subset():
    key = rng.derive_seed(3)
    assert rng.subset_code([2, 0, 5]) == rng.subset_code([0, 2, 5])
    u = rng.uniforms(key, [rng.subset_code([0, 2, 5])])
    assert np.all((0 <= u) & (u < 1))


def test_kernel_validation():
    with pytest.raises(DomainError):
        StepKernel(np.array([0.5, 0.6]), np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        StepKernel(np.array([0.5, 0.5]), np.zeros((2, 3)))
