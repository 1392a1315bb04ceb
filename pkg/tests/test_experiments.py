import numpy as np
import pytest

from gselab.arrays import InteractionArray
from gselab.csp import complete_xor
from gselab.errors import ConfigurationError
from gselab.graphon import StepKernel
from gselab.experiments import (
    ExperimentConfig,
    beta_curve,
    doubling_schedule,
    make_estimator,
    run_concentration,
    run_trials,
    thread_count,
)
from gselab.homdensity import Decoration, single_edge

CUT = InteractionArray(np.array([[0.0, 1.0], [1.0, 0.0]]))
MAXCUT = {"kind": "step_kernel", "object": StepKernel(np.array([0.5, 0.5]), np.array([[0.0, 1.0], [1.0, 0.0]])),
          "interaction": CUT}


def kernel_instance(seed, m=4):
    V = np.random.default_rng(seed).uniform(-1, 1, (m, m))
    return {"kind": "step_kernel", "object": StepKernel.uniform((V + V.T) / 2),
            "interaction": InteractionArray(np.array([[1.0, -0.5], [-0.5, 0.75]]))}


def test_zero_instance_has_zero_deviation():
    inst = {"kind": "step_kernel", "object": StepKernel.uniform(np.zeros((3, 3))), "interaction": CUT}
    rep = run_concentration(ExperimentConfig("gse", inst, k=6, trials=10, eps=0.1), threads=1)
    assert rep.quantiles["q100"] == 0.0
    assert rep.failure_rate == 0.0


def test_full_sample_csp_has_zero_deviation():
    inst = {"kind": "formula", "object": complete_xor(6)}
    rep = run_concentration(ExperimentConfig("max-csp", inst, k=6, trials=8, eps=0.1), threads=1)
    assert rep.oracle == "exact"
    assert all(v == rep.reference for v in rep.estimates)


def test_median_deviation_shrinks_with_k():
    inst = kernel_instance(3)
    small = run_concentration(ExperimentConfig("gse", inst, seed=2, k=8, trials=40, eps=0.15), threads=1)
    large = run_concentration(ExperimentConfig("gse", inst, seed=2, k=32, trials=40, eps=0.15), threads=1)
    assert small.oracle == "derived:ascent"
    assert large.quantiles["q50"] <= small.quantiles["q50"]


def test_results_independent_of_thread_count():
    est = make_estimator(ExperimentConfig("gse", kernel_instance(4)))
    one = run_trials(est, 10, 12, 5, "gse", threads=1)
    many = run_trials(est, 10, 12, 5, "gse", threads=4)
    assert np.array_equal(one, many)


def test_thread_count_parsing(monkeypatch):
    monkeypatch.setenv("GSELAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("GSELAB_THREADS", "zero")
    with pytest.raises(ConfigurationError):
        thread_count()


def test_missing_oracle_is_configuration_error():
    with pytest.raises(ConfigurationError):
        run_concentration(ExperimentConfig("gse", kernel_instance(5), oracle="exact", k=4, trials=2), threads=1)
    with pytest.raises(ConfigurationError):
        run_concentration(ExperimentConfig("nope", kernel_instance(5)), threads=1)
    with pytest.raises(ConfigurationError):
        run_concentration(ExperimentConfig("homdensity", kernel_instance(5)), threads=1)


def test_density_and_cutnorm_estimators():
    W = StepKernel.uniform(np.random.default_rng(6).uniform(size=(3, 3)))
    inst = {"kind": "step_kernel", "object": W, "template": single_edge(2, Decoration.identity())}
    rep = run_concentration(ExperimentConfig("homdensity", inst, k=6, trials=10, eps=0.3), threads=1)
    assert rep.reference == pytest.approx(W.values.mean())
    rep = run_concentration(ExperimentConfig("cutnorm", {"kind": "step_kernel", "object": W}, k=6, trials=5), threads=1)
    assert rep.oracle == "exact"


def test_doubling_schedule():
    assert doubling_schedule(3, 40) == [3, 6, 12, 24]


def test_beta_curve_constant_parameter():
    inst = {"kind": "step_kernel", "object": StepKernel.constant(0.5), "interaction": CUT}
    curve = beta_curve(ExperimentConfig("gse", inst, k=2, trials=10, eps=[0.4, 0.2, 0.1]), k_max=16, threads=1)
    assert set(curve.k_star.values()) == {2}


def test_beta_curve_maxcut_monotone():
    cfg = ExperimentConfig("gse", MAXCUT, k=2, trials=30, eps=[0.3, 0.2, 0.1, 0.05], seed=1)
    curve = beta_curve(cfg, k_max=32, threads=1)
    ks = [curve.k_star[e] for e in sorted(curve.k_star)]  # increasing eps
    resolved = [k for k in ks if k is not None]
    assert resolved == sorted(resolved, reverse=True)
    if curve.k_star[0.2] is not None and curve.k_star[0.1] is not None:
        assert curve.k_star[0.2] <= curve.k_star[0.1]
    rows = curve.to_json()["curve"]
    assert all(isinstance(r["k_star"], int) or r["k_star"] == "open" for r in rows)


def test_beta_curve_reports_open():
    cfg = ExperimentConfig("gse", kernel_instance(9), k=2, trials=20, eps=[0.001])
    curve = beta_curve(cfg, k_max=4, threads=1)
    assert curve.k_star[0.001] is None
    assert curve.to_json()["curve"][0]["k_star"] == "open"
    assert curve.slope is None
