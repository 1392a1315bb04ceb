"""Concentration experiments and empirical sample-complexity curves.

An experiment pairs an estimator (a function of a size-``k`` sample) with a
reference value computed by a declared oracle on the full instance.  Trial
``i`` always uses the seed ``derive_seed(master_seed, estimator, i)``, and
trials are collected by index, so results do not depend on how many worker
threads ran them.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .arrays import InteractionArray, RArray
from .csp import Formula, max_csp_exact, sample_formula
from .cutnorm import cut_norm
from .errors import ConfigurationError
from .graphon import StepKernel, sample_g, sample_h, sample_without_replacement
from .gse import gse_integer_exact, gse_integer_local, kernel_gse_reference
from .homdensity import t_hom
from .qap import TriangularKernel, _cost_classes, ac_exact, cluster_fit, qap_exact
from .stats import TrialStatistics

THREADS_ENV = "GSELAB_THREADS"
EXACT_SAMPLE_LIMIT = 1 << 12


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's output."""

    estimator: str
    instance: dict
    seed: int = 0
    k: int | list[int] = 16
    trials: int = 100
    eps: float | list[float] = 0.1
    oracle: str | None = None
    restarts: int = 8
    cluster_eps: float = 0.25
    instance_ref: str = ""

    def echo(self) -> dict:
        return {
            "estimator": self.estimator,
            "instance": self.instance_ref,
            "seed": self.seed,
            "k": self.k,
            "trials": self.trials,
            "eps": self.eps,
            "oracle": self.oracle,
            "restarts": self.restarts,
            "cluster_eps": self.cluster_eps,
        }


@dataclass
class Estimator:
    """``trial(k, seed) -> estimate``; ``reference() -> (value, oracle)``; ``scale`` sets the deviation unit."""

    trial: Callable[[int, int], float]
    reference: Callable[[], tuple[float, str]]
    scale: float = 1.0
    min_k: int = 1


@dataclass
class TrialReport:
    estimator: str
    k: int
    eps: float
    seed: int
    estimates: list[float]
    reference: float
    oracle: str
    threshold: float
    failure_rate: float
    quantiles: dict[str, float]
    config_echo: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_json(self) -> dict:
        # wall time varies run to run and stays out of result files
        return {
            "command": "concentration",
            "estimator": self.estimator,
            "k": self.k,
            "eps": self.eps,
            "seed": self.seed,
            "trials": self.estimates,
            "reference": self.reference,
            "oracle": self.oracle,
            "threshold": self.threshold,
            "failure_rate": self.failure_rate,
            "deviation_quantiles": self.quantiles,
            "config_echo": self.config_echo,
        }


# ---------------------------------------------------------------------------
# estimators

def _gse_estimator(inst: dict, cfg: ExperimentConfig) -> Estimator:
    W, J = inst["object"], inst.get("interaction")
    if J is None:
        raise ConfigurationError("gse experiments need an 'interaction' in the instance")
    if not isinstance(J, InteractionArray) or J.kind != "real":
        raise ConfigurationError("gse experiments support a single real interaction array")

    def solve(G) -> float:
        if J.q ** G.k <= EXACT_SAMPLE_LIMIT:
            return gse_integer_exact(G, J).value
        return gse_integer_local(G, J, cfg.restarts, 0).value

    if isinstance(W, StepKernel):
        def trial(k, s):
            return solve(sample_g(W, k, s).array)

        def reference():
            if cfg.oracle not in (None, "derived:ascent"):
                raise ConfigurationError(f"oracle {cfg.oracle!r} is not available for step kernels")
            return kernel_gse_reference(W, J, seed=cfg.seed).value, "derived:ascent"
    elif isinstance(W, RArray):
        def trial(k, s):
            return solve(sample_without_replacement(W, k, s))

        def reference():
            if cfg.oracle not in (None, "exact"):
                raise ConfigurationError(f"oracle {cfg.oracle!r} is not available for r-arrays")
            return gse_integer_exact(W, J).value, "exact"
    else:
        raise ConfigurationError("gse experiments need a step kernel or r-array instance")
    return Estimator(trial, reference, W.inf_norm * J.inf_norm, W.r)


def _csp_estimator(inst: dict, cfg: ExperimentConfig) -> Estimator:
    F = inst["object"]
    if not isinstance(F, Formula):
        raise ConfigurationError("max-csp experiments need a formula instance")

    def reference():
        if cfg.oracle not in (None, "exact"):
            raise ConfigurationError(f"oracle {cfg.oracle!r} is not available for formulas")
        return max_csp_exact(F), "exact"

    return Estimator(lambda k, s: max_csp_exact(sample_formula(F, k, s)), reference, 1.0, 1)


def _density_estimator(inst: dict, cfg: ExperimentConfig) -> Estimator:
    host, F = inst["object"], inst.get("template")
    if F is None:
        raise ConfigurationError("homdensity experiments need a 'template' in the instance")

    def trial(k, s):
        if isinstance(host, StepKernel):
            return t_hom(F, sample_g(host, k, s).array)
        return t_hom(F, sample_without_replacement(host, k, s))

    return Estimator(trial, lambda: (t_hom(F, host), "exact"), 1.0, F.k)


def _cutnorm_estimator(inst: dict, cfg: ExperimentConfig) -> Estimator:
    W = inst["object"]
    if not isinstance(W, StepKernel):
        raise ConfigurationError("cutnorm experiments need a step kernel instance")
    oracle = cfg.oracle or "exact"

    def trial(k, s):
        H = sample_h(W, k, s).array
        return cut_norm(H, oracle, seed=s).value / k**W.r

    return Estimator(trial, lambda: (cut_norm(W, oracle).value, oracle), W.inf_norm, W.r)


def _qap_estimator(inst: dict, cfg: ExperimentConfig) -> Estimator:
    W, cost = inst["object"], inst.get("cost")
    if cost is None:
        raise ConfigurationError("qap experiments need a 'cost' in the instance")
    if isinstance(W, RArray):
        W = StepKernel.uniform(np.asarray(W.values, dtype=float))
    method = "triangular" if isinstance(cost, TriangularKernel) else "generic"
    fit = cluster_fit(cost, cfg.cluster_eps, method, inst.get("points"))
    inter = InteractionArray(fit.kernel.values)

    def trial(k, s):
        Gs = sample_g(W, k, rng.derive_seed(s, "W")).array
        u = rng.uniforms(rng.derive_seed("qap-cost", rng.derive_seed(s, "J")), np.arange(k))
        counts = np.bincount(_cost_classes(fit, cost, u), minlength=fit.q)
        return gse_integer_exact(Gs, inter, exact_counts=counts).value

    def reference():
        if not np.allclose(W.masses, W.masses[0]):
            raise ConfigurationError("qap reference needs a uniform-mass instance")
        if isinstance(cost, TriangularKernel):
            return ac_exact(W.values), "exact"
        c = cost.values if isinstance(cost, StepKernel) else np.asarray(cost.values, dtype=float)
        return qap_exact(W.values, c), "exact"

    cost_norm = cost.inf_norm
    return Estimator(trial, reference, W.inf_norm * cost_norm, W.r)


ESTIMATORS: dict[str, Callable[[dict, ExperimentConfig], Estimator]] = {
    "gse": _gse_estimator,
    "max-csp": _csp_estimator,
    "homdensity": _density_estimator,
    "cutnorm": _cutnorm_estimator,
    "qap": _qap_estimator,
}


def make_estimator(cfg: ExperimentConfig) -> Estimator:
    if cfg.estimator not in ESTIMATORS:
        raise ConfigurationError(f"unknown estimator {cfg.estimator!r}; choose from {', '.join(ESTIMATORS)}")
    return ESTIMATORS[cfg.estimator](cfg.instance, cfg)


def run_trials(est: Estimator, k: int, trials: int, master: int, estimator_id: str,
               threads: int | None = None) -> np.ndarray:
    """Estimates for trials ``0..trials-1``, in trial order."""
    if k < est.min_k:
        raise ConfigurationError(f"sample size k={k} is below the estimator minimum {est.min_k}")
    seeds = [rng.derive_seed(int(master), estimator_id, i) for i in range(trials)]
    n = thread_count() if threads is None else threads
    if n <= 1 or trials <= 1:
        return np.array([est.trial(k, s) for s in seeds], dtype=float)
    with ThreadPoolExecutor(max_workers=n) as pool:
        return np.array(list(pool.map(lambda s: est.trial(k, s), seeds)), dtype=float)


def _quantile_table(stats: TrialStatistics) -> dict[str, float]:
    return {f"q{int(round(q * 100)):02d}": v for q, v in stats.quantiles().items()}


def run_concentration(cfg: ExperimentConfig, threads: int | None = None) -> TrialReport:
    """Empirical ``P(|estimate - reference| > eps * scale)`` at one sample size."""
    start = time.perf_counter()
    est = make_estimator(cfg)
    k = cfg.k if isinstance(cfg.k, int) else int(cfg.k[0])
    eps = float(cfg.eps if np.isscalar(cfg.eps) else cfg.eps[0])
    reference, oracle = est.reference()
    values = run_trials(est, k, cfg.trials, cfg.seed, cfg.estimator, threads)
    stats = TrialStatistics(values, reference)
    threshold = eps * est.scale
    return TrialReport(
        cfg.estimator, k, eps, cfg.seed, values.tolist(), float(reference), oracle, threshold,
        stats.failure_rate(threshold), _quantile_table(stats), cfg.echo(), time.perf_counter() - start,
    )


@dataclass
class BetaCurve:
    estimator: str
    ks: list[int]
    eps_grid: list[float]
    failure: dict[int, dict[float, float]]  # k -> eps -> failure rate
    k_star: dict[float, int | None]
    slope: float | None
    reference: float
    oracle: str
    config_echo: dict

    def to_json(self) -> dict:
        rows = [
            {"eps": e, "k_star": self.k_star[e] if self.k_star[e] is not None else "open"}
            for e in self.eps_grid
        ]
        return {
            "command": "beta-curve",
            "estimator": self.estimator,
            "schedule": self.ks,
            "curve": rows,
            "failure_rates": [
                {"k": k, "eps": e, "rate": self.failure[k][e]} for k in self.ks for e in self.eps_grid
            ],
            "loglog_slope": self.slope,
            "reference": self.reference,
            "oracle": self.oracle,
            "config_echo": self.config_echo,
        }

    def csv_rows(self) -> list[list]:
        return [[e, self.k_star[e] if self.k_star[e] is not None else "open"] for e in self.eps_grid]


def doubling_schedule(k_min: int, k_max: int) -> list[int]:
    ks = []
    k = max(1, int(k_min))
    while k <= k_max:
        ks.append(k)
        k *= 2
    return ks


def beta_curve(cfg: ExperimentConfig, k_max: int = 64, threads: int | None = None) -> BetaCurve:
    """Smallest ``k`` in a doubling schedule with failure rate below ``eps``, per ``eps``.

    A trial fails at ``eps`` when its deviation exceeds ``eps * scale``.  Each
    ``k`` is run once and its deviations are reused for every ``eps``, so
    ``k*(eps)`` is non-increasing in ``eps``.  If no scheduled ``k`` passes,
    ``k*(eps)`` is reported as open.  The slope of ``log k*`` against
    ``log(1/eps)`` over the resolved points is reported as well.
    """
    est = make_estimator(cfg)
    eps_grid = sorted({float(e) for e in np.atleast_1d(cfg.eps)}, reverse=True)
    if isinstance(cfg.k, int):
        ks = doubling_schedule(max(cfg.k, est.min_k), k_max)
    else:
        ks = sorted(int(k) for k in cfg.k)
    if not ks:
        raise ConfigurationError("empty sample-size schedule")
    reference, oracle = est.reference()
    failure: dict[int, dict[float, float]] = {}
    for k in ks:
        stats = TrialStatistics(run_trials(est, k, cfg.trials, cfg.seed, cfg.estimator, threads), reference)
        failure[k] = {e: stats.failure_rate(e * est.scale) for e in eps_grid}
    k_star: dict[float, int | None] = {}
    for e in eps_grid:
        k_star[e] = next((k for k in ks if failure[k][e] < e), None)
    pts = [(e, k) for e, k in k_star.items() if k is not None]
    slope = None
    if len({k for _, k in pts}) >= 2:
        x = np.log([1.0 / e for e, _ in pts])
        y = np.log([k for _, k in pts])
        slope = float(np.polyfit(x, y, 1)[0])
    return BetaCurve(cfg.estimator, ks, eps_grid, failure, k_star, slope, float(reference), oracle, cfg.echo())

