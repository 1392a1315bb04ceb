"""Command-line interface.

Every subcommand reads an instance file (``--instance``) and writes a
canonical JSON result (``--out``, or stdout).  Exit codes: 0 on success,
2 on capacity or configuration errors, 1 on malformed input.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import io
from .arrays import RArray
from .csp import Formula, eval_rep, indicator_interactions, max_csp_exact
from .cutnorm import cut_decompose, cut_norm
from .errors import CapacityError, ConfigurationError, GselabError
from .experiments import ESTIMATORS, ExperimentConfig, beta_curve, run_concentration
from .graphon import FullStepGraphon, StepKernel, sample_g, sample_h, sample_without_replacement
from .gse import gse_fractional_ascent, gse_integer_exact, gse_integer_local, kernel_gse_reference
from .homdensity import t_hom, t_inj
from .qap import TriangularKernel, ac_exact, cluster_fit, estimate_qap, qap_exact


def _require(inst: dict, key: str, command: str):
    if key not in inst:
        raise ConfigurationError(f"{command} needs an instance with {key!r}")
    return inst[key]


def _partition_json(p) -> list:
    if hasattr(p, "assignment"):
        return np.asarray(p.assignment).tolist()
    return np.asarray(p.weights).tolist()


def _gse_problem(inst: dict):
    """``(G, J)`` for a finite instance; formulas use their evaluation representation."""
    obj = inst["object"]
    if isinstance(obj, Formula):
        return eval_rep(obj), indicator_interactions(obj.q, obj.r)
    return obj, _require(inst, "interaction", "gse")


def cmd_gse(args, inst: dict) -> dict:
    obj = inst["object"]
    if isinstance(obj, FullStepGraphon):
        obj = obj.averaged()
    if isinstance(obj, StepKernel):
        res = kernel_gse_reference(obj, _require(inst, "interaction", "gse"), args.restarts, args.seed)
        return {"value": res.value, "argmax": _partition_json(res.argmax), "oracle": "derived:ascent"}
    G, J = _gse_problem(inst)
    if args.local:
        res = gse_integer_local(G, J, args.restarts, args.seed)
    elif args.ascent:
        res = gse_fractional_ascent(G, J, args.restarts, args.seed)
    else:
        res = gse_integer_exact(G, J)
    return {
        "value": res.value,
        "argmax": _partition_json(res.argmax),
        "oracle": "exact" if res.certificate == "exact" else f"heuristic:{res.solver}",
    }


def cmd_micro_gse(args, inst: dict) -> dict:
    G, J = _gse_problem(inst)
    a = _require(inst, "micro", "micro-gse")
    if args.local:
        res = gse_integer_local(G, J, args.restarts, args.seed, micro=a)
    else:
        res = gse_integer_exact(G, J, micro=a)
    return {
        "value": res.value,
        "argmax": _partition_json(res.argmax),
        "masses": a.masses.tolist(),
        "oracle": "exact" if res.certificate == "exact" else f"heuristic:{res.solver}",
    }


def cmd_max_csp(args, inst: dict) -> dict:
    F = inst["object"]
    if not isinstance(F, Formula):
        raise ConfigurationError("max-csp needs a formula instance")
    value, sigma = max_csp_exact(F, return_assignment=True)
    return {"value": value, "assignment": sigma.tolist(), "oracle": "exact"}


def _square_values(obj) -> np.ndarray:
    if isinstance(obj, StepKernel):
        if not np.allclose(obj.masses, obj.masses[0]):
            raise ConfigurationError("exact QAP needs uniform step masses")
        return obj.values
    if isinstance(obj, RArray):
        return np.asarray(obj.values, dtype=float)
    raise ConfigurationError("QAP needs an r-array or step kernel instance")


def cmd_qap(args, inst: dict) -> dict:
    obj = inst["object"]
    cost = _require(inst, "cost", "qap")
    if args.estimate:
        W = obj if isinstance(obj, StepKernel) else StepKernel.uniform(_square_values(obj))
        method = args.method or ("triangular" if isinstance(cost, TriangularKernel) else "generic")
        fit = cluster_fit(cost, args.eps, method, inst.get("points"))
        stats = estimate_qap(W, cost, args.k, args.eps, args.trials, args.seed, fit=fit)
        return {
            "trials": stats.estimates.tolist(),
            "cluster_q": fit.q,
            "cluster_error": fit.error,
            "cluster_certified": fit.certified,
            "oracle": "none",
        }
    G = _square_values(obj)
    if isinstance(cost, TriangularKernel):
        return {"value": ac_exact(G), "oracle": "exact"}
    return {"value": qap_exact(G, _square_values(cost)), "oracle": "exact"}


def cmd_ac(args, inst: dict) -> dict:
    return {"value": ac_exact(_square_values(inst["object"])), "oracle": "exact"}


def _cut_host(inst: dict):
    obj = inst["object"]
    if isinstance(obj, FullStepGraphon):
        obj = obj.averaged()
    if not isinstance(obj, (RArray, StepKernel)):
        raise ConfigurationError("cut norms need an r-array or step kernel instance")
    return obj


def cmd_cutnorm(args, inst: dict) -> dict:
    oracle = "heuristic" if args.heuristic else "exact"
    res = cut_norm(_cut_host(inst), oracle, args.restarts, args.seed)
    return {
        "value": res.value,
        "witness": [np.asarray(w).tolist() for w in res.witness],
        "sign": res.sign,
        "oracle": "exact" if res.exact else "heuristic",
    }


def cmd_cutdecomp(args, inst: dict) -> dict:
    oracle = "heuristic" if args.heuristic else "exact"
    dec = cut_decompose(_cut_host(inst), args.eps, oracle, args.seed, args.restarts)
    return {
        "value": dec.remainder_cut_norm,
        "s": dec.s,
        "coefficients": [t.coefficient for t in dec.terms],
        "rectangles": [[np.asarray(ax).tolist() for ax in t.rectangle] for t in dec.terms],
        "coefficient_l1": dec.coefficient_l1,
        "remainder_cut_norm": dec.remainder_cut_norm,
        "w_l2": dec.w_l2,
        "l2_history": dec.l2_history,
        "certificate": dec.certificate,
        "oracle": oracle,
    }


def cmd_homdensity(args, inst: dict) -> dict:
    F = _require(inst, "template", "homdensity")
    host = inst["object"]
    if isinstance(host, FullStepGraphon):
        host = host.averaged()
    out = {"value": t_hom(F, host), "oracle": "exact"}
    if args.injective:
        if not isinstance(host, RArray):
            raise ConfigurationError("injective densities need a finite r-array host")
        out["value_injective"] = t_inj(F, host)
    return out


def cmd_sample(args, inst: dict) -> dict:
    obj = inst["object"]
    if isinstance(obj, RArray):
        arr = sample_without_replacement(obj, args.k, args.seed)
    elif isinstance(obj, (StepKernel, FullStepGraphon)):
        arr = (sample_h if args.averaged else sample_g)(obj, args.k, args.seed).array
    else:
        raise ConfigurationError("sample needs an r-array, step kernel or full graphon instance")
    return {"value": np.asarray(arr.values).ravel().tolist(), "k": arr.k, "r": arr.r, "oracle": "none"}


def _experiment_config(args, inst: dict, eps) -> ExperimentConfig:
    return ExperimentConfig(
        estimator=args.estimator, instance=inst, seed=args.seed, k=args.k, trials=args.trials,
        eps=eps, oracle=args.oracle, restarts=args.restarts, cluster_eps=args.cluster_eps,
        instance_ref=args.instance,
    )


def cmd_concentration(args, inst: dict) -> dict:
    return run_concentration(_experiment_config(args, inst, args.eps)).to_json()


def cmd_beta_curve(args, inst: dict) -> dict:
    grid = [float(e) for e in args.eps_grid.split(",") if e.strip()]
    if not grid:
        raise ConfigurationError("--eps-grid is empty")
    curve = beta_curve(_experiment_config(args, inst, grid), k_max=args.k_max)
    if args.csv:
        io.write_csv(args.csv, ["eps", "k_star"], curve.csv_rows())
    return curve.to_json()


COMMANDS = {
    "gse": cmd_gse,
    "micro-gse": cmd_micro_gse,
    "max-csp": cmd_max_csp,
    "qap": cmd_qap,
    "ac": cmd_ac,
    "cutnorm": cmd_cutnorm,
    "cutdecomp": cmd_cutdecomp,
    "homdensity": cmd_homdensity,
    "sample": cmd_sample,
    "concentration": cmd_concentration,
    "beta-curve": cmd_beta_curve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gselab", description="Ground state energies, cut norms and sampling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--instance", required=True, help="instance JSON file")
        p.add_argument("--out", help="result JSON file (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=10)
        return p

    p = add("gse", "ground state energy")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="enumerate all assignments (default)")
    mode.add_argument("--local", action="store_true", help="multi-start local search")
    mode.add_argument("--ascent", action="store_true", help="multi-start fractional ascent")

    p = add("micro-gse", "microcanonical ground state energy")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--local", action="store_true")

    add("max-csp", "MAX-rCSP density of a formula")

    p = add("qap", "quadratic assignment value or two-sample estimate")
    p.add_argument("--estimate", action="store_true")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--method", choices=["triangular", "geometric", "step", "generic"])

    add("ac", "maximum acyclic subgraph density")

    for name, help in (("cutnorm", "cut norm"), ("cutdecomp", "greedy cut decomposition")):
        p = add(name, help)
        p.add_argument("--heuristic", action="store_true", help="alternating maximization instead of enumeration")
        if name == "cutdecomp":
            p.add_argument("--eps", type=float, required=True)

    p = add("homdensity", "homomorphism density of a template")
    p.add_argument("--injective", action="store_true")

    p = add("sample", "draw a sample G(k, W)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--averaged", action="store_true", help="draw H(k, W) instead")

    for name, help in (("concentration", "concentration trials"), ("beta-curve", "empirical sample complexity")):
        p = add(name, help)
        p.add_argument("--estimator", choices=sorted(ESTIMATORS), default="gse")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--oracle", default=None, help="reference oracle override")
        p.add_argument("--cluster-eps", type=float, default=0.25, help="cost clustering accuracy (qap)")
        if name == "concentration":
            p.add_argument("--k", type=int, default=16)
            p.add_argument("--eps", type=float, default=0.1)
        else:
            p.add_argument("--k", type=int, default=2, help="smallest sample size of the doubling schedule")
            p.add_argument("--k-max", type=int, default=64)
            p.add_argument("--eps-grid", default="0.4,0.2,0.1")
            p.add_argument("--csv", help="also write the curve as CSV")
    return parser


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "csv")}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        inst = io.load_instance(args.instance)
        result = COMMANDS[args.command](args, inst)
    except (CapacityError, ConfigurationError) as exc:
        print(f"gselab {args.command}: {exc}", file=sys.stderr)
        return 2
    except (GselabError, ValueError, TypeError) as exc:
        print(f"gselab {args.command}: {exc}", file=sys.stderr)
        return 1
    result.setdefault("command", args.command)
    result.setdefault("seed", args.seed)
    result.setdefault("config_echo", _echo(args))
    text = io.canonical_dumps(result)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    # wall time is reported on stderr so result files stay reproducible
    print(f"wall time {time.perf_counter() - start:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
