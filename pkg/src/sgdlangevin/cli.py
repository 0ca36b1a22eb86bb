"""Command-line entry point: ``sgdlangevin {plan,sample,bound,verify}``.

Exit codes: 0 success, 2 invalid input or infeasible plan, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import planner
from .config import ExperimentConfig
from .errors import InfeasiblePlan, InvalidArgument, NumericFailure, UnsupportedTarget
from .metrics import MAX_EMPIRICAL_POINTS, w2_empirical, w2_gaussian
from .oracles import gaussian_chain_law, lmc_chain_spec, sgd_chain_spec
from .potentials import QuadraticMixin
from .samplers import SamplerConfig, chain_rng, run_chains
from .verify import SUITES, run_suite

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

PLAN_ALIASES = {"first-order": "sgd_first_order", "second-order": "sgd_second_order",
                "lmc": "lmc_first_order"}
BOUND_ALIASES = {"first-order": "lmc_first_order", "second-order": "lmc_second_order"}

# chain ids at or above this are reserved for reference draws from pi
REFERENCE_STREAM = 2**32


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _emit(obj, stream=None):
    stream = stream or sys.stdout
    json.dump(obj, stream, indent=2, default=_json_default)
    stream.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _error(kind, message, **extra):
    _emit({"error": kind, "message": message, **extra}, sys.stderr)


# ------------------------------------------------------------------ plan


def _plan_one(theorem, cfg, target, f0):
    if theorem == "lmc_first_order":
        return planner.plan_lmc(cfg.epsilon, target.m, target.M, target.dim, f0)
    if theorem in planner.SGD_PLANNERS:
        return planner.SGD_PLANNERS[theorem](cfg.epsilon, target, f0)
    raise InvalidArgument(f"no planner for theorem {theorem!r}")


def cmd_plan(cfg: ExperimentConfig) -> int:
    if cfg.epsilon is None:
        raise InvalidArgument("plan needs --eps or an epsilon in the config")
    target = cfg.build_target()
    f0 = target.excess_value(cfg.theta0_for(target))
    theorem = PLAN_ALIASES.get(cfg.theorem, cfg.theorem)
    out = {"epsilon": cfg.epsilon, "f_at_theta0": f0, "plans": {}}
    if theorem != "best":
        try:
            plan = _plan_one(theorem, cfg, target, f0)
        except UnsupportedTarget as exc:
            out["plans"][theorem] = {"error": "unsupported-target", "message": str(exc)}
            _emit(out)
            return EXIT_INVALID
        except InfeasiblePlan as exc:
            out["plans"][theorem] = {"error": "infeasible", "message": str(exc),
                                     "conditions": [c.to_dict() for c in exc.conditions]}
            _emit(out)
            return EXIT_INVALID
        out["plans"][theorem] = plan.to_dict()
        _emit(out)
        return EXIT_OK
    for name, result in planner.candidate_plans(cfg.epsilon, target, f0).items():
        if isinstance(result, planner.Plan):
            out["plans"][name] = result.to_dict()
        else:
            kind = "unsupported-target" if isinstance(result, UnsupportedTarget) else "infeasible"
            out["plans"][name] = {"error": kind, "message": str(result),
                                  "conditions": [c.to_dict() for c in getattr(result, "conditions", [])]}
    try:
        out["best"] = planner.best_plan(cfg.epsilon, target, f0).to_dict()
    except InfeasiblePlan:
        out["best"] = None
        _emit(out)
        return EXIT_INVALID
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------- sample


def resolve_parameters(cfg: ExperimentConfig, target, f0):
    """(SamplerConfig, K, plan or None); explicit h/b/K override planned values."""
    plan = None
    h, b, K = cfg.h, cfg.b, cfg.K
    if not cfg.manual:
        theorem = PLAN_ALIASES.get(cfg.theorem, cfg.theorem)
        if cfg.sampler == "lmc":
            plan = planner.plan_lmc(cfg.epsilon, target.m, target.M, target.dim, f0)
        elif theorem == "best":
            plan = planner.best_plan(cfg.epsilon, target, f0)
        else:
            plan = _plan_one(theorem, cfg, target, f0)
        h = plan.h_eff if h is None else h
        b = plan.b if b is None else b
        K = plan.K if K is None else K
    if cfg.sampler == "lmc":
        b = None
    elif b is None:
        raise InvalidArgument(f"sampler {cfg.sampler} needs a batch size")
    if cfg.sampler == "sgd_minibatch" and b is not None:
        b = int(b)
    return SamplerConfig(cfg.sampler, float(h), b), int(K), plan


def _exact_law(sconf, target, theta0, k):
    if not isinstance(target, QuadraticMixin) or sconf.kind == "sgd_minibatch":
        return None
    spec = lmc_chain_spec(target, sconf.h) if sconf.kind == "lmc" else sgd_chain_spec(target, sconf.h, sconf.b)
    return gaussian_chain_law(spec, theta0, k)


def _write_rows(path, rows_by_k, p):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain_id", "k"] + [f"theta_{j + 1}" for j in range(p)])
        chains = next(iter(rows_by_k.values())).shape[0]
        for c in range(chains):
            for k in sorted(rows_by_k):
                w.writerow([c, k] + [_fmt(v) for v in rows_by_k[k][c]])


def _summarize(x, k, sconf, target, theta0, pi, reference):
    entry = {"k": k, "mean": x.mean(axis=0).tolist(),
             "cov": np.atleast_2d(np.cov(x, rowvar=False, ddof=1)).tolist() if x.shape[0] > 1 else None}
    law = _exact_law(sconf, target, theta0, k)
    entry["w2_exact"] = None if law is None else w2_gaussian(law, pi)
    entry["w2_empirical"] = None if reference is None else w2_empirical(x, reference)
    return entry


def cmd_sample(cfg: ExperimentConfig) -> int:
    target = cfg.build_target()
    theta0 = cfg.theta0_for(target)
    f0 = target.excess_value(theta0)
    sconf, K, plan = resolve_parameters(cfg, target, f0)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    checkpoints = sorted({int(k) for k in cfg.checkpoints if 0 <= int(k) <= K} | {K})
    summary = {
        "status": "ok",
        "sampler": sconf.kind, "h": sconf.h, "b": sconf.b, "K": K,
        "chains": cfg.chains, "seed": cfg.seed, "theta0": theta0.tolist(), "f_at_theta0": f0,
        "epsilon": cfg.epsilon, "plan": None if plan is None else plan.to_dict(),
    }
    try:
        finals, snaps = run_chains(sconf, target, theta0, K, cfg.chains, cfg.seed, checkpoints)
    except NumericFailure as exc:
        summary.update(status="numeric_failure", message=str(exc), step=exc.step)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
        _error("numeric-failure", str(exc), step=exc.step)
        return EXIT_NUMERIC
    snaps[K] = finals
    p = target.dim
    _write_rows(out / "samples.csv", {K: finals}, p)
    if cfg.trajectory:
        _write_rows(out / "trajectory.csv", {k: snaps[k] for k in checkpoints}, p)
    pi = target.stationary_law() if isinstance(target, QuadraticMixin) else None
    reference = None
    if pi is not None and 2 <= cfg.chains <= MAX_EMPIRICAL_POINTS:
        reference = pi.sample(cfg.chains, chain_rng(cfg.seed, REFERENCE_STREAM))
    summary["checkpoints"] = [_summarize(snaps[k], k, sconf, target, theta0, pi, reference) if pi is not None
                              else {"k": k, "mean": snaps[k].mean(axis=0).tolist()} for k in checkpoints]
    if pi is not None:
        summary["stationary"] = {"mean": pi.mean.tolist(), "cov": pi.cov.tolist()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    _emit(summary["checkpoints"][-1])
    return EXIT_OK


# ----------------------------------------------------------------- bound


def cmd_bound(args, cfg: ExperimentConfig | None) -> int:
    theorem = BOUND_ALIASES.get(args.theorem, args.theorem)
    m, M, L, p = args.m, args.M, args.L, args.p
    f0 = args.f0
    if cfg is not None and cfg.target:
        target = cfg.build_target()
        m = target.m if m is None else m
        M = target.M if M is None else M
        L = target.L if L is None else L
        p = target.dim if p is None else p
        f0 = target.excess_value(cfg.theta0_for(target)) if f0 is None else f0
    missing = [n for n, v in (("h", args.h), ("K", args.K), ("m", m), ("M", M), ("p", p)) if v is None]
    if missing:
        raise InvalidArgument(f"bound needs {', '.join('--' + x for x in missing)}")
    if args.w0 is not None:
        W0, source = args.w0, "given"
    elif f0 is not None:
        W0, source = planner.w0_upper_bound(f0, m, p), "w0_upper_bound(f0, m, p)"
    else:
        raise InvalidArgument("bound needs --w0 or --f0")
    out = {"theorem": theorem, "h": args.h, "K": args.K, "W0": W0, "W0_source": source}
    if theorem == "lmc_first_order":
        c, noise = planner.lmc_bound_first_order_terms(args.h, args.K, W0, m, M, p)
        out.update(bound=c + noise, terms={"contraction": c, "noise": noise})
        split = 2.0 / (m + M)
        if abs(args.h - split) <= planner.SLACK * split:
            # value of the second branch at the split point
            second = (M * args.h - 1.0) ** args.K * W0 + 1.65 * M * args.h / (2.0 - M * args.h) * math.sqrt(args.h * p)
            out["branch_check"] = {"first_branch": c + noise, "second_branch": second,
                                   "agree": math.isclose(c + noise, second, rel_tol=1e-9, abs_tol=1e-12)}
    elif theorem == "lmc_second_order":
        if L is None:
            raise UnsupportedTarget("unsupported-target: second-order bound needs --L")
        c, hess, smooth = planner.lmc_bound_second_order_terms(args.h, args.K, W0, m, M, L, p)
        out.update(bound=c + hess + smooth, terms={"contraction": c, "hessian_lipschitz": hess, "smoothness": smooth})
    else:
        raise InvalidArgument(f"unknown theorem {args.theorem!r}")
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, seed=args.seed)
    ok = all(c.passed for c in checks)
    _emit({"suite": args.suite, "seed": args.seed, "pass": ok, "results": [c.to_dict() for c in checks]})
    return EXIT_OK if ok else 1


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgdlangevin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="experiment JSON file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--eps", type=float, dest="epsilon")
        sp.add_argument("--theorem")
        sp.add_argument("--theta0", type=lambda s: [float(v) for v in s.split(",")])

    sp = sub.add_parser("plan", help="turn a target accuracy into (h, b, K) schedules")
    common(sp)

    sp = sub.add_parser("sample", help="run independent chains and summarize them")
    common(sp)
    sp.add_argument("--chains", type=int)
    sp.add_argument("--out")
    sp.add_argument("--checkpoints", type=lambda s: [int(v) for v in s.split(",") if v])
    sp.add_argument("--sampler", choices=["lmc", "sgd_idealized", "sgd_minibatch"])
    sp.add_argument("--h", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--K", type=int)
    sp.add_argument("--trajectory", action="store_true", default=None,
                    help="also write trajectory.csv with every checkpoint")

    sp = sub.add_parser("bound", help="evaluate an LMC W2 bound")
    sp.add_argument("--config", type=Path)
    sp.add_argument("--theorem", default="first-order",
                    choices=["first-order", "second-order", "lmc_first_order", "lmc_second_order"])
    sp.add_argument("--theta0", type=lambda s: [float(v) for v in s.split(",")])
    for name in ("h", "m", "M", "L", "w0", "f0"):
        sp.add_argument(f"--{name}", type=float)
    sp.add_argument("--K", type=int)
    sp.add_argument("--p", type=int)

    sp = sub.add_parser("verify", help="run a self-check suite")
    sp.add_argument("--suite", required=True, choices=sorted(SUITES) + ["all"])
    sp.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "bound":
            cfg = ExperimentConfig.load(args.config, theta0=args.theta0) if args.config else None
            return cmd_bound(args, cfg)
        keys = ("seed", "epsilon", "theorem", "theta0", "chains", "out", "checkpoints",
                "sampler", "h", "b", "K", "trajectory")
        cfg = ExperimentConfig.load(args.config, **{k: getattr(args, k, None) for k in keys})
        if args.command == "plan":
            return cmd_plan(cfg)
        cfg.check()
        return cmd_sample(cfg)
    except UnsupportedTarget as exc:
        _error("unsupported-target", str(exc))
        return EXIT_INVALID
    except InfeasiblePlan as exc:
        _error("infeasible", str(exc), conditions=[c.to_dict() for c in exc.conditions])
        return EXIT_INVALID
    except (InvalidArgument, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        _error("invalid-argument", str(exc))
        return EXIT_INVALID
    except NumericFailure as exc:
        _error("numeric-failure", str(exc), step=exc.step)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
