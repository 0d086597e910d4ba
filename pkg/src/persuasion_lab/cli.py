"""Command-line front end.

Every command resolves its configuration, runs the corresponding library
call, writes deterministic JSON (and CSV traces for simulations) under
--output-dir, and prints a short human summary.  Exit codes: 0 success,
1 validation error, 2 assumption/hypothesis violation, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .classic import solve_classic
from .errors import (
    AssumptionViolatedError,
    HypothesisViolatedError,
    LPError,
    NoMassOnApproxSetError,
    ParseError,
    PersuasionError,
    RadiusPreconditionError,
    ValidationError,
)
from .fixtures import BUILTIN_INSTANCES, builtin_instance
from .learning import (
    AlternatingSignalPolicy,
    FixedSchemePolicy,
    make_receiver,
    run_replications,
)
from .model import (
    DEFAULT_EPS,
    advantage,
    expected_utility,
    load_instance,
    load_scheme,
    obedient_strategy,
    profile_instance,
    scheme_stats,
    scheme_to_json,
)
from .repro import TARGETS, reproduce
from .response import (
    approx_membership_mass,
    bounds_report,
    evaluate_objective,
    perturbed_posterior_certificate,
    perturbed_posterior_strategy,
    quantal_certificate,
    quantal_strategy,
)
from .robustify import (
    choose_alpha_lower,
    choose_alpha_upper,
    robustify,
    verify_robustification,
)

_EXIT_OK = 0
_EXIT_VALIDATION = 1
_EXIT_ASSUMPTION = 2
_EXIT_NUMERICAL = 3


def _exit_code(exc: PersuasionError) -> int:
    if isinstance(exc, (AssumptionViolatedError, HypothesisViolatedError, RadiusPreconditionError)):
        return _EXIT_ASSUMPTION
    if isinstance(exc, (LPError, NoMassOnApproxSetError)):
        return _EXIT_NUMERICAL
    return _EXIT_VALIDATION


def _threads(n_seeds: int) -> int:
    raw = os.environ.get("PERSUASION_LAB_THREADS", "1")
    try:
        cap = max(1, int(raw))
    except ValueError:
        raise ValidationError(f"PERSUASION_LAB_THREADS must be an integer, got {raw!r}")
    return min(cap, n_seeds)


def _resolve_instance(ref: str):
    if ref in BUILTIN_INSTANCES:
        return builtin_instance(ref)
    path = Path(ref)
    if not path.exists():
        raise ParseError(
            f"instance {ref!r} is neither a builtin name {BUILTIN_INSTANCES} nor an existing file"
        )
    return load_instance(path)


def _write_json(outdir: Path, name: str, payload: dict) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _write_text(outdir: Path, name: str, text: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    path.write_text(text)
    return path


def _config(args: argparse.Namespace, **extra) -> dict:
    cfg = {"command": args.command, "seed": args.seed, "eps_num": args.eps_num}
    cfg.update(extra)
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def _cmd_check_assumptions(args) -> int:
    inst = _resolve_instance(args.instance)
    prof = profile_instance(inst, args.eps_num)
    report = {
        "config": _config(args, instance=args.instance),
        "satisfied": prof.assumption_satisfied,
        "reasons": list(prof.reasons),
        "gap": None if prof.gap == float("inf") else prof.gap,
        "mu_min": prof.mu_min,
        "per_state_optimal": dict(prof.per_state_optimal),
        "optimal_regions": {a: sorted(ws) for a, ws in prof.optimal_regions.items()},
        "region_masses": {a: prof.region_mass(inst, a) for a in inst.actions},
    }
    path = _write_json(args.output_dir, "check-assumptions.json", report)
    status = "satisfied" if prof.assumption_satisfied else "violated"
    print(f"assumption {status}; gap={prof.gap:g} mu_min={prof.mu_min:g} -> {path}")
    for r in prof.reasons:
        print(f"  {r}")
    return _EXIT_OK if prof.assumption_satisfied else _EXIT_ASSUMPTION


def _cmd_solve_classic(args) -> int:
    inst = _resolve_instance(args.instance)
    scheme, opt = solve_classic(inst)
    scheme_path = _write_text(args.output_dir, "optimal-scheme.json", scheme_to_json(scheme))
    stats = scheme_stats(inst, scheme)
    report = {
        "config": _config(args, instance=args.instance),
        "opt": opt,
        "scheme_file": scheme_path.name,
        "signal_marginals": dict(zip(scheme.signals, stats.marginals.tolist())),
        "advantage": _finite_or_none(advantage(inst, scheme)),
    }
    path = _write_json(args.output_dir, "solve-classic.json", report)
    print(f"OPT = {opt:.9f} -> {path}")
    return _EXIT_OK


def _finite_or_none(x: float):
    return x if x == x and abs(x) != float("inf") else None


def _cmd_robustify(args) -> int:
    inst = _resolve_instance(args.instance)
    if args.scheme is not None:
        scheme = load_scheme(Path(args.scheme), inst)
    else:
        scheme, _ = solve_classic(inst)
    if args.alpha is not None:
        alpha = args.alpha
    elif args.gamma is not None:
        pick = choose_alpha_lower if args.rule == "lower" else choose_alpha_upper
        alpha = pick(inst, args.gamma)
    else:
        raise ValidationError("robustify needs either --alpha or --gamma")
    robust = robustify(inst, scheme, alpha)
    report = verify_robustification(inst, scheme, alpha)
    scheme_path = _write_text(
        args.output_dir, "robustified-scheme.json", scheme_to_json(robust)
    )
    payload = {
        "config": _config(
            args,
            instance=args.instance,
            scheme=args.scheme,
            alpha=alpha,
            gamma=args.gamma,
            rule=args.rule,
        ),
        "report": report.to_dict(),
        "ok": report.ok(),
        "scheme_file": scheme_path.name,
    }
    path = _write_json(args.output_dir, "robustify.json", payload)
    print(
        f"alpha = {alpha:.9g}; residual={report.marginal_identity_residual:.3g} "
        f"slack={report.advantage_bound_slack:.3g} tv={report.tv_distance:.3g} "
        f"ok={report.ok()} -> {path}"
    )
    return _EXIT_OK if report.ok() else _EXIT_NUMERICAL


def _parse_mode(mode: str) -> tuple[str, float | None]:
    if mode in ("worst", "best", "obedient"):
        return mode, None
    for prefix in ("quantal", "perturbed"):
        if mode.startswith(prefix + ":"):
            try:
                return prefix, float(mode.split(":", 1)[1])
            except ValueError:
                raise ValidationError(f"bad numeric parameter in mode {mode!r}")
    raise ValidationError(
        f"mode must be worst|best|obedient|quantal:LAM|perturbed:EPS, got {mode!r}"
    )


def _cmd_evaluate(args) -> int:
    inst = _resolve_instance(args.instance)
    scheme = load_scheme(Path(args.scheme), inst)
    kind, param = _parse_mode(args.mode)
    report = {
        "config": _config(
            args,
            instance=args.instance,
            scheme=args.scheme,
            gamma=args.gamma,
            delta=args.delta,
            mode=args.mode,
        )
    }
    if kind in ("worst", "best"):
        est = evaluate_objective(inst, scheme, args.gamma, args.delta, kind, args.eps_num)
        report.update(
            value=est.value,
            knife_edge_signals=list(est.knife_edge_signals),
            witness=est.witness_strategy.action_distribution.tolist(),
        )
        value = est.value
    elif kind == "obedient":
        value = expected_utility(inst, scheme, obedient_strategy(inst))
        report.update(value=value)
    elif kind == "quantal":
        strat = quantal_strategy(inst, scheme, param)
        value = expected_utility(inst, scheme, strat)
        cert = quantal_certificate(inst, param)
        report.update(
            value=value,
            lam=param,
            certificate={"gamma": cert[0], "delta": cert[1]},
            membership_mass=approx_membership_mass(inst, scheme, strat, cert[0], args.eps_num),
            strategy=strat.action_distribution.tolist(),
        )
    else:
        rng = np.random.default_rng(args.seed)
        strat = perturbed_posterior_strategy(inst, scheme, param, rng)
        value = expected_utility(inst, scheme, strat)
        cert = perturbed_posterior_certificate(param)
        report.update(
            value=value,
            epsilon=param,
            certificate={"gamma": cert[0], "delta": cert[1]},
            membership_mass=approx_membership_mass(inst, scheme, strat, cert[0], args.eps_num),
            strategy=strat.action_distribution.tolist(),
        )
    path = _write_json(args.output_dir, "evaluate.json", report)
    print(f"value = {value:.9f} ({args.mode}) -> {path}")
    return _EXIT_OK


def _cmd_bounds(args) -> int:
    inst = _resolve_instance(args.instance)
    rep = bounds_report(
        inst,
        args.gamma,
        args.delta,
        n_schemes=args.samples,
        seed=args.seed,
        eps_num=args.eps_num,
    )
    payload = {
        "config": _config(
            args,
            instance=args.instance,
            gamma=args.gamma,
            delta=args.delta,
            samples=args.samples,
        ),
        "report": rep.to_dict(),
    }
    path = _write_json(args.output_dir, "bounds.json", payload)
    print(
        f"opt = {rep.opt:.9f}; window = [{rep.lower_bound:.9f}, {rep.upper_bound:.9f}]; "
        f"certificate = {rep.lower_certificate:.9f}; ok={rep.ok} -> {path}"
    )
    return _EXIT_OK if rep.ok else _EXIT_NUMERICAL


def _make_policy_factory(args, inst):
    ref = args.sender
    if ref == "alternating":
        return lambda: AlternatingSignalPolicy(inst), {"sender": "alternating"}
    if ref.startswith("fixed:"):
        scheme = load_scheme(Path(ref.split(":", 1)[1]), inst)
        return lambda: FixedSchemePolicy(scheme), {"sender": ref}
    if ref.startswith("robustified:"):
        try:
            constant = float(ref.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad numeric parameter in sender {ref!r}")
        alpha = min(constant / 2.0, 1.0)
        base, _ = solve_classic(inst)
        scheme = robustify(inst, base, alpha)
        return lambda: FixedSchemePolicy(scheme), {
            "sender": ref,
            "alpha": alpha,
        }
    raise ValidationError(
        f"sender must be fixed:<scheme.json>|robustified:<C>|alternating, got {ref!r}"
    )


def _cmd_simulate(args) -> int:
    inst = _resolve_instance(args.instance)
    policy_factory, sender_cfg = _make_policy_factory(args, inst)
    receiver_factory = lambda: make_receiver(args.receiver)
    probe = receiver_factory()
    feedback = args.feedback or probe.feedback_mode
    if feedback != probe.feedback_mode:
        raise ValidationError(
            f"receiver {args.receiver!r} provides {probe.feedback_mode} feedback, not {feedback}"
        )
    seeds = list(range(args.seed, args.seed + args.seeds))
    checkpoint_every = args.checkpoint_every or max(1, args.rounds // 10)
    threads = _threads(len(seeds))

    traces = run_replications(
        inst,
        policy_factory,
        receiver_factory,
        args.rounds,
        seeds,
        lambda tr: tr,
        checkpoint_every=checkpoint_every,
        threads=threads,
    )
    args.output_dir.mkdir(parents=True, exist_ok=True)
    per_seed = []
    for trace in traces:
        trace.to_csv(args.output_dir / f"trace-seed{trace.seed}.csv")
        trace.checkpoints_to_csv(args.output_dir / f"diagnostics-seed{trace.seed}.csv")
        per_seed.append(
            {
                "seed": trace.seed,
                "final_average": trace.final_average,
                "obedience_last_decile": trace.obedience_frequency(
                    (9 * trace.rounds) // 10
                ),
            }
        )
    finals = [p["final_average"] for p in per_seed]
    payload = {
        "config": _config(
            args,
            instance=args.instance,
            receiver=args.receiver,
            feedback=feedback,
            rounds=args.rounds,
            seeds=seeds,
            checkpoint_every=checkpoint_every,
            threads=threads,
            **sender_cfg,
        ),
        "per_seed": per_seed,
        "mean_final_average": float(np.mean(finals)),
    }
    path = _write_json(args.output_dir, "simulate.json", payload)
    print(
        f"{len(seeds)} runs x {args.rounds} rounds; mean final average = "
        f"{payload['mean_final_average']:.6f} -> {path}"
    )
    return _EXIT_OK


_REPRO_OVERRIDES = {
    "example-1": frozenset(),
    "judge": frozenset(),
    "example-4-3": frozenset({"rounds", "n_seeds"}),
    "theorem-3-1-sweep": frozenset({"n_instances"}),
    "theorem-4-1": frozenset({"rounds", "n_seeds"}),
}


def _cmd_reproduce(args) -> int:
    overrides = {}
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if args.seeds is not None:
        overrides["n_seeds"] = args.seeds
    if args.instances is not None:
        overrides["n_instances"] = args.instances
    allowed = _REPRO_OVERRIDES.get(args.target, frozenset())
    extra = set(overrides) - allowed
    if extra:
        raise ValidationError(
            f"target {args.target!r} does not take overrides {sorted(extra)}"
        )
    if args.target in ("example-4-3", "theorem-4-1"):
        n = overrides.get("n_seeds", 20 if args.target == "example-4-3" else 10)
        overrides["threads"] = _threads(n)
    result = reproduce(args.target, **overrides)
    path = _write_json(args.output_dir, f"reproduce-{args.target}.json", result)
    for check in result["checks"]:
        mark = "PASS" if check["ok"] else "FAIL"
        print(f"{mark}  {check['name']} = {check['value']}  (expect {check['expect']})")
    print(f"{'ok' if result['ok'] else 'FAILED'} -> {path}")
    return _EXIT_OK if result["ok"] else _EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--output-dir", type=Path, default=Path("out"), help="artifact directory (default: ./out)"
    )
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default: 0)")
    common.add_argument(
        "--eps-num",
        type=float,
        default=DEFAULT_EPS,
        help="numeric comparison tolerance (default: 1e-9)",
    )

    parser = argparse.ArgumentParser(
        prog="persuasion-lab",
        description="Optimal persuasion schemes, robustification, bound checks, and learning simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-assumptions", parents=[common], help="profile per-state optima")
    p.add_argument("--instance", required=True, help="instance file or builtin name")
    p.set_defaults(func=_cmd_check_assumptions)

    p = sub.add_parser("solve-classic", parents=[common], help="solve the obedience LP")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=_cmd_solve_classic)

    p = sub.add_parser("robustify", parents=[common], help="mix a scheme toward full disclosure")
    p.add_argument("--instance", required=True)
    p.add_argument("--scheme", help="direct scheme file (default: solve the instance first)")
    p.add_argument("--alpha", type=float, help="explicit mixing weight")
    p.add_argument("--gamma", type=float, help="derive the weight from a margin target")
    p.add_argument("--rule", choices=("lower", "upper"), default="lower")
    p.set_defaults(func=_cmd_robustify)

    p = sub.add_parser("evaluate", parents=[common], help="sender value under a response model")
    p.add_argument("--instance", required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument(
        "--mode",
        required=True,
        help="worst|best|obedient|quantal:LAM|perturbed:EPS",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bounds", parents=[common], help="two-sided utility window check")
    p.add_argument("--instance", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=50, help="random schemes for the upper side")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("simulate", parents=[common], help="repeated play against a learner")
    p.add_argument("--instance", required=True)
    p.add_argument(
        "--sender",
        required=True,
        help="fixed:<scheme.json>|robustified:<C>|alternating",
    )
    p.add_argument("--receiver", required=True, help="empirical-br|exp-weights|exp3")
    p.add_argument("--feedback", choices=("full", "partial"))
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--seeds", type=int, default=1, help="number of replications")
    p.add_argument("--checkpoint-every", type=int, help="diagnostic interval (default: rounds/10)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reproduce", parents=[common], help="run a pinned end-to-end bundle")
    p.add_argument("target", help="|".join(TARGETS))
    p.add_argument("--rounds", type=int, help="override the bundled horizon")
    p.add_argument("--seeds", type=int, help="override the bundled seed count")
    p.add_argument("--instances", type=int, help="override the sweep size")
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PersuasionError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
