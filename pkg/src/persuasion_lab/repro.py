"""Named end-to-end reproduction bundles with frozen thresholds.

Each driver returns a JSON-ready dict: resolved configuration, a list of
checks (name, value, bounds, ok), and an overall flag.  The acceptance test
suite runs the same drivers, so CLI output and test verdicts cannot drift
apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classic import solve_classic
from .errors import UnknownTargetError
from .fixtures import builtin_instance
from .learning import (
    AlternatingSignalPolicy,
    EmpiricalBestResponse,
    SimulationTrace,
    confidence_radius,
    convergence_report,
    empirical_conditional_utilities,
    run_replications,
    simulate,
)
from .model import (
    PersuasionInstance,
    full_revelation_scheme,
    posterior,
    scheme_stats,
)
from .response import bounds_report, evaluate_objective
from .robustify import choose_alpha_lower, robustify
from .sampling import satisfied_instance

TARGETS = ("example-1", "judge", "example-4-3", "theorem-3-1-sweep", "theorem-4-1")


def _check(name: str, value, ok: bool, expect: str) -> dict:
    return {"name": name, "value": value, "expect": expect, "ok": bool(ok)}


def _finish(name: str, config: dict, checks: list[dict]) -> dict:
    return {
        "target": name,
        "config": config,
        "checks": checks,
        "ok": all(c["ok"] for c in checks),
    }


def reproduce_judge(gamma: float = 0.03) -> dict:
    inst = builtin_instance("judge")
    scheme, opt = solve_classic(inst)
    post = posterior(inst, scheme, "convict")
    worst0 = evaluate_objective(inst, scheme, 0.0, 0.0, "worst").value
    alpha = choose_alpha_lower(inst, gamma)
    robust = robustify(inst, scheme, alpha)
    worst_r = evaluate_objective(inst, robust, gamma, 0.0, "worst").value
    checks = [
        _check("opt", opt, abs(opt - 0.6) <= 1e-8, "0.6 +/- 1e-8"),
        _check(
            "posterior_guilty_at_convict",
            float(post[0]),
            abs(float(post[0]) - 0.5) <= 1e-9,
            "0.5 +/- 1e-9",
        ),
        _check("worst_mode_at_exact_br", worst0, abs(worst0) <= 1e-9, "0 +/- 1e-9"),
        _check(
            "worst_mode_robustified",
            worst_r,
            worst_r >= 0.5,
            ">= 0.5 after mixing against gamma",
        ),
    ]
    return _finish("judge", {"instance": "judge", "gamma": gamma, "alpha": alpha}, checks)


def reproduce_example_1() -> dict:
    inst = builtin_instance("example-1")
    scheme, opt = solve_classic(inst)
    full = full_revelation_scheme(inst)
    worst_full = evaluate_objective(inst, full, 0.0, 0.0, "worst").value
    worst_opt = evaluate_objective(inst, scheme, 0.0, 0.0, "worst").value
    checks = [
        _check("opt", opt, abs(opt - 0.5) <= 1e-8, "0.5 +/- 1e-8"),
        _check(
            "worst_mode_full_revelation",
            worst_full,
            abs(worst_full) <= 1e-9,
            "0 +/- 1e-9",
        ),
        _check(
            "worst_mode_optimal_scheme", worst_opt, abs(worst_opt) <= 1e-9, "0 +/- 1e-9"
        ),
    ]
    return _finish("example-1", {"instance": "example-1"}, checks)


@dataclass(frozen=True)
class AlternatingStats:
    seed: int
    overall_avg: float
    s1_fraction: float
    s1_mean: float
    s2_mean: float
    alternation_ok: bool


def alternating_stats(instance: PersuasionInstance, rounds: int, seed: int) -> AlternatingStats:
    trace = simulate(
        instance, AlternatingSignalPolicy(instance), EmpiricalBestResponse(), rounds, seed
    )
    return _trace_to_alt_stats(trace)


def reproduce_example_4_3(
    rounds: int = 2_000_000,
    n_seeds: int = 20,
    base_seed: int = 0,
    threads: int = 1,
) -> dict:
    inst = builtin_instance("example-4-3")
    _, opt = solve_classic(inst)
    seeds = list(range(base_seed, base_seed + n_seeds))

    stats = run_replications(
        inst,
        lambda: AlternatingSignalPolicy(inst),
        lambda: EmpiricalBestResponse(),
        rounds,
        seeds,
        lambda trace: _trace_to_alt_stats(trace),
        threads=threads,
    )
    overall = float(np.mean([s.overall_avg for s in stats]))
    frac = float(np.mean([s.s1_fraction for s in stats]))
    s1m = float(np.mean([s.s1_mean for s in stats]))
    s2m = float(np.mean([s.s2_mean for s in stats]))
    altern = all(s.alternation_ok for s in stats)

    checks = [
        _check("opt", opt, abs(opt - 0.5) <= 1e-8, "0.5 +/- 1e-8"),
        _check("overall_average", overall, 0.615 <= overall <= 0.635, "[0.615, 0.635]"),
        _check("s1_fraction", frac, 0.49 <= frac <= 0.51, "[0.49, 0.51]"),
        _check("s1_mean_utility", s1m, 0.74 <= s1m <= 0.76, "[0.74, 0.76]"),
        _check("s2_mean_utility", s2m, 0.485 <= s2m <= 0.515, "[0.485, 0.515]"),
        _check("s1_state_alternation", altern, altern, "exact for every seed"),
    ]
    config = {
        "instance": "example-4-3",
        "rounds": rounds,
        "seeds": seeds,
        "receiver": "empirical-br",
    }
    return _finish("example-4-3", config, checks)


def _trace_to_alt_stats(trace: SimulationTrace) -> AlternatingStats:
    s1 = trace.signals == 0
    s1_states = trace.states[s1]
    alternation = bool(np.all(s1_states[0::2] == 0) and np.all(s1_states[1::2] == 1))
    return AlternatingStats(
        seed=trace.seed,
        overall_avg=trace.final_average,
        s1_fraction=float(s1.mean()),
        s1_mean=float(trace.sender_utils[s1].mean()),
        s2_mean=float(trace.sender_utils[~s1].mean()),
        alternation_ok=alternation,
    )


def reproduce_bounds_sweep(
    n_instances: int = 500,
    gammas: tuple[float, ...] = (0.01, 0.05),
    deltas: tuple[float, ...] = (0.0, 0.02),
    n_schemes: int = 50,
    seed: int = 2024,
    tolerance: float = 1e-8,
) -> dict:
    """Two-sided bound check over seeded random satisfying instances."""
    rng = np.random.default_rng(seed)
    max_gamma = max(gammas)
    lower_viol = 0
    upper_viol = 0
    worst_lower_margin = np.inf
    worst_upper_margin = np.inf
    for k in range(n_instances):
        inst = satisfied_instance(rng, min_mu_delta=max_gamma * 1.3)
        scheme_seed = int(rng.integers(0, 2**31 - 1))
        for gamma in gammas:
            for delta in deltas:
                rep = bounds_report(
                    inst,
                    gamma,
                    delta,
                    n_schemes=n_schemes,
                    seed=scheme_seed,
                    tolerance=tolerance,
                )
                if not rep.lower_ok:
                    lower_viol += 1
                if not rep.upper_ok:
                    upper_viol += rep.n_upper_violations
                worst_lower_margin = min(
                    worst_lower_margin, rep.lower_certificate - (rep.opt - rep.slack)
                )
                worst_upper_margin = min(
                    worst_upper_margin,
                    (rep.opt + rep.slack) - max(rep.upper_values),
                )
    checks = [
        _check("lower_violations", lower_viol, lower_viol == 0, "0"),
        _check("upper_violations", upper_viol, upper_viol == 0, "0"),
        _check(
            "worst_lower_margin",
            float(worst_lower_margin),
            worst_lower_margin >= -tolerance,
            f">= -{tolerance:g}",
        ),
        _check(
            "worst_upper_margin",
            float(worst_upper_margin),
            worst_upper_margin >= -tolerance,
            f">= -{tolerance:g}",
        ),
    ]
    config = {
        "n_instances": n_instances,
        "gammas": list(gammas),
        "deltas": list(deltas),
        "n_schemes": n_schemes,
        "seed": seed,
        "tolerance": tolerance,
    }
    return _finish("theorem-3-1-sweep", config, checks)


def reproduce_convergence(
    rounds: int = 500_000,
    n_seeds: int = 10,
    constant: float = 0.2,
    base_seed: int = 0,
    threads: int = 1,
) -> dict:
    inst = builtin_instance("judge")
    seeds = list(range(base_seed, base_seed + n_seeds))
    rep = convergence_report(
        inst, constant, rounds, seeds, receiver="exp-weights", threads=threads
    )
    checks = [
        _check(
            "mean_final_average",
            rep.mean_final_average,
            rep.mean_final_average >= 0.4,
            ">= 0.4 (expected near 0.5+)",
        ),
        _check(
            "last_decile_obedience",
            rep.last_decile_obedience,
            rep.last_decile_obedience >= 0.95,
            ">= 0.95",
        ),
    ]
    config = {
        "instance": "judge",
        "constant": constant,
        "alpha": rep.alpha,
        "rounds": rounds,
        "seeds": seeds,
        "receiver": "exp-weights",
    }
    out = _finish("theorem-4-1", config, checks)
    out["report"] = rep.to_dict()
    return out


def concentration_coverage(
    instance: PersuasionInstance,
    scheme,
    t: int,
    n_runs: int,
    base_seed: int = 0,
) -> float:
    """Fraction of runs where every sent signal's empirical values are in-radius."""
    stats = scheme_stats(instance, scheme)
    sent = np.flatnonzero(stats.marginals > 0.0)
    radii = {int(s): confidence_radius(instance, scheme, t, int(s)) for s in sent}
    true_vals = stats.receiver_values
    hits = 0
    for k in range(n_runs):
        visited, vhat = empirical_conditional_utilities(instance, scheme, t, base_seed + k)
        ok = True
        for s in sent:
            if not visited[s]:
                ok = False
                break
            if np.any(np.abs(vhat[s] - true_vals[s]) > radii[int(s)]):
                ok = False
                break
        hits += ok
    return hits / n_runs


def reproduce(name: str, **overrides) -> dict:
    drivers = {
        "example-1": reproduce_example_1,
        "judge": reproduce_judge,
        "example-4-3": reproduce_example_4_3,
        "theorem-3-1-sweep": reproduce_bounds_sweep,
        "theorem-4-1": reproduce_convergence,
    }
    if name not in drivers:
        raise UnknownTargetError(f"unknown target {name!r}; available: {TARGETS}")
    return drivers[name](**overrides)
