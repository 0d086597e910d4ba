"""Receiver response sets and sender objectives over them.

Given a fixed scheme, the set of gamma-best responses at each signal is a
finite action set, so the worst and best sender values over all strategies
that keep mass 1-delta inside those sets have closed forms; both come with
an explicit witness strategy.  Also here: softmax (quantal) and perturbed
posterior receiver models with their response-set certificates, conversion
of deterministic responses to direct-revelation schemes, and the two-sided
value bound around the classic optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classic import solve_classic
from .errors import (
    DimensionMismatchError,
    StrategyNotDeterministicError,
    ValidationError,
    ZeroProbabilitySignalError,
)
from .model import (
    DEFAULT_EPS,
    PersuasionInstance,
    ReceiverStrategy,
    SignalingScheme,
    best_response_mask,
    expected_utility,
    make_scheme,
    profile_instance,
    scheme_stats,
)
from .robustify import choose_alpha_lower, robustify


@dataclass(frozen=True, eq=False)
class ApproxResponseSet:
    """Per-signal gamma-best action sets for one (instance, scheme) pair.

    Signals that are never sent have an all-False mask row and a NaN best
    value; quantifiers over signals skip them.
    """

    gamma: float
    signals: tuple[str, ...]
    actions: tuple[str, ...]
    member_mask: np.ndarray  # (S, n) bool
    best_values: np.ndarray  # (S,)
    marginals: np.ndarray  # (S,)

    def actions_for(self, signal: str | int) -> tuple[str, ...]:
        s = self._index(signal)
        if self.marginals[s] <= 0.0:
            raise ZeroProbabilitySignalError(
                f"signal {self.signals[s]!r} has zero marginal probability"
            )
        return tuple(a for a, keep in zip(self.actions, self.member_mask[s]) if keep)

    def contains(self, signal: str | int, action: str) -> bool:
        s = self._index(signal)
        return bool(self.member_mask[s, self.actions.index(action)])

    def _index(self, signal: str | int) -> int:
        if isinstance(signal, (int, np.integer)):
            return int(signal)
        return self.signals.index(signal)


def approx_set(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    gamma: float,
    eps_num: float = DEFAULT_EPS,
) -> ApproxResponseSet:
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    stats = scheme_stats(instance, scheme)
    mask = best_response_mask(stats.receiver_values, gamma, eps_num)
    best = stats.receiver_values.max(axis=1)
    unsent = stats.marginals <= 0.0
    mask[unsent] = False
    best = np.where(unsent, np.nan, best)
    return ApproxResponseSet(
        gamma=float(gamma),
        signals=scheme.signals,
        actions=instance.actions,
        member_mask=mask,
        best_values=best,
        marginals=stats.marginals,
    )


@dataclass(frozen=True, eq=False)
class ObjectiveEstimate:
    """Extremal sender value over near-best-responding strategies.

    ``witness_strategy`` attains ``value`` exactly and satisfies the
    membership constraint it was optimized under.  ``knife_edge_signals``
    lists signals where some action sits within 10 tolerance units of the
    response-set boundary, i.e. where set membership is numerically fragile.
    """

    value: float
    mode: str
    gamma: float
    delta: float
    witness_strategy: ReceiverStrategy
    knife_edge_signals: tuple[str, ...]


def evaluate_objective(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    gamma: float,
    delta: float,
    mode: str,
    eps_num: float = DEFAULT_EPS,
) -> ObjectiveEstimate:
    """Closed-form inner optimum over (gamma, delta)-responding strategies.

    mode="worst": each signal contributes (1-delta) times the lowest sender
    value inside the response set plus delta times the global minimum.
    mode="best" is symmetric; when the global maximizer already lies in the
    response set the whole mass goes there.
    """
    if mode not in ("worst", "best"):
        raise ValidationError(f"mode must be 'worst' or 'best', got {mode!r}")
    if not 0.0 <= delta < 1.0:
        raise ValidationError("delta must lie in [0, 1)")
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")

    stats = scheme_stats(instance, scheme)
    mask = best_response_mask(stats.receiver_values, gamma, eps_num)
    S, n = stats.sender_values.shape
    rho = np.full((S, n), 1.0 / n)
    value = 0.0
    knife: list[str] = []

    sign = 1.0 if mode == "worst" else -1.0
    for s in range(S):
        if stats.marginals[s] <= 0.0:
            continue
        su = stats.sender_values[s]
        masked = np.where(mask[s], sign * su, np.inf)
        inner = int(np.argmin(masked))
        outer = int(np.argmin(sign * su))
        sig_value = (1.0 - delta) * su[inner] + delta * su[outer]
        row = np.zeros(n)
        if mask[s, outer]:
            row[outer] = 1.0
            sig_value = su[outer]
        else:
            row[inner] += 1.0 - delta
            row[outer] += delta
        rho[s] = row
        value += stats.marginals[s] * sig_value

        # near-cutoff margins make set membership arithmetic-sensitive; the
        # canonical argmax has margin 0 by construction and is never at risk
        margins = stats.receiver_values[s].max() - stats.receiver_values[s]
        margins[int(np.argmin(margins))] = np.inf
        if np.any(np.abs(margins - gamma) <= 10.0 * eps_num):
            knife.append(scheme.signals[s])

    return ObjectiveEstimate(
        value=float(value),
        mode=mode,
        gamma=float(gamma),
        delta=float(delta),
        witness_strategy=ReceiverStrategy(rho),
        knife_edge_signals=tuple(knife),
    )


# ---------------------------------------------------------------------------
# membership audits


def approx_membership_mass(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    strategy: ReceiverStrategy,
    gamma: float,
    eps_num: float = DEFAULT_EPS,
) -> float:
    """Minimum over sent signals of the strategy mass on the gamma-best set."""
    if strategy.n_signals != scheme.n_signals:
        raise DimensionMismatchError("strategy and scheme disagree on signal count")
    stats = scheme_stats(instance, scheme)
    mask = best_response_mask(stats.receiver_values, gamma, eps_num)
    sent = stats.marginals > 0.0
    masses = np.where(mask, strategy.action_distribution, 0.0).sum(axis=1)
    return float(masses[sent].min()) if sent.any() else 1.0


def is_approx_best_responding(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    strategy: ReceiverStrategy,
    gamma: float,
    delta: float = 0.0,
    eps_num: float = DEFAULT_EPS,
) -> bool:
    mass = approx_membership_mass(instance, scheme, strategy, gamma, eps_num)
    return mass >= 1.0 - delta - eps_num


# ---------------------------------------------------------------------------
# behavioral receiver models


def quantal_strategy(
    instance: PersuasionInstance, scheme: SignalingScheme, lam: float
) -> ReceiverStrategy:
    """Softmax response: P(a|s) proportional to exp(lam * v(a, posterior_s)).

    Rows for unsent signals are uniform.  ``lam=0`` is uniformly random play;
    large ``lam`` approaches exact best response.
    """
    if lam < 0:
        raise ValidationError("lam must be nonnegative")
    stats = scheme_stats(instance, scheme)
    logits = lam * stats.receiver_values
    logits -= logits.max(axis=1, keepdims=True)
    rho = np.exp(logits)
    rho /= rho.sum(axis=1, keepdims=True)
    rho[stats.marginals <= 0.0] = 1.0 / instance.n_actions
    return ReceiverStrategy(rho)


def quantal_certificate(instance: PersuasionInstance, lam: float) -> tuple[float, float]:
    """(gamma, delta) such that the softmax receiver is always a member.

    Meaningful once ``lam > 1/n_actions``; below that delta is vacuous.
    """
    if lam <= 0:
        raise ValidationError("certificate requires lam > 0")
    n = instance.n_actions
    gamma = max(0.0, math.log(n * lam) / lam)
    return gamma, 1.0 / lam


def _tv_step(mu: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """A point of the simplex within total-variation epsilon of ``mu``.

    Draws a zero-sum direction, scales it to a full TV step of epsilon, then
    shrinks the step to the simplex boundary if it would leave the simplex.
    """
    d = rng.standard_normal(mu.size)
    d -= d.mean()
    l1 = float(np.abs(d).sum())
    if l1 < 1e-15 or epsilon == 0.0:
        return mu.copy()
    step = d * (2.0 * epsilon / l1)
    neg = step < 0
    theta = 1.0
    if neg.any():
        theta = min(1.0, float(np.min(mu[neg] / -step[neg])))
    out = mu + theta * step
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def perturbed_posterior_strategy(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    epsilon: float,
    rng: np.random.Generator,
) -> ReceiverStrategy:
    """Best response to a randomly perturbed posterior at each signal.

    The perturbed belief stays within total-variation ``epsilon`` of the true
    posterior, so the resulting deterministic strategy is a (2 epsilon, 0)
    member.  Unsent signals best-respond to the prior.
    """
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    stats = scheme_stats(instance, scheme)
    v = instance.receiver_utility
    rho = np.zeros((scheme.n_signals, instance.n_actions))
    prior_best = int(np.argmax(v @ instance.prior))
    for s in range(scheme.n_signals):
        if stats.marginals[s] <= 0.0:
            rho[s, prior_best] = 1.0
            continue
        belief = _tv_step(stats.posteriors[s], epsilon, rng)
        rho[s, int(np.argmax(v @ belief))] = 1.0
    return ReceiverStrategy(rho)


def perturbed_posterior_certificate(epsilon: float) -> tuple[float, float]:
    return 2.0 * epsilon, 0.0


# ---------------------------------------------------------------------------
# deterministic responses as direct schemes


def to_direct_revelation(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    strategy: ReceiverStrategy,
    eps_num: float = DEFAULT_EPS,
) -> SignalingScheme:
    """Collapse (scheme, deterministic strategy) into a recommendation scheme.

    Signals mapping to the same action have their conditionals summed.  The
    sender value is preserved exactly, and if the strategy was a gamma-best
    response the obedient strategy is one for the new scheme.
    """
    if strategy.n_signals != scheme.n_signals:
        raise DimensionMismatchError("strategy and scheme disagree on signal count")
    rho = strategy.action_distribution
    top = rho.max(axis=1)
    if np.any(top < 1.0 - eps_num):
        bad = scheme.signals[int(np.argmin(top))]
        raise StrategyNotDeterministicError(
            f"strategy row for signal {bad!r} is not a point mass"
        )
    chosen = rho.argmax(axis=1)
    cond = np.zeros((instance.n_states, instance.n_actions))
    for s in range(scheme.n_signals):
        cond[:, chosen[s]] += scheme.conditional[:, s]
    return make_scheme(instance, instance.actions, cond)


# ---------------------------------------------------------------------------
# two-sided value bounds around the classic optimum


@dataclass(frozen=True, eq=False)
class BoundsReport:
    """Everything entering the sandwich around the classic optimum OPT.

    ``lower_certificate`` is the worst-mode value of the robustified optimal
    scheme; the sandwich promises it stays above ``opt - slack``.  Each
    entry of ``upper_values`` is the best-mode value of one candidate scheme,
    promised to stay below ``opt + slack``.
    """

    opt: float
    gamma: float
    delta: float
    ratio: float
    slack: float
    alpha: float
    tolerance: float
    lower_certificate: float
    lower_ok: bool
    upper_values: tuple[float, ...]
    upper_ok: bool
    n_upper_violations: int
    knife_edge_schemes: int
    seed: int | None

    @property
    def lower_bound(self) -> float:
        return self.opt - self.slack

    @property
    def upper_bound(self) -> float:
        return self.opt + self.slack

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return {
            "opt": self.opt,
            "gamma": self.gamma,
            "delta": self.delta,
            "ratio": self.ratio,
            "slack": self.slack,
            "alpha": self.alpha,
            "tolerance": self.tolerance,
            "lower_bound": self.lower_bound,
            "lower_certificate": self.lower_certificate,
            "lower_ok": self.lower_ok,
            "upper_bound": self.upper_bound,
            "n_upper_schemes": len(self.upper_values),
            "max_upper_value": max(self.upper_values) if self.upper_values else None,
            "upper_ok": self.upper_ok,
            "n_upper_violations": self.n_upper_violations,
            "knife_edge_schemes": self.knife_edge_schemes,
            "seed": self.seed,
            "ok": self.ok,
        }


def _random_schemes(
    rng: np.random.Generator, instance: PersuasionInstance, count: int
) -> list[SignalingScheme]:
    out = []
    for _ in range(count):
        n_sig = int(rng.integers(1, instance.n_actions + 3))
        cond = rng.dirichlet(np.ones(n_sig), size=instance.n_states)
        signals = tuple(f"s{k}" for k in range(n_sig))
        out.append(make_scheme(instance, signals, cond))
    return out


def bounds_report(
    instance: PersuasionInstance,
    gamma: float,
    delta: float,
    *,
    n_schemes: int = 50,
    seed: int | None = 0,
    schemes: list[SignalingScheme] | None = None,
    eps_alpha: float = 1e-6,
    eps_num: float = DEFAULT_EPS,
    tolerance: float = 1e-8,
) -> BoundsReport:
    """Certify ``opt - slack <= worst <= best <= opt + slack`` numerically.

    The lower side is witnessed by robustifying the classic optimum with the
    smallest sufficient mixing weight and evaluating its worst mode.  The
    upper side is checked on ``n_schemes`` sampled schemes (or the ones
    provided) in best mode.
    """
    prof = profile_instance(instance, eps_num)
    alpha = choose_alpha_lower(instance, gamma, eps_alpha, prof)
    ratio = 0.0 if gamma == 0.0 else gamma / (prof.mu_min * prof.gap)
    slack = ratio + delta

    opt_scheme, opt = solve_classic(instance)
    certificate = robustify(instance, opt_scheme, alpha, prof)
    lower_est = evaluate_objective(instance, certificate, gamma, delta, "worst", eps_num)
    lower_ok = lower_est.value >= opt - slack - tolerance

    knife = 1 if lower_est.knife_edge_signals else 0
    if schemes is None:
        rng = np.random.default_rng(seed)
        schemes = _random_schemes(rng, instance, n_schemes)
    upper_values = []
    violations = 0
    for cand in schemes:
        est = evaluate_objective(instance, cand, gamma, delta, "best", eps_num)
        upper_values.append(est.value)
        if est.knife_edge_signals:
            knife += 1
        if est.value > opt + slack + tolerance:
            violations += 1

    return BoundsReport(
        opt=float(opt),
        gamma=float(gamma),
        delta=float(delta),
        ratio=float(ratio),
        slack=float(slack),
        alpha=float(alpha),
        tolerance=float(tolerance),
        lower_certificate=float(lower_est.value),
        lower_ok=bool(lower_ok),
        upper_values=tuple(float(x) for x in upper_values),
        upper_ok=violations == 0,
        n_upper_violations=violations,
        knife_edge_schemes=knife,
        seed=seed,
    )
