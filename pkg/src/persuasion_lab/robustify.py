"""Mixing a direct scheme with per-state optimal recommendations.

``robustify(instance, scheme, alpha)`` replaces each recommendation, with
probability ``alpha``, by the receiver's uniquely optimal action for the
realized state.  This buys a strictly positive obedience margin at a sender
utility cost of at most ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionViolatedError,
    HypothesisViolatedError,
    NotDirectRevelationError,
    ValidationError,
)
from .model import (
    DEFAULT_EPS,
    InstanceProfile,
    PersuasionInstance,
    SignalingScheme,
    advantage,
    direct_scheme,
    expected_utility,
    obedient_strategy,
    profile_instance,
    signal_marginals,
)


@dataclass(frozen=True)
class RobustificationReport:
    """Audit quantities for one robustification.

    * ``marginal_identity_residual``: worst deviation from the mixture
      identity  pi'(s) = (1-alpha) pi(s) + alpha mu(region of s).
    * ``advantage_bound_slack``: minimum over signals of the realized
      obedience margin minus its guaranteed lower bound; negative slack
      (beyond float noise) means the guarantee failed.
    * ``tv_distance``: total variation between the two joint distributions.
    * ``utility_gap``: |U(pi') - U(pi)| under the obedient strategy.
    """

    alpha: float
    marginal_identity_residual: float
    advantage_bound_slack: float
    tv_distance: float
    utility_gap: float

    def ok(
        self,
        residual_tol: float = 1e-12,
        slack_tol: float = -1e-10,
        mix_tol: float = 1e-12,
    ) -> bool:
        return (
            self.marginal_identity_residual <= residual_tol
            and self.advantage_bound_slack >= slack_tol
            and self.tv_distance <= self.alpha + mix_tol
            and self.utility_gap <= self.alpha + mix_tol
        )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "marginal_identity_residual": self.marginal_identity_residual,
            "advantage_bound_slack": self.advantage_bound_slack,
            "tv_distance": self.tv_distance,
            "utility_gap": self.utility_gap,
            "ok": self.ok(),
        }


def _require_unique_optima(
    instance: PersuasionInstance, profile: InstanceProfile | None
) -> InstanceProfile:
    prof = profile if profile is not None else profile_instance(instance)
    missing = [w for w in instance.states if w not in prof.per_state_optimal]
    if missing:
        raise AssumptionViolatedError(
            f"no unique receiver-optimal action at states {missing}",
            states=missing,
        )
    return prof


def robustify(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    alpha: float,
    profile: InstanceProfile | None = None,
) -> SignalingScheme:
    """Blend ``scheme`` with the always-recommend-the-optimum scheme."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    if not scheme.is_direct_revelation:
        raise NotDirectRevelationError("robustification requires a direct-revelation scheme")
    prof = _require_unique_optima(instance, profile)

    reveal = np.zeros((instance.n_states, instance.n_actions))
    for w, a in prof.per_state_optimal.items():
        reveal[instance.state_index(w), instance.action_index(a)] = 1.0

    mixed = (1.0 - alpha) * scheme.conditional + alpha * reveal
    return direct_scheme(instance, mixed)


def verify_robustification(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    alpha: float,
    profile: InstanceProfile | None = None,
) -> RobustificationReport:
    """Recompute the mixture guarantees from raw matrices.

    Everything here is derived independently from (instance, scheme, alpha):
    marginals from the prior and conditionals, margins from freshly computed
    posteriors, distances from the joint distributions.
    """
    prof = _require_unique_optima(instance, profile)
    robust = robustify(instance, scheme, alpha, prof)

    marg_before = signal_marginals(instance, scheme)
    marg_after = signal_marginals(instance, robust)
    region_mass = np.array(
        [prof.region_mass(instance, a) for a in instance.actions]
    )

    residual = float(
        np.max(np.abs(marg_after - ((1.0 - alpha) * marg_before + alpha * region_mass)))
    )

    gap = prof.gap
    slack = math.inf
    if instance.n_actions > 1:
        for s in range(instance.n_actions):
            if marg_after[s] <= 0.0:
                continue
            adv_after = advantage(instance, robust, s)
            bound = alpha * region_mass[s] * gap / marg_after[s]
            if marg_before[s] > 0.0:
                adv_before = advantage(instance, scheme, s)
                bound += (1.0 - alpha) * (marg_before[s] / marg_after[s]) * adv_before
            slack = min(slack, adv_after - bound)

    joint_before = instance.prior[:, None] * scheme.conditional
    joint_after = instance.prior[:, None] * robust.conditional
    tv = 0.5 * float(np.abs(joint_after - joint_before).sum())

    obedient = obedient_strategy(instance)
    gap_u = abs(
        expected_utility(instance, robust, obedient)
        - expected_utility(instance, scheme, obedient)
    )

    return RobustificationReport(
        alpha=float(alpha),
        marginal_identity_residual=residual,
        advantage_bound_slack=float(slack),
        tv_distance=tv,
        utility_gap=float(gap_u),
    )


def _ratio(instance: PersuasionInstance, gamma: float, profile: InstanceProfile | None) -> float:
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    prof = profile if profile is not None else profile_instance(instance)
    if not prof.assumption_satisfied:
        raise AssumptionViolatedError(
            f"instance fails the uniqueness assumption: {prof.reasons}",
            reasons=prof.reasons,
        )
    denom = prof.mu_min * prof.gap
    ratio = 0.0 if gamma == 0.0 else gamma / denom
    if ratio >= 1.0:
        raise HypothesisViolatedError(
            f"gamma/(mu_min*gap) = {ratio:g} >= 1; no mixing weight can absorb it",
            ratio=ratio,
        )
    return ratio


def choose_alpha_lower(
    instance: PersuasionInstance,
    gamma: float,
    eps_alpha: float = 1e-6,
    profile: InstanceProfile | None = None,
) -> float:
    """Smallest mixing weight that pushes every obedience margin beyond gamma.

    The extra ``eps_alpha`` turns the margin inequality strict, so after
    robustifying the classic optimum the obedient action is the only
    gamma-best response at every sent signal.
    """
    ratio = _ratio(instance, gamma, profile)
    return min(ratio + eps_alpha, 1.0)


def choose_alpha_upper(
    instance: PersuasionInstance,
    gamma: float,
    profile: InstanceProfile | None = None,
) -> float:
    """Mixing weight that restores plain obedience (margin >= 0) exactly."""
    return _ratio(instance, gamma, profile)
