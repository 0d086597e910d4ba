"""Core types: persuasion instances, signaling schemes, receiver strategies.

Index conventions used everywhere in this package:

* utility matrices are action-major, ``u[a, w]`` with ``a`` an action index
  and ``w`` a state index;
* scheme conditionals are state-major, ``pi[w, s]`` = P(signal s | state w);
* strategies are signal-major, ``rho[s, a]`` = P(action a | signal s).

All probability data is dense float64 and frozen after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    NotDirectRevelationError,
    NoMassOnApproxSetError,
    ParseError,
    ValidationError,
    ZeroProbabilitySignalError,
)

DEFAULT_EPS = 1e-9
_SUM_TOL = 1e-12

# reason-code templates for InstanceProfile
TIE_AT_STATE = "TIE_AT_STATE({})"
ACTION_NEVER_OPTIMAL = "ACTION_NEVER_OPTIMAL({})"
ZERO_PRIOR_STATE = "ZERO_PRIOR_STATE({})"


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


def _check_ids(kind: str, ids: Sequence[str]) -> tuple[str, ...]:
    ids = tuple(str(x) for x in ids)
    if not ids:
        raise ValidationError(f"{kind} list is empty")
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate {kind} identifiers: {ids}")
    return ids


def _check_rows_sum_to_one(name: str, mat: np.ndarray) -> None:
    if np.any(mat < 0):
        raise ValidationError(f"{name} has negative entries")
    sums = mat.sum(axis=1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > _SUM_TOL:
        raise ValidationError(
            f"{name} rows must sum to 1 within {_SUM_TOL}; worst residual {worst:g}"
        )


@dataclass(frozen=True, eq=False)
class PersuasionInstance:
    """A finite sender/receiver game with a common prior.

    ``sender_utility`` and ``receiver_utility`` have shape
    ``(n_actions, n_states)`` with entries in [0, 1].
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    prior: np.ndarray
    sender_utility: np.ndarray
    receiver_utility: np.ndarray

    def __post_init__(self):
        states = _check_ids("state", self.states)
        actions = _check_ids("action", self.actions)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        m, n = len(states), len(actions)

        prior = np.asarray(self.prior, dtype=np.float64)
        if prior.shape != (m,):
            raise DimensionMismatchError(
                f"prior has shape {prior.shape}, expected ({m},)"
            )
        if np.any(prior < 0) or np.any(prior > 1):
            raise ValidationError("prior entries must lie in [0, 1]")
        if abs(float(prior.sum()) - 1.0) > _SUM_TOL:
            raise ValidationError(
                f"prior must sum to 1 within {_SUM_TOL}; got {float(prior.sum())!r}"
            )

        for name in ("sender_utility", "receiver_utility"):
            mat = np.asarray(getattr(self, name), dtype=np.float64)
            if mat.shape != (n, m):
                raise DimensionMismatchError(
                    f"{name} has shape {mat.shape}, expected ({n}, {m})"
                )
            if np.any(mat < 0) or np.any(mat > 1):
                raise ValidationError(f"{name} entries must lie in [0, 1]")
            object.__setattr__(self, name, _freeze(mat))

        object.__setattr__(self, "prior", _freeze(prior))
        object.__setattr__(self, "_state_index", {s: i for i, s in enumerate(states)})
        object.__setattr__(self, "_action_index", {a: i for i, a in enumerate(actions)})

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def state_index(self, state: str | int) -> int:
        if isinstance(state, (int, np.integer)):
            if not 0 <= int(state) < self.n_states:
                raise ValidationError(f"state index {state} out of range")
            return int(state)
        try:
            return self._state_index[state]
        except KeyError:
            raise ValidationError(f"unknown state {state!r}") from None

    def action_index(self, action: str | int) -> int:
        if isinstance(action, (int, np.integer)):
            if not 0 <= int(action) < self.n_actions:
                raise ValidationError(f"action index {action} out of range")
            return int(action)
        try:
            return self._action_index[action]
        except KeyError:
            raise ValidationError(f"unknown action {action!r}") from None


@dataclass(frozen=True, eq=False)
class SignalingScheme:
    """A map from states to distributions over signals.

    ``conditional[w, s]`` is P(signal s | state w).  ``is_direct_revelation``
    records whether the signal list coincides, element by element, with the
    action list of the instance the scheme was built against.
    """

    signals: tuple[str, ...]
    conditional: np.ndarray
    is_direct_revelation: bool = False

    def __post_init__(self):
        signals = _check_ids("signal", self.signals)
        object.__setattr__(self, "signals", signals)
        cond = np.asarray(self.conditional, dtype=np.float64)
        if cond.ndim != 2 or cond.shape[1] != len(signals):
            raise DimensionMismatchError(
                f"conditional has shape {cond.shape}, expected (n_states, {len(signals)})"
            )
        _check_rows_sum_to_one("scheme conditional", cond)
        object.__setattr__(self, "conditional", _freeze(cond))
        object.__setattr__(self, "_signal_index", {s: i for i, s in enumerate(signals)})

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    @property
    def n_states(self) -> int:
        return int(self.conditional.shape[0])

    def signal_index(self, signal: str | int) -> int:
        if isinstance(signal, (int, np.integer)):
            if not 0 <= int(signal) < self.n_signals:
                raise ValidationError(f"signal index {signal} out of range")
            return int(signal)
        try:
            return self._signal_index[signal]
        except KeyError:
            raise ValidationError(f"unknown signal {signal!r}") from None


@dataclass(frozen=True, eq=False)
class ReceiverStrategy:
    """Randomized response to signals: ``action_distribution[s, a]`` = P(a | s)."""

    action_distribution: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.action_distribution, dtype=np.float64)
        if rho.ndim != 2:
            raise DimensionMismatchError("action_distribution must be 2-d")
        _check_rows_sum_to_one("strategy", rho)
        object.__setattr__(self, "action_distribution", _freeze(rho))

    @property
    def n_signals(self) -> int:
        return int(self.action_distribution.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.action_distribution.shape[1])


@dataclass(frozen=True, eq=False)
class InstanceProfile:
    """Structural summary used by robustification and the utility bounds.

    ``per_state_optimal`` maps a state to its receiver-optimal action and is
    populated only for states where that action is unique.  ``gap`` is the
    smallest margin between a state's best and second-best receiver utility
    (``inf`` when there is a single action).  ``optimal_regions`` maps each
    action to the states where it is the unique optimum.
    """

    per_state_optimal: Mapping[str, str]
    gap: float
    optimal_regions: Mapping[str, frozenset[str]]
    mu_min: float
    assumption_satisfied: bool
    reasons: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_state_optimal", MappingProxyType(dict(self.per_state_optimal)))
        object.__setattr__(self, "optimal_regions", MappingProxyType(dict(self.optimal_regions)))

    def region_mass(self, instance: PersuasionInstance, action: str | int) -> float:
        """Prior mass of the states where ``action`` is the unique optimum."""
        a = instance.actions[instance.action_index(action)]
        return float(
            sum(instance.prior[instance.state_index(w)] for w in self.optimal_regions[a])
        )


def profile_instance(
    instance: PersuasionInstance, eps_num: float = DEFAULT_EPS
) -> InstanceProfile:
    """Check per-state uniqueness of the receiver optimum and related facts.

    A margin of at most ``eps_num`` counts as a tie.
    """
    v = instance.receiver_utility
    m, n = instance.n_states, instance.n_actions
    per_state: dict[str, str] = {}
    regions: dict[str, set[str]] = {a: set() for a in instance.actions}
    reasons: list[str] = []
    gap = math.inf

    for w in range(m):
        col = v[:, w]
        order = np.argsort(col)
        best = int(order[-1])
        if n == 1:
            margin = math.inf
        else:
            margin = float(col[best] - col[int(order[-2])])
            gap = min(gap, margin)
        if margin > eps_num:
            per_state[instance.states[w]] = instance.actions[best]
            regions[instance.actions[best]].add(instance.states[w])
        else:
            reasons.append(TIE_AT_STATE.format(instance.states[w]))

    for a in instance.actions:
        if not regions[a]:
            reasons.append(ACTION_NEVER_OPTIMAL.format(a))

    mu_min = float(instance.prior.min())
    if mu_min <= 0.0:
        for w in range(m):
            if instance.prior[w] <= 0.0:
                reasons.append(ZERO_PRIOR_STATE.format(instance.states[w]))

    return InstanceProfile(
        per_state_optimal=per_state,
        gap=float(gap),
        optimal_regions={a: frozenset(s) for a, s in regions.items()},
        mu_min=mu_min,
        assumption_satisfied=not reasons,
        reasons=tuple(reasons),
    )


# ---------------------------------------------------------------------------
# scheme construction helpers


def make_scheme(
    instance: PersuasionInstance,
    signals: Sequence[str],
    conditional: np.ndarray,
) -> SignalingScheme:
    """Build a scheme against ``instance``, computing the direct-revelation flag."""
    cond = np.asarray(conditional, dtype=np.float64)
    if cond.shape[0] != instance.n_states:
        raise DimensionMismatchError(
            f"conditional has {cond.shape[0]} rows, instance has {instance.n_states} states"
        )
    direct = tuple(signals) == instance.actions
    return SignalingScheme(tuple(signals), cond, is_direct_revelation=direct)


def direct_scheme(instance: PersuasionInstance, conditional: np.ndarray) -> SignalingScheme:
    """A scheme whose signals are the instance's actions (recommendations)."""
    return make_scheme(instance, instance.actions, conditional)


def full_revelation_scheme(instance: PersuasionInstance) -> SignalingScheme:
    """One signal per state, sent deterministically."""
    return make_scheme(instance, instance.states, np.eye(instance.n_states))


def uninformative_scheme(instance: PersuasionInstance) -> SignalingScheme:
    """A single constant signal; every posterior equals the prior."""
    return make_scheme(instance, ("s0",), np.ones((instance.n_states, 1)))


def obedient_strategy(instance: PersuasionInstance) -> ReceiverStrategy:
    """Follow the recommendation: identity over the action-indexed signals."""
    return ReceiverStrategy(np.eye(instance.n_actions))


# ---------------------------------------------------------------------------
# joint distribution machinery


class SchemeStats(NamedTuple):
    """Per-signal quantities shared by most operations.

    Rows of ``posteriors`` (and values derived from them) are zero for
    signals with zero marginal; consult ``marginals`` before using them.
    """

    marginals: np.ndarray  # (S,)
    posteriors: np.ndarray  # (S, n_states)
    receiver_values: np.ndarray  # (S, n_actions)
    sender_values: np.ndarray  # (S, n_actions)


def _check_scheme(instance: PersuasionInstance, scheme: SignalingScheme) -> None:
    if scheme.n_states != instance.n_states:
        raise DimensionMismatchError(
            f"scheme covers {scheme.n_states} states, instance has {instance.n_states}"
        )


def scheme_stats(instance: PersuasionInstance, scheme: SignalingScheme) -> SchemeStats:
    _check_scheme(instance, scheme)
    joint = instance.prior[:, None] * scheme.conditional  # (m, S)
    marginals = joint.sum(axis=0)
    safe = np.where(marginals > 0.0, marginals, 1.0)
    posteriors = (joint / safe).T
    posteriors[marginals <= 0.0] = 0.0
    receiver_values = posteriors @ instance.receiver_utility.T
    sender_values = posteriors @ instance.sender_utility.T
    return SchemeStats(marginals, posteriors, receiver_values, sender_values)


def signal_marginals(instance: PersuasionInstance, scheme: SignalingScheme) -> np.ndarray:
    _check_scheme(instance, scheme)
    return instance.prior @ scheme.conditional


def posterior(
    instance: PersuasionInstance, scheme: SignalingScheme, signal: str | int
) -> np.ndarray:
    """Bayes update of the prior after observing ``signal``.

    Raises ZeroProbabilitySignalError when the signal is never sent.
    """
    _check_scheme(instance, scheme)
    s = scheme.signal_index(signal)
    mass = instance.prior * scheme.conditional[:, s]
    marginal = float(mass.sum())
    if marginal <= 0.0:
        raise ZeroProbabilitySignalError(
            f"signal {scheme.signals[s]!r} has zero marginal probability",
            signal=scheme.signals[s],
        )
    return mass / marginal


def expected_utility(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    strategy: ReceiverStrategy,
    *,
    for_receiver: bool = False,
) -> float:
    """Expected utility of the sender (or receiver) under (scheme, strategy)."""
    _check_scheme(instance, scheme)
    if strategy.n_signals != scheme.n_signals:
        raise DimensionMismatchError(
            f"strategy indexes {strategy.n_signals} signals, scheme has {scheme.n_signals}"
        )
    if strategy.n_actions != instance.n_actions:
        raise DimensionMismatchError(
            f"strategy has {strategy.n_actions} actions, instance has {instance.n_actions}"
        )
    util = instance.receiver_utility if for_receiver else instance.sender_utility
    joint = instance.prior[:, None] * scheme.conditional  # (m, S)
    per_pair = strategy.action_distribution @ util  # (S, m)
    return float(np.sum(joint * per_pair.T))


def advantage(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    signal: str | int | None = None,
) -> float:
    """Margin by which following a recommendation beats the best deviation.

    Only defined for direct-revelation schemes.  With a single action the
    margin is ``+inf``.  Without an explicit signal, returns the minimum
    over signals with positive marginal.
    """
    if not scheme.is_direct_revelation:
        raise NotDirectRevelationError("advantage requires a direct-revelation scheme")
    stats = scheme_stats(instance, scheme)

    def margin_at(s: int) -> float:
        if instance.n_actions == 1:
            return math.inf
        vals = stats.receiver_values[s]
        own = vals[s]
        best_other = float(np.max(np.delete(vals, s)))
        return float(own - best_other)

    if signal is not None:
        s = scheme.signal_index(signal)
        if stats.marginals[s] <= 0.0:
            raise ZeroProbabilitySignalError(
                f"signal {scheme.signals[s]!r} has zero marginal probability",
                signal=scheme.signals[s],
            )
        return margin_at(s)

    sent = np.flatnonzero(stats.marginals > 0.0)
    return min(margin_at(int(s)) for s in sent)


def best_response_mask(
    receiver_values: np.ndarray, gamma: float, eps_num: float = DEFAULT_EPS
) -> np.ndarray:
    """Boolean mask of actions within ``gamma`` of the best, row per signal."""
    best = receiver_values.max(axis=1, keepdims=True)
    return receiver_values >= best - gamma - eps_num


def project_strategy(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    strategy: ReceiverStrategy,
    gamma: float,
    eps_num: float = DEFAULT_EPS,
) -> ReceiverStrategy:
    """Condition each signal's action distribution on the near-best set.

    Rows for signals that are never sent are left untouched.  Raises
    NoMassOnApproxSetError when a positive-marginal signal has no mass to
    renormalize.
    """
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    _check_scheme(instance, scheme)
    if strategy.n_signals != scheme.n_signals or strategy.n_actions != instance.n_actions:
        raise DimensionMismatchError("strategy shape does not match scheme/instance")
    stats = scheme_stats(instance, scheme)
    mask = best_response_mask(stats.receiver_values, gamma, eps_num)
    rho = np.array(strategy.action_distribution)
    for s in np.flatnonzero(stats.marginals > 0.0):
        mass = float(rho[s, mask[s]].sum())
        if mass <= 0.0:
            raise NoMassOnApproxSetError(
                f"strategy puts no mass on the near-best set at signal {scheme.signals[s]!r}",
                signal=scheme.signals[s],
            )
        row = np.where(mask[s], rho[s], 0.0) / mass
        rho[s] = row
    return ReceiverStrategy(rho)


# ---------------------------------------------------------------------------
# JSON serialization

_INSTANCE_KEYS = ("states", "actions", "prior", "sender_utility", "receiver_utility")


def instance_from_json(text: str) -> PersuasionInstance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ParseError("instance document must be a JSON object")
    missing = [k for k in _INSTANCE_KEYS if k not in raw]
    if missing:
        raise ParseError(f"instance document missing keys: {missing}")
    return PersuasionInstance(
        states=tuple(raw["states"]),
        actions=tuple(raw["actions"]),
        prior=np.asarray(raw["prior"], dtype=np.float64),
        sender_utility=np.asarray(raw["sender_utility"], dtype=np.float64),
        receiver_utility=np.asarray(raw["receiver_utility"], dtype=np.float64),
    )


def instance_to_json(instance: PersuasionInstance) -> str:
    doc = {
        "states": list(instance.states),
        "actions": list(instance.actions),
        "prior": instance.prior.tolist(),
        "sender_utility": instance.sender_utility.tolist(),
        "receiver_utility": instance.receiver_utility.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _read_file(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e


def load_instance(path) -> PersuasionInstance:
    return instance_from_json(_read_file(path))


def scheme_from_json(text: str, instance: PersuasionInstance | None = None) -> SignalingScheme:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e
    if not isinstance(raw, dict) or "signals" not in raw or "conditional" not in raw:
        raise ParseError("scheme document must contain 'signals' and 'conditional'")
    cond = np.asarray(raw["conditional"], dtype=np.float64)
    if instance is not None:
        return make_scheme(instance, tuple(raw["signals"]), cond)
    return SignalingScheme(tuple(raw["signals"]), cond)


def scheme_to_json(scheme: SignalingScheme) -> str:
    doc = {"signals": list(scheme.signals), "conditional": scheme.conditional.tolist()}
    return json.dumps(doc, indent=2, sort_keys=True)


def load_scheme(path, instance: PersuasionInstance | None = None) -> SignalingScheme:
    return scheme_from_json(_read_file(path), instance)
