"""Repeated persuasion against learning receivers.

Per round: the sender commits to a scheme for this round, nature draws a
state from the prior, a signal is drawn from the scheme, the receiver picks
an action knowing only its own history and the current signal, then feedback
is revealed (the state under full feedback, the realized utility under
partial feedback).

Determinism contract: a run is driven by three independent substreams
(states, signals, receiver randomization) spawned from one seed, each
consumed as one uniform per round through inverse-CDF sampling.  Identical
(instance, policy, receiver, rounds, seed) give bit-identical traces; the
vectorized fast paths reproduce the generic loop exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .classic import solve_classic
from .errors import (
    AssumptionViolatedError,
    RadiusPreconditionError,
    ValidationError,
    WrongInstanceError,
    ZeroProbabilitySignalError,
)
from .model import (
    DEFAULT_EPS,
    PersuasionInstance,
    SignalingScheme,
    profile_instance,
    signal_marginals,
)
from .robustify import robustify


def _spawn_rngs(seed: int) -> tuple[np.random.Generator, ...]:
    seqs = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(s) for s in seqs)


def _sample_row(cdf_row: np.ndarray, u: float) -> int:
    """Inverse-CDF draw; the fast paths replicate this arithmetic exactly."""
    return min(int(np.searchsorted(cdf_row, u, side="right")), cdf_row.size - 1)


# ---------------------------------------------------------------------------
# learner state and receiver decision rules


class LearnerState:
    """Per-signal sufficient statistics of a learning receiver.

    Full feedback keeps integer state counts per signal; cumulative action
    utilities are derived from them, so the empirical-mean identity
    ``cumulative / counts = v(a, empirical posterior)`` holds by
    construction.  Partial feedback keeps importance-weighted cumulative
    reward estimates instead.
    """

    def __init__(
        self,
        n_signals: int,
        n_actions: int,
        feedback_mode: str,
        receiver_utility: np.ndarray | None = None,
        exp3: "Exp3Config | None" = None,
    ):
        if feedback_mode not in ("full", "partial"):
            raise ValidationError(f"feedback_mode must be 'full' or 'partial', got {feedback_mode!r}")
        if feedback_mode == "full" and receiver_utility is None:
            raise ValidationError("full feedback requires the receiver utility matrix")
        self.feedback_mode = feedback_mode
        self.n_signals = n_signals
        self.n_actions = n_actions
        self.receiver_utility = receiver_utility
        self.exp3 = exp3
        self.counts = np.zeros(n_signals, dtype=np.int64)
        if feedback_mode == "full":
            self.state_counts = np.zeros((n_signals, receiver_utility.shape[1]), dtype=np.int64)
            self._partial_cumulative = None
        else:
            self.state_counts = None
            self._partial_cumulative = np.zeros((n_signals, n_actions))

    @property
    def cumulative(self) -> np.ndarray:
        """Cumulative per-action utility (exact or importance-weighted)."""
        if self.feedback_mode == "full":
            return self.state_counts @ self.receiver_utility.T
        return self._partial_cumulative

    def record_full(self, signal: int, state: int) -> None:
        self.counts[signal] += 1
        self.state_counts[signal, state] += 1

    def record_partial(self, signal: int, action: int, estimate: float) -> None:
        self.counts[signal] += 1
        self._partial_cumulative[signal, action] += estimate


def empirical_br_probs(state: LearnerState, signal: int) -> np.ndarray:
    """Uniform over the exact argmax actions against the empirical posterior.

    Scores are integer-count weighted sums, so ties (including the cold-start
    all-zero case) are detected exactly rather than by float tolerance.
    """
    scores = state.receiver_utility @ state.state_counts[signal].astype(np.float64)
    ties = scores == scores.max()
    return ties / ties.sum()


def exp_weights_probs(state: LearnerState, signal: int, t: int) -> np.ndarray:
    """Exponential weights on cumulative utility with rate sqrt(log n / t)."""
    eta = math.sqrt(math.log(state.n_actions) / t)
    logits = eta * (state.receiver_utility @ state.state_counts[signal].astype(np.float64))
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


@dataclass(frozen=True)
class Exp3Config:
    """Exploration and learning rate for the partial-feedback learner.

    Defaults follow the classic tuning for a known horizon:
    exploration = min(1, sqrt(n log n / ((e-1) T))), learning rate
    exploration / n.
    """

    exploration: float
    learning_rate: float

    @staticmethod
    def for_horizon(n_actions: int, horizon: int) -> "Exp3Config":
        g = min(1.0, math.sqrt(n_actions * math.log(n_actions) / ((math.e - 1.0) * max(horizon, 1))))
        return Exp3Config(exploration=g, learning_rate=g / n_actions)


def exp3_probs(state: LearnerState, signal: int, t: int) -> np.ndarray:
    cfg = state.exp3
    logits = cfg.learning_rate * state.cumulative[signal]
    logits -= logits.max()
    w = np.exp(logits)
    return (1.0 - cfg.exploration) * w / w.sum() + cfg.exploration / state.n_actions


def receiver_empirical_br(state: LearnerState, signal: int, rng: np.random.Generator) -> int:
    p = empirical_br_probs(state, signal)
    return _sample_row(np.cumsum(p), rng.random())


def receiver_exp_weights(state: LearnerState, signal: int, t: int, rng: np.random.Generator) -> int:
    p = exp_weights_probs(state, signal, t)
    return _sample_row(np.cumsum(p), rng.random())


def receiver_exp3(state: LearnerState, signal: int, t: int, rng: np.random.Generator) -> int:
    p = exp3_probs(state, signal, t)
    return _sample_row(np.cumsum(p), rng.random())


# ---------------------------------------------------------------------------
# receiver objects used by the simulator


class EmpiricalBestResponse:
    """Best response to the per-signal empirical state distribution."""

    feedback_mode = "full"
    kind = "empirical-br"

    def reset(self, n_signals: int, instance: PersuasionInstance, horizon: int) -> None:
        self.state = LearnerState(n_signals, instance.n_actions, "full", instance.receiver_utility)

    def act(self, signal: int, t: int, u: float) -> int:
        p = empirical_br_probs(self.state, signal)
        return _sample_row(np.cumsum(p), u)

    def feed(self, signal: int, action: int, state: int, payoff: float, t: int) -> None:
        self.state.record_full(signal, state)


class ExpWeights:
    """Per-signal exponential weights over full-information utilities."""

    feedback_mode = "full"
    kind = "exp-weights"

    def reset(self, n_signals: int, instance: PersuasionInstance, horizon: int) -> None:
        self.state = LearnerState(n_signals, instance.n_actions, "full", instance.receiver_utility)

    def act(self, signal: int, t: int, u: float) -> int:
        p = exp_weights_probs(self.state, signal, t)
        return _sample_row(np.cumsum(p), u)

    def feed(self, signal: int, action: int, state: int, payoff: float, t: int) -> None:
        self.state.record_full(signal, state)


class Exp3:
    """Per-signal adversarial bandit learner (partial feedback)."""

    feedback_mode = "partial"
    kind = "exp3"

    def __init__(self, config: Exp3Config | None = None):
        self.config = config

    def reset(self, n_signals: int, instance: PersuasionInstance, horizon: int) -> None:
        cfg = self.config or Exp3Config.for_horizon(instance.n_actions, horizon)
        self.state = LearnerState(n_signals, instance.n_actions, "partial", exp3=cfg)
        self._last_probs: np.ndarray | None = None

    def act(self, signal: int, t: int, u: float) -> int:
        p = exp3_probs(self.state, signal, t)
        self._last_probs = p
        return _sample_row(np.cumsum(p), u)

    def feed(self, signal: int, action: int, state: int, payoff: float, t: int) -> None:
        self.state.record_partial(signal, action, payoff / self._last_probs[action])


def make_receiver(kind: str, **kwargs):
    table = {
        "empirical-br": EmpiricalBestResponse,
        "exp-weights": ExpWeights,
        "exp3": Exp3,
    }
    if kind not in table:
        raise ValidationError(f"unknown receiver kind {kind!r}; choose from {sorted(table)}")
    return table[kind](**kwargs)


# ---------------------------------------------------------------------------
# sender policies


class FixedSchemePolicy:
    """Commit to one scheme for every round."""

    adaptive = False

    def __init__(self, scheme: SignalingScheme):
        self.scheme = scheme
        self.signals = scheme.signals
        self._cdf = np.cumsum(scheme.conditional, axis=1)

    def reset(self) -> None:
        pass

    def round_cdf(self, t: int) -> np.ndarray:
        return self._cdf

    def observe(self, t: int, state: int, signal: int, action: int) -> None:
        pass

    def signals_for_states(self, states: np.ndarray, u_signals: np.ndarray) -> np.ndarray:
        idx = (self._cdf[states] <= u_signals[:, None]).sum(axis=1)
        return np.minimum(idx, len(self.signals) - 1)


class AlternatingSignalPolicy:
    """Two-state pattern sender: discloses hits on an alternating target state.

    Keeps a target state, starting at the first state.  When the realized
    state equals the target the sender emits ``s1`` and flips the target;
    otherwise it emits ``s2``.  Each round this is a deterministic
    state-measurable scheme, yet the ``s1`` rounds reveal a perfectly
    alternating state subsequence that keeps an empirical learner guessing.
    """

    adaptive = True
    signals = ("s1", "s2")

    def __init__(self, instance: PersuasionInstance):
        if instance.n_states != 2:
            raise WrongInstanceError(
                f"alternating policy needs exactly 2 states, got {instance.n_states}"
            )
        # conditional rows: P(s1|w) = 1 when w == target else 0
        cond0 = np.array([[1.0, 0.0], [0.0, 1.0]])
        cond1 = np.array([[0.0, 1.0], [1.0, 0.0]])
        self._cdfs = np.stack([np.cumsum(cond0, axis=1), np.cumsum(cond1, axis=1)])
        self.reset()

    def reset(self) -> None:
        self.target = 0

    def round_cdf(self, t: int) -> np.ndarray:
        return self._cdfs[self.target]

    def observe(self, t: int, state: int, signal: int, action: int) -> None:
        if state == self.target:
            self.target = 1 - self.target

    def signals_for_states(self, states: np.ndarray, u_signals: np.ndarray) -> np.ndarray:
        # the per-round scheme is deterministic, so the signal uniforms are
        # unused here exactly as they are ignored by the inverse CDF
        out = np.empty(states.size, dtype=np.int64)
        target = 0
        for i, w in enumerate(states.tolist()):
            if w == target:
                out[i] = 0
                target = 1 - target
            else:
                out[i] = 1
        self.target = target
        return out


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True, eq=False)
class Checkpoint:
    t: int
    running_avg: float
    obedience_frequency: float | None
    window_obedience: float | None
    max_radius: float | None


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """Full per-round record of one run plus checkpoint diagnostics."""

    instance: PersuasionInstance
    signal_ids: tuple[str, ...]
    states: np.ndarray
    signals: np.ndarray
    actions: np.ndarray
    sender_utils: np.ndarray
    receiver_utils: np.ndarray
    running_avg: np.ndarray
    seed: int
    checkpoints: tuple[Checkpoint, ...]

    @property
    def rounds(self) -> int:
        return int(self.states.size)

    @property
    def final_average(self) -> float:
        return float(self.running_avg[-1])

    def obedience_frequency(self, start: int = 0, stop: int | None = None) -> float | None:
        """Fraction of rounds whose action index equals the signal index."""
        if self.signal_ids != self.instance.actions:
            return None
        sl = slice(start, stop)
        return float(np.mean(self.actions[sl] == self.signals[sl]))

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "state", "signal", "action", "u", "v", "running_avg"])
            states = self.instance.states
            actions = self.instance.actions
            for i in range(self.rounds):
                w.writerow(
                    [
                        i + 1,
                        states[self.states[i]],
                        self.signal_ids[self.signals[i]],
                        actions[self.actions[i]],
                        repr(float(self.sender_utils[i])),
                        repr(float(self.receiver_utils[i])),
                        repr(float(self.running_avg[i])),
                    ]
                )

    def checkpoints_to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "running_avg", "obedience_frequency", "window_obedience", "max_radius"])
            for c in self.checkpoints:
                w.writerow([c.t, repr(c.running_avg), c.obedience_frequency, c.window_obedience, c.max_radius])


def confidence_radius(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    t: int,
    signal: str | int,
) -> float:
    """High-probability bound on |v(a, empirical posterior) - v(a, posterior)|.

    Valid once sqrt(3 log(2 S t) / (pi(s) t)) < 1/2; below that the
    empirical conditional distribution is too undersampled to certify.
    """
    if t < 1:
        raise ValidationError("t must be at least 1")
    s = scheme.signal_index(signal)
    p = float(signal_marginals(instance, scheme)[s])
    if p <= 0.0:
        raise ZeroProbabilitySignalError(
            f"signal {scheme.signals[s]!r} has zero marginal probability"
        )
    S = scheme.n_signals
    n = instance.n_actions
    chern = math.sqrt(3.0 * math.log(2.0 * S * t) / (p * t))
    if chern >= 0.5:
        raise RadiusPreconditionError(
            f"undersampled: sqrt(3 log(2 S t)/(pi(s) t)) = {chern:g} >= 1/2",
            signal=scheme.signals[s],
            t=t,
        )
    return 2.0 * chern + (2.0 / p) * math.sqrt(math.log(2.0 * S * n * t) / (2.0 * t))


def _build_checkpoints(
    instance: PersuasionInstance,
    policy,
    signal_ids: tuple[str, ...],
    signals: np.ndarray,
    actions: np.ndarray,
    running_avg: np.ndarray,
    checkpoint_every: int | None,
) -> tuple[Checkpoint, ...]:
    if not checkpoint_every:
        return ()
    T = signals.size
    direct = signal_ids == instance.actions
    scheme = policy.scheme if isinstance(policy, FixedSchemePolicy) else None
    marks = list(range(checkpoint_every, T + 1, checkpoint_every))
    if marks and marks[-1] != T:
        marks.append(T)
    out = []
    prev = 0
    obeyed = signals == actions
    for t in marks:
        obe = float(obeyed[:t].mean()) if direct else None
        win = float(obeyed[prev:t].mean()) if direct else None
        radius = None
        if scheme is not None:
            radii = []
            for s in range(scheme.n_signals):
                try:
                    radii.append(confidence_radius(instance, scheme, t, s))
                except (RadiusPreconditionError, ZeroProbabilitySignalError):
                    continue
            radius = max(radii) if radii else None
        out.append(
            Checkpoint(
                t=t,
                running_avg=float(running_avg[t - 1]),
                obedience_frequency=obe,
                window_obedience=win,
                max_radius=radius,
            )
        )
        prev = t
    return tuple(out)


def _draw_states(instance: PersuasionInstance, u_states: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(instance.prior)
    idx = np.searchsorted(cdf, u_states, side="right")
    return np.minimum(idx, instance.n_states - 1)


def _finish(
    instance: PersuasionInstance,
    policy,
    signal_ids,
    states,
    signals,
    actions,
    seed,
    checkpoint_every,
) -> SimulationTrace:
    su = instance.sender_utility[actions, states]
    rv = instance.receiver_utility[actions, states]
    running = np.cumsum(su) / np.arange(1, su.size + 1)
    checkpoints = _build_checkpoints(
        instance, policy, signal_ids, signals, actions, running, checkpoint_every
    )
    return SimulationTrace(
        instance=instance,
        signal_ids=signal_ids,
        states=states,
        signals=signals,
        actions=actions,
        sender_utils=su,
        receiver_utils=rv,
        running_avg=running,
        seed=seed,
        checkpoints=checkpoints,
    )


def _fast_full_feedback(
    instance: PersuasionInstance,
    policy,
    receiver,
    rounds: int,
    seed: int,
    checkpoint_every: int | None,
) -> SimulationTrace:
    """Vectorized path for action-independent senders with full feedback.

    The state/signal stream does not depend on the receiver, so per-signal
    count prefixes (and hence every action distribution) can be computed in
    bulk.  Matches the generic loop bit for bit.
    """
    state_rng, signal_rng, recv_rng = _spawn_rngs(seed)
    u_states = state_rng.random(rounds)
    u_signals = signal_rng.random(rounds)
    u_actions = recv_rng.random(rounds)

    states = _draw_states(instance, u_states)
    policy.reset()
    signals = policy.signals_for_states(states, u_signals)

    v = instance.receiver_utility
    n = instance.n_actions
    m = instance.n_states
    actions = np.empty(rounds, dtype=np.int64)
    is_ew = isinstance(receiver, ExpWeights)
    for s in range(len(policy.signals)):
        idx = np.flatnonzero(signals == s)
        if idx.size == 0:
            continue
        onehot = np.zeros((idx.size, m))
        onehot[np.arange(idx.size), states[idx]] = 1.0
        prefix = np.cumsum(onehot, axis=0) - onehot  # counts before each visit
        scores = prefix @ v.T  # (K, n)
        if is_ew:
            eta = np.sqrt(np.log(n) / (idx + 1.0))
            logits = eta[:, None] * scores
            logits -= logits.max(axis=1, keepdims=True)
            w = np.exp(logits)
            probs = w / w.sum(axis=1, keepdims=True)
        else:
            ties = scores == scores.max(axis=1, keepdims=True)
            probs = ties / ties.sum(axis=1, keepdims=True)
        cdf = np.cumsum(probs, axis=1)
        pick = (cdf <= u_actions[idx][:, None]).sum(axis=1)
        actions[idx] = np.minimum(pick, n - 1)

    return _finish(
        instance, policy, policy.signals, states, signals, actions, seed, checkpoint_every
    )


def simulate(
    instance: PersuasionInstance,
    policy,
    receiver,
    rounds: int,
    seed: int,
    *,
    checkpoint_every: int | None = None,
    fast: bool = True,
) -> SimulationTrace:
    """Run the repeated interaction for ``rounds`` rounds.

    The receiver only ever sees (signal, round index, its own uniform draw)
    before acting; states and payoffs reach it through feedback after the
    action is fixed.  ``fast=True`` dispatches to the vectorized path when
    the configuration admits one (the result is identical either way).
    """
    if rounds < 1:
        raise ValidationError("rounds must be positive")
    eligible = (
        fast
        and isinstance(receiver, (EmpiricalBestResponse, ExpWeights))
        and isinstance(policy, (FixedSchemePolicy, AlternatingSignalPolicy))
    )
    if eligible:
        return _fast_full_feedback(instance, policy, receiver, rounds, seed, checkpoint_every)

    state_rng, signal_rng, recv_rng = _spawn_rngs(seed)
    u_states = state_rng.random(rounds)
    u_signals = signal_rng.random(rounds)
    u_actions = recv_rng.random(rounds)

    states = _draw_states(instance, u_states)
    policy.reset()
    signal_ids = tuple(policy.signals)
    receiver.reset(len(signal_ids), instance, rounds)
    partial = receiver.feedback_mode == "partial"

    signals = np.empty(rounds, dtype=np.int64)
    actions = np.empty(rounds, dtype=np.int64)
    v = instance.receiver_utility
    states_list = states.tolist()
    for i in range(rounds):
        t = i + 1
        w = states_list[i]
        cdf = policy.round_cdf(t)
        s = _sample_row(cdf[w], u_signals[i])
        a = receiver.act(s, t, u_actions[i])
        signals[i] = s
        actions[i] = a
        payoff = v[a, w]
        receiver.feed(s, a, w, payoff, t)
        policy.observe(t, w, s, a)

    return _finish(instance, policy, signal_ids, states, signals, actions, seed, checkpoint_every)


def run_replications(
    instance: PersuasionInstance,
    policy_factory: Callable[[], object],
    receiver_factory: Callable[[], object],
    rounds: int,
    seeds: Sequence[int],
    summarize: Callable[[SimulationTrace], object],
    *,
    checkpoint_every: int | None = None,
    threads: int = 1,
) -> list:
    """Independent seeded runs; summaries returned in seed order."""

    def one(seed: int):
        trace = simulate(
            instance,
            policy_factory(),
            receiver_factory(),
            rounds,
            seed,
            checkpoint_every=checkpoint_every,
        )
        return summarize(trace)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, seeds))
    return [one(s) for s in seeds]


# ---------------------------------------------------------------------------
# schedules and the convergence pipeline


@dataclass(frozen=True)
class Schedule:
    """Closed-form accuracy schedule (gamma_t, delta_t) with learner rate eta_t."""

    gamma_fn: Callable[[int], float]
    delta_fn: Callable[[int], float]
    eta_fn: Callable[[int], float]
    label: str = "custom"

    def gamma(self, t: int) -> float:
        return float(self.gamma_fn(t))

    def delta(self, t: int) -> float:
        return float(self.delta_fn(t))

    def eta(self, t: int) -> float:
        return float(self.eta_fn(t))


def exp_weights_schedule(n_actions: int, min_signal_prob: float) -> Schedule:
    """Accuracy schedule of the exponential-weights receiver.

    At round t a signal of probability p has been seen about p*t times, so
    the per-signal softmax temperature is lam = eta_t * p * t and the
    receiver is a (log(n lam)/lam, 1/lam) member.
    """
    if not 0.0 < min_signal_prob <= 1.0:
        raise ValidationError("min_signal_prob must lie in (0, 1]")

    def lam(t: int) -> float:
        return min_signal_prob * math.sqrt(t * math.log(n_actions))

    def gamma_fn(t: int) -> float:
        l = lam(t)
        return max(0.0, math.log(n_actions * l) / l) if l > 0 else math.inf

    def delta_fn(t: int) -> float:
        l = lam(t)
        return 1.0 / l if l > 0 else math.inf

    def eta_fn(t: int) -> float:
        return math.sqrt(math.log(n_actions) / t)

    return Schedule(gamma_fn, delta_fn, eta_fn, label="exp-weights")


@dataclass(frozen=True, eq=False)
class ConvergenceCheckpoint:
    t: int
    mean_running_avg: float
    mean_obedience: float
    schedule_gamma: float
    schedule_delta: float
    threshold_margin: float | None
    threshold_ok: bool
    budget_ok: bool


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Multi-seed verification that a robustified scheme's average converges.

    ``threshold`` entries compare the mixing weight against the schedule
    accuracy plus twice the concentration radius per signal (the sufficient
    condition for the obedient action to dominate the learner's choice);
    ``budget_ok`` checks alpha + delta_t + 2/(t-1) < C.
    """

    opt: float
    constant: float
    alpha: float
    rounds: int
    seeds: tuple[int, ...]
    scheme: SignalingScheme
    final_averages: tuple[float, ...]
    mean_final_average: float
    target: float
    meets_target: bool
    last_decile_obedience: float
    checkpoints: tuple[ConvergenceCheckpoint, ...]

    def to_dict(self) -> dict:
        return {
            "opt": self.opt,
            "constant": self.constant,
            "alpha": self.alpha,
            "rounds": self.rounds,
            "seeds": list(self.seeds),
            "final_averages": list(self.final_averages),
            "mean_final_average": self.mean_final_average,
            "target": self.target,
            "meets_target": self.meets_target,
            "last_decile_obedience": self.last_decile_obedience,
            "checkpoints": [
                {
                    "t": c.t,
                    "mean_running_avg": c.mean_running_avg,
                    "mean_obedience": c.mean_obedience,
                    "schedule_gamma": c.schedule_gamma,
                    "schedule_delta": c.schedule_delta,
                    "threshold_margin": c.threshold_margin,
                    "threshold_ok": c.threshold_ok,
                    "budget_ok": c.budget_ok,
                }
                for c in self.checkpoints
            ],
        }


def convergence_report(
    instance: PersuasionInstance,
    constant: float,
    rounds: int,
    seeds: Sequence[int],
    *,
    receiver: str = "exp-weights",
    schedule: Schedule | None = None,
    checkpoint_every: int | None = None,
    threads: int = 1,
    eps_num: float = DEFAULT_EPS,
) -> ConvergenceReport:
    """Run the fixed robustified scheme against a learning receiver.

    The sender forfeits at most ``constant`` of the classic optimum: the
    scheme is the classic solution mixed with weight alpha = constant/2.
    """
    if constant <= 0:
        raise ValidationError("constant must be positive")
    prof = profile_instance(instance, eps_num)
    if not prof.assumption_satisfied:
        raise AssumptionViolatedError(
            f"instance fails the uniqueness assumption: {prof.reasons}"
        )
    alpha = min(constant / 2.0, 1.0)
    opt_scheme, opt = solve_classic(instance)
    scheme = robustify(instance, opt_scheme, alpha, prof)
    marginals = signal_marginals(instance, scheme)
    sent = marginals > 0.0
    if schedule is None:
        schedule = exp_weights_schedule(instance.n_actions, float(marginals[sent].min()))

    if checkpoint_every is None:
        checkpoint_every = max(rounds // 10, 1)

    region_mass = np.array([prof.region_mass(instance, a) for a in instance.actions])

    def summarize(trace: SimulationTrace):
        per_cp = [
            (c.t, c.running_avg, c.obedience_frequency) for c in trace.checkpoints
        ]
        tail = trace.obedience_frequency(start=int(0.9 * trace.rounds))
        return trace.final_average, tail, per_cp

    results = run_replications(
        instance,
        lambda: FixedSchemePolicy(scheme),
        lambda: make_receiver(receiver),
        rounds,
        list(seeds),
        summarize,
        checkpoint_every=checkpoint_every,
        threads=threads,
    )

    finals = tuple(r[0] for r in results)
    tail_obedience = float(np.mean([r[1] for r in results]))
    cp_times = [cp[0] for cp in results[0][2]]

    checkpoints = []
    for k, t in enumerate(cp_times):
        mean_avg = float(np.mean([r[2][k][1] for r in results]))
        mean_obe = float(np.mean([r[2][k][2] for r in results]))
        g_t = schedule.gamma(max(t - 1, 1))
        d_t = schedule.delta(max(t - 1, 1))
        margin = math.inf
        ok = True
        for s in np.flatnonzero(sent):
            lhs = alpha * region_mass[s] * prof.gap / marginals[s]
            try:
                c_rad = confidence_radius(instance, scheme, max(t - 1, 1), int(s))
            except RadiusPreconditionError:
                ok = False
                margin = None
                break
            margin = min(margin, lhs - (g_t + 2.0 * c_rad))
        if margin is not None:
            margin = float(margin)
            ok = margin > 0.0
        budget_ok = t > 1 and alpha + d_t + 2.0 / (t - 1) < constant
        checkpoints.append(
            ConvergenceCheckpoint(
                t=t,
                mean_running_avg=mean_avg,
                mean_obedience=mean_obe,
                schedule_gamma=g_t,
                schedule_delta=d_t,
                threshold_margin=margin,
                threshold_ok=bool(ok),
                budget_ok=bool(budget_ok),
            )
        )

    mean_final = float(np.mean(finals))
    target = opt - constant
    return ConvergenceReport(
        opt=float(opt),
        constant=float(constant),
        alpha=float(alpha),
        rounds=rounds,
        seeds=tuple(seeds),
        scheme=scheme,
        final_averages=finals,
        mean_final_average=mean_final,
        target=float(target),
        meets_target=mean_final >= target,
        last_decile_obedience=tail_obedience,
        checkpoints=tuple(checkpoints),
    )


# ---------------------------------------------------------------------------
# concentration of empirical conditional utilities


def empirical_conditional_utilities(
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    t: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw t rounds under a fixed scheme; per-signal empirical action values.

    Returns (visited mask over signals, matrix of v(a, empirical posterior)).
    Rows for unvisited signals are zero.  Uses the same substream layout as
    the simulator's state and signal streams.
    """
    state_rng, signal_rng, _ = _spawn_rngs(seed)
    states = _draw_states(instance, state_rng.random(t))
    cdf = np.cumsum(scheme.conditional, axis=1)
    draws = signal_rng.random(t)
    signals = np.minimum(
        (cdf[states] <= draws[:, None]).sum(axis=1), scheme.n_signals - 1
    )
    S, m = scheme.n_signals, instance.n_states
    counts = np.bincount(signals * m + states, minlength=S * m).reshape(S, m)
    totals = counts.sum(axis=1)
    visited = totals > 0
    freq = counts / np.where(visited, totals, 1)[:, None]
    vhat = freq @ instance.receiver_utility.T
    vhat[~visited] = 0.0
    return visited, vhat
