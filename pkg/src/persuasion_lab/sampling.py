"""Seeded random instances, schemes, and strategies for sweeps and tests."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import (
    DEFAULT_EPS,
    PersuasionInstance,
    ReceiverStrategy,
    SignalingScheme,
    make_scheme,
    profile_instance,
    scheme_stats,
    best_response_mask,
)


def random_instance(
    rng: np.random.Generator, max_states: int = 6, max_actions: int = 5
) -> PersuasionInstance:
    """Unconstrained instance; may violate the uniqueness assumption."""
    m = int(rng.integers(2, max_states + 1))
    n = int(rng.integers(2, max_actions + 1))
    states = tuple(f"w{k}" for k in range(m))
    actions = tuple(f"a{k}" for k in range(n))
    prior = rng.dirichlet(np.ones(m))
    return PersuasionInstance(
        states=states,
        actions=actions,
        prior=prior,
        sender_utility=rng.uniform(0.0, 1.0, (n, m)),
        receiver_utility=rng.uniform(0.0, 1.0, (n, m)),
    )


def satisfied_instance(
    rng: np.random.Generator,
    max_states: int = 6,
    max_actions: int = 5,
    min_margin: float = 0.35,
    max_margin: float = 0.7,
    min_mu_delta: float | None = None,
    max_tries: int = 10_000,
) -> PersuasionInstance:
    """Instance with unique per-state optima, every action optimal somewhere.

    Each state gets an owner action whose receiver utility beats the rest of
    the column by at least ``min_margin``; the first ``n`` owners are a
    permutation so no action is left without a region.  ``min_mu_delta``
    rejects draws until ``mu_min * gap`` exceeds it (needed when a bound
    sweep must keep gamma/(mu_min*gap) < 1).
    """
    for _ in range(max_tries):
        n = int(rng.integers(2, max_actions + 1))
        m = int(rng.integers(n, max_states + 1))
        owners = np.concatenate(
            [rng.permutation(n), rng.integers(0, n, size=m - n)]
        ).astype(int)

        v = rng.uniform(0.0, 0.3, (n, m))
        for w in range(m):
            margin = rng.uniform(min_margin, max_margin)
            v[owners[w], w] = v[:, w].max() + margin

        base = 0.6 / m
        prior = base + rng.dirichlet(np.ones(m)) * (1.0 - m * base)

        inst = PersuasionInstance(
            states=tuple(f"w{k}" for k in range(m)),
            actions=tuple(f"a{k}" for k in range(n)),
            prior=prior,
            sender_utility=rng.uniform(0.0, 1.0, (n, m)),
            receiver_utility=np.clip(v, 0.0, 1.0),
        )
        prof = profile_instance(inst)
        if not prof.assumption_satisfied:
            continue
        if min_mu_delta is not None and prof.mu_min * prof.gap <= min_mu_delta:
            continue
        return inst
    raise ValidationError(f"could not sample a satisfying instance in {max_tries} tries")


def random_scheme(
    rng: np.random.Generator,
    instance: PersuasionInstance,
    n_signals: int | None = None,
) -> SignalingScheme:
    if n_signals is None:
        n_signals = int(rng.integers(1, instance.n_actions + 3))
    cond = rng.dirichlet(np.ones(n_signals), size=instance.n_states)
    return make_scheme(instance, tuple(f"s{k}" for k in range(n_signals)), cond)


def random_direct_scheme(
    rng: np.random.Generator, instance: PersuasionInstance
) -> SignalingScheme:
    cond = rng.dirichlet(np.ones(instance.n_actions), size=instance.n_states)
    return make_scheme(instance, instance.actions, cond)


def approx_responding_strategy(
    rng: np.random.Generator,
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    gamma: float,
    delta: float,
    eps_num: float = DEFAULT_EPS,
) -> ReceiverStrategy:
    """A strategy keeping at least 1-delta mass inside each signal's set."""
    stats = scheme_stats(instance, scheme)
    mask = best_response_mask(stats.receiver_values, gamma, eps_num)
    S, n = mask.shape
    rho = np.zeros((S, n))
    for s in range(S):
        if stats.marginals[s] <= 0.0:
            rho[s] = 1.0 / n
            continue
        inside = np.flatnonzero(mask[s])
        outside = np.flatnonzero(~mask[s])
        leak = float(rng.uniform(0.0, delta)) if (delta > 0 and outside.size) else 0.0
        rho[s, inside] = rng.dirichlet(np.ones(inside.size)) * (1.0 - leak)
        if leak > 0:
            rho[s, outside] = rng.dirichlet(np.ones(outside.size)) * leak
    return ReceiverStrategy(rho)


def deterministic_responding_strategy(
    rng: np.random.Generator,
    instance: PersuasionInstance,
    scheme: SignalingScheme,
    gamma: float,
    eps_num: float = DEFAULT_EPS,
) -> ReceiverStrategy:
    """Point mass per signal, drawn uniformly from the gamma-best set."""
    stats = scheme_stats(instance, scheme)
    mask = best_response_mask(stats.receiver_values, gamma, eps_num)
    S, n = mask.shape
    rho = np.zeros((S, n))
    for s in range(S):
        if stats.marginals[s] <= 0.0:
            rho[s, int(rng.integers(0, n))] = 1.0
            continue
        inside = np.flatnonzero(mask[s])
        rho[s, int(rng.choice(inside))] = 1.0
    return ReceiverStrategy(rho)
