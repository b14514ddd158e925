"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from smlkit import (
    ParameterSpace,
    PolicyMatrix,
    SecretPartition,
    SecretValue,
    build_partition,
    fraction_secret,
)


def _random_labels(rng: random.Random, inputs, n_classes: int):
    labels = {theta: SecretValue(rng.randrange(n_classes)) for theta in inputs}
    return lambda th: labels[th]


def random_deterministic_policy(
    rng: random.Random, d: int, tau: int
) -> tuple[PolicyMatrix, SecretPartition]:
    """A random deterministic policy over the full parameter space for (d, tau),
    with a random secret partition of at most 4 classes."""
    space = ParameterSpace(categories=list(range(d)), tau=tau)
    inputs = space.members()
    n_out = rng.randint(1, len(inputs))
    outputs = rng.sample(inputs, n_out)
    rows = []
    for _ in inputs:
        j = rng.randrange(n_out)
        rows.append(tuple(Fraction(1) if k == j else Fraction(0) for k in range(n_out)))
    policy = PolicyMatrix(inputs=tuple(inputs), outputs=tuple(outputs), rows=tuple(rows))

    n_classes = rng.randint(1, min(4, len(inputs)))
    partition = build_partition(inputs, _random_labels(rng, inputs, n_classes))
    return policy, partition


def random_stochastic_policy(
    rng: random.Random, d: int, tau: int, denom: int = 8
) -> tuple[PolicyMatrix, SecretPartition]:
    """A random row-stochastic policy with entries on a 1/denom grid."""
    space = ParameterSpace(categories=list(range(d)), tau=tau)
    inputs = space.members()
    n_out = rng.randint(1, len(inputs))
    outputs = rng.sample(inputs, n_out)
    rows = []
    for _ in inputs:
        cuts = sorted(rng.randrange(denom + 1) for _ in range(n_out - 1))
        weights = []
        prev = 0
        for c in cuts:
            weights.append(c - prev)
            prev = c
        weights.append(denom - prev)
        rows.append(tuple(Fraction(w, denom) for w in weights))
    policy = PolicyMatrix(inputs=tuple(inputs), outputs=tuple(outputs), rows=tuple(rows))

    n_classes = rng.randint(1, min(4, len(inputs)))
    partition = build_partition(inputs, _random_labels(rng, inputs, n_classes))
    return policy, partition


def full_space_partition(d: int, tau: int, category: int = 0):
    """Full parameter space plus the fraction-of-category secret partition."""
    space = ParameterSpace(categories=list(range(d)), tau=tau)
    partition = build_partition(space.members(), fraction_secret(category, tau))
    return space, partition
