"""Release mechanisms: randomized response, quantization, worst-case matching.

Every mechanism exposes exact rational likelihoods (for leakage computation)
and seeded sampling.  Sampling never enumerates the output space: it draws a
rank and unranks it, so it scales to spaces far beyond the enumeration cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (
    CategoricalParam,
    Mechanism,
    ParameterSpace,
    PolicyMatrix,
    SecretPartition,
    SecretValue,
    composition_count,
    embed_param,
    tv_distance,
    unrank_param,
)


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for a (seed, path) pair.

    Distinct paths under the same seed give statistically independent
    streams, so composed mechanisms can split randomness reproducibly.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=path))


@dataclass
class RRMechanism(Mechanism):
    """Randomized response over a parameter space.

    The input is released unchanged with probability w/(N + w - 1) and
    replaced by a uniformly random other parameter otherwise, where N is the
    space size and w is the exact weight e**epsilon.  ``infinite`` releases
    the input unchanged (the epsilon -> infinity limit).
    """

    space: ParameterSpace
    weight: Fraction = Fraction(1)
    infinite: bool = False

    def __post_init__(self) -> None:
        self.weight = Fraction(self.weight)
        if self.weight < 1:
            raise ValueError("weight e**epsilon must be >= 1")

    @property
    def epsilon(self) -> float:
        return math.inf if self.infinite else math.log(self.weight)

    def likelihood(self, theta: CategoricalParam, theta_prime: CategoricalParam) -> Fraction:
        if not (self.space.contains(theta) and self.space.contains(theta_prime)):
            raise ValueError("parameter outside the mechanism's space")
        if self.infinite:
            return Fraction(1) if theta == theta_prime else Fraction(0)
        n = self.space.size
        denom = n + self.weight - 1
        return self.weight / denom if theta == theta_prime else 1 / denom

    def sample(self, theta: CategoricalParam, seed: int) -> CategoricalParam:
        if self.infinite:
            return theta
        rng = rng_for(seed)
        n = self.space.size
        keep = self.weight / (n + self.weight - 1)
        if int(rng.integers(keep.denominator)) < keep.numerator:
            return theta
        idx = int(rng.integers(n - 1))
        if idx >= self.space.rank_of(theta):
            idx += 1
        return self.space.member_at(idx)

    def policy(self, inputs: Sequence[CategoricalParam] | None = None) -> PolicyMatrix:
        outputs = self.space.members()
        ins = list(inputs) if inputs is not None else list(outputs)
        return PolicyMatrix(ins, list(outputs), [
            [self.likelihood(t, o) for o in outputs] for t in ins
        ])


def quantization_bins(s: int, interval: int) -> list[int]:
    """Representative secret rank (1-based) for each bin of ``interval`` ranks.

    Bin k covers ranks k*I+1 .. (k+1)*I and is represented by the middle rank
    floor((k + 1/2) * I) + 1, clamped to s for a ragged last bin.
    """
    if not 1 <= interval <= s:
        raise ValueError("interval must be in 1..s")
    k_max = math.ceil(s / interval)
    return [min(interval * (2 * k + 1) // 2 + 1, s) for k in range(k_max)]


@dataclass
class QMMechanism(Mechanism):
    """Quantization over an ordered secret: release a uniform draw from the
    class of the representative secret of the input's bin.

    ``release`` gives the partition of the release space by the same secret;
    it defaults to the input partition (release space = input space).
    """

    partition: SecretPartition
    interval: int
    release: SecretPartition | None = None

    def __post_init__(self) -> None:
        rel = self.release or self.partition
        if tuple(g.id for g in rel.secrets) != tuple(g.id for g in self.partition.secrets):
            raise ValueError("release partition must carry the same ordered secrets")
        self.release = rel
        self._reps = quantization_bins(self.partition.s, self.interval)

    def _release_class(self, theta: CategoricalParam) -> list[CategoricalParam]:
        g = self.partition.secret_of(theta)
        l = self.partition.secrets.index(g) + 1
        m = self._reps[(l - 1) // self.interval]
        return self.release.class_of(self.release.secrets[m - 1])

    def likelihood(self, theta: CategoricalParam, theta_prime: CategoricalParam) -> Fraction:
        cls = self._release_class(theta)
        return Fraction(1, len(cls)) if theta_prime in cls else Fraction(0)

    def sample(self, theta: CategoricalParam, seed: int) -> CategoricalParam:
        cls = self._release_class(theta)
        return cls[int(rng_for(seed).integers(len(cls)))]

    def policy(self, inputs: Sequence[CategoricalParam] | None = None) -> PolicyMatrix:
        ins = list(inputs) if inputs is not None else self.partition.members
        outputs = self.release.members
        return PolicyMatrix(ins, outputs, [
            [self.likelihood(t, o) for o in outputs] for t in ins
        ])


@dataclass
class FractionQM(Mechanism):
    """Quantization specialised to the mass-of-one-category secret.

    Works on implicit spaces of any size: the released parameter fixes the
    representative count on ``category`` and a uniformly unranked split of
    the remaining mass over the other categories.
    """

    space: ParameterSpace
    category: int
    interval: int

    def __post_init__(self) -> None:
        if self.space.d < 2:
            raise ValueError("need at least two categories")
        if self.space.feasible is not None:
            raise ValueError("restricted spaces are not supported here")
        self._reps = quantization_bins(self.space.tau + 1, self.interval)

    def _rep_count(self, theta: CategoricalParam) -> int:
        l = theta.counts[self.category] + 1
        return self._reps[(l - 1) // self.interval] - 1

    def _class_size(self, rep_count: int) -> int:
        return composition_count(self.space.d - 1, self.space.tau - rep_count)

    def likelihood(self, theta: CategoricalParam, theta_prime: CategoricalParam) -> Fraction:
        rep = self._rep_count(theta)
        if theta_prime.counts[self.category] != rep or theta_prime.tau != self.space.tau:
            return Fraction(0)
        return Fraction(1, self._class_size(rep))

    def sample(self, theta: CategoricalParam, seed: int) -> CategoricalParam:
        rep = self._rep_count(theta)
        idx = int(rng_for(seed).integers(self._class_size(rep)))
        rest = unrank_param(idx, self.space.d - 1, self.space.tau - rep)
        counts = list(rest.counts)
        counts.insert(self.category, rep)
        return CategoricalParam(tuple(counts), self.space.tau)


@dataclass
class MaxLMechanism(Mechanism):
    """Deterministic map onto a greedily chosen release set.

    Inputs map to the selected release parameter minimizing the release
    cost; the release set was grown while the worst-case cost strictly
    improved (see :func:`maxl_build`).
    """

    inputs: list[CategoricalParam]
    selected: list[CategoricalParam]
    mapping: dict[CategoricalParam, CategoricalParam]
    worst_cost: Fraction

    def likelihood(self, theta: CategoricalParam, theta_prime: CategoricalParam) -> Fraction:
        return Fraction(1) if self.mapping[theta] == theta_prime else Fraction(0)

    def sample(self, theta: CategoricalParam, seed: int) -> CategoricalParam:
        return self.mapping[theta]

    def policy(self, inputs: Sequence[CategoricalParam] | None = None) -> PolicyMatrix:
        ins = list(inputs) if inputs is not None else list(self.inputs)
        return PolicyMatrix(ins, list(self.selected), [
            [self.likelihood(t, o) for o in self.selected] for t in ins
        ])


def maxl_build(
    inputs: Sequence[CategoricalParam],
    candidates: Sequence[CategoricalParam],
    cost: Callable[[CategoricalParam, CategoricalParam], Fraction] = tv_distance,
) -> MaxLMechanism:
    """Grow a release set greedily to minimize the worst-case release cost.

    At each step the candidate whose addition gives the smallest worst-case
    cost max over inputs of min over the set is added (ties broken by
    candidate order); growth stops when no addition strictly improves the
    worst case or all candidates are selected.
    """
    if not inputs or not candidates:
        raise ValueError("inputs and candidates must be non-empty")
    table = [[cost(t, c) for c in candidates] for t in inputs]
    selected_idx: list[int] = []
    best_per_input: list[Fraction | None] = [None] * len(inputs)

    def worst_with(j: int) -> Fraction:
        return max(
            b if b is not None and b <= table[i][j] else table[i][j]
            for i, b in enumerate(best_per_input)
        )

    current: Fraction | None = None
    while len(selected_idx) < len(candidates):
        picks = [
            (worst_with(j), j)
            for j in range(len(candidates))
            if j not in selected_idx
        ]
        value, j = min(picks, key=lambda vj: (vj[0], vj[1]))
        if current is not None and value >= current:
            break
        selected_idx.append(j)
        current = value
        for i in range(len(inputs)):
            b = best_per_input[i]
            if b is None or table[i][j] < b:
                best_per_input[i] = table[i][j]

    selected = [candidates[j] for j in selected_idx]
    mapping = {}
    for i, t in enumerate(inputs):
        j = min(selected_idx, key=lambda j: (table[i][j], j))
        mapping[t] = candidates[j]
    return MaxLMechanism(list(inputs), selected, mapping, current)


def compose_policies(
    first: PolicyMatrix,
    second: PolicyMatrix | Callable[[object], PolicyMatrix],
) -> PolicyMatrix:
    """Joint policy of a two-step release over the same input.

    ``second`` may depend on the first output (adaptive composition): pass a
    callable mapping each first-stage output to the second-stage policy.
    Outputs are (first, second) pairs.
    """
    branch = second if callable(second) else (lambda _y: second)
    branches = {y: branch(y) for y in first.outputs}
    for y, b in branches.items():
        if set(b.inputs) != set(first.inputs):
            raise ValueError("second-stage policy must share the input set")
    outputs = [(y1, y2) for y1 in first.outputs for y2 in branches[y1].outputs]
    rows = []
    for t in first.inputs:
        row = []
        for y1 in first.outputs:
            p1 = first.entry(t, y1)
            b = branches[y1]
            for y2 in b.outputs:
                row.append(p1 * b.entry(t, y2))
        rows.append(row)
    return PolicyMatrix(list(first.inputs), outputs, rows)


def postprocess_policy(policy: PolicyMatrix, kernel: PolicyMatrix) -> PolicyMatrix:
    """Policy followed by a channel on its outputs (which cannot see the input)."""
    if set(kernel.inputs) != set(policy.outputs):
        raise ValueError("kernel inputs must be the policy outputs")
    rows = []
    for t in policy.inputs:
        row = []
        for z in kernel.outputs:
            row.append(sum(
                (policy.entry(t, y) * kernel.entry(y, z) for y in policy.outputs),
                Fraction(0),
            ))
        rows.append(row)
    return PolicyMatrix(list(policy.inputs), list(kernel.outputs), rows)


@dataclass
class ComposedMechanism(Mechanism):
    """Sequential release through two mechanisms over the same input."""

    first: Mechanism
    second: Mechanism | Callable[[object], Mechanism]

    def _second(self, y1) -> Mechanism:
        return self.second(y1) if callable(self.second) else self.second

    def likelihood(self, theta, theta_pair) -> Fraction:
        y1, y2 = theta_pair
        return self.first.likelihood(theta, y1) * self._second(y1).likelihood(theta, y2)

    def sample(self, theta, seed: int):
        y1 = self.first.sample(theta, int(rng_for(seed, 0).integers(2**63)))
        y2 = self._second(y1).sample(theta, int(rng_for(seed, 1).integers(2**63)))
        return (y1, y2)


@dataclass
class PostProcessedMechanism(Mechanism):
    """Mechanism whose output is pushed through a sampling kernel."""

    inner: Mechanism
    kernel: PolicyMatrix

    def likelihood(self, theta, z) -> Fraction:
        return sum(
            (self.inner.likelihood(theta, y) * self.kernel.entry(y, z)
             for y in self.kernel.inputs),
            Fraction(0),
        )

    def sample(self, theta, seed: int):
        y = self.inner.sample(theta, int(rng_for(seed, 0).integers(2**63)))
        row = self.kernel.row_of(y)
        rng = rng_for(seed, 1)
        denom = math.lcm(*(p.denominator for p in row))
        draw = int(rng.integers(denom))
        acc = 0
        for z, p in zip(self.kernel.outputs, row):
            acc += int(p * denom)
            if draw < acc:
                return z
        raise AssertionError("kernel row did not sum to 1")


def mismatched_rr_policy(
    tau: int,
    gamma_star: set[int],
    gamma_hat: set[int],
    weight: Fraction,
) -> PolicyMatrix:
    """Randomized response run with an estimated feasible set.

    Categories 0..d-1 are the union of the true set ``gamma_star`` and the
    estimate ``gamma_hat``.  Inputs are parameters supported on the true
    set; each input is perturbed within parameters supported on the estimate
    plus the input's own support.
    """
    weight = Fraction(weight)
    universe = sorted(gamma_star | gamma_hat)
    if universe != list(range(len(universe))):
        raise ValueError("categories must be 0..d-1")
    d = len(universe)
    in_space = ParameterSpace(tuple(range(d)), tau, frozenset(gamma_star))
    out_space = ParameterSpace(tuple(range(d)), tau)
    inputs = in_space.members()
    outputs = out_space.members()
    rows = []
    for t in inputs:
        allowed = gamma_hat | set(t.support)
        n = composition_count(len(allowed), tau)
        denom = n + weight - 1
        row = []
        for o in outputs:
            if not set(o.support) <= allowed:
                row.append(Fraction(0))
            elif o == t:
                row.append(weight / denom)
            else:
                row.append(1 / denom)
        rows.append(row)
    return PolicyMatrix(inputs, outputs, rows)


def mismatched_qm_policy(
    tau: int,
    gamma_star: set[int],
    gamma_hat: set[int],
    interval: int,
    category: int = 0,
) -> PolicyMatrix:
    """Quantization of a category-mass secret run with an estimated feasible set.

    The released parameter is uniform over parameters supported on the
    estimate plus the input's support whose ``category`` mass equals the
    representative of the input's bin.
    """
    universe = sorted(gamma_star | gamma_hat)
    if universe != list(range(len(universe))):
        raise ValueError("categories must be 0..d-1")
    if category not in (gamma_star & gamma_hat):
        raise ValueError("secret category must be truly feasible and estimated")
    if len(gamma_hat) < 2:
        raise ValueError("need at least two estimated categories")
    d = len(universe)
    reps = quantization_bins(tau + 1, interval)
    inputs = ParameterSpace(tuple(range(d)), tau, frozenset(gamma_star)).members()
    outputs = ParameterSpace(tuple(range(d)), tau).members()
    rows = []
    for t in inputs:
        allowed = gamma_hat | set(t.support)
        rep = reps[t.counts[category] // interval] - 1
        cls = [
            j for j, o in enumerate(outputs)
            if o.counts[category] == rep and set(o.support) <= allowed
        ]
        row = [Fraction(0)] * len(outputs)
        for j in cls:
            row[j] = Fraction(1, len(cls))
        rows.append(row)
    return PolicyMatrix(inputs, outputs, rows)
