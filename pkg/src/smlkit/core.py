"""Finite categorical parameter spaces, exact probabilities, and policy matrices.

All probabilities are `fractions.Fraction` values; nothing in this module
touches floating point, so equality checks and stochasticity checks are exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterator, Sequence

DEFAULT_ENUM_CAP = 10**6


class EnumerationCapError(RuntimeError):
    """Raised when an enumeration would exceed the configured cap."""


class InvalidPolicyError(ValueError):
    """Raised when a conditional-probability matrix is not row-stochastic."""


class PartitionError(ValueError):
    """Raised when a secret partition is inconsistent with its space."""


def as_prob(value: Any) -> Fraction:
    """Coerce ``value`` to an exact probability in [0, 1]."""
    p = Fraction(value)
    if p < 0 or p > 1:
        raise ValueError(f"probability out of range: {p}")
    return p


def composition_count(d: int, tau: int) -> int:
    """Number of length-``d`` tuples of non-negative ints summing to ``tau``."""
    if d < 1 or tau < 0:
        raise ValueError("need d >= 1 and tau >= 0")
    return math.comb(tau + d - 1, d - 1)


@dataclass(frozen=True)
class CategoricalParam:
    """A categorical distribution stored as integer counts at precision ``tau``.

    ``counts[i] / tau`` is the probability mass on category ``i``.
    """

    counts: tuple[int, ...]
    tau: int

    def __post_init__(self) -> None:
        if not self.counts:
            raise ValueError("empty count vector")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")
        if sum(self.counts) != self.tau:
            raise ValueError(f"counts sum to {sum(self.counts)}, expected {self.tau}")
        object.__setattr__(self, "counts", tuple(self.counts))

    @property
    def d(self) -> int:
        return len(self.counts)

    def mass(self, i: int) -> Fraction:
        return Fraction(self.counts[i], self.tau)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.counts) if c > 0)

    def to_json(self) -> dict:
        return {"tau": self.tau, "counts": list(self.counts)}

    @classmethod
    def from_json(cls, obj: dict) -> "CategoricalParam":
        return cls(tuple(obj["counts"]), obj["tau"])


def tv_distance(p: CategoricalParam, q: CategoricalParam) -> Fraction:
    """Exact total-variation distance between two categorical parameters.

    Parameters of different lengths are aligned positionally, padding the
    shorter one with zero mass.
    """
    d = max(p.d, q.d)
    total = Fraction(0)
    for i in range(d):
        a = p.mass(i) if i < p.d else Fraction(0)
        b = q.mass(i) if i < q.d else Fraction(0)
        total += abs(a - b)
    return total / 2


def _compositions(d: int, tau: int) -> Iterator[tuple[int, ...]]:
    if d == 1:
        yield (tau,)
        return
    for v in range(tau + 1):
        for rest in _compositions(d - 1, tau - v):
            yield (v,) + rest


def enumerate_params(d: int, tau: int, cap: int = DEFAULT_ENUM_CAP) -> list[CategoricalParam]:
    """All parameters of ``d`` categories at precision ``tau``, in rank order.

    The order agrees with :func:`rank_param` / :func:`unrank_param`: tuples
    sorted ascending by leading coordinates, e.g. (0,2), (1,1), (2,0).
    """
    total = composition_count(d, tau)
    if total > cap:
        raise EnumerationCapError(f"{total} parameters exceed cap {cap}")
    return [CategoricalParam(c, tau) for c in _compositions(d, tau)]


def rank_param(param: CategoricalParam) -> int:
    """Index of ``param`` within the :func:`enumerate_params` ordering."""
    rank = 0
    rem = param.tau
    d = param.d
    for j, c in enumerate(param.counts[:-1]):
        slots = d - j - 1
        # tuples sharing the prefix but with a smaller value at position j
        rank += math.comb(rem + slots, slots) - math.comb(rem - c + slots, slots)
        rem -= c
    return rank


def unrank_param(index: int, d: int, tau: int) -> CategoricalParam:
    """Inverse of :func:`rank_param`."""
    total = composition_count(d, tau)
    if not 0 <= index < total:
        raise IndexError(f"rank {index} out of range for {total} parameters")
    counts = []
    rem = tau
    for j in range(d - 1):
        slots = d - j - 1
        c = 0
        while True:
            block = composition_count(slots, rem - c)
            if index < block:
                break
            index -= block
            c += 1
        counts.append(c)
        rem -= c
    counts.append(rem)
    return CategoricalParam(tuple(counts), tau)


@dataclass(frozen=True)
class ParameterSpace:
    """The set of categorical parameters over ``categories`` at precision ``tau``.

    Membership is implicit (every count vector summing to ``tau``); optionally
    restricted to parameters supported on ``feasible`` category indices.
    """

    categories: tuple[Hashable, ...]
    tau: int
    feasible: frozenset[int] | None = None

    def __post_init__(self) -> None:
        if self.feasible is not None:
            bad = [i for i in self.feasible if not 0 <= i < self.d]
            if bad:
                raise ValueError(f"feasible indices out of range: {bad}")

    @property
    def d(self) -> int:
        return len(self.categories)

    @property
    def size(self) -> int:
        if self.feasible is None:
            return composition_count(self.d, self.tau)
        return composition_count(len(self.feasible), self.tau)

    def contains(self, param: CategoricalParam) -> bool:
        if param.d != self.d or param.tau != self.tau:
            return False
        if self.feasible is not None:
            return all(i in self.feasible for i in param.support)
        return True

    def members(self, cap: int = DEFAULT_ENUM_CAP) -> list[CategoricalParam]:
        if self.feasible is None:
            return enumerate_params(self.d, self.tau, cap)
        idx = sorted(self.feasible)
        inner = enumerate_params(len(idx), self.tau, cap)
        return [embed_param(p, idx, self.d) for p in inner]

    def rank_of(self, param: CategoricalParam) -> int:
        if not self.contains(param):
            raise ValueError("parameter not in space")
        if self.feasible is None:
            return rank_param(param)
        idx = sorted(self.feasible)
        return rank_param(CategoricalParam(tuple(param.counts[i] for i in idx), self.tau))

    def member_at(self, index: int) -> CategoricalParam:
        if self.feasible is None:
            return unrank_param(index, self.d, self.tau)
        idx = sorted(self.feasible)
        return embed_param(unrank_param(index, len(idx), self.tau), idx, self.d)


def embed_param(param: CategoricalParam, positions: Sequence[int], d: int) -> CategoricalParam:
    """Place ``param``'s counts at the given ``positions`` of a length-``d`` vector."""
    counts = [0] * d
    for pos, c in zip(positions, param.counts):
        counts[pos] = c
    return CategoricalParam(tuple(counts), param.tau)


@dataclass(frozen=True)
class SecretValue:
    """A value of the secret statistic; ``rank`` orders values when meaningful."""

    id: Hashable
    rank: int | None = None

    def __repr__(self) -> str:  # compact in witness dumps
        return f"SecretValue({self.id!r})"


@dataclass
class SecretPartition:
    """Partition of a parameter list into classes of equal secret value."""

    secrets: tuple[SecretValue, ...]
    classes: dict[SecretValue, list[CategoricalParam]]
    secret_of: Callable[[CategoricalParam], SecretValue]

    @property
    def s(self) -> int:
        return len(self.secrets)

    def class_of(self, g: SecretValue) -> list[CategoricalParam]:
        return self.classes[g]

    @property
    def members(self) -> list[CategoricalParam]:
        return [p for g in self.secrets for p in self.classes[g]]

    @property
    def max_class_size(self) -> int:
        return max(len(v) for v in self.classes.values())


def build_partition(
    params: Sequence[CategoricalParam],
    secret_fn: Callable[[CategoricalParam], SecretValue],
    declared: Sequence[SecretValue] | None = None,
) -> SecretPartition:
    """Group ``params`` by secret value.

    Secrets are ordered by their ``rank`` when every observed secret carries
    one, otherwise by first appearance.  If ``declared`` is given, every
    declared secret must receive at least one parameter.
    """
    classes: dict[SecretValue, list[CategoricalParam]] = {}
    order: list[SecretValue] = []
    for p in params:
        g = secret_fn(p)
        if g not in classes:
            classes[g] = []
            order.append(g)
        classes[g].append(p)
    if declared is not None:
        missing = [g for g in declared if g not in classes]
        if missing:
            raise PartitionError(f"declared secrets with empty classes: {missing}")
        extra = [g for g in order if g not in set(declared)]
        if extra:
            raise PartitionError(f"undeclared secrets observed: {extra}")
        order = list(declared)
    elif all(g.rank is not None for g in order):
        order.sort(key=lambda g: g.rank)
    return SecretPartition(tuple(order), {g: classes[g] for g in order}, secret_fn)


def fraction_secret(category: int, tau: int) -> Callable[[CategoricalParam], SecretValue]:
    """Secret = probability mass on one category; rank ``l`` means mass (l-1)/tau."""

    def fn(p: CategoricalParam) -> SecretValue:
        c = p.counts[category]
        return SecretValue(Fraction(c, tau), rank=c + 1)

    return fn


# A prior assignment picks one representative parameter per secret class.
PriorAssignment = dict[SecretValue, CategoricalParam]


def _label_to_json(label: Any) -> Any:
    if isinstance(label, CategoricalParam):
        return label.to_json()
    if isinstance(label, tuple):
        return [_label_to_json(x) for x in label]
    return label


def _label_from_json(obj: Any) -> Any:
    if isinstance(obj, dict) and set(obj) == {"tau", "counts"}:
        return CategoricalParam.from_json(obj)
    if isinstance(obj, list):
        return tuple(_label_from_json(x) for x in obj)
    return obj


@dataclass
class PolicyMatrix:
    """Row-stochastic conditional-probability matrix P(output | input).

    Rows are indexed by ``inputs`` and columns by ``outputs``; entries are
    exact rationals and each row must sum to exactly 1.
    """

    inputs: list
    outputs: list
    rows: list[list[Fraction]]

    def __post_init__(self) -> None:
        self.inputs = list(self.inputs)
        self.outputs = list(self.outputs)
        if len(self.rows) != len(self.inputs):
            raise InvalidPolicyError("row count does not match inputs")
        rows = []
        for i, row in enumerate(self.rows):
            if len(row) != len(self.outputs):
                raise InvalidPolicyError(f"row {i} length does not match outputs")
            row = [as_prob(x) for x in row]
            if sum(row) != 1:
                raise InvalidPolicyError(f"row {i} sums to {sum(row)}, expected 1")
            rows.append(row)
        self.rows = rows
        self._in_index = {x: i for i, x in enumerate(self.inputs)}
        self._out_index = {y: j for j, y in enumerate(self.outputs)}
        if len(self._in_index) != len(self.inputs):
            raise InvalidPolicyError("duplicate inputs")
        if len(self._out_index) != len(self.outputs):
            raise InvalidPolicyError("duplicate outputs")

    @property
    def deterministic(self) -> bool:
        return all(all(x in (0, 1) for x in row) for row in self.rows)

    def entry(self, theta, theta_prime) -> Fraction:
        return self.rows[self._in_index[theta]][self._out_index[theta_prime]]

    def row_of(self, theta) -> list[Fraction]:
        return self.rows[self._in_index[theta]]

    def input_index(self, theta) -> int:
        return self._in_index[theta]

    def to_json(self) -> dict:
        return {
            "inputs": [_label_to_json(x) for x in self.inputs],
            "outputs": [_label_to_json(y) for y in self.outputs],
            "rows": [[str(x) for x in row] for row in self.rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict) -> "PolicyMatrix":
        return cls(
            inputs=[_label_from_json(x) for x in obj["inputs"]],
            outputs=[_label_from_json(y) for y in obj["outputs"]],
            rows=[[Fraction(x) for x in row] for row in obj["rows"]],
        )

    @classmethod
    def loads(cls, text: str) -> "PolicyMatrix":
        return cls.from_json(json.loads(text))


class Mechanism:
    """A data-release mechanism: exact likelihoods plus seeded sampling."""

    def likelihood(self, theta: CategoricalParam, theta_prime) -> Fraction:
        raise NotImplementedError

    def sample(self, theta: CategoricalParam, seed: int):
        raise NotImplementedError

    def policy(self, inputs: Sequence[CategoricalParam] | None = None) -> PolicyMatrix:
        raise NotImplementedError
