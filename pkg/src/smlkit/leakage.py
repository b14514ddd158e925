"""Exact leakage measures for finite policies.

The central quantity is the maximal leakage of the released statistic:
the log of  sup over priors (one representative parameter per secret class)
of  sum over outputs of  max over classes of P(output | representative).
The raw (pre-log) sum is kept as an exact rational; logarithms are applied
only at the reporting boundary.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .core import DEFAULT_ENUM_CAP, EnumerationCapError, PolicyMatrix, PriorAssignment, SecretPartition
from .flow import build_sml_network, min_cost_flow

LOG2 = "2"
LOGE = "e"


def log_in_base(x: float | Fraction, base: str) -> float:
    v = math.log(float(x))
    return v / math.log(2) if base == LOG2 else v


@dataclass
class LeakageReport:
    """Leakage with its exact pre-log sum, optional witness prior, and method."""

    raw_sum: Fraction
    method: str
    base: str = LOG2
    witness: PriorAssignment | None = None

    @property
    def value(self) -> float:
        return log_in_base(self.raw_sum, self.base)

    def to_json(self) -> dict:
        obj = {
            "raw_sum": str(self.raw_sum),
            "value": self.value,
            "log_base": self.base,
            "method": self.method,
        }
        if self.witness is not None:
            obj["witness"] = {str(g.id): p.to_json() for g, p in self.witness.items()}
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _class_rows(policy: PolicyMatrix, partition: SecretPartition):
    """Rows of the policy grouped by secret class, entries scaled to ints.

    Returns (scale, rows_by_class, params_by_class) where every probability
    p has been replaced by the integer p * scale.
    """
    denom = 1
    for g in partition.secrets:
        for p in partition.class_of(g):
            for x in policy.row_of(p):
                denom = denom * x.denominator // math.gcd(denom, x.denominator)
    rows_by_class = []
    params_by_class = []
    for g in partition.secrets:
        members = partition.class_of(g)
        params_by_class.append(members)
        rows_by_class.append(
            [[int(x * denom) for x in policy.row_of(p)] for p in members]
        )
    return denom, rows_by_class, params_by_class


def sml_bruteforce(
    policy: PolicyMatrix,
    partition: SecretPartition,
    cap: int = DEFAULT_ENUM_CAP,
    base: str = LOG2,
) -> LeakageReport:
    """Exact leakage by enumerating every choice of one parameter per class.

    The first (lowest odometer index) maximizing assignment is returned as
    the witness.  Raises :class:`EnumerationCapError` when the number of
    assignments exceeds ``cap``.
    """
    total = 1
    for g in partition.secrets:
        total *= len(partition.class_of(g))
    if total > cap:
        raise EnumerationCapError(f"{total} prior assignments exceed cap {cap}")

    scale, rows_by_class, params_by_class = _class_rows(policy, partition)
    ncols = len(policy.outputs)
    cols = range(ncols)
    best = -1
    best_choice = None
    for choice in product(*(range(len(r)) for r in rows_by_class)):
        sel = [rows_by_class[i][m] for i, m in enumerate(choice)]
        raw = sum(max(row[j] for row in sel) for j in cols)
        if raw > best:
            best = raw
            best_choice = choice
    witness = {
        g: params_by_class[i][best_choice[i]]
        for i, g in enumerate(partition.secrets)
    }
    return LeakageReport(
        raw_sum=Fraction(best, scale), method="bruteforce", base=base, witness=witness
    )


def sml_deterministic(
    policy: PolicyMatrix, partition: SecretPartition, base: str = LOG2
) -> LeakageReport:
    """Exact leakage of a deterministic policy via min-cost flow.

    The negated optimal cost equals the leakage sum; a witness prior is read
    off the unit flows through the class layer.
    """
    net = build_sml_network(policy, partition)
    result = min_cost_flow(net)
    raw = -result.total_cost
    if raw.denominator != 1:
        raise AssertionError(f"deterministic leakage sum must be integral, got {raw}")
    witness: PriorAssignment = {}
    for arc, f in zip(net.arcs, result.flow):
        if f > 0 and isinstance(arc.tail, tuple) and arc.tail[0] == "g" \
                and isinstance(arc.head, tuple) and arc.head[0] == "in":
            witness[arc.tail[1]] = arc.head[1]
    # Classes the optimal flow skips add nothing new; any representative
    # completes the witness without changing the attained sum.
    for g in partition.secrets:
        witness.setdefault(g, partition.class_of(g)[0])
    return LeakageReport(raw_sum=raw, method="flow", base=base, witness=witness)


def sml(
    policy: PolicyMatrix,
    partition: SecretPartition,
    method: str = "auto",
    cap: int = DEFAULT_ENUM_CAP,
    base: str = LOG2,
) -> LeakageReport:
    """Dispatch to the flow fast path for deterministic policies, else brute force."""
    if method == "flow" or (method == "auto" and policy.deterministic):
        return sml_deterministic(policy, partition, base=base)
    if method in ("auto", "brute", "bruteforce"):
        return sml_bruteforce(policy, partition, cap=cap, base=base)
    raise ValueError(f"unknown method {method!r}")


def min_entropy_raw(policy: PolicyMatrix) -> Fraction:
    """Pre-log min-entropy leakage: sum over outputs of the column maximum."""
    ncols = len(policy.outputs)
    return sum(
        (max(row[j] for row in policy.rows) for j in range(ncols)), Fraction(0)
    )


def min_entropy_leakage(policy: PolicyMatrix, base: str = LOG2) -> float:
    return log_in_base(min_entropy_raw(policy), base)


def sandwich_bounds(
    policy: PolicyMatrix, partition: SecretPartition, base: str = LOG2
) -> tuple[float, float]:
    """Bracket the leakage without computing it.

    Lower: min-entropy leakage minus the log of the largest class size
    (floored at 0).  Upper: min-entropy leakage, also capped by the log of
    the number of secrets and of the number of outputs.
    """
    mel = min_entropy_leakage(policy, base)
    lo = max(0.0, mel - log_in_base(partition.max_class_size, base))
    hi = min(
        mel,
        log_in_base(partition.s, base),
        log_in_base(len(policy.outputs), base),
    )
    return lo, hi


def ldp_ratio(policy: PolicyMatrix, partition: SecretPartition) -> Fraction | None:
    """Largest likelihood ratio across parameters of different secrets.

    Returns ``None`` when some output has positive probability under one
    secret and zero under another (the local-DP parameter is infinite).
    """
    rows = [
        (g, policy.row_of(p))
        for g in partition.secrets
        for p in partition.class_of(g)
    ]
    best = Fraction(1)
    ncols = len(policy.outputs)
    for gi, row_i in rows:
        for gj, row_j in rows:
            if gi == gj:
                continue
            for k in range(ncols):
                a, b = row_i[k], row_j[k]
                if a == 0:
                    continue
                if b == 0:
                    return None
                if a > b * best:
                    best = a / b
    return best


def ldp_parameter(policy: PolicyMatrix, partition: SecretPartition) -> float:
    """Local-DP parameter (natural log); ``inf`` when a ratio is unbounded."""
    ratio = ldp_ratio(policy, partition)
    if ratio is None:
        return math.inf
    return math.log(ratio)
