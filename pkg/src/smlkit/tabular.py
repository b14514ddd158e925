"""Tabular front end: CSV ingestion, support extraction, parameter encoding,
secret definitions over attribute combinations, and dataset release.

A dataset of n rows over selected categorical columns becomes a categorical
parameter at precision tau = n (exact), over the sorted union of observed and
declared-feasible attribute combinations.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .core import CategoricalParam, Mechanism, SecretValue
from .mechanisms import rng_for
from .tradeoff import TabularScale

Combo = tuple


@dataclass
class Dataset:
    columns: tuple[str, ...]
    rows: list[Combo]
    dropped: int = 0

    @property
    def n(self) -> int:
        return len(self.rows)


def ingest_csv(
    path: str,
    columns: Sequence[str] | None = None,
    na_values: Iterable[str] = (),
) -> Dataset:
    """Load selected categorical columns from a CSV file with a header row.

    Rows with a value in ``na_values`` (after stripping whitespace) in any
    selected column are dropped; the count is recorded on the dataset.
    """
    na = {v.strip() for v in na_values}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError("CSV file has no header row")
        raw_by_name = {h.strip(): h for h in reader.fieldnames}
        cols = list(columns) if columns is not None else list(raw_by_name)
        missing = [c for c in cols if c not in raw_by_name]
        if missing:
            raise ValueError(f"columns not in CSV header: {missing}")
        keys = [raw_by_name[c] for c in cols]
        rows: list[Combo] = []
        dropped = 0
        for record in reader:
            values = tuple((record.get(k) or "").strip() for k in keys)
            if any(v in na for v in values):
                dropped += 1
                continue
            rows.append(values)
    return Dataset(tuple(cols), rows, dropped)


@dataclass
class SupportInfo:
    """Observed combination counts plus optional feasibility declarations.

    ``true_feasible`` is the ground-truth feasible set; ``estimated`` is what
    the release mechanism believes is feasible.  Observed combinations must
    be truly feasible when the truth is declared.
    """

    counts: dict[Combo, int]
    true_feasible: frozenset[Combo] | None = None
    estimated: frozenset[Combo] | None = None

    def __post_init__(self) -> None:
        if self.true_feasible is not None:
            bad = set(self.counts) - set(self.true_feasible)
            if bad:
                raise ValueError(f"observed combinations not truly feasible: {sorted(bad)!r}")

    @property
    def categories(self) -> tuple[Combo, ...]:
        universe = set(self.counts)
        if self.true_feasible:
            universe |= self.true_feasible
        if self.estimated:
            universe |= self.estimated
        return tuple(sorted(universe))

    def scale(self, tau: int, s: int | None = None) -> TabularScale:
        star = self.true_feasible if self.true_feasible is not None else frozenset(self.counts)
        hat = self.estimated if self.estimated is not None else star
        return TabularScale(
            tau=tau,
            d0=len(hat & star),
            d1=len(hat - star),
            dstar=len(star),
            s=s,
        )


def support_info(
    ds: Dataset,
    true_feasible: Iterable[Combo] | None = None,
    estimated: Iterable[Combo] | None = None,
) -> SupportInfo:
    return SupportInfo(
        counts=dict(Counter(ds.rows)),
        true_feasible=None if true_feasible is None else frozenset(true_feasible),
        estimated=None if estimated is None else frozenset(estimated),
    )


def to_param(info: SupportInfo, n: int, tau: int | None = None) -> tuple[tuple[Combo, ...], CategoricalParam]:
    """Encode observed counts as a parameter over the combination universe.

    Precision defaults to ``n`` (one count per row).  A different precision
    is accepted only when every count rescales exactly.
    """
    categories = info.categories
    counts = [info.counts.get(c, 0) for c in categories]
    if sum(counts) != n:
        raise ValueError("counts do not sum to the dataset size")
    if tau is None or tau == n:
        return categories, CategoricalParam(tuple(counts), n)
    if n % tau != 0:
        raise ValueError(f"precision {tau} does not divide n={n} exactly")
    step = n // tau
    if any(c % step for c in counts):
        raise ValueError(f"counts are not all divisible by {step}; cannot rescale exactly")
    return categories, CategoricalParam(tuple(c // step for c in counts), tau)


@dataclass
class SecretSpec:
    """Declarative secret definition over a combination universe.

    * ``fraction``: mass of one combination (``target`` = the combo).
    * ``difference``: difference between two conditional fractions of
      ``target_value`` in ``target_column``, conditioning ``on_column`` being
      ``group_a`` versus ``group_b``, quantized into ``buckets`` even buckets
      of [-1, 1].
    * ``custom``: ``fn`` maps a parameter to a :class:`SecretValue`.
    """

    kind: str
    target: Combo | None = None
    on_column: str | None = None
    group_a: str | None = None
    group_b: str | None = None
    target_column: str | None = None
    target_value: str | None = None
    buckets: int = 10
    fn: Callable[[CategoricalParam], SecretValue] | None = None


def secret_fn(
    spec: SecretSpec,
    categories: Sequence[Combo],
    columns: Sequence[str] = (),
) -> Callable[[CategoricalParam], SecretValue]:
    """Build the parameter -> secret map for a secret specification."""
    if spec.kind == "custom":
        if spec.fn is None:
            raise ValueError("custom secret needs fn")
        return spec.fn
    if spec.kind == "fraction":
        if spec.target not in categories:
            raise ValueError(f"target combination {spec.target!r} not in the universe")
        idx = list(categories).index(spec.target)

        def fraction(p: CategoricalParam) -> SecretValue:
            return SecretValue(Fraction(p.counts[idx], p.tau), rank=p.counts[idx] + 1)

        return fraction
    if spec.kind == "difference":
        cols = list(columns)
        for name in ("on_column", "target_column", "group_a", "group_b", "target_value"):
            if getattr(spec, name) is None:
                raise ValueError(f"difference secret needs {name}")
        ci = cols.index(spec.on_column)
        ti = cols.index(spec.target_column)
        a_idx = [j for j, c in enumerate(categories) if c[ci] == spec.group_a]
        b_idx = [j for j, c in enumerate(categories) if c[ci] == spec.group_b]
        a_hit = [j for j in a_idx if categories[j][ti] == spec.target_value]
        b_hit = [j for j in b_idx if categories[j][ti] == spec.target_value]
        buckets = spec.buckets

        def difference(p: CategoricalParam) -> SecretValue:
            na = sum(p.counts[j] for j in a_idx)
            nb = sum(p.counts[j] for j in b_idx)
            if na == 0 or nb == 0:
                raise ValueError("conditional fraction undefined: empty group")
            diff = Fraction(sum(p.counts[j] for j in a_hit), na) \
                - Fraction(sum(p.counts[j] for j in b_hit), nb)
            # bucket k covers [-1 + 2k/buckets, -1 + 2(k+1)/buckets); +1 lands in the last
            k = min(int((diff + 1) * buckets / 2), buckets - 1)
            return SecretValue(k, rank=k + 1)

        return difference
    raise ValueError(f"unknown secret kind {spec.kind!r}")


def materialize(param: CategoricalParam, categories: Sequence[Combo]) -> list[Combo]:
    """Expand a parameter into rows: count c on a combination yields c copies."""
    rows: list[Combo] = []
    for combo, c in zip(categories, param.counts):
        rows.extend([combo] * c)
    return rows


def release_dataset(
    ds: Dataset,
    mechanism: Mechanism,
    categories: Sequence[Combo],
    param: CategoricalParam,
    seed: int,
) -> Dataset:
    """Release a dataset: perturb its parameter, rebuild rows, shuffle.

    The parameter precision must equal the row count so the released
    parameter materializes to exactly n rows.
    """
    if param.tau != ds.n:
        raise ValueError("parameter precision must equal the dataset size")
    released = mechanism.sample(param, int(rng_for(seed, 0).integers(2**63)))
    rows = materialize(released, categories)
    order = rng_for(seed, 1).permutation(len(rows))
    return Dataset(ds.columns, [rows[i] for i in order], dropped=ds.dropped)
