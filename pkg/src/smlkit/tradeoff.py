"""Privacy-distortion tradeoff analysis: closed forms, comparison, and the
bounds that hold when the estimated feasible combination set is wrong.

Conventions: ``tau`` is the count precision, ``d0`` the number of correctly
estimated feasible combinations, ``d1`` the number of spurious ones, and
``dstar`` the true number, so ``dstar - d0`` combinations were missed.
Pre-log quantities are exact rationals whenever the formula permits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import CategoricalParam, PolicyMatrix, tv_distance
from .leakage import LOG2, log_in_base
from .mechanisms import rng_for


@dataclass(frozen=True)
class TabularScale:
    """Size summary of a tabular release problem."""

    tau: int
    d0: int
    d1: int = 0
    dstar: int | None = None
    s: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "dstar", self.d0 if self.dstar is None else self.dstar)
        object.__setattr__(self, "s", self.tau + 1 if self.s is None else self.s)
        if self.tau < 1 or self.d0 < 1 or self.d1 < 0 or self.dstar < self.d0 or self.s < 1:
            raise ValueError("inconsistent scale")

    @property
    def d_hat(self) -> int:
        return self.d0 + self.d1

    @property
    def missed(self) -> int:
        return self.dstar - self.d0


def _binom_params(tau: int, d: int) -> int:
    return math.comb(tau + d - 1, d - 1)


def rr_ratio(scale: TabularScale, weight: Fraction) -> Fraction:
    """r = (e**eps - 1) / (number of release parameters)."""
    return (Fraction(weight) - 1) / _binom_params(scale.tau, scale.d_hat)


def rr_privacy_raw(scale: TabularScale, weight: Fraction) -> Fraction:
    """Pre-log leakage of randomized response: (1 + s*r) / (1 + r)."""
    r = rr_ratio(scale, weight)
    return (1 + scale.s * r) / (1 + r)


def rr_privacy(scale: TabularScale, weight: Fraction, base: str = LOG2) -> float:
    return log_in_base(rr_privacy_raw(scale, weight), base)


def rr_distortion(scale: TabularScale, weight: Fraction) -> Fraction:
    """Worst-case expected distance of randomized response: (d-1)/(d(1+r))."""
    d = scale.d_hat
    return Fraction(d - 1) / (d * (1 + rr_ratio(scale, weight)))


def qm_privacy_raw(scale: TabularScale, interval: int) -> int:
    """Pre-log leakage of quantization: the number of bins."""
    if not 1 <= interval <= scale.s:
        raise ValueError("interval must be in 1..s")
    return math.ceil(scale.s / interval)


def qm_privacy(scale: TabularScale, interval: int, base: str = LOG2) -> float:
    return log_in_base(qm_privacy_raw(scale, interval), base)


def qm_distortion(scale: TabularScale, interval: int) -> Fraction:
    """Worst-case expected distance of quantization of a category-mass secret."""
    d, tau = scale.d_hat, scale.tau
    if d < 2:
        raise ValueError("quantization distortion needs at least 2 combinations")
    return Fraction(1, 2) + Fraction(d * (interval // 2) - tau, 2 * tau * (d - 1))


def solve_rr_ratio(s: int, raw: Fraction) -> Fraction:
    """Invert (1 + s*r)/(1 + r) = raw for r; needs 1 <= raw < s."""
    raw = Fraction(raw)
    if not 1 <= raw < s:
        raise ValueError("pre-log leakage must be in [1, s)")
    return (raw - 1) / (s - raw)


@dataclass
class ComparisonPoint:
    interval: int
    privacy: float
    rr_distortion: Fraction
    qm_distortion: Fraction
    ratio: Fraction | None  # rr/qm; None when the qm distortion is 0


def mechanism_comparison(
    scale: TabularScale, budget: float, base: str = LOG2
) -> list[ComparisonPoint]:
    """Distortion of both mechanisms at matched privacy.

    For each quantization interval whose privacy fits the ``budget``, the
    randomized-response weight is solved so that both mechanisms leak the
    same amount, and the two worst-case distortions are compared.
    """
    points = []
    d = scale.d_hat
    for interval in range(1, scale.s + 1):
        raw = qm_privacy_raw(scale, interval)
        privacy = log_in_base(raw, base)
        if privacy > budget or raw >= scale.s:
            continue
        r = solve_rr_ratio(scale.s, Fraction(raw))
        drr = Fraction(d - 1) / (d * (1 + r))
        dqm = qm_distortion(scale, interval)
        points.append(ComparisonPoint(
            interval=interval,
            privacy=privacy,
            rr_distortion=drr,
            qm_distortion=dqm,
            ratio=None if dqm == 0 else drr / dqm,
        ))
    return points


def distortion_exact(
    policy: PolicyMatrix,
    distance: Callable[[CategoricalParam, CategoricalParam], Fraction] = tv_distance,
) -> tuple[Fraction, CategoricalParam]:
    """Worst-case expected distance of a materialized policy, with its argmax input."""
    best = None
    arg = None
    for t in policy.inputs:
        row = policy.row_of(t)
        exp = sum(
            (p * distance(t, o) for p, o in zip(row, policy.outputs) if p > 0),
            Fraction(0),
        )
        if best is None or exp > best:
            best, arg = exp, t
    return best, arg


def distortion_mc(
    mechanism,
    inputs: Sequence[CategoricalParam],
    samples: int,
    seed: int,
    distance: Callable[[CategoricalParam, CategoricalParam], Fraction] = tv_distance,
) -> tuple[float, float]:
    """Monte-Carlo worst-case expected distance: (estimate, max standard error)."""
    worst = 0.0
    worst_se = 0.0
    for i, t in enumerate(inputs):
        draws = [
            float(distance(t, mechanism.sample(t, int(rng_for(seed, i, j).integers(2**63)))))
            for j in range(samples)
        ]
        mean = sum(draws) / samples
        var = sum((x - mean) ** 2 for x in draws) / max(samples - 1, 1)
        se = math.sqrt(var / samples)
        if mean > worst:
            worst, worst_se = mean, se
    return worst, worst_se


def rr_robust_weight_cap(scale: TabularScale) -> Fraction:
    """Largest e**eps - 1 for which randomized response stays robust to a
    misestimated feasible set: (number of release parameters) / s."""
    return Fraction(_binom_params(scale.tau, scale.d_hat), scale.s)


def rr_robust_epsilon_cap(scale: TabularScale) -> float:
    """Natural-log epsilon corresponding to :func:`rr_robust_weight_cap`."""
    cap = rr_robust_weight_cap(scale)
    return math.log(cap.numerator + cap.denominator) - math.log(cap.denominator)


def qm_decay_threshold(scale: TabularScale, interval: int) -> float:
    """Missed-combination count above which quantization privacy hits log s.

    Base-independent: a ratio of logarithms.
    """
    bins = qm_privacy_raw(scale, interval)
    return (math.log(scale.s) - math.log(bins)) / math.log1p(scale.tau / (scale.tau + scale.d0))


@dataclass
class MismatchBounds:
    """Privacy (and distortion) brackets under a misestimated feasible set."""

    privacy_lower: float
    privacy_upper: float
    lower_branch: str
    distortion_lower: Fraction
    distortion_upper: Fraction
    base: str = LOG2


def _pow(base_frac: Fraction, exponent: float) -> float:
    return float(base_frac) ** exponent


def rr_mismatch_bounds(
    scale: TabularScale, weight: Fraction, base: str = LOG2
) -> MismatchBounds:
    """Leakage and distortion brackets for randomized response run with an
    estimated feasible set that misses ``dstar - d0`` true combinations."""
    weight = Fraction(weight)
    tau, d0, d1, ds, s = scale.tau, scale.d0, scale.d1, scale.dstar, scale.s
    m = scale.missed
    e = weight - 1
    b0 = _binom_params(tau, d0 + d1)
    bs = _binom_params(tau, ds + d1)

    u1 = float(s * e / (b0 + e)) + float(bs / (bs + e)) * _pow(
        1 + Fraction(tau, tau + d0 + d1 - 1), m)
    u2 = 1 + s - s * _pow(Fraction(d0 + d1, tau + ds + d1 - 1), m) / float(1 + e / bs)
    upper = min(u1, u2)

    log2s = math.log2(s)
    if m <= log2s:
        lower = float(s * e / (bs + e)) + float(b0 / (b0 + e)) * _pow(
            1 + Fraction(tau - m, tau + ds + d1 - 1), m)
        branch = "few-missed"
    elif m < s:
        lower = float(s * e / (bs + e)) + float(b0 / (b0 + e)) * float(
            1 + (tau - log2s) / (tau + ds + d1 - 1)) ** log2s
        branch = "mid-missed"
    else:
        z = m // s
        lower = s - (s - 1) * _pow(Fraction(d0 + d1 + z - 1, tau + d0 + d1), z)
        branch = "many-missed"

    r1 = e / b0
    r2 = e / bs
    dlo = Fraction(d0 + d1 - 1) / ((d0 + d1) * (1 + r1))
    dhi = Fraction(ds + d1 - 1) / ((ds + d1) * (1 + r2))
    return MismatchBounds(
        privacy_lower=log_in_base(lower, base),
        privacy_upper=log_in_base(upper, base),
        lower_branch=branch,
        distortion_lower=dlo,
        distortion_upper=dhi,
        base=base,
    )


def qm_mismatch_bounds(
    scale: TabularScale, interval: int, base: str = LOG2
) -> MismatchBounds:
    """Leakage and distortion brackets for quantization run with an estimated
    feasible set that misses ``dstar - d0`` true combinations."""
    tau, d0, d1, ds, s = scale.tau, scale.d0, scale.d1, scale.dstar, scale.s
    m = scale.missed
    bins = qm_privacy_raw(scale, interval)

    u1 = bins * _pow(1 + Fraction(tau, tau + d0 + d1 - 2), m)
    u2 = bins + s - s * _pow(Fraction(d0 + d1 - 1, tau + ds + d1 - 2), m)
    upper = min(u1, u2)

    log2i = math.log2(interval)
    if m <= log2i:
        lower = (s // interval) * _pow(
            1 + Fraction(tau * interval - 2 * s * m,
                         tau * interval + 2 * s * (ds + d1 - 2)), m)
        branch = "few-missed"
    elif m < interval:
        lower = (s // interval) * float(
            1 + (tau * interval - 2 * s * log2i)
            / (tau * interval + 2 * s * (ds + d1 - 2))) ** log2i
        branch = "mid-missed"
    else:
        z = m // interval
        lower = s - (s - bins) * _pow(
            Fraction(d0 + d1 + z - 2) / (Fraction(tau * interval, 2 * s) + d0 + d1 - 1), z)
        branch = "many-missed"

    half = interval // 2
    dlo = Fraction(1, 2) + Fraction((d0 + d1) * half - tau, 2 * tau * (d0 + d1 - 1))
    dhi = Fraction(1, 2) + Fraction((ds + d1) * half - tau, 2 * tau * (ds + d1 - 1))
    return MismatchBounds(
        privacy_lower=log_in_base(lower, base),
        privacy_upper=log_in_base(upper, base),
        lower_branch=branch,
        distortion_lower=dlo,
        distortion_upper=dhi,
        base=base,
    )


@dataclass
class TradeoffPoint:
    mechanism: str
    hyperparam: str
    privacy: float
    distortion: float
    method: str
    privacy_lo: float | None = None
    privacy_hi: float | None = None
    distortion_lo: float | None = None
    distortion_hi: float | None = None

    def as_row(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "hyperparam": self.hyperparam,
            "privacy": self.privacy,
            "privacy_lo": self.privacy_lo,
            "privacy_hi": self.privacy_hi,
            "distortion": self.distortion,
            "distortion_lo": self.distortion_lo,
            "distortion_hi": self.distortion_hi,
            "method": self.method,
        }


def _rr_point(scale: TabularScale, weight: Fraction, base: str) -> TradeoffPoint:
    point = TradeoffPoint(
        mechanism="rr",
        hyperparam=str(Fraction(weight)),
        privacy=rr_privacy(scale, weight, base),
        distortion=float(rr_distortion(scale, weight)),
        method="closed-form",
    )
    if scale.missed > 0:
        b = rr_mismatch_bounds(scale, weight, base)
        point.privacy_lo, point.privacy_hi = b.privacy_lower, b.privacy_upper
        point.distortion_lo = float(b.distortion_lower)
        point.distortion_hi = float(b.distortion_upper)
        point.method = "closed-form+bounds"
    else:
        point.privacy_lo = point.privacy_hi = point.privacy
        point.distortion_lo = point.distortion_hi = point.distortion
    return point


def _qm_point(scale: TabularScale, interval: int, base: str) -> TradeoffPoint:
    point = TradeoffPoint(
        mechanism="qm",
        hyperparam=str(interval),
        privacy=qm_privacy(scale, interval, base),
        distortion=float(qm_distortion(scale, interval)),
        method="closed-form",
    )
    if scale.missed > 0:
        b = qm_mismatch_bounds(scale, interval, base)
        point.privacy_lo, point.privacy_hi = b.privacy_lower, b.privacy_upper
        point.distortion_lo = float(b.distortion_lower)
        point.distortion_hi = float(b.distortion_upper)
        point.method = "closed-form+bounds"
    else:
        point.privacy_lo = point.privacy_hi = point.privacy
        point.distortion_lo = point.distortion_hi = point.distortion
    return point


def tradeoff_sweep(
    scale: TabularScale,
    rr_weights: Sequence[Fraction] = (),
    qm_intervals: Sequence[int] = (),
    base: str = LOG2,
    jobs: int = 1,
) -> list[TradeoffPoint]:
    """Privacy-distortion curve points for both mechanisms.

    Deterministic: results are ordered by mechanism then hyperparameter,
    independent of ``jobs``.
    """
    tasks: list[tuple] = [("rr", Fraction(w)) for w in rr_weights]
    tasks += [("qm", int(i)) for i in qm_intervals]

    def run(task):
        kind, hp = task
        return _rr_point(scale, hp, base) if kind == "rr" else _qm_point(scale, hp, base)

    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]
