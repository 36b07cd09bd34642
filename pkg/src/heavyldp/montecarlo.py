"""Plain Monte Carlo estimates of walk tail probabilities.

Estimates are normalized by the theoretical scale: ``log p_hat / h(n a)`` for
exceedances of |S_n| or <v, S_n>, and ``log p_hat / h(n)`` for {S_n / n in B}.
At finite n these ratios carry a bias of order log(n) / h(n a) (and, at
moderate n, the Gaussian bulk of S_n); no correction is applied.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np

from .errors import ModelError
from .geometry import EventSet
from .tail_models import Family, TailExponent, h_eval
from .walk import IncrementSpec, iter_path_chunks, map_shards

__all__ = [
    "Norm",
    "Projection",
    "TailEstimate",
    "BigJumpResult",
    "ExperimentRow",
    "wilson_interval",
    "estimate_exceedance",
    "estimate_set_probability",
    "big_jump_diagnostic",
]

log = logging.getLogger(__name__)

MIN_TRIALS = 1000
MIN_HITS_FOR_RATIO = 10
Z95 = 1.959963984540054


@dataclass(frozen=True)
class Norm:
    """Functional |S_n|."""


@dataclass(frozen=True, eq=False)
class Projection:
    """Functional <v, S_n>."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ModelError("projection direction must be a unit vector")
        object.__setattr__(self, "v", v)


def wilson_interval(hits: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ModelError("trials must be positive")
    p = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    # the endpoints are exact at p = 0 and p = 1; rounding must not cross p
    lo = 0.0 if hits == 0 else min(p, max(0.0, centre - half))
    hi = 1.0 if hits == trials else max(p, min(1.0, centre + half))
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    """Monte Carlo tail probability with its normalized log ratio.

    ``scale`` is the normalizer (h(n a) or h(n)). ``ratio`` is ``None`` when
    fewer than 10 hits were seen; ``ratio_high`` is then the one-sided bound.
    With zero hits the upper probability bound is the rule of three, 3/trials.
    """

    n: int
    a: float
    trials: int
    hits: int
    scale: float
    p_hat: float
    log_p: float | None
    ratio: float | None
    ci_low: float
    ci_high: float
    ratio_low: float | None
    ratio_high: float | None
    status: str = "ok"

    @classmethod
    def from_counts(cls, n: int, a: float, trials: int, hits: int, scale: float) -> "TailEstimate":
        if not 0 <= hits <= trials:
            raise ModelError("hits must lie in [0, trials]")
        p_hat = hits / trials
        if hits == 0:
            hi = 3.0 / trials
            return cls(n, a, trials, 0, scale, 0.0, None, None, 0.0, hi, None,
                       math.log(hi) / scale if scale > 0 else None, "zero_hits")
        lo, hi = wilson_interval(hits, trials)
        log_p = math.log(p_hat)
        r_hi = math.log(hi) / scale if hi > 0 and scale > 0 else None
        if hits < MIN_HITS_FOR_RATIO or not scale > 0:
            return cls(n, a, trials, hits, scale, p_hat, log_p, None, lo, hi, None, r_hi, "few_hits")
        r_lo = math.log(lo) / scale if lo > 0 else -math.inf
        return cls(n, a, trials, hits, scale, p_hat, log_p, log_p / scale, lo, hi, r_lo, r_hi)


@dataclass(frozen=True)
class BigJumpResult:
    n: int
    a: float
    eps: float
    trials: int
    exceed_count: int
    bigjump_count: int
    conditional_freq: float | None
    status: str = "ok"


def _scale(exp: TailExponent, x: float) -> float:
    return float(h_eval(exp, x))


def _check(trials: int, a: float | None = None):
    if trials < MIN_TRIALS:
        raise ModelError(f"trials must be at least {MIN_TRIALS}")
    if a is not None and not a > 0.0:
        raise ModelError("threshold a must be positive")


def estimate_exceedance(
    spec: IncrementSpec,
    functional,
    n: int,
    a: float,
    trials: int,
    seed: int,
    shards: int = 1,
    rng_name: str = "pcg64",
) -> TailEstimate:
    """Frequency of {|S_n| > n a} (``Norm()``) or {<v, S_n> > n a} (``Projection(v)``)."""
    _check(trials, a)
    v = functional.v if isinstance(functional, Projection) else None

    def count(rng, size):
        hits = 0
        for batch in iter_path_chunks(spec, n, size, rng):
            stat = batch.s_n @ v if v is not None else np.linalg.norm(batch.s_n, axis=1)
            hits += int(np.count_nonzero(stat > n * a))
        return hits

    hits = sum(map_shards(count, trials, seed, shards, rng_name))
    return TailEstimate.from_counts(n, a, trials, hits, _scale(spec.radius.exponent, n * a))


def estimate_set_probability(
    spec: IncrementSpec,
    event: EventSet,
    n: int,
    trials: int,
    seed: int,
    shards: int = 1,
    rng_name: str = "pcg64",
) -> TailEstimate:
    """Frequency of {S_n / n in event}, with ratio log p_hat / h(n)."""
    _check(trials)

    def count(rng, size):
        hits = 0
        for batch in iter_path_chunks(spec, n, size, rng):
            hits += int(np.count_nonzero(event.contains(batch.s_n / n)))
        return hits

    hits = sum(map_shards(count, trials, seed, shards, rng_name))
    return TailEstimate.from_counts(n, math.nan, trials, hits, _scale(spec.radius.exponent, n))


def big_jump_diagnostic(
    spec: IncrementSpec,
    v,
    n: int,
    a: float,
    eps: float,
    trials: int,
    seed: int,
    shards: int = 1,
    rng_name: str = "pcg64",
) -> BigJumpResult:
    """Among paths with <v, S_n> > n a, the share whose largest <v, X_i> exceeds (1 - eps) n a."""
    _check(trials, a)
    if not 0.0 < eps <= 1.0:
        raise ModelError("eps must lie in (0, 1]")
    v = Projection(v).v
    cut = (1.0 - eps) * n * a

    def count(rng, size):
        exceed = jumps = 0
        for batch in iter_path_chunks(spec, n, size, rng, monitor_v=v):
            hit = batch.s_n @ v > n * a
            exceed += int(hit.sum())
            jumps += int(np.count_nonzero(hit & (batch.max_proj > cut)))
        return exceed, jumps

    parts = map_shards(count, trials, seed, shards, rng_name)
    exceed = sum(p[0] for p in parts)
    jumps = sum(p[1] for p in parts)
    if exceed == 0:
        return BigJumpResult(n, a, eps, trials, 0, 0, None, "unavailable")
    if exceed < 30:
        log.warning("big-jump diagnostic based on only %d exceedances", exceed)
    return BigJumpResult(n, a, eps, trials, exceed, jumps, jumps / exceed)


# --- delimited output -----------------------------------------------------------------


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _parse(s: str):
    return None if s == "" else float(s)


@dataclass(frozen=True)
class ExperimentRow:
    """One CSV line per experiment; ``theory`` is -1 or -inf_rate(set)."""

    COLUMNS: ClassVar[tuple[str, ...]] = (
        "family", "beta_or_p", "d", "n", "a", "trials", "hits", "p_hat", "ratio",
        "ci_ratio_low", "ci_ratio_high", "theory",
    )
    family: str = ""
    beta_or_p: float | None = None
    d: int = 0
    n: int = 0
    a: float | None = None
    trials: int = 0
    hits: int = 0
    p_hat: float = 0.0
    ratio: float | None = None
    ci_ratio_low: float | None = None
    ci_ratio_high: float | None = None
    theory: float = -1.0

    @classmethod
    def from_estimate(cls, est: TailEstimate, exp: TailExponent, d: int, theory: float) -> "ExperimentRow":
        shape = exp.p if exp.family is Family.LOGNORMAL else exp.beta
        a = None if math.isnan(est.a) else est.a
        return cls(exp.family.value, shape, d, est.n, a, est.trials, est.hits, est.p_hat,
                   est.ratio, est.ratio_low, est.ratio_high, theory)

    def to_row(self) -> list[str]:
        return [
            self.family, _fmt(self.beta_or_p), str(self.d), str(self.n), _fmt(self.a),
            str(self.trials), str(self.hits), _fmt(self.p_hat), _fmt(self.ratio),
            _fmt(self.ci_ratio_low), _fmt(self.ci_ratio_high), _fmt(self.theory),
        ]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.COLUMNS}

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "ExperimentRow":
        if len(row) != 12:
            raise ModelError(f"expected 12 columns, got {len(row)}")
        f, b, d, n, a, t, h, p, r, lo, hi, th = row
        return cls(f, _parse(b), int(d), int(n), _parse(a), int(t), int(h), float(p),
                   _parse(r), _parse(lo), _parse(hi), float(th))
