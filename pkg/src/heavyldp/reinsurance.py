"""Quota-share strategies for an axis-aligned elliptical risk A = diag(a_1, ..., a_d).

The ceding company retains q_j of line j. Its asymptotic ruin exponent for
|Q S_n / n| > a is ``-(inf_{|x|=a} |A^{-1} Q^{-1} x|)**beta``, so strategies
are compared through the sphere infimum ``a * min_j 1 / (a_j q_j)``.
The reinsurer holds (I - Q) and is compared the same way with (I - Q).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConstraintError, ModelError
from .geometry import min_norm_on_sphere
from .tail_models import TailExponent, rv_index

__all__ = [
    "Context",
    "QuotaMatrix",
    "StrategyReport",
    "premium",
    "ceding_optimal_Q",
    "reinsurer_Q",
    "objective",
    "improvement_check",
    "brute_force_optimal",
]

MAX_BRUTE_DIM = 4


class Context(str, Enum):
    CEDING = "ceding"
    REINSURER = "reinsurer"


@dataclass(frozen=True, eq=False)
class QuotaMatrix:
    """Diagonal quota-share matrix; ``q[j]`` is the share retained by the cedent."""

    q: np.ndarray
    context: Context = Context.CEDING
    share: np.ndarray | None = None  # reinsurer's share 1 - q, kept exact when known

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        ctx = Context(self.context)
        if q.size < 1:
            raise ModelError("quota vector is empty")
        if not np.all(q > 0.0):
            raise ConstraintError("all quotas must be positive")
        if ctx is Context.CEDING:
            if np.any(q > 1.0) or q.max() != 1.0:
                raise ConstraintError("ceding quotas must lie in (0, 1] with at least one equal to 1")
        elif np.any(q >= 1.0):
            raise ConstraintError("reinsurer quotas must lie strictly in (0, 1)")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "context", ctx)
        if ctx is Context.REINSURER:
            share = 1.0 - q if self.share is None else np.array(self.share, dtype=float).reshape(-1)
            if share.shape != q.shape or not np.allclose(share, 1.0 - q, rtol=0, atol=1e-12):
                raise ConstraintError("reinsurer share must equal 1 - q")
            share.setflags(write=False)
            object.__setattr__(self, "share", share)
        elif self.share is not None:
            raise ModelError("share applies to the reinsurer context only")

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.q)

    @property
    def dim(self) -> int:
        return self.q.size

    def held(self) -> np.ndarray:
        """Diagonal of the matrix actually carried by the party in ``context``."""
        return self.q if self.context is Context.CEDING else self.share


@dataclass(frozen=True, eq=False)
class StrategyReport:
    Q: QuotaMatrix
    premium: float
    objective: float
    exponent_before: float
    exponent_after: float
    improved: bool
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "context": self.Q.context.value,
            "q": [float(v) for v in self.Q.q],
            "premium": self.premium,
            "objective": self.objective,
            "exponent_before": self.exponent_before,
            "exponent_after": self.exponent_after,
            "improved": self.improved,
            "status": self.status,
        }

    def to_text(self) -> str:
        rows = [
            ("context", self.Q.context.value),
            ("q", " ".join(f"{v:.12g}" for v in self.Q.q)),
            ("premium", f"{self.premium:.12g}"),
            ("objective", f"{self.objective:.12g}"),
            ("exponent_before", f"{self.exponent_before:.12g}"),
            ("exponent_after", f"{self.exponent_after:.12g}"),
            ("improved", str(self.improved).lower()),
            ("status", self.status),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _diag(A) -> np.ndarray:
    """Diagonal entries of a positive diagonal A (given as matrix or vector)."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        if A.shape[0] != A.shape[1]:
            raise ModelError("A must be square")
        if np.count_nonzero(A - np.diag(np.diag(A))):
            raise ModelError(
                "A must be diagonal (ellipsoid aligned with the axes); rotate the data "
                "first, noting that rotated contracts may not match lines of business"
            )
        A = np.diag(A)
    if A.ndim != 1 or A.size < 1:
        raise ModelError("A must be a diagonal matrix or a vector of its entries")
    if not np.all(A > 0.0):
        raise ModelError("diagonal entries of A must be positive")
    return A


def _vec(x, d: int, what: str) -> np.ndarray:
    x = np.asarray(getattr(x, "q", x), dtype=float).reshape(-1)
    if x.size != d:
        raise ModelError(f"{what} has length {x.size}, expected {d}")
    return x


def premium(Q, p) -> float:
    """Premium 1^T (I - Q) p = sum_j (1 - q_j) p_j."""
    q = np.asarray(getattr(Q, "q", Q), dtype=float).reshape(-1)
    p = _vec(p, q.size, "premium vector")
    if not np.all(p > 0.0):
        raise ModelError("premium rates must be positive")
    return float(np.sum((1.0 - q) * p))


def ceding_optimal_Q(A) -> QuotaMatrix:
    """Q = min_j a_j * A^{-1}: every line is cut down to the least risky one."""
    a = _diag(A)
    q = a.min() / a
    q[a == a.min()] = 1.0
    return QuotaMatrix(q, Context.CEDING)


def reinsurer_Q(A, c: float) -> QuotaMatrix:
    """Q = I - A^{-1} / c, admissible for c > max_j 1 / a_j."""
    a = _diag(A)
    bound = float(np.max(1.0 / a))
    if not c > bound:
        raise ConstraintError(f"c must exceed max_j 1/a_j = {bound!r}, got {c!r}")
    share = 1.0 / (a * c)
    return QuotaMatrix(1.0 - share, Context.REINSURER, share)


def objective(Qdiag, A, a: float) -> float:
    """inf over |x| >= a of |A^{-1} Q^{-1} x| for diagonal A and Q."""
    d = _diag(A)
    q = _vec(Qdiag, d.size, "quota vector")
    if not np.all(q > 0.0):
        raise ModelError("quotas must be positive")
    return min_norm_on_sphere(1.0 / (d * q), a)


def _alpha(beta) -> float:
    return rv_index(beta) if isinstance(beta, TailExponent) else float(beta)


def improvement_check(Q: QuotaMatrix, A, a: float, beta, p=None) -> StrategyReport:
    """Compare the LDP exponents of the unshared and shared risk.

    ``beta`` is the Weibull-regime index (or a :class:`TailExponent`). With a
    zero index the rate is constant off the origin and no quota share can
    change the exponent; the report then carries status
    ``"no_improvement_regime"``. ``p`` defaults to unit premium rates.
    """
    d = _diag(A)
    held = Q.held()
    _vec(held, d.size, "quota vector")
    alpha = _alpha(beta)
    p = np.ones(d.size) if p is None else p
    prem = premium(Q, p)
    obj = objective(held, d, a)
    if alpha == 0.0:
        return StrategyReport(Q, prem, obj, -1.0, -1.0, False, "no_improvement_regime")
    if not 0.0 < alpha < 1.0:
        raise ModelError(f"beta must lie in (0, 1), got {alpha}")
    before = -min_norm_on_sphere(1.0 / d, a) ** alpha
    after = -obj**alpha
    return StrategyReport(Q, prem, obj, before, after, after < before)


def brute_force_optimal(A, a: float, grid_step: float, p) -> QuotaMatrix:
    """Exhaustive search over ceding quotas on the grid {step, 2 step, ..., 1}.

    Test oracle only. Maximizes the objective, then minimizes the premium,
    then prefers the lexicographically smallest quota vector.
    """
    d = _diag(A)
    if d.size > MAX_BRUTE_DIM:
        raise ModelError(f"brute force refused for d = {d.size} > {MAX_BRUTE_DIM}")
    if not 0.0 < grid_step <= 0.25:
        raise ModelError("grid_step must lie in (0, 0.25]")
    levels = round(1.0 / grid_step)
    if not math.isclose(levels * grid_step, 1.0, rel_tol=1e-9):
        raise ModelError("1 / grid_step must be an integer")
    p = _vec(p, d.size, "premium vector")
    grid = np.arange(1, levels + 1) / levels
    cand = np.array(list(itertools.product(grid, repeat=d.size)))
    cand = cand[cand.max(axis=1) == 1.0]
    obj = a * np.min(1.0 / (d * cand), axis=1)
    prem = ((1.0 - cand) * p).sum(axis=1)
    best = obj.max()
    tie = obj >= best * (1.0 - 1e-12)
    pmin = prem[tie].min()
    tie &= prem <= pmin + 1e-12 * max(1.0, abs(pmin))
    # lexsort's last key is primary
    order = np.lexsort(cand[tie].T[::-1])
    return QuotaMatrix(cand[tie][order[0]], Context.CEDING)
