"""Tail exponents h and radius distributions with P(R > x) = min(1, exp(-h(x))).

Four families are built in:

* ``weibull``    h(x) = c * x**beta,       0 < beta < 1
* ``lognormal``  h(x) = (log x)**p,        p > 1, h = 0 on (0, 1)
* ``stretched``  h(x) = l * x**beta,       constant slowly varying level l
* ``piecewise``  linear interpolation of knots (x_i, h_i), linear
                 extrapolation with the end slopes

All objects are immutable; samplers take an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

import numpy as np

from .errors import DomainError, IndexUnknownError, ModelError

__all__ = [
    "Family",
    "TailExponent",
    "RadiusDistribution",
    "A1Report",
    "weibull",
    "lognormal_type",
    "stretched_exp",
    "piecewise_concave",
    "h_eval",
    "rv_index",
    "check_assumption_A1",
    "normalize_h",
    "radius_tail",
    "sample_radius",
    "subexp_ratio",
]

BISECTION_TOL = 1e-12


class Family(str, Enum):
    WEIBULL = "weibull"
    LOGNORMAL = "lognormal"
    STRETCHED = "stretched"
    PIECEWISE = "piecewise"


@dataclass(frozen=True)
class TailExponent:
    """The function h in -log P(R > x) ~ h(x).

    Use the factory functions (:func:`weibull`, :func:`lognormal_type`, ...)
    rather than the constructor. ``knee`` is set only by :func:`normalize_h`:
    a triple ``(t, intercept, slope)`` meaning h is replaced by
    ``intercept + slope * x`` on ``[0, t)``.
    """

    family: Family
    c: float = 1.0
    beta: float | None = None
    p: float | None = None
    l: float = 1.0
    knots: tuple[tuple[float, float], ...] = ()
    alpha: float | None = None
    knee: tuple[float, float, float] | None = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in (Family.WEIBULL, Family.STRETCHED):
            if self.beta is None or not 0.0 < self.beta < 1.0:
                raise ModelError(f"{fam.value}: beta must lie in (0, 1), got {self.beta}")
            scale = self.c if fam is Family.WEIBULL else self.l
            if not scale > 0.0:
                raise ModelError(f"{fam.value}: scale must be positive, got {scale}")
        elif fam is Family.LOGNORMAL:
            if self.p is None or not self.p > 1.0:
                raise ModelError(f"lognormal: p must exceed 1, got {self.p}")
        else:
            knots = tuple((float(x), float(h)) for x, h in self.knots)
            if len(knots) < 2:
                raise ModelError("piecewise: need at least two knots")
            xs = [k[0] for k in knots]
            if xs[0] < 0.0 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise ModelError("piecewise: knot abscissae must be nonnegative and increasing")
            object.__setattr__(self, "knots", knots)
            if self.alpha is not None and self.alpha < 0.0:
                raise ModelError(f"piecewise: declared alpha must be >= 0, got {self.alpha}")

    @property
    def x0(self) -> float:
        """Point beyond which h is concave."""
        if self.knee is not None:
            return 0.0
        if self.family is Family.LOGNORMAL:
            # (log x)^p'' = p (log x)^(p-2) (p - 1 - log x) / x^2
            return math.exp(self.p - 1.0)
        if self.family is Family.PIECEWISE:
            return self.knots[0][0]
        return 0.0

    @property
    def normalized(self) -> bool:
        if self.knee is not None or self.family in (Family.WEIBULL, Family.STRETCHED):
            return True
        return self.family is Family.PIECEWISE and self.knots[0][0] == 0.0 and self.knots[0][1] >= 0.0

    def __call__(self, x):
        return h_eval(self, x)

    # flat key-value serialization -------------------------------------------------

    def to_config(self) -> dict[str, str]:
        out = {"family": self.family.value}
        if self.family is Family.WEIBULL:
            out.update(c=repr(self.c), beta=repr(self.beta))
        elif self.family is Family.STRETCHED:
            out.update(l=repr(self.l), beta=repr(self.beta))
        elif self.family is Family.LOGNORMAL:
            out.update(p=repr(self.p))
        else:
            out["knots"] = ",".join(f"{x!r}:{h!r}" for x, h in self.knots)
            if self.alpha is not None:
                out["alpha"] = repr(self.alpha)
        return out

    @classmethod
    def from_config(cls, section: Mapping[str, str]) -> "TailExponent":
        allowed = {
            Family.WEIBULL: {"c", "beta"},
            Family.STRETCHED: {"l", "beta"},
            Family.LOGNORMAL: {"p"},
            Family.PIECEWISE: {"knots", "alpha"},
        }
        try:
            fam = Family(section["family"].strip().lower())
        except (KeyError, ValueError) as exc:
            raise ModelError(f"radius: unknown or missing family: {exc}") from None
        extra = set(section) - allowed[fam] - {"family"}
        if extra:
            raise ModelError(f"radius: unknown keys for {fam.value}: {sorted(extra)}")
        if fam is Family.WEIBULL:
            return weibull(float(section.get("c", 1.0)), _req_float(section, "beta"))
        if fam is Family.STRETCHED:
            return stretched_exp(_req_float(section, "beta"), float(section.get("l", 1.0)))
        if fam is Family.LOGNORMAL:
            return lognormal_type(_req_float(section, "p"))
        knots = []
        for pair in section.get("knots", "").split(","):
            if pair.strip():
                x, h = pair.split(":")
                knots.append((float(x), float(h)))
        alpha = section.get("alpha")
        return piecewise_concave(knots, None if alpha is None else float(alpha))


def _req_float(section: Mapping[str, str], key: str) -> float:
    if key not in section:
        raise ModelError(f"radius: missing key {key!r}")
    return float(section[key])


def weibull(c: float, beta: float) -> TailExponent:
    return TailExponent(Family.WEIBULL, c=float(c), beta=float(beta))


def lognormal_type(p: float) -> TailExponent:
    return TailExponent(Family.LOGNORMAL, p=float(p))


def stretched_exp(beta: float, l: float) -> TailExponent:
    return TailExponent(Family.STRETCHED, beta=float(beta), l=float(l))


def piecewise_concave(knots, alpha: float | None = None) -> TailExponent:
    """Piecewise-linear exponent through ``knots``.

    Concavity is *not* enforced here so that :func:`check_assumption_A1` can
    report violations; sampling only needs h nondecreasing with a positive final
    slope.
    """
    return TailExponent(Family.PIECEWISE, knots=tuple(knots), alpha=alpha)


# --- evaluation -------------------------------------------------------------------


def _base_h(exp: TailExponent, x: np.ndarray) -> np.ndarray:
    fam = exp.family
    if fam is Family.WEIBULL:
        return exp.c * x**exp.beta
    if fam is Family.STRETCHED:
        return exp.l * x**exp.beta
    if fam is Family.LOGNORMAL:
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(np.where(x >= 1.0, x, 1.0))
        return lx**exp.p
    xs = np.array([k[0] for k in exp.knots])
    hs = np.array([k[1] for k in exp.knots])
    s_first = (hs[1] - hs[0]) / (xs[1] - xs[0])
    s_last = (hs[-1] - hs[-2]) / (xs[-1] - xs[-2])
    out = np.interp(x, xs, hs)
    out = np.where(x < xs[0], hs[0] + s_first * (x - xs[0]), out)
    return np.where(x > xs[-1], hs[-1] + s_last * (x - xs[-1]), out)


def h_eval(exp: TailExponent, x):
    """Evaluate h at ``x`` (scalar or array).

    x must be positive; ``x = 0`` is accepted for exponents that are defined
    at the origin (normalized ones and the power families).
    """
    arr = np.asarray(x, dtype=float)
    bad = arr < 0.0 if exp.normalized else arr <= 0.0
    if np.any(bad) or np.any(np.isnan(arr)):
        raise DomainError(f"h is defined for x > 0 only, got {x!r}")
    out = _h(exp, arr)
    return float(out) if out.ndim == 0 else out


def _h(exp: TailExponent, x: np.ndarray) -> np.ndarray:
    out = _base_h(exp, x)
    if exp.knee is not None:
        t, b, s = exp.knee
        out = np.where(x < t, b + s * x, out)
    return out


def rv_index(exp: TailExponent) -> float:
    """Regular-variation index alpha with h(ax)/h(x) -> a**alpha."""
    if exp.family in (Family.WEIBULL, Family.STRETCHED):
        return exp.beta
    if exp.family is Family.LOGNORMAL:
        return 0.0
    if exp.alpha is None:
        raise IndexUnknownError("index unknown: piecewise exponent without a declared alpha")
    return exp.alpha


# --- shape checks -----------------------------------------------------------------


@dataclass(frozen=True)
class A1Report:
    """Outcome of :func:`check_assumption_A1`.

    Each ``*_witness`` is the abscissa of the first violation, or ``None``.
    """

    nondecreasing: bool
    concave: bool
    growth: bool
    nondecreasing_witness: float | None = None
    concave_witness: float | None = None
    growth_witness: float | None = None
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return self.nondecreasing and self.concave and self.growth


def check_assumption_A1(exp: TailExponent, grid) -> A1Report:
    """Check monotonicity, concavity beyond x0, and the o(x) / log-growth trend.

    The growth test asks h(x)/x to be strictly decreasing and h(x)/log(x)
    strictly increasing over the upper half of the grid.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 8:
        raise ModelError("grid needs at least 8 points")
    if np.any(g <= 0.0) or np.any(np.diff(g) <= 0.0):
        raise ModelError("grid must be positive and strictly increasing")
    if g[-1] / g[0] < 1e3 * (1 - 1e-12):
        raise ModelError("grid must span at least three orders of magnitude")

    h = np.asarray(h_eval(exp, g))
    rtol = 1e-12
    dec = np.nonzero(np.diff(h) < -rtol * np.maximum(np.abs(h[:-1]), 1.0))[0]
    mono_w = float(g[dec[0] + 1]) if dec.size else None

    # knots are where a piecewise exponent can bend, so they always join the grid
    pts = g
    if exp.family is Family.PIECEWISE:
        kx = np.array([k[0] for k in exp.knots])
        kx = kx[(kx > g[0]) & (kx < g[-1])]
        pts = np.union1d(g, kx)
    pts = pts[pts >= exp.x0]
    conc_w = None
    if pts.size >= 3:
        hp = np.asarray(h_eval(exp, pts))
        slopes = np.diff(hp) / np.diff(pts)
        up = np.nonzero(slopes[1:] > slopes[:-1] + rtol * np.maximum(np.abs(slopes[:-1]), 1e-300))[0]
        if up.size:
            conc_w = float(pts[up[0] + 1])

    top = g[g.size // 2:]
    ht = h[g.size // 2:]
    r_lin = ht / top
    growth_w = None
    bad = np.nonzero(np.diff(r_lin) >= 0.0)[0]
    if bad.size:
        growth_w = float(top[bad[0] + 1])
    keep = top > 1.0
    r_log = ht[keep] / np.log(top[keep])
    bad = np.nonzero(np.diff(r_log) <= 0.0)[0]
    if bad.size and growth_w is None:
        growth_w = float(top[keep][bad[0] + 1])
    if keep.sum() < 2 and growth_w is None:
        growth_w = float(top[0])

    return A1Report(
        nondecreasing=mono_w is None,
        concave=conc_w is None,
        growth=growth_w is None,
        nondecreasing_witness=mono_w,
        concave_witness=conc_w,
        growth_witness=growth_w,
        details={"h_over_x": r_lin.tolist(), "h_over_log": r_log.tolist()},
    )


def normalize_h(exp: TailExponent) -> TailExponent:
    """Replace h near the origin by a line so the result is concave on [0, inf).

    The line is the tangent at the smallest point t >= x0 whose tangent meets
    the vertical axis at a nonnegative height; when that height is zero the
    piece passes through the origin. The result is nondecreasing, concave,
    equal to h on [t, inf) and hence subadditive.
    """
    fam = exp.family
    if exp.knee is not None or fam in (Family.WEIBULL, Family.STRETCHED):
        return exp
    if fam is Family.LOGNORMAL:
        # tangent of (log x)^p through the origin touches at x = e^p
        p = exp.p
        t = math.exp(p)
        return replace(exp, knee=(t, 0.0, p**p / t))

    xs = [k[0] for k in exp.knots]
    hs = [k[1] for k in exp.knots]
    slopes = [(hs[i + 1] - hs[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)]
    intercept = hs[0] - slopes[0] * xs[0]
    if intercept >= 0.0:
        new = [(0.0, intercept)] + list(exp.knots)
        if xs[0] == 0.0:
            new = list(exp.knots)
    else:
        # first knot where the right slope no longer exceeds the chord from 0
        k = next(
            (i for i in range(1, len(xs)) if slopes[min(i, len(slopes) - 1)] * xs[i] <= hs[i]),
            None,
        )
        if k is None:
            raise ModelError("piecewise exponent has no supporting line through a nonnegative intercept")
        new = [(0.0, 0.0)] + list(exp.knots[k:])
    return piecewise_concave(new, exp.alpha)


# --- radius law -------------------------------------------------------------------


@dataclass(frozen=True)
class RadiusDistribution:
    """Law of R with the exact tail P(R > x) = min(1, exp(-h(x)))."""

    exponent: TailExponent

    @property
    def x_min(self) -> float:
        """Left end of the region where the tail is exp(-h) < 1."""
        fam = self.exponent.family
        if fam is Family.LOGNORMAL and self.exponent.knee is None:
            return 1.0
        if fam in (Family.WEIBULL, Family.STRETCHED):
            return 0.0
        return float(_invert(self.exponent, np.zeros(1))[0])

    def tail(self, x):
        return radius_tail(self, x)


def radius_tail(dist: RadiusDistribution, x):
    """P(R > x) = min(1, exp(-h(x)))."""
    h = np.asarray(h_eval(dist.exponent, x))
    out = np.exp(-np.maximum(h, 0.0))
    return float(out) if out.ndim == 0 else out


def sample_radius(dist: RadiusDistribution, rng: np.random.Generator, size=None):
    """Inverse-transform draw(s) of R.

    Closed form for the power families and lognormal type; vectorized bisection
    on h for piecewise exponents.
    """
    u = 1.0 - rng.random(size)  # in (0, 1]
    e = -np.log(u)
    r = _invert(dist.exponent, np.atleast_1d(e)).reshape(np.shape(e))
    return float(r) if size is None else r


def _invert(exp: TailExponent, e: np.ndarray) -> np.ndarray:
    """Smallest x >= 0 with h(x) >= e, elementwise."""
    if exp.knee is not None:
        t, b, s = exp.knee
        base = replace(exp, knee=None)
        low = np.maximum((e - b) / s, 0.0)
        above = e >= b + s * t
        out = low.copy()
        if np.any(above):
            out[above] = _invert(base, e[above])
        return out
    fam = exp.family
    if fam is Family.WEIBULL:
        return (e / exp.c) ** (1.0 / exp.beta)
    if fam is Family.STRETCHED:
        return (e / exp.l) ** (1.0 / exp.beta)
    if fam is Family.LOGNORMAL:
        return np.exp(e ** (1.0 / exp.p))
    return _bisect(exp, e)


def _bisect(exp: TailExponent, e: np.ndarray) -> np.ndarray:
    xs = exp.knots
    s_last = (xs[-1][1] - xs[-2][1]) / (xs[-1][0] - xs[-2][0])
    if s_last <= 0.0:
        raise DomainError("piecewise exponent needs a positive final slope to be sampled")
    lo = np.zeros_like(e)
    hi = np.full_like(e, max(xs[-1][0], 1.0))
    while True:
        short = _h(exp, hi) < e
        if not short.any():
            break
        hi[short] *= 2.0
    done = _h(exp, lo) >= e
    hi[done] = 0.0
    for _ in range(2000):
        width = hi - lo
        live = width > np.maximum(BISECTION_TOL, 4.0 * np.spacing(hi))
        if not live.any():
            break
        mid = 0.5 * (lo + hi)
        go_left = _h(exp, mid) >= e
        hi = np.where(live & go_left, mid, hi)
        lo = np.where(live & ~go_left, mid, lo)
    return hi


def subexp_ratio(dist: RadiusDistribution, x: float) -> float:
    """P(R > x - g(x)) / P(R > x) with g(x) = sqrt(x / h(x)).

    Tends to 1 for the laws considered here; this is the sufficient
    condition for subexponentiality evaluated at a finite x.
    """
    hx = h_eval(dist.exponent, x)
    if not hx > 0.0:
        raise DomainError(f"h({x}) must be positive")
    g = math.sqrt(x / hx)
    if g >= x:
        raise DomainError(f"x = {x} too small: g(x) = {g} >= x")
    hy = h_eval(dist.exponent, x - g)
    # log-tail difference avoids underflow of exp(-h) at large x
    return math.exp(max(hx, 0.0) - max(hy, 0.0))
