"""Rate function I, its infima over event sets, and first-order log asymptotes.

With alpha the regular-variation index of h, the rate function is
``I(x) = |x|**alpha`` for alpha > 0, and ``I(x) = 1`` off the origin for
alpha = 0 (lognormal type). Infima over images of sets under x -> A x are
taken over the preimage, following the contraction principle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .errors import ModelError, UnsupportedSetError
from .geometry import BallComplement, Cone, EllipsoidMap, EventSet, HalfSpace, Mapped, SphereCap
from .tail_models import TailExponent, h_eval, rv_index

__all__ = [
    "RateFunction",
    "rate_I",
    "inf_rate",
    "walk_inf_rate",
    "ldp_bounds",
    "theoretical_log_asymptote",
    "min_inverse_norm_on_caps",
]

BOUNDARY_GRID = 4096
REFINE_XTOL = 1e-10


@dataclass(frozen=True)
class RateFunction:
    alpha: float
    exponent: TailExponent | None = None

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise ModelError(f"alpha must be nonnegative, got {self.alpha}")

    @classmethod
    def from_exponent(cls, exp: TailExponent) -> "RateFunction":
        return cls(rv_index(exp), exp)

    @property
    def good(self) -> bool:
        return self.alpha > 0.0

    def __call__(self, x):
        return rate_I(self, x)


def rate_I(rf: RateFunction, x):
    """I(x) for x of shape (d,) or (..., d)."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    if rf.alpha > 0.0:
        out = r**rf.alpha
    else:
        out = np.where(r > 0.0, 1.0, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _radial(rf: RateFunction, dist: float) -> float:
    """inf of I over a set whose closest point to the origin is at ``dist`` > 0."""
    return dist**rf.alpha if rf.alpha > 0.0 else 1.0


def inf_rate(rf: RateFunction, event: EventSet) -> float:
    """Closed-form (or deterministic numeric) infimum of I over ``event``."""
    if isinstance(event, (BallComplement, Cone)):
        return _radial(rf, event.radius)
    if isinstance(event, HalfSpace):
        return _radial(rf, event.level)
    if isinstance(event, Mapped):
        inner, emap = event.inner, event.map
        if isinstance(inner, Mapped):
            raise UnsupportedSetError("nested mapped sets are not supported")
        if isinstance(inner, BallComplement):
            return _radial(rf, inner.radius / emap.sigma_max)
        if isinstance(inner, HalfSpace):
            return _radial(rf, inner.level / float(np.linalg.norm(emap.A @ inner.v)))
        if isinstance(inner, Cone):
            m = min_inverse_norm_on_caps(emap.A, emap.A_inv, inner.caps)
            return _radial(rf, inner.radius * m)
    raise UnsupportedSetError(f"unsupported event set {type(event).__name__}")


def walk_inf_rate(rf: RateFunction, event: EventSet, walk_map: EllipsoidMap | None = None) -> float:
    """inf of I over the preimage of ``event`` for the walk with increments Lambda_w(R U).

    ``Mapped(inner, L)`` contains x iff L^{-1} x lies in ``inner``, so as a
    set it is L(inner). For a spherical walk the relevant preimage is then
    L(inner) itself, which is the preimage of ``inner`` under L^{-1}; for a
    walk mapped by the same L it is just ``inner``.
    """
    if walk_map is None:
        if isinstance(event, Mapped):
            return inf_rate(rf, Mapped(event.inner, EllipsoidMap(event.map.A_inv)))
        return inf_rate(rf, event)
    if isinstance(event, Mapped):
        if np.array_equal(event.map.A, walk_map.A):
            return inf_rate(rf, event.inner)
        raise UnsupportedSetError("mapped set and walk use different matrices")
    return inf_rate(rf, Mapped(event, walk_map))


def ldp_bounds(rf: RateFunction, event: EventSet) -> tuple[float, float]:
    """(-inf over the interior, -inf over the closure) of I.

    For every supported variant the closure only adds boundary points at
    positive distance from the origin, where neither infimum changes.
    """
    value = -inf_rate(rf, event)
    return value, value


def theoretical_log_asymptote(exp: TailExponent, n: float, a: float) -> float:
    """-h(n a): first-order value of log P(|S_n| > n a)."""
    if not n > 0 or not a > 0.0:
        raise ModelError("n and a must be positive")
    return -h_eval(exp, n * a)


# --- directional minimisation for mapped cones ------------------------------------------


def _orthonormal_complement(c: np.ndarray) -> np.ndarray:
    """Rows form an orthonormal basis of the hyperplane orthogonal to ``c``."""
    q, _ = np.linalg.qr(np.column_stack([c, np.eye(c.size)]))
    return q[:, 1:c.size].T


def _cap_boundary_min(f, cap: SphereCap) -> float:
    d = cap.dim
    c = cap.center
    cos_a, sin_a = math.cos(cap.angle), math.sin(cap.angle)
    basis = _orthonormal_complement(c)

    def point(w):
        return cos_a * c + sin_a * w

    if d == 2:
        w = basis[0]
        return min(f(point(w)), f(point(-w)))
    if d == 3:
        e1, e2 = basis

        def g(phi):
            return f(point(math.cos(phi) * e1 + math.sin(phi) * e2))

        phis = np.arange(BOUNDARY_GRID) * (2.0 * math.pi / BOUNDARY_GRID)
        vals = np.array([g(p) for p in phis])
        i = int(np.argmin(vals))
        h = 2.0 * math.pi / BOUNDARY_GRID
        res = minimize_scalar(g, bounds=(phis[i] - h, phis[i] + h), method="bounded",
                              options={"xatol": REFINE_XTOL})
        return float(min(vals[i], res.fun))
    # higher dimensions: deterministic Sobol directions on S^{d-2}, then local refinement
    sob = qmc.Sobol(d - 1, scramble=True, seed=0).random_base2(int(math.log2(BOUNDARY_GRID)))
    z = _normal.ppf(np.clip(sob, 1e-12, 1 - 1e-12))
    nz = np.linalg.norm(z, axis=1)
    z = z[nz > 1e-9] / nz[nz > 1e-9, None]

    def g(zz):
        ww = zz @ basis
        return f(point(ww / np.linalg.norm(ww)))

    vals = np.array([g(zz) for zz in z])
    i = int(np.argmin(vals))
    res = minimize(g, z[i], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
    return float(min(vals[i], res.fun))


def min_inverse_norm_on_caps(A: np.ndarray, A_inv: np.ndarray, caps) -> float:
    """min over unit u in the union of closed caps of |A^{-1} u|.

    The unconstrained minimisers are the unit vectors of the top eigenspace of A;
    when a cap reaches that eigenspace the minimum is 1/sigma_max(A), otherwise it
    sits on the cap boundary.
    """
    eig, vec = np.linalg.eigh(A)
    top = vec[:, eig >= eig[-1] * (1.0 - 1e-12)]

    def f(u):
        return float(np.linalg.norm(A_inv @ u))

    best = math.inf
    for cap in caps:
        if cap.angle >= math.pi:
            return 1.0 / eig[-1]
        reach = float(np.linalg.norm(top.T @ cap.center))
        if reach >= math.cos(cap.angle) - 1e-15:
            return 1.0 / eig[-1]
        best = min(best, _cap_boundary_min(f, cap))
    return best
