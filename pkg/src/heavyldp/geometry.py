"""Directions on the unit sphere, the ellipsoid map x -> A x, and tail event sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import DomainError, ModelError, UnsupportedSetError

__all__ = [
    "SphereCap",
    "DirectionDistribution",
    "EllipsoidMap",
    "EventSet",
    "BallComplement",
    "Cone",
    "HalfSpace",
    "Mapped",
    "uniform_directions",
    "cap_mixture",
    "project",
    "ellipsoid_map",
    "sample_direction",
    "contains",
    "min_norm_on_sphere",
    "cap_area_fraction",
]

UNIT_TOL = 1e-12


def _unit(v, what="vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ModelError(f"{what} must be a 1-d array")
    n = np.linalg.norm(v)
    if not n > 0.0:
        raise ModelError(f"{what} must be nonzero")
    return v / n


@dataclass(frozen=True, eq=False)
class SphereCap:
    """Closed cap {u : angle(u, center) <= angle}; ``weight`` is used by mixtures only."""

    center: np.ndarray
    angle: float
    weight: float = 1.0

    def __post_init__(self):
        c = _unit(self.center, "cap center")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not 0.0 < self.angle <= math.pi:
            raise ModelError(f"cap angle must lie in (0, pi], got {self.angle}")
        if not self.weight > 0.0:
            raise ModelError(f"cap weight must be positive, got {self.weight}")

    @property
    def dim(self) -> int:
        return self.center.size

    def contains_direction(self, u: np.ndarray) -> np.ndarray:
        return u @ self.center >= math.cos(self.angle) - UNIT_TOL


def cap_area_fraction(dim: int, angle: float) -> float:
    """Fraction of the sphere S^{dim-1} covered by a cap of the given angle."""
    if angle >= math.pi:
        return 1.0
    half = 0.5 * betainc(0.5 * (dim - 1), 0.5, math.sin(min(angle, math.pi / 2)) ** 2)
    return half if angle <= math.pi / 2 else 1.0 - cap_area_fraction(dim, math.pi - angle)


@dataclass(frozen=True, eq=False)
class DirectionDistribution:
    """Law of U on S^{d-1}: uniform, or a mixture of uniform and caps.

    Caps must come in antipodal pairs of equal angle and weight, so the
    mean of U is exactly zero by symmetry. ``base_weight`` keeps full support.
    """

    dim: int
    caps: tuple[SphereCap, ...] = ()
    base_weight: float = 1.0

    def __post_init__(self):
        if self.dim < 2:
            raise ModelError(f"direction dimension must be >= 2, got {self.dim}")
        if not self.base_weight > 0.0:
            raise ModelError("base uniform weight must be positive")
        caps = tuple(self.caps)
        object.__setattr__(self, "caps", caps)
        for cap in caps:
            if cap.dim != self.dim:
                raise ModelError("cap dimension does not match the distribution")
        unmatched = list(range(len(caps)))
        while unmatched:
            i = unmatched.pop(0)
            a = caps[i]
            partner = next(
                (
                    j
                    for j in unmatched
                    if np.allclose(caps[j].center, -a.center, atol=1e-9, rtol=0)
                    and math.isclose(caps[j].angle, a.angle, rel_tol=1e-12)
                    and math.isclose(caps[j].weight, a.weight, rel_tol=1e-12)
                ),
                None,
            )
            if partner is None:
                raise ModelError(
                    "caps must come in antipodal pairs with equal angle and weight "
                    f"(no partner for cap centred at {a.center.tolist()})"
                )
            unmatched.remove(partner)

    @property
    def kind(self) -> str:
        return "cap_mixture" if self.caps else "uniform"

    @property
    def weights(self) -> np.ndarray:
        w = np.array([self.base_weight] + [c.weight for c in self.caps])
        return w / w.sum()


def uniform_directions(dim: int) -> DirectionDistribution:
    return DirectionDistribution(dim)


def cap_mixture(dim: int, caps, base_weight: float = 1.0) -> DirectionDistribution:
    caps = tuple(c if isinstance(c, SphereCap) else SphereCap(*c) for c in caps)
    return DirectionDistribution(dim, caps, base_weight)


def _uniform_sphere(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    z = rng.standard_normal((m, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _sample_cap(rng: np.random.Generator, cap: SphereCap, m: int) -> np.ndarray:
    # rejection from the uniform sphere
    out = np.empty((m, cap.dim))
    filled = 0
    frac = max(cap_area_fraction(cap.dim, cap.angle), 1e-9)
    while filled < m:
        need = m - filled
        batch = min(int(need / frac * 1.2) + 16, 1 << 22)
        u = _uniform_sphere(rng, batch, cap.dim)
        u = u[cap.contains_direction(u)][:need]
        out[filled:filled + len(u)] = u
        filled += len(u)
    return out


def sample_direction(dist: DirectionDistribution, rng: np.random.Generator, size=None):
    """Draw unit vectors; returns shape ``size + (dim,)`` (or ``(dim,)``)."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    m = int(np.prod(shape, dtype=np.int64))
    d = dist.dim
    if not dist.caps:
        u = _uniform_sphere(rng, m, d)
    else:
        comp = np.searchsorted(np.cumsum(dist.weights), rng.random(m), side="right")
        comp = np.minimum(comp, len(dist.caps))
        u = np.empty((m, d))
        base = comp == 0
        u[base] = _uniform_sphere(rng, int(base.sum()), d)
        for j, cap in enumerate(dist.caps, start=1):
            sel = comp == j
            u[sel] = _sample_cap(rng, cap, int(sel.sum()))
    return u.reshape(shape + (d,))


@dataclass(frozen=True, eq=False)
class EllipsoidMap:
    """Symmetric positive definite A defining Lambda(x) = A x."""

    A: np.ndarray
    A_inv: np.ndarray = field(init=False, repr=False)
    sigma_min: float = field(init=False)
    sigma_max: float = field(init=False)
    diagonal: bool = field(init=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ModelError("map matrix must be square")
        if not np.array_equal(A, A.T):
            raise ModelError("map matrix must be exactly symmetric")
        eig = np.linalg.eigvalsh(A)
        if not eig[0] > 1e-10 * abs(eig[-1]) or not eig[-1] > 0.0:
            raise ModelError(f"map matrix must be positive definite, eigenvalues {eig.tolist()}")
        diagonal = bool(np.count_nonzero(A - np.diag(np.diag(A))) == 0)
        if diagonal:
            d = np.diag(A)
            A_inv = np.diag(1.0 / d)
            smin, smax = float(d.min()), float(d.max())
        else:
            A_inv = np.linalg.inv(A)
            A_inv = 0.5 * (A_inv + A_inv.T)
            smin, smax = float(eig[0]), float(eig[-1])
        for arr in (A, A_inv):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "A_inv", A_inv)
        object.__setattr__(self, "sigma_min", smin)
        object.__setattr__(self, "sigma_max", smax)
        object.__setattr__(self, "diagonal", diagonal)

    @classmethod
    def diag(cls, values) -> "EllipsoidMap":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def forward(self, x):
        return np.asarray(x, dtype=float) @ self.A  # A symmetric: x A = (A x^T)^T

    def inverse(self, x):
        return np.asarray(x, dtype=float) @ self.A_inv

    def to_text(self) -> str:
        return ";".join(",".join(repr(float(v)) for v in row) for row in self.A)

    @classmethod
    def from_text(cls, text: str) -> "EllipsoidMap":
        """Parse row-major ``1,0;0,2`` text."""
        try:
            rows = [[float(v) for v in row.split(",")] for row in text.strip().split(";") if row.strip()]
        except ValueError as exc:
            raise ModelError(f"cannot parse matrix {text!r}: {exc}") from None
        if any(len(r) != len(rows) for r in rows):
            raise ModelError(f"matrix {text!r} is not square")
        return cls(np.array(rows))


def _check_dim(x: np.ndarray, d: int):
    if x.shape[-1] != d:
        raise DomainError(f"dimension mismatch: expected {d}, got {x.shape[-1]}")


def project(v, x):
    """Inner product <v, x>; v must be a unit vector."""
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise DomainError("projection direction must have unit norm")
    _check_dim(x, v.size)
    out = x @ v
    return float(out) if np.ndim(out) == 0 else out


def ellipsoid_map(emap: EllipsoidMap, x, direction: str = "forward"):
    x = np.asarray(x, dtype=float)
    _check_dim(x, emap.dim)
    if direction == "forward":
        return emap.forward(x)
    if direction == "inverse":
        return emap.inverse(x)
    raise ModelError(f"direction must be 'forward' or 'inverse', got {direction!r}")


# --- event sets -------------------------------------------------------------------


class EventSet:
    """Base class of tail events; ``contains`` works on arrays of shape (..., d)."""

    def contains(self, x) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class BallComplement(EventSet):
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ModelError("ball radius must be positive")

    def contains(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1) > self.radius


@dataclass(frozen=True, eq=False)
class Cone(EventSet):
    """{x : |x| > radius, x/|x| in the union of caps}."""

    radius: float
    caps: tuple[SphereCap, ...]

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ModelError("cone radius must be positive")
        caps = tuple(c if isinstance(c, SphereCap) else SphereCap(*c) for c in self.caps)
        if not caps:
            raise ModelError("cone needs at least one cap")
        if len({c.dim for c in caps}) != 1:
            raise ModelError("cone caps disagree in dimension")
        object.__setattr__(self, "caps", caps)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        out = r > self.radius
        hit = np.zeros(r.shape, dtype=bool)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = x / r[..., None]
            for cap in self.caps:
                hit |= cap.contains_direction(u)
        return out & hit


@dataclass(frozen=True, eq=False)
class HalfSpace(EventSet):
    v: np.ndarray
    level: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            v = _unit(v, "half-space normal")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        if not self.level > 0.0:
            raise ModelError("half-space level must be positive")

    def contains(self, x):
        return np.asarray(x, dtype=float) @ self.v > self.level


@dataclass(frozen=True, eq=False)
class Mapped(EventSet):
    """Image of ``inner`` under the map: x is in the set iff A^{-1} x is in ``inner``."""

    inner: EventSet
    map: EllipsoidMap

    def __post_init__(self):
        if isinstance(self.inner, Mapped):
            raise UnsupportedSetError("nested mapped sets are not supported")

    def contains(self, x):
        return self.inner.contains(self.map.inverse(x))


def contains(event: EventSet, x):
    out = event.contains(x)
    return bool(out) if np.ndim(out) == 0 else out


def min_norm_on_sphere(M, a: float) -> float:
    """inf over |x| = a of |M x|, i.e. a * sigma_min(M)."""
    if not a > 0.0:
        raise DomainError("sphere radius must be positive")
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = np.diag(M)
    if np.count_nonzero(M - np.diag(np.diag(M))) == 0:
        return a * float(np.min(np.abs(np.diag(M))))
    return a * float(np.linalg.svd(M, compute_uv=False)[-1])
