"""Increments X = R U (optionally mapped by A) and random walks S_n = X_1 + ... + X_n.

Reproducibility contract
------------------------
* Every draw consumes the generator radius-first, then direction, for the
  whole block of increments being generated.
* Paths are generated in blocks of :func:`chunk_paths` paths; results are a pure
  function of ``(spec, n, paths, generator state)``.
* Sharded runs give shard ``k`` the seed ``shard_seed(seed, k)``, defined as
  ``splitmix64(splitmix64(seed) XOR k)``, and concatenate shards in index
  order, so output depends on the shard count but never on scheduling.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, TypeVar

import numpy as np

from .errors import ModelError
from .geometry import DirectionDistribution, EllipsoidMap, sample_direction
from .tail_models import RadiusDistribution, sample_radius

__all__ = [
    "RNG_ALGORITHMS",
    "IncrementSpec",
    "WalkSample",
    "WalkBatch",
    "PathRecord",
    "splitmix64",
    "shard_seed",
    "make_rng",
    "map_shards",
    "sample_increment",
    "sample_increments",
    "simulate_sum",
    "simulate_paths",
    "iter_path_chunks",
    "simulate_sharded",
    "chunk_paths",
]

MASK64 = (1 << 64) - 1
BLOCK_INCREMENTS = 1 << 20

RNG_ALGORITHMS = {
    "pcg64": np.random.PCG64,
    "pcg64dxsm": np.random.PCG64DXSM,
    "philox": np.random.Philox,
    "sfc64": np.random.SFC64,
    "mt19937": np.random.MT19937,
}

T = TypeVar("T")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def shard_seed(seed: int, k: int) -> int:
    if not 0 <= seed <= MASK64:
        raise ModelError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return splitmix64(splitmix64(seed) ^ k)


def make_rng(name: str = "pcg64", seed: int = 0) -> np.random.Generator:
    try:
        bitgen = RNG_ALGORITHMS[name.lower()]
    except KeyError:
        raise ModelError(f"unknown rng {name!r}; choose from {sorted(RNG_ALGORITHMS)}") from None
    return np.random.Generator(bitgen(seed))


def map_shards(
    func: Callable[[np.random.Generator, int], T],
    total: int,
    seed: int,
    shards: int = 1,
    rng_name: str = "pcg64",
) -> list[T]:
    """Run ``func(rng_k, size_k)`` for each shard and return results in shard order."""
    if shards < 1:
        raise ModelError("shards must be >= 1")
    base, extra = divmod(total, shards)
    sizes = [base + (k < extra) for k in range(shards)]
    rngs = [make_rng(rng_name, shard_seed(seed, k)) for k in range(shards)]
    if shards == 1:
        return [func(rngs[0], sizes[0])]
    with ThreadPoolExecutor(max_workers=shards) as pool:
        return list(pool.map(func, rngs, sizes))


@dataclass(frozen=True)
class IncrementSpec:
    """Law of one increment: X = R U, or A (R U) when ``map`` is set."""

    radius: RadiusDistribution
    direction: DirectionDistribution
    map: EllipsoidMap | None = None

    def __post_init__(self):
        if self.map is not None and self.map.dim != self.direction.dim:
            raise ModelError("map and direction dimensions differ")

    @property
    def dim(self) -> int:
        return self.direction.dim

    def unmapped(self) -> "IncrementSpec":
        return IncrementSpec(self.radius, self.direction)


def sample_increments(spec: IncrementSpec, rng: np.random.Generator, size) -> np.ndarray:
    """Array of increments with shape ``size + (d,)``."""
    r = np.asarray(sample_radius(spec.radius, rng, size))
    u = sample_direction(spec.direction, rng, size)
    x = r[..., None] * u
    if spec.map is not None:
        x = spec.map.forward(x)
    return x


def sample_increment(spec: IncrementSpec, rng: np.random.Generator) -> np.ndarray:
    return sample_increments(spec, rng, 1)[0]


@dataclass(frozen=True, eq=False)
class WalkSample:
    n: int
    s_n: np.ndarray
    max_norm: float
    max_proj: float  # nan without a monitored direction


@dataclass(frozen=True, eq=False)
class WalkBatch:
    """Final positions and running maxima of many independent paths."""

    n: int
    s_n: np.ndarray  # (paths, d)
    max_norm: np.ndarray
    max_proj: np.ndarray
    norm_sum: np.ndarray  # sum of increment norms, for triangle-inequality checks

    def __len__(self) -> int:
        return self.s_n.shape[0]

    def __getitem__(self, i) -> WalkSample:
        return WalkSample(self.n, self.s_n[i].copy(), float(self.max_norm[i]), float(self.max_proj[i]))

    @classmethod
    def concat(cls, parts: Sequence["WalkBatch"]) -> "WalkBatch":
        return cls(
            parts[0].n,
            np.concatenate([p.s_n for p in parts]),
            np.concatenate([p.max_norm for p in parts]),
            np.concatenate([p.max_proj for p in parts]),
            np.concatenate([p.norm_sum for p in parts]),
        )


def chunk_paths(n: int) -> int:
    return max(1, BLOCK_INCREMENTS // n)


def _check_monitor(spec: IncrementSpec, v):
    if v is None:
        return None
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dim,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ModelError("monitored direction must be a unit vector of the walk's dimension")
    return v


def iter_path_chunks(
    spec: IncrementSpec, n: int, paths: int, rng: np.random.Generator, monitor_v=None
) -> Iterator[WalkBatch]:
    """Yield consecutive blocks of simulated paths (memory stays bounded)."""
    if n < 1:
        raise ModelError("n must be at least 1")
    if paths < 0:
        raise ModelError("paths must be nonnegative")
    v = _check_monitor(spec, monitor_v)
    step = chunk_paths(n)
    done = 0
    while done < paths:
        k = min(step, paths - done)
        x = sample_increments(spec, rng, (k, n))
        norms = np.linalg.norm(x, axis=2)
        proj = (x @ v).max(axis=1) if v is not None else np.full(k, np.nan)
        yield WalkBatch(n, x.sum(axis=1), norms.max(axis=1), proj, norms.sum(axis=1))
        done += k


def simulate_paths(
    spec: IncrementSpec, n: int, paths: int, rng: np.random.Generator, monitor_v=None
) -> WalkBatch:
    parts = list(iter_path_chunks(spec, n, paths, rng, monitor_v))
    if not parts:
        d = spec.dim
        e = np.empty(0)
        return WalkBatch(n, np.empty((0, d)), e, e.copy(), e.copy())
    return WalkBatch.concat(parts)


def simulate_sum(spec: IncrementSpec, n: int, rng: np.random.Generator, monitor_v=None) -> WalkSample:
    """One path S_n with running maxima of |X_i| and <v, X_i>."""
    return simulate_paths(spec, n, 1, rng, monitor_v)[0]


def simulate_sharded(
    spec: IncrementSpec,
    n: int,
    paths: int,
    seed: int,
    shards: int = 1,
    rng_name: str = "pcg64",
    monitor_v=None,
) -> WalkBatch:
    parts = map_shards(
        lambda rng, size: simulate_paths(spec, n, size, rng, monitor_v), paths, seed, shards, rng_name
    )
    return WalkBatch.concat(parts)


@dataclass(frozen=True)
class PathRecord:
    """One emitted path line: ``n, s_1..s_d, max_norm, max_proj``."""

    n: int
    s: tuple[float, ...]
    max_norm: float
    max_proj: float

    @staticmethod
    def header(d: int) -> list[str]:
        return ["n"] + [f"s_{j + 1}" for j in range(d)] + ["max_norm", "max_proj"]

    def to_row(self) -> list[str]:
        return [str(self.n)] + [repr(v) for v in self.s] + [repr(self.max_norm), repr(self.max_proj)]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "PathRecord":
        return cls(int(row[0]), tuple(float(v) for v in row[1:-2]), float(row[-2]), float(row[-1]))

    @classmethod
    def from_batch(cls, batch: WalkBatch) -> list["PathRecord"]:
        return [
            cls(batch.n, tuple(float(v) for v in s), float(mn), float(mp))
            for s, mn, mp in zip(batch.s_n, batch.max_norm, batch.max_proj)
        ]
