"""Experiment manifests: flat key-value sections, parsed and validated.

Example::

    [run]
    rng = pcg64
    seed = 7
    shards = 1

    [radius]
    family = weibull
    c = 1.0
    beta = 0.4

    [direction]
    dim = 2
    caps = 1,0:0.5:1; -1,0:0.5:1

    [experiment]
    n = 30
    a = 1.0
    trials = 100000
    set = cone:1:1,0:0.785

Event sets are written ``ball:R``, ``half:V:L``, ``cone:R:C:ANGLE[;C:ANGLE...]``,
and ``mapped:<set>`` (image of ``<set>`` under the ``[map]`` matrix).
Vectors are comma separated, matrices ``1,0;0,2``.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ModelError
from .geometry import (
    BallComplement,
    Cone,
    DirectionDistribution,
    EllipsoidMap,
    EventSet,
    HalfSpace,
    Mapped,
    SphereCap,
)
from .tail_models import TailExponent

__all__ = [
    "RunSection",
    "ExperimentSection",
    "ReinsuranceSection",
    "ExperimentConfig",
    "parse_vector",
    "format_vector",
    "parse_caps",
    "format_caps",
    "parse_event",
    "direction_from_config",
    "direction_to_config",
]


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise ModelError(f"cannot parse vector {text!r}: {exc}") from None


def format_vector(v) -> str:
    return ",".join(repr(float(x)) for x in np.asarray(v).reshape(-1))


def parse_caps(text: str, with_weight: bool = True) -> tuple[SphereCap, ...]:
    """``cx,cy,...:angle:weight; ...`` (weight omitted for cone caps)."""
    caps = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 2 and not (with_weight and len(parts) == 3):
            raise ModelError(f"cannot parse cap {item!r}")
        try:
            angle = float(parts[1])
            weight = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise ModelError(f"cannot parse cap {item!r}: {exc}") from None
        caps.append(SphereCap(parse_vector(parts[0]), angle, weight))
    return tuple(caps)


def format_caps(caps, with_weight: bool = True) -> str:
    out = []
    for c in caps:
        s = f"{format_vector(c.center)}:{c.angle!r}"
        out.append(s + f":{c.weight!r}" if with_weight else s)
    return "; ".join(out)


def parse_event(text: str, emap: EllipsoidMap | None = None) -> EventSet:
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.lower()
    try:
        if kind == "ball":
            return BallComplement(float(rest))
        if kind == "half":
            v, _, level = rest.rpartition(":")
            return HalfSpace(parse_vector(v), float(level))
        if kind == "cone":
            r, _, caps = rest.partition(":")
            return Cone(float(r), parse_caps(caps, with_weight=False))
        if kind == "mapped":
            if emap is None:
                raise ModelError("mapped set needs a [map] matrix")
            return Mapped(parse_event(rest), emap)
    except ValueError as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"cannot parse set {text!r}: {exc}") from None
    raise ModelError(f"unknown set kind {kind!r} in {text!r}")


def direction_from_config(section) -> DirectionDistribution:
    allowed = {"dim", "kind", "base_weight", "caps"}
    extra = set(section) - allowed
    if extra:
        raise ModelError(f"direction: unknown keys {sorted(extra)}")
    if "dim" not in section:
        raise ModelError("direction: missing key 'dim'")
    dim = int(section["dim"])
    kind = section.get("kind", "cap_mixture" if section.get("caps") else "uniform")
    caps = parse_caps(section.get("caps", "")) if kind == "cap_mixture" else ()
    if kind not in ("uniform", "cap_mixture"):
        raise ModelError(f"direction: unknown kind {kind!r}")
    if kind == "uniform" and section.get("caps"):
        raise ModelError("direction: uniform kind takes no caps")
    return DirectionDistribution(dim, caps, float(section.get("base_weight", 1.0)))


def direction_to_config(dist: DirectionDistribution) -> dict[str, str]:
    out = {"dim": str(dist.dim), "kind": dist.kind}
    if dist.caps:
        out["base_weight"] = repr(dist.base_weight)
        out["caps"] = format_caps(dist.caps)
    return out


def _typed(cls, section: dict[str, str], name: str):
    known = {f.name: f for f in fields(cls)}
    extra = set(section) - set(known)
    if extra:
        raise ModelError(f"[{name}]: unknown keys {sorted(extra)}")
    kwargs = {}
    for key, raw in section.items():
        conv = cls.CONVERTERS.get(key, str)
        try:
            kwargs[key] = conv(raw)
        except ValueError as exc:
            raise ModelError(f"[{name}] {key}: {exc}") from None
    return cls(**kwargs)


def _untyped(obj) -> dict[str, str]:
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if v is None:
            continue
        out[f.name] = repr(v) if isinstance(v, float) else str(v)
    return out


@dataclass(frozen=True)
class RunSection:
    rng: str = "pcg64"
    seed: int = 0
    shards: int = 1
    output: str | None = None
    format: str = "csv"

    CONVERTERS = {"seed": int, "shards": int}

    def __post_init__(self):
        if self.format not in ("csv", "jsonl"):
            raise ModelError(f"format must be csv or jsonl, got {self.format!r}")
        if self.shards < 1:
            raise ModelError("shards must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ModelError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ExperimentSection:
    n: int | None = None
    a: float | None = None
    trials: int | None = None
    functional: str | None = None
    set: str | None = None
    eps: float | None = None
    v: str | None = None
    x: str | None = None
    grid: str | None = None

    CONVERTERS = {"n": int, "a": float, "trials": int, "eps": float}


@dataclass(frozen=True)
class ReinsuranceSection:
    diag: str | None = None
    premium: str | None = None
    c: float | None = None
    a: float | None = None
    beta: float | None = None

    CONVERTERS = {"c": float, "a": float, "beta": float}


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A validated manifest; :meth:`to_text` and :meth:`from_text` round-trip."""

    run: RunSection = field(default_factory=RunSection)
    radius: TailExponent | None = None
    direction: DirectionDistribution | None = None
    map: EllipsoidMap | None = None
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    reinsurance: ReinsuranceSection = field(default_factory=ReinsuranceSection)

    SECTIONS = ("run", "radius", "direction", "map", "experiment", "reinsurance")

    def __post_init__(self):
        if self.map is not None and self.direction is not None and self.map.dim != self.direction.dim:
            raise ModelError("map and direction dimensions differ")
        if self.experiment.set is not None:
            self.event()  # validate

    def event(self) -> EventSet | None:
        if self.experiment.set is None:
            return None
        return parse_event(self.experiment.set, self.map)

    def sections(self) -> dict[str, dict[str, str]]:
        out = {"run": _untyped(self.run)}
        if self.radius is not None:
            out["radius"] = self.radius.to_config()
        if self.direction is not None:
            out["direction"] = direction_to_config(self.direction)
        if self.map is not None:
            out["map"] = {"matrix": self.map.to_text()}
        for name in ("experiment", "reinsurance"):
            sec = _untyped(getattr(self, name))
            if sec:
                out[name] = sec
        return out

    def to_text(self) -> str:
        buf = io.StringIO()
        for i, (name, sec) in enumerate(self.sections().items()):
            if i:
                buf.write("\n")
            buf.write(f"[{name}]\n")
            for k, v in sec.items():
                buf.write(f"{k} = {v}\n")
        return buf.getvalue()

    @classmethod
    def from_sections(cls, sections: dict[str, dict[str, str]]) -> "ExperimentConfig":
        unknown = set(sections) - set(cls.SECTIONS)
        if unknown:
            raise ModelError(f"unknown config sections {sorted(unknown)}")
        emap = None
        if "map" in sections:
            extra = set(sections["map"]) - {"matrix"}
            if extra:
                raise ModelError(f"[map]: unknown keys {sorted(extra)}")
            emap = EllipsoidMap.from_text(sections["map"].get("matrix", ""))
        return cls(
            run=_typed(RunSection, sections.get("run", {}), "run"),
            radius=TailExponent.from_config(sections["radius"]) if "radius" in sections else None,
            direction=direction_from_config(sections["direction"]) if "direction" in sections else None,
            map=emap,
            experiment=_typed(ExperimentSection, sections.get("experiment", {}), "experiment"),
            reinsurance=_typed(ReinsuranceSection, sections.get("reinsurance", {}), "reinsurance"),
        )

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                           inline_comment_prefixes=None, empty_lines_in_values=False)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ModelError(f"cannot parse config: {exc}") from None
        return cls.from_sections({s: dict(parser[s]) for s in parser.sections()})

    def merged(self, overrides: dict[str, dict[str, str]]) -> "ExperimentConfig":
        """New config with ``overrides`` (section -> key -> text) applied on top."""
        secs = self.sections()
        for name, kv in overrides.items():
            kv = {k: v for k, v in kv.items() if v is not None}
            if not kv:
                continue
            if name == "radius" and "family" in kv and secs.get("radius", {}).get("family") != kv["family"]:
                secs[name] = {}
            if name == "direction" and "caps" in kv and "kind" not in kv:
                kv = {**kv, "kind": "cap_mixture"}
            secs.setdefault(name, {}).update(kv)
        return self.from_sections(secs)
