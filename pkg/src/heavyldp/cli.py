"""``heavyldp`` command line: experiments from a manifest, overridden by flags.

Exit codes: 0 success, 2 validation error, 3 degenerate result (zero hits,
unavailable diagnostic, failed model check).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, parse_vector
from .errors import ModelError
from .geometry import sample_direction
from .ldp import RateFunction, inf_rate, ldp_bounds, rate_I, walk_inf_rate
from .montecarlo import (
    ExperimentRow,
    Norm,
    Projection,
    big_jump_diagnostic,
    estimate_exceedance,
    estimate_set_probability,
)
from .reinsurance import ceding_optimal_Q, improvement_check, reinsurer_Q
from .tail_models import Family, RadiusDistribution, check_assumption_A1, rv_index
from .walk import IncrementSpec, PathRecord, make_rng, shard_seed, simulate_sharded

log = logging.getLogger("heavyldp")

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE = 0, 2, 3
DEFAULT_BETA = 0.5

COMMANDS = (
    "simulate", "estimate", "set-prob", "bigjump", "rate",
    "optimize-ceding", "optimize-reinsurer", "check-model",
)

# argparse dest -> (section, key)
MODEL_FLAGS = {
    "family": ("radius", "family"), "beta": ("radius", "beta"), "scale": ("radius", "c"),
    "p": ("radius", "p"), "l": ("radius", "l"), "knots": ("radius", "knots"),
    "alpha": ("radius", "alpha"), "dim": ("direction", "dim"), "caps": ("direction", "caps"),
    "base_weight": ("direction", "base_weight"), "matrix": ("map", "matrix"),
}
RUN_FLAGS = {
    "rng": ("run", "rng"), "seed": ("run", "seed"), "shards": ("run", "shards"),
    "output": ("run", "output"), "format": ("run", "format"),
}
EXPERIMENT_FLAGS = {
    k: ("experiment", k) for k in ("n", "a", "trials", "functional", "set", "eps", "v", "x", "grid")
}
REINSURANCE_FLAGS = {
    "diag": ("reinsurance", "diag"), "premium": ("reinsurance", "premium"),
    "c": ("reinsurance", "c"), "a": ("reinsurance", "a"), "beta": ("reinsurance", "beta"),
}


class Degenerate(Exception):
    """Raised after output was written, to select exit status 3."""


def _add_run(p):
    g = p.add_argument_group("run")
    g.add_argument("--config", type=Path, help="manifest file (flags override it)")
    g.add_argument("--rng", help="bit generator: pcg64, pcg64dxsm, philox, sfc64, mt19937")
    g.add_argument("--seed", help="unsigned 64-bit master seed")
    g.add_argument("--shards", help="parallel shards; output is fixed for a given count")
    g.add_argument("--output", help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "jsonl"))


def _add_model(p, with_beta=True):
    g = p.add_argument_group("model")
    g.add_argument("--family", choices=[f.value for f in Family])
    if with_beta:
        g.add_argument("--beta")
    g.add_argument("--scale", help="Weibull scale c")
    g.add_argument("--p", help="lognormal-type power")
    g.add_argument("--l", help="stretched-exponential level")
    g.add_argument("--knots", help="piecewise knots x:h,x:h,...")
    g.add_argument("--alpha", help="declared index for piecewise exponents")
    g.add_argument("--dim")
    g.add_argument("--caps", help="direction caps cx,cy:angle:weight; ...")
    g.add_argument("--base-weight", dest="base_weight")
    g.add_argument("--map", dest="matrix", help="ellipsoid matrix, rows separated by ';'")


def _add_experiment(p, *keys):
    g = p.add_argument_group("experiment")
    for k in keys:
        g.add_argument(f"--{k}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavyldp", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    spec = {
        "simulate": ("n", "trials", "v"),
        "estimate": ("n", "a", "trials", "functional", "v"),
        "set-prob": ("n", "trials", "set"),
        "bigjump": ("n", "a", "trials", "eps", "v"),
        "rate": ("set", "x"),
        "check-model": ("grid", "trials"),
    }
    for name, keys in spec.items():
        p = sub.add_parser(name, allow_abbrev=False)
        _add_run(p)
        _add_model(p)
        _add_experiment(p, *keys)
    for name in ("optimize-ceding", "optimize-reinsurer"):
        p = sub.add_parser(name, allow_abbrev=False)
        _add_run(p)
        g = p.add_argument_group("strategy")
        g.add_argument("--diag", help="diagonal of A, e.g. 1,2,6")
        g.add_argument("--premium", help="premium rates per line")
        g.add_argument("--a", help="ruin threshold (default 1)")
        g.add_argument("--beta", help=f"Weibull index (default: radius index or {DEFAULT_BETA})")
        if name == "optimize-reinsurer":
            g.add_argument("--c", help="reinsurer constant, c > max_j 1/a_j")
        g2 = p.add_argument_group("model")
        g2.add_argument("--family", choices=[f.value for f in Family])
        g2.add_argument("--p")
    return parser


def _overrides(args, command: str) -> dict[str, dict[str, str]]:
    table = dict(RUN_FLAGS)
    if command.startswith("optimize"):
        table.update(REINSURANCE_FLAGS)
        table.update(family=("radius", "family"), p=("radius", "p"))
    else:
        table.update(MODEL_FLAGS)
        table.update(EXPERIMENT_FLAGS)
    out: dict[str, dict[str, str]] = {}
    for dest, (section, key) in table.items():
        val = getattr(args, dest, None)
        if val is not None:
            out.setdefault(section, {})[key] = str(val)
    return out


def load_config(args) -> ExperimentConfig:
    base = ExperimentConfig()
    if getattr(args, "config", None) is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ModelError(f"cannot read config: {exc}") from None
        base = ExperimentConfig.from_text(text)
    return base.merged(_overrides(args, args.command))


# --- output ---------------------------------------------------------------------------


def _json_value(s: str):
    if s == "":
        return None
    for conv in (int, float):
        try:
            v = conv(s)
        except ValueError:
            continue
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else s  # keep JSON strict
        return v
    return {"true": True, "false": False}.get(s, s)


def emit(cfg: ExperimentConfig, header: Sequence[str], rows: Sequence[Sequence[str]], stream=None):
    """Write rows as CSV (with header) or JSON lines keyed by the header."""
    path = cfg.run.output
    fh = open(path, "w", newline="") if path else (stream or sys.stdout)
    try:
        if cfg.run.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        else:
            for row in rows:
                fh.write(json.dumps({k: _json_value(v) for k, v in zip(header, row)}) + "\n")
    finally:
        if path:
            fh.close()


def _require(value, name: str):
    if value is None:
        raise ModelError(f"missing required parameter {name!r}")
    return value


def increment_spec(cfg: ExperimentConfig) -> IncrementSpec:
    exp = _require(cfg.radius, "radius family")
    direction = _require(cfg.direction, "direction dim")
    return IncrementSpec(RadiusDistribution(exp), direction, cfg.map)


def _vector(text, name):
    return parse_vector(_require(text, name))


def _shape(cfg) -> str:
    e = cfg.radius
    v = e.p if e.family is Family.LOGNORMAL else e.beta
    return "" if v is None else repr(float(v))


# --- commands ---------------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig, stream=None) -> int:
    spec = increment_spec(cfg)
    ex = cfg.experiment
    v = _vector(ex.v, "v") if ex.v else None
    batch = simulate_sharded(spec, _require(ex.n, "n"), _require(ex.trials, "trials"),
                             cfg.run.seed, cfg.run.shards, cfg.run.rng, monitor_v=v)
    rows = [r.to_row() for r in PathRecord.from_batch(batch)]
    emit(cfg, PathRecord.header(spec.dim), rows, stream)
    return EXIT_OK


def cmd_estimate(cfg: ExperimentConfig, stream=None) -> int:
    spec = increment_spec(cfg)
    ex = cfg.experiment
    kind = (ex.functional or "norm").lower()
    if kind == "norm":
        functional = Norm()
    elif kind == "projection":
        functional = Projection(_vector(ex.v, "v"))
    else:
        raise ModelError(f"functional must be norm or projection, got {kind!r}")
    est = estimate_exceedance(spec, functional, _require(ex.n, "n"), _require(ex.a, "a"),
                              _require(ex.trials, "trials"), cfg.run.seed, cfg.run.shards, cfg.run.rng)
    row = ExperimentRow.from_estimate(est, cfg.radius, spec.dim, -1.0)
    emit(cfg, ExperimentRow.COLUMNS, [row.to_row()], stream)
    return EXIT_DEGENERATE if est.hits == 0 else EXIT_OK


def cmd_set_prob(cfg: ExperimentConfig, stream=None) -> int:
    spec = increment_spec(cfg)
    ex = cfg.experiment
    event = _require(cfg.event(), "set")
    theory = -walk_inf_rate(RateFunction.from_exponent(cfg.radius), event, spec.map)
    est = estimate_set_probability(spec, event, _require(ex.n, "n"), _require(ex.trials, "trials"),
                                   cfg.run.seed, cfg.run.shards, cfg.run.rng)
    row = ExperimentRow.from_estimate(est, cfg.radius, spec.dim, theory)
    emit(cfg, ExperimentRow.COLUMNS, [row.to_row()], stream)
    return EXIT_DEGENERATE if est.hits == 0 else EXIT_OK


BIGJUMP_COLUMNS = ("family", "beta_or_p", "d", "n", "a", "eps", "trials",
                   "exceed_count", "bigjump_count", "conditional_freq", "status")


def cmd_bigjump(cfg: ExperimentConfig, stream=None) -> int:
    spec = increment_spec(cfg)
    ex = cfg.experiment
    v = _vector(ex.v, "v") if ex.v else np.eye(spec.dim)[0]
    res = big_jump_diagnostic(spec, v, _require(ex.n, "n"), _require(ex.a, "a"),
                              _require(ex.eps, "eps"), _require(ex.trials, "trials"),
                              cfg.run.seed, cfg.run.shards, cfg.run.rng)
    freq = "" if res.conditional_freq is None else repr(res.conditional_freq)
    row = [cfg.radius.family.value, _shape(cfg), str(spec.dim), str(res.n), repr(float(res.a)),
           repr(float(res.eps)), str(res.trials), str(res.exceed_count), str(res.bigjump_count),
           freq, res.status]
    emit(cfg, BIGJUMP_COLUMNS, [row], stream)
    return EXIT_DEGENERATE if res.status != "ok" else EXIT_OK


RATE_COLUMNS = ("kind", "alpha", "target", "value", "lower", "upper")


def cmd_rate(cfg: ExperimentConfig, stream=None) -> int:
    rf = RateFunction.from_exponent(_require(cfg.radius, "radius family"))
    ex = cfg.experiment
    rows = []
    if ex.x:
        for point in ex.x.split(";"):
            val = rate_I(rf, parse_vector(point))
            rows.append(["point", repr(rf.alpha), point.strip(), repr(val), "", ""])
    event = cfg.event()
    if event is not None:
        lo, hi = ldp_bounds(rf, event)
        rows.append(["set", repr(rf.alpha), ex.set, repr(inf_rate(rf, event)), repr(lo), repr(hi)])
    if not rows:
        raise ModelError("rate needs --x points or a --set")
    emit(cfg, RATE_COLUMNS, rows, stream)
    return EXIT_OK


def _strategy_beta(cfg: ExperimentConfig) -> float:
    if cfg.reinsurance.beta is not None:
        return cfg.reinsurance.beta
    if cfg.radius is not None:
        return rv_index(cfg.radius)
    return DEFAULT_BETA


def _report_out(cfg, report, stream):
    out = stream or sys.stdout
    out.write(report.to_text() + "\n")
    record = json.dumps(report.to_dict(), sort_keys=True)
    if cfg.run.output:
        Path(cfg.run.output).write_text(record + "\n")
    else:
        out.write(record + "\n")


def cmd_optimize(cfg: ExperimentConfig, stream=None, reinsurer=False) -> int:
    rs = cfg.reinsurance
    A = _vector(rs.diag, "diag")
    p = _vector(rs.premium, "premium") if rs.premium else None
    Q = reinsurer_Q(A, _require(rs.c, "c")) if reinsurer else ceding_optimal_Q(A)
    report = improvement_check(Q, A, rs.a if rs.a is not None else 1.0, _strategy_beta(cfg), p)
    _report_out(cfg, report, stream)
    return EXIT_OK


CHECK_COLUMNS = ("check", "passed", "witness", "detail")
DEFAULT_GRID = np.logspace(0, 6, 25)


def cmd_check_model(cfg: ExperimentConfig, stream=None) -> int:
    exp = _require(cfg.radius, "radius family")
    ex = cfg.experiment
    grid = parse_vector(ex.grid) if ex.grid else DEFAULT_GRID
    rep = check_assumption_A1(exp, grid)

    def w(x):
        return "" if x is None else repr(x)

    rows = [
        ["A1.nondecreasing", str(rep.nondecreasing).lower(), w(rep.nondecreasing_witness), ""],
        ["A1.concave", str(rep.concave).lower(), w(rep.concave_witness), f"x0={exp.x0!r}"],
        ["A1.growth", str(rep.growth).lower(), w(rep.growth_witness), "h/x decreasing, h/log x increasing"],
    ]
    try:
        rows.append(["index", "true", "", f"alpha={rv_index(exp)!r}"])
    except ModelError as exc:
        rows.append(["index", "false", "", str(exc)])
    ok = all(r[1] == "true" for r in rows)
    if cfg.direction is not None:
        dist = cfg.direction
        m = ex.trials or 100_000
        u = sample_direction(dist, make_rng(cfg.run.rng, shard_seed(cfg.run.seed, 0)), m)
        mean_norm = float(np.linalg.norm(u.mean(axis=0)))
        bound = 5.0 / math.sqrt(m)
        rows.append(["A2.full_support", "true", "", f"base_weight={dist.base_weight!r}"])
        rows.append(["A2.antipodal", "true", "", f"kind={dist.kind}"])
        rows.append(["A2.mean_zero", str(mean_norm <= bound).lower(), repr(mean_norm), f"bound={bound!r}"])
        ok &= mean_norm <= bound
    emit(cfg, CHECK_COLUMNS, rows, stream)
    return EXIT_OK if ok else EXIT_DEGENERATE


HANDLERS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "set-prob": cmd_set_prob,
    "bigjump": cmd_bigjump,
    "rate": cmd_rate,
    "optimize-ceding": cmd_optimize,
    "optimize-reinsurer": lambda cfg, stream=None: cmd_optimize(cfg, stream, reinsurer=True),
    "check-model": cmd_check_model,
}


def run(command: str, cfg: ExperimentConfig, stream=None) -> int:
    if command not in HANDLERS:
        raise ModelError(f"unknown command {command!r}")
    return HANDLERS[command](cfg, stream)


def _error_code(exc: ModelError) -> str:
    name = type(exc).__name__
    return "".join("_" + ch.lower() if ch.isupper() else ch for ch in name).lstrip("_")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return run(args.command, cfg)
    except ModelError as exc:
        print(f"error [{_error_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
