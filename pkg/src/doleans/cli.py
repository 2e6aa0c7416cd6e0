"""Command-line front end: generate paths, transform them, run suites.

Configuration comes from an INI-style file (sections ``[generator]``,
``[transform]``, ``[verify]``, ``[output]``) merged with command-line
flags, flags winning.  Unknown sections or keys are rejected.  The master
seed falls back to the ``DOLEANS_SEED`` environment variable.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from .exp_log import reciprocal_companion, stoch_exp_formula, stoch_exp_recursive, stoch_log
from .generators import KINDS, GeneratorSpec, make_path
from .harness import SCHEMA_VERSION, SUITES, run_suite
from .path_model import (
    CadlagPath,
    HitKind,
    PathMode,
    detect_zero_hit,
    read_path_csv,
    write_path_csv,
)

__all__ = ["main", "ScenarioConfig", "ConfigError"]


class ConfigError(ValueError):
    """Invalid scenario configuration (exit code 2)."""


_TRANSFORM_OPS = ("exp-formula", "exp-recursive", "log", "reciprocal")

_CONFIG_SCHEMA = {
    "generator": {
        "kind": str,
        "horizon": float,
        "steps": int,
        "seed": int,
        "qv": str,
        "nmax": int,
        "rate": float,
        "jump_law": str,
        "law_params": "floats",
        "stop_at_first_down": "bool",
        "minus_one_prob": float,
        "max_jumps": int,
    },
    "transform": {"op": str, "mode": str},
    "verify": {
        "suite": str,
        "paths": int,
        "tolerance": float,
        "meshes": "ints",
        "workers": int,
    },
    "output": {"out": str},
}

# Scenario defaults applied when the suite is run without an explicit kind.
_SUITE_DEFAULTS = {
    "roundtrip": dict(kind="random-l", horizon=1.0, paths=10000),
    "reciprocal": dict(kind="compound-poisson", horizon=4.0, rate=5.0, paths=1000),
    "convergence": dict(kind="timechanged-walk", nmax=200, paths=10000),
    "supermartingale": dict(kind="one-jump", horizon=3.0, steps=600, paths=10000),
    "rate": dict(kind="brownian", horizon=1.0, paths=200),
    "maximality": dict(kind="stopped-bm", horizon=100.0, steps=10000, paths=1000),
    "announcing": dict(kind="timechanged-walk", nmax=200, paths=1000),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, merged scenario: generator fields, transform chain,
    suite selection, tolerances, ensemble size, output destination."""

    kind: Optional[str] = None
    horizon: Optional[float] = None
    steps: Optional[int] = None
    seed: Optional[int] = None
    qv: Optional[str] = None
    nmax: Optional[int] = None
    rate: Optional[float] = None
    jump_law: Optional[str] = None
    law_params: Optional[Tuple[float, ...]] = None
    stop_at_first_down: Optional[bool] = None
    minus_one_prob: Optional[float] = None
    max_jumps: Optional[int] = None
    op: Optional[str] = None
    mode: Optional[str] = None
    suite: Optional[str] = None
    paths: Optional[int] = None
    tolerance: Optional[float] = None
    meshes: Optional[Tuple[int, ...]] = None
    workers: Optional[int] = None
    out: Optional[str] = None

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def generator_spec(self, defaults: Optional[dict] = None) -> GeneratorSpec:
        d = dict(defaults or {})
        d.update({k: v for k, v in self.echo().items() if v is not None})
        kind = d.get("kind")
        if kind is None:
            raise ConfigError("a generator kind is required (--kind or config)")
        kwargs = {"kind": kind}
        mapping = {
            "horizon": "horizon",
            "steps": "steps",
            "seed": "seed",
            "qv": "qv_channel",
            "nmax": "n_max",
            "rate": "rate",
            "jump_law": "jump_law",
            "law_params": "law_params",
            "stop_at_first_down": "stop_at_first_down",
            "minus_one_prob": "minus_one_prob",
            "max_jumps": "max_jumps",
        }
        for key, target in mapping.items():
            if d.get(key) is not None:
                val = d[key]
                kwargs[target] = tuple(val) if key == "law_params" else val
        try:
            return GeneratorSpec(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _parse_value(raw: str, typ):
    raw = raw.strip()
    try:
        if typ is str:
            return raw
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if typ == "ints":
            return tuple(int(x) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r}: {exc}") from exc
    raise ConfigError(f"unhandled config type {typ!r}")


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fp:
            parser.read_file(fp)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    merged = {}
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        schema = _CONFIG_SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            merged[key] = _parse_value(raw, schema[key])
    return merged


def _scenario_from(args: argparse.Namespace) -> ScenarioConfig:
    merged = {}
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config))
    flag_map = {
        "kind": "kind",
        "horizon": "horizon",
        "steps": "steps",
        "seed": "seed",
        "qv": "qv",
        "nmax": "nmax",
        "op": "op",
        "mode": "mode",
        "suite": "suite",
        "paths": "paths",
        "tolerance": "tolerance",
        "meshes": "meshes",
        "workers": "workers",
        "out": "out",
    }
    for flag, key in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            merged[key] = val
    if merged.get("meshes") is not None and isinstance(merged["meshes"], str):
        merged["meshes"] = _parse_value(merged["meshes"], "ints")
    if merged.get("seed") is None and os.environ.get("DOLEANS_SEED"):
        try:
            merged["seed"] = int(os.environ["DOLEANS_SEED"])
        except ValueError as exc:
            raise ConfigError(f"bad DOLEANS_SEED: {os.environ['DOLEANS_SEED']!r}") from exc
    unknown = set(merged) - {f.name for f in fields(ScenarioConfig)}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    return ScenarioConfig(**merged)


def _open_out(out: Optional[str]):
    if out is None or out == "-":
        return sys.stdout, False
    return open(out, "w", newline=""), True


def cmd_generate(args) -> int:
    cfg = _scenario_from(args)
    spec = cfg.generator_spec()
    n_paths = cfg.paths or 1
    if n_paths == 1:
        fp, own = _open_out(cfg.out)
        try:
            write_path_csv(make_path(spec, 0), fp)
        finally:
            if own:
                fp.close()
    else:
        if not cfg.out:
            raise ConfigError("--out directory is required for more than one path")
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        width = max(4, len(str(n_paths - 1)))
        for i in range(n_paths):
            write_path_csv(make_path(spec, i), str(outdir / f"path_{i:0{width}d}.csv"))
    return 0


def _apply_op(path: CadlagPath, op: str, theta: Optional[float]):
    """Apply one transform; returns (path, hitting report or None)."""
    if op == "exp-formula":
        return stoch_exp_formula(path), None
    if op == "exp-recursive":
        return stoch_exp_recursive(path), None
    if op == "reciprocal":
        return reciprocal_companion(path, zero_threshold=theta), None
    if op == "log":
        report = detect_zero_hit(path, zero_threshold=theta)
        out = stoch_log(path, report)
        if report.kind is HitKind.CONTINUOUS:
            print(
                f"warning: input reaches zero continuously at index "
                f"{report.tau0_index}; output interval shortened",
                file=sys.stderr,
            )
        return out, report
    raise ConfigError(f"unknown transform op {op!r}, expected one of {_TRANSFORM_OPS}")


def cmd_transform(args) -> int:
    cfg = _scenario_from(args)
    if not cfg.op:
        raise ConfigError("transform requires --op")
    mode = None
    if cfg.mode is not None:
        try:
            mode = PathMode(cfg.mode)
        except ValueError as exc:
            raise ConfigError(f"unknown mode {cfg.mode!r}, expected purejump or grid") from exc
    try:
        path = read_path_csv(args.input, mode=mode)
    except ValueError as exc:
        raise ConfigError(f"bad input CSV: {exc}") from exc
    report = None
    for op in (o.strip() for o in cfg.op.split(",") if o.strip()):
        path, rep = _apply_op(path, op, cfg.tolerance)
        if rep is not None:
            report = rep
    fp, own = _open_out(cfg.out)
    try:
        write_path_csv(path, fp)
    finally:
        if own:
            fp.close()
    if report is not None and cfg.out and cfg.out != "-":
        report_payload = {
            "schema_version": SCHEMA_VERSION,
            "tau0_index": report.tau0_index,
            "kind": report.kind.value,
            "zero_threshold": report.zero_threshold,
        }
        Path(cfg.out + ".report.json").write_text(
            json.dumps(report_payload, sort_keys=True, indent=2) + "\n"
        )
    return 0


def _suite_kwargs(suite: str, cfg: ScenarioConfig) -> dict:
    kwargs = {}
    if cfg.tolerance is not None:
        if suite == "roundtrip":
            kwargs["tol_pure_jump"] = cfg.tolerance
            kwargs["tol_grid"] = cfg.tolerance
        elif suite == "reciprocal":
            kwargs["tol_product"] = cfg.tolerance
    if suite == "rate" and cfg.meshes is not None:
        kwargs["mesh_levels"] = cfg.meshes
    return kwargs


def cmd_verify(args) -> int:
    cfg = _scenario_from(args)
    if not cfg.suite:
        raise ConfigError("verify requires --suite (comma separated for several)")
    suite_names = [s.strip() for s in cfg.suite.split(",") if s.strip()]
    for name in suite_names:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}, expected one of {sorted(SUITES)}")
    reports = []
    for name in suite_names:
        defaults = dict(_SUITE_DEFAULTS[name])
        n_paths = cfg.paths or defaults.pop("paths")
        defaults.pop("paths", None)
        spec = cfg.generator_spec(defaults)
        try:
            report = run_suite(
                name, spec, n_paths, workers=cfg.workers or 1, **_suite_kwargs(name, cfg)
            )
        except (ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        reports.append(report)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.echo(),
        "suites": [r.to_dict() for r in reports],
        "passed": all(r.passed for r in reports),
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    fp, own = _open_out(cfg.out)
    try:
        fp.write(text)
    finally:
        if own:
            fp.close()
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.suite}: {status}", file=sys.stderr)
    return 0 if payload["passed"] else 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI-style scenario file; flags override its keys")
    p.add_argument("--kind", choices=KINDS, help="generator kind")
    p.add_argument("--horizon", type=float, help="time horizon")
    p.add_argument("--steps", type=int, help="number of grid steps")
    p.add_argument("--seed", type=int, help="master seed (default: DOLEANS_SEED or 0)")
    p.add_argument("--paths", type=int, help="ensemble size")
    p.add_argument("--qv", choices=("exact", "realized"), help="qv channel convention")
    p.add_argument("--mode", choices=("purejump", "grid"), help="path mode for CSV input")
    p.add_argument("--tolerance", type=float, help="headline tolerance / zero threshold")
    p.add_argument("--nmax", type=int, help="truncation for the timechanged walk")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doleans",
        description="Stochastic exponentials and logarithms on sampled paths.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write generated path CSVs")
    _add_common(g)

    t = sub.add_parser("transform", help="apply transforms to a path CSV")
    t.add_argument("input", help="input path CSV")
    t.add_argument("--op", help="comma-separated chain: " + ", ".join(_TRANSFORM_OPS))
    _add_common(t)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", help="comma-separated suites: " + ", ".join(sorted(SUITES)))
    v.add_argument("--meshes", help="comma-separated mesh levels for the rate suite")
    v.add_argument("--workers", type=int, help="worker processes for ensemble work")
    _add_common(v)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "transform":
            return cmd_transform(args)
        return cmd_verify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
