"""Command-line entry point.

Subcommands: gamma, renorm, line-tension, verify, dump-field, flat-distance.
Exit codes: 0 success, 1 configuration error, 2 property-suite failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from ..configurations import discrete_vortex, half_vortex_even_odd, recovery_configuration
from ..continuum import SingularityConfig
from ..fields import dump_csv
from ..stacking import line_tension
from ..vorticity import flat_distance
from .config import ConfigError, StudyConfig, config_hash, load_config, parse_config
from .studies import run_gamma_study, run_property_suite, run_renormalization_study

__all__ = ["main", "build_parser"]

COMMANDS = ("gamma", "renorm", "line-tension", "verify", "dump-field", "flat-distance")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stackfault", description="Partial-edge dislocation experiments")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON configuration file (required except for verify)")
    p.add_argument("--out", help="output path (default: the config's output, else stdout)")
    p.add_argument("--seed", type=int, help="overrides the configuration seed")
    p.add_argument("--threads", type=int, help="worker threads for ladder points")
    return p


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump_field(cfg: StudyConfig) -> str:
    g = cfg.generator
    eps = float(g["eps"])
    omega = cfg.omega()
    if g["name"] == "discrete_vortex":
        u = discrete_vortex(eps, domain=omega)
    elif g["name"] == "half_vortex":
        u = half_vortex_even_odd(eps, tuple(cfg.x0), g.get("variant", "same-cut"), domain=omega)
    else:
        mu = SingularityConfig.from_measure(cfg.measure("mu"))
        u = recovery_configuration(eps, mu, omega, cfg.sigma, cfg.alpha[0]).field
    return f"# config_hash={config_hash(cfg)}\n" + dump_csv(u)


def run(cfg: StudyConfig, command: str) -> tuple[str, int]:
    """Execute ``command`` for ``cfg``; returns (text output, exit code)."""
    if command == "gamma":
        return run_gamma_study(cfg), 0
    if command == "renorm":
        return run_renormalization_study(cfg), 0
    if command == "line-tension":
        L, S = line_tension(cfg.measure("mu"), cfg.omega())
        return json.dumps({"config_hash": config_hash(cfg), "L": L, "fault": json.loads(S.to_json())}), 0
    if command == "flat-distance":
        d = flat_distance(cfg.measure("mu"), cfg.measure("nu"), cfg.omega())
        return json.dumps({"config_hash": config_hash(cfg), "distance": d}), 0
    if command == "dump-field":
        return _dump_field(cfg), 0
    rep = run_property_suite(cfg.seed, cfg.sizes)
    rep["config_hash"] = config_hash(cfg)
    return json.dumps(rep, indent=1), 0 if rep["passed"] else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, args.seed)
        elif args.command == "verify":
            cfg = parse_config('{"kind": "verify"}', args.seed)
        else:
            raise ConfigError(f"line 0: --config is required for {args.command}")
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("line 0: --threads must be positive")
            cfg.threads = args.threads
        if cfg.kind != args.command:
            raise ConfigError(f"line 1: config kind {cfg.kind!r} does not match command {args.command!r}")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    text, code = run(cfg, args.command)
    _emit(text, args.out or cfg.output)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
