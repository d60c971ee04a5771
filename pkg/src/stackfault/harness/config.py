"""Study configuration: a single JSON document with unknown keys rejected.

Validation errors carry the line of the offending key in the source text.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from ..lattice import Domain, domain_from_dict
from ..vorticity import VorticityMeasure

__all__ = ["ConfigError", "StudyConfig", "parse_config", "load_config", "config_hash", "KINDS"]

KINDS = ("gamma", "renorm", "line-tension", "verify", "dump-field", "flat-distance")
MODES = ("screw", "pedge", "both")
GENERATORS = ("discrete_vortex", "half_vortex", "recovery")
SOLVER_KEYS = {"tol", "max_sweeps", "restarts"}
GENERATOR_KEYS = {"name", "variant", "eps"}
TOP_KEYS = {"kind", "domain", "mu", "nu", "eps", "sigma", "alpha", "tau1", "tau2", "mode", "x0",
            "solver", "seed", "output", "generator", "sizes", "threads"}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with ``line N:`` when the key is located."""


@dataclass
class StudyConfig:
    kind: str
    domain: dict = field(default_factory=lambda: {"shape": "disc", "center": [0.0, 0.0], "radius": 1.0})
    mu: list = field(default_factory=list)
    nu: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    sigma: float | None = None
    alpha: list = field(default_factory=lambda: [1.0])
    tau1: float = 1.0
    tau2: float = 1.0
    mode: str = "both"
    x0: list = field(default_factory=lambda: [0.0, 0.0])
    solver: dict = field(default_factory=lambda: {"tol": 1e-10, "max_sweeps": 100_000, "restarts": 8})
    seed: int = 0
    output: str | None = None
    generator: dict = field(default_factory=dict)
    sizes: list = field(default_factory=lambda: [16])
    threads: int = 1

    def omega(self) -> Domain:
        return domain_from_dict(self.domain)

    def measure(self, key: str = "mu") -> VorticityMeasure:
        items = getattr(self, key)
        return VorticityMeasure.from_pairs((((it["x"], it["y"]), it["charge"]) for it in items), self.omega())

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(cfg: StudyConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON of the config (output path excluded)."""
    d = cfg.to_dict()
    d.pop("output", None)
    d.pop("threads", None)
    text = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for k, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return k
    return None


def _fail(text: str, key: str, msg: str):
    line = _line_of(text, key)
    raise ConfigError(f"line {line}: {msg}" if line else msg)


def _number(text, key, v, positive=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(text, key, f"{key} must be a finite number, got {v!r}")
    if positive and not v > 0:
        _fail(text, key, f"{key} must be positive, got {v!r}")
    return float(v)


def _measure_list(text, key, v):
    if not isinstance(v, list):
        _fail(text, key, f"{key} must be a list of {{x, y, charge}} objects")
    out = []
    for it in v:
        if not isinstance(it, dict) or set(it) != {"x", "y", "charge"}:
            _fail(text, key, f"{key} entries need exactly the keys x, y, charge")
        if it["charge"] not in (-1, 1) or isinstance(it["charge"], bool):
            _fail(text, key, f"{key} charges must be +1 or -1")
        out.append({"x": _number(text, key, it["x"], False), "y": _number(text, key, it["y"], False),
                    "charge": int(it["charge"])})
    return out


def parse_config(text: str, seed: int | None = None) -> StudyConfig:
    """Parse and validate a JSON study configuration.

    Parameters
    ----------
    text : str
        JSON document.
    seed : int, optional
        Overrides the seed of the document.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("line 1: the configuration must be a JSON object")
    for key in raw:
        if key not in TOP_KEYS:
            _fail(text, key, f"unknown key {key!r}")
    if "kind" not in raw:
        raise ConfigError("line 1: missing required key 'kind'")
    if raw["kind"] not in KINDS:
        _fail(text, "kind", f"kind must be one of {KINDS}, got {raw['kind']!r}")
    cfg = StudyConfig(raw["kind"])
    if "domain" in raw:
        if not isinstance(raw["domain"], dict):
            _fail(text, "domain", "domain must be an object")
        try:
            domain_from_dict(raw["domain"])
        except (ValueError, KeyError, TypeError) as exc:
            _fail(text, "domain", f"invalid domain: {exc}")
        cfg.domain = raw["domain"]
    for key in ("mu", "nu"):
        if key in raw:
            setattr(cfg, key, _measure_list(text, key, raw[key]))
    if "eps" in raw:
        eps = raw["eps"]
        if not isinstance(eps, list) or not eps:
            _fail(text, "eps", "eps must be a non-empty list")
        eps = [_number(text, "eps", e) for e in eps]
        if len(eps) > 1:
            q = [b / a for a, b in zip(eps, eps[1:])]
            if not all(0 < r < 1 for r in q) or max(q) - min(q) > 1e-12 * max(q):
                _fail(text, "eps", "eps ladder must be geometric and decreasing")
        cfg.eps = eps
    if "sigma" in raw:
        cfg.sigma = _number(text, "sigma", raw["sigma"])
    if "alpha" in raw:
        a = raw["alpha"] if isinstance(raw["alpha"], list) else [raw["alpha"]]
        if not a:
            _fail(text, "alpha", "alpha list must not be empty")
        cfg.alpha = [_number(text, "alpha", v) for v in a]
    for key in ("tau1", "tau2"):
        if key in raw:
            setattr(cfg, key, _number(text, key, raw[key]))
    if "mode" in raw:
        if raw["mode"] not in MODES:
            _fail(text, "mode", f"mode must be one of {MODES}")
        cfg.mode = raw["mode"]
    if "x0" in raw:
        x0 = raw["x0"]
        if not isinstance(x0, list) or len(x0) != 2:
            _fail(text, "x0", "x0 must be a pair of numbers")
        cfg.x0 = [_number(text, "x0", v, False) for v in x0]
    if "solver" in raw:
        s = raw["solver"]
        if not isinstance(s, dict):
            _fail(text, "solver", "solver must be an object")
        for k in s:
            if k not in SOLVER_KEYS:
                _fail(text, k, f"unknown solver key {k!r}")
        merged = dict(cfg.solver)
        if "tol" in s:
            merged["tol"] = _number(text, "tol", s["tol"])
        for k in ("max_sweeps", "restarts"):
            if k in s:
                if not isinstance(s[k], int) or isinstance(s[k], bool) or s[k] < (1 if k == "max_sweeps" else 0):
                    _fail(text, k, f"{k} must be a non-negative integer")
                merged[k] = s[k]
        cfg.solver = merged
    for key in ("seed", "threads"):
        if key in raw:
            v = raw[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < (0 if key == "seed" else 1):
                _fail(text, key, f"{key} must be a {'non-negative' if key == 'seed' else 'positive'} integer")
            setattr(cfg, key, v)
    if "output" in raw:
        if raw["output"] is not None and not isinstance(raw["output"], str):
            _fail(text, "output", "output must be a path string")
        cfg.output = raw["output"]
    if "generator" in raw:
        g = raw["generator"]
        if not isinstance(g, dict):
            _fail(text, "generator", "generator must be an object")
        for k in g:
            if k not in GENERATOR_KEYS:
                _fail(text, k, f"unknown generator key {k!r}")
        if g.get("name") not in GENERATORS:
            _fail(text, "name", f"generator name must be one of {GENERATORS}")
        if "eps" in g:
            _number(text, "eps", g["eps"])
        cfg.generator = g
    if "sizes" in raw:
        sz = raw["sizes"]
        if not isinstance(sz, list) or any(not isinstance(n, int) or isinstance(n, bool) or n < 2 for n in sz):
            _fail(text, "sizes", "sizes must be a list of integers >= 2")
        cfg.sizes = sz
    if seed is not None:
        cfg.seed = int(seed)
    _check_kind(text, cfg)
    return cfg


def _check_kind(text: str, cfg: StudyConfig):
    """Kind-specific requirements, including the preconditions of the operations fed."""
    from ..continuum import SingularityConfig, check_sigma

    if cfg.kind in ("gamma", "renorm") and (not cfg.eps or cfg.sigma is None):
        raise ConfigError(f"line 1: kind {cfg.kind!r} needs 'eps' and 'sigma'")
    if cfg.kind == "gamma":
        need = 8.0 if cfg.mode in ("pedge", "both") else 4.0
        for e in cfg.eps:
            if not cfg.sigma > need * e:
                _fail(text, "sigma", f"sigma={cfg.sigma} must exceed {need:g} eps for eps={e}")
    if cfg.kind in ("renorm", "line-tension", "flat-distance"):
        try:
            mu = cfg.measure("mu")
        except ValueError as exc:
            _fail(text, "mu", f"invalid mu: {exc}")
        if cfg.kind == "renorm":
            if mu.mass == 0:
                _fail(text, "mu", "renorm needs at least one dislocation")
            try:
                check_sigma(SingularityConfig.from_measure(mu), cfg.omega(), cfg.sigma)
            except ValueError as exc:
                _fail(text, "sigma", str(exc))
            for e in cfg.eps:
                if not 0.5 * cfg.sigma > 8 * e:
                    _fail(text, "sigma", f"core radius sigma/2={0.5 * cfg.sigma} must exceed 8 eps for eps={e}")
    if cfg.kind == "dump-field":
        if not cfg.generator:
            raise ConfigError("line 1: kind 'dump-field' needs a 'generator'")
        if "eps" not in cfg.generator:
            _fail(text, "generator", "generator needs 'eps'")


def load_config(path: str, seed: int | None = None) -> StudyConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), seed)
