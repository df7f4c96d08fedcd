"""Run configuration: parsing, validation, hashing and building the selected space."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .ah import INF, AHParams, AHSpace, NetSpec, build_ah_space
from .engine import BDSpace
from .linalg import format_rational, parse_rational
from .original import DEFAULT_BUDGET, OrigParams, build_original
from .serialize import Cache, config_hash, dumps_space, loads_space
from .shift import build_r2

SPACES = ("original", "xk", "xinf", "r2")

DEFAULTS: dict = {
    "space": "r2",
    "out": "bdspaces-out",
    "format": "json",
    "jobs": 1,
    "budget": DEFAULT_BUDGET,
    "r2": {"max_rank": 12},
    "original": {"a": "1", "b": "1/3", "lam": None, "max_rank": 5},
    "ah": {
        "kind": "k:3",
        "m_seq": [4, 5, 6, 17, 18, 19, 20, 21],
        "n_seq": [2, 3, 4, 5, 6, 7, 8, 9],
        "toy_mode": True,
        "max_rank": 6,
        "net": {"denominator_bound": 2, "support_cap": 2, "mode": "sampled", "seed": 0, "count": 4, "include_zero": True},
        "element_budget": None,
    },
}


class ConfigError(ValueError):
    """The configuration is malformed; raised before anything is built."""


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _rational(value, name):
    if value is None:
        return None
    try:
        return parse_rational(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{name}: {value!r} is not an exact rational 'p/q'") from exc


def parse_kind(value) -> object:
    if value in (INF, "xinf"):
        return INF
    if isinstance(value, int):
        return value
    text = str(value)
    if text.startswith("k:") and text[2:].isdigit():
        return int(text[2:])
    raise ConfigError(f"ah.kind must be 'k:<int>' or 'inf', got {value!r}")


@dataclass
class RunConfig:
    space: str
    params: Any
    max_rank: int
    out: Path
    format: str = "json"
    jobs: int = 1
    budget: Optional[int] = DEFAULT_BUDGET
    raw: dict = field(default_factory=dict)

    def build_params(self) -> dict:
        """Everything that affects construction (and so the cache key)."""
        return {"space": self.space, "params": self.raw["normalized"]}

    @property
    def digest(self) -> str:
        return config_hash(self.build_params())


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None, rank: Optional[int] = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``; ``rank`` sets the selected space's max_rank."""
    raw = copy.deepcopy(DEFAULTS)
    if path:
        try:
            raw = _merge(raw, json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    raw = _merge(raw, overrides or {})
    if rank is not None:
        block = {"r2": "r2", "original": "original"}.get(raw.get("space"), "ah")
        raw = _merge(raw, {block: {"max_rank": rank}})
    return validate(raw)


def validate(raw: dict) -> RunConfig:
    space = raw.get("space")
    if space not in SPACES:
        raise ConfigError(f"space must be one of {', '.join(SPACES)}, got {space!r}")
    fmt = raw.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {fmt!r}")
    jobs = int(raw.get("jobs", 1))
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    budget = raw.get("budget")
    budget = None if budget is None else int(budget)
    try:
        if space == "r2":
            block = raw["r2"]
            params, max_rank = None, int(block["max_rank"])
            if max_rank < 1:
                raise ConfigError("r2.max_rank must be positive")
        elif space == "original":
            block = raw["original"]
            a = _rational(block["a"], "original.a")
            b = _rational(block["b"], "original.b")
            lam = _rational(block.get("lam"), "original.lam")
            params, max_rank = OrigParams(a, b, lam), int(block["max_rank"])
        else:
            block = raw["ah"]
            kind = INF if space == "xinf" else parse_kind(block["kind"])
            if space == "xk" and kind == INF:
                raise ConfigError("space xk needs a finite ah.kind such as 'k:3'")
            net = NetSpec(**block.get("net", {}))
            params = AHParams(
                kind,
                tuple(block["m_seq"]),
                tuple(block["n_seq"]),
                bool(block.get("toy_mode", True)),
                int(block["max_rank"]),
                net,
                budget if block.get("element_budget") is None else int(block["element_budget"]),
            )
            max_rank = params.max_rank
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid {space} parameters: {exc}") from exc
    raw["normalized"] = _normalized(space, params, max_rank)
    return RunConfig(space, params, max_rank, Path(raw.get("out", "bdspaces-out")), fmt, jobs, budget, raw)


def _normalized(space: str, params, max_rank: int) -> dict:
    if space == "r2":
        return {"max_rank": max_rank}
    if space == "original":
        return {"a": format_rational(params.a), "b": format_rational(params.b), "lam": format_rational(params.lam), "max_rank": max_rank}
    net = params.net
    return {
        "kind": params.kind,
        "m_seq": list(params.m_seq),
        "n_seq": list(params.n_seq),
        "toy_mode": params.toy_mode,
        "max_rank": max_rank,
        "net": {
            "denominator_bound": net.denominator_bound,
            "support_cap": net.support_cap,
            "mode": net.mode,
            "seed": net.seed,
            "count": net.count,
            "include_zero": net.include_zero,
        },
    }


@dataclass
class Built:
    """A built space plus whatever module-specific state came with it."""

    cfg: RunConfig
    space: BDSpace
    ah: Optional[AHSpace] = None
    from_cache: bool = False


def build(cfg: RunConfig) -> Built:
    if cfg.space == "r2":
        return Built(cfg, build_r2(cfg.max_rank, cfg.jobs))
    if cfg.space == "original":
        return Built(cfg, build_original(cfg.params, cfg.max_rank, cfg.budget, cfg.jobs))
    ah = build_ah_space(cfg.params, cfg.jobs)
    return Built(cfg, ah.space, ah)


def serialize(built: Built) -> str:
    extra = built.ah.tables() if built.ah is not None else {}
    header = {"config_hash": built.cfg.digest, "config": built.cfg.build_params()}
    return dumps_space(built.space, header, extra)


def deserialize(cfg: RunConfig, text: str) -> Built:
    space, head, extra = loads_space(text)
    if head.get("config_hash") != cfg.digest:
        raise ValueError("cache entry does not match the configuration hash")
    if cfg.space == "original":
        space.params = cfg.params
    ah = AHSpace.from_tables(cfg.params, space, extra) if cfg.space in ("xk", "xinf") else None
    return Built(cfg, space, ah, from_cache=True)


def build_cached(cfg: RunConfig, cache: Optional[Cache] = None) -> Built:
    """Load the cache entry for ``cfg`` or build and store it."""
    cache = cache or Cache()
    text = cache.get(cfg.digest)
    if text is not None:
        return deserialize(cfg, text)
    built = build(cfg)
    cache.put(cfg.digest, serialize(built))
    return built
