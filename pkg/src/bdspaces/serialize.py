"""JSON serialization of built spaces and the content-addressed build cache."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Optional

from .engine import BDSpace, Trivial, Type0, Type1, Type2
from .linalg import Q, Rational, SparseFunctional, format_rational

FORMAT_VERSION = 1
CACHE_ENV = "BDSPACES_CACHE"


def encode_key(key: Any) -> Any:
    """Tuples become lists and rationals become {"q": "p/q"}; ints and strings pass through."""
    if isinstance(key, Rational):
        return {"q": format_rational(key)}
    if isinstance(key, tuple):
        return [encode_key(k) for k in key]
    if key is None or isinstance(key, (int, str)):
        return key
    raise TypeError(f"cannot encode key component {key!r}")


def decode_key(data: Any) -> Any:
    if isinstance(data, list):
        return tuple(decode_key(d) for d in data)
    if isinstance(data, dict):
        return Q(data["q"])
    return data


def _fmt(q) -> str:
    return format_rational(q)


def encode_tau(desc) -> dict:
    if isinstance(desc, Trivial):
        return {"type": "trivial"}
    if isinstance(desc, Type0):
        return {"type": "0", "eps": desc.eps, "alpha": _fmt(desc.alpha), "xi": desc.xi}
    if isinstance(desc, Type1):
        return {"type": "1", "p": desc.p, "beta": _fmt(desc.beta), "bstar": desc.bstar.to_list()}
    if isinstance(desc, Type2):
        return {
            "type": "2",
            "eps": desc.eps,
            "alpha": _fmt(desc.alpha),
            "xi": desc.xi,
            "p": desc.p,
            "beta": _fmt(desc.beta),
            "bstar": desc.bstar.to_list(),
        }
    raise TypeError(f"unknown descriptor {desc!r}")


def decode_tau(d: dict):
    t = d["type"]
    if t == "trivial":
        return Trivial()
    if t == "0":
        return Type0(d["eps"], Q(d["alpha"]), d["xi"])
    if t == "1":
        return Type1(d["p"], Q(d["beta"]), SparseFunctional.from_list(d["bstar"]))
    if t == "2":
        return Type2(d["eps"], Q(d["alpha"]), d["xi"], d["p"], Q(d["beta"]), SparseFunctional.from_list(d["bstar"]))
    raise ValueError(f"unknown descriptor type {t!r}")


def space_to_dict(space: BDSpace, header: Optional[dict] = None, extra: Optional[dict] = None) -> dict:
    elements = []
    for g in range(len(space)):
        elements.append(
            {
                "id": g,
                "rank": space.ranks[g],
                "key": encode_key(space.keys[g]),
                "tau": encode_tau(space.taus[g]),
                "cstar": space.cstar[g].to_list(),
            }
        )
    head = {
        "format": FORMAT_VERSION,
        "label": space.label,
        "theta": None if space.theta is None else _fmt(space.theta),
        "max_rank": space.max_rank,
        "offsets": list(space.offsets),
    }
    head.update(header or {})
    return {"header": head, "elements": elements, "extra": extra or {}}


def dumps_space(space: BDSpace, header: Optional[dict] = None, extra: Optional[dict] = None) -> str:
    return json.dumps(space_to_dict(space, header, extra), sort_keys=True, separators=(",", ":"))


def space_from_dict(data: dict) -> tuple[BDSpace, dict, dict]:
    """Rebuild a space from its tables; returns (space, header, extra)."""
    head = data["header"]
    if head.get("format") != FORMAT_VERSION:
        raise ValueError(f"unsupported format {head.get('format')!r}")
    space = BDSpace(None if head["theta"] is None else Q(head["theta"]), head.get("label", ""))
    for i, el in enumerate(data["elements"]):
        if el["id"] != i:
            raise ValueError(f"element table out of order at position {i}")
        key = decode_key(el["key"])
        space.index[key] = i
        space.keys.append(key)
        space.ranks.append(el["rank"])
        space.taus.append(decode_tau(el["tau"]))
        space.cstar.append(SparseFunctional.from_list(el["cstar"]))
    space.offsets = list(head["offsets"])
    if space.offsets[-1] != len(space.keys):
        raise ValueError("offsets do not match the element table")
    return space, head, data.get("extra", {})


def loads_space(text: str) -> tuple[BDSpace, dict, dict]:
    return space_from_dict(json.loads(text))


def spaces_equal(a: BDSpace, b: BDSpace) -> bool:
    """Structural equality of the finalized tables."""
    return (
        a.theta == b.theta
        and a.offsets == b.offsets
        and a.keys == b.keys
        and a.ranks == b.ranks
        and a.taus == b.taus
        and a.cstar == b.cstar
    )


def config_hash(build_params: dict) -> str:
    """SHA-256 of the canonical JSON of every parameter that affects construction."""
    text = json.dumps(build_params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def cache_root() -> Path:
    root = os.environ.get(CACHE_ENV)
    return Path(root) if root else Path.home() / ".cache" / "bdspaces"


class Cache:
    """Directory of serialized spaces named by config hash."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root is not None else cache_root()

    def path(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> Optional[str]:
        p = self.path(digest)
        return p.read_text() if p.exists() else None

    def put(self, digest: str, text: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        p = self.path(digest)
        tmp = p.with_suffix(".tmp")
        tmp.write_text(text)
        tmp.replace(p)
        return p
