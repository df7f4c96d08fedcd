"""Structured verification reports shared by every module and the CLI."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any

from .linalg import Rational, SparseFunctional, CoordVector, format_rational

PASS = "pass"
FAIL = "fail"
AUDIT_PASS = "audit-pass"
AUDIT_FAIL = "audit-fail"
SKIPPED = "skipped"

STATUSES = (PASS, FAIL, AUDIT_PASS, AUDIT_FAIL, SKIPPED)


def jsonable(value: Any) -> Any:
    """Convert exact values (rationals, functionals, vectors) into JSON-ready data."""
    if isinstance(value, Rational):
        return format_rational(value)
    if isinstance(value, SparseFunctional):
        return value.to_list()
    if isinstance(value, CoordVector):
        return {"window": value.window, "coords": value.to_list()}
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return [jsonable(v) for v in sorted(value)]
    return value


@dataclass
class Check:
    id: str
    ref: str
    status: str
    witness: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def to_dict(self) -> dict:
        return {"id": self.id, "ref": self.ref, "status": self.status, "witness": jsonable(self.witness)}


@dataclass
class Report:
    suite: str
    checks: list[Check] = field(default_factory=list)
    elapsed_ms: int = 0

    def add(self, id: str, ref: str, ok: bool, audit: bool = False, **witness) -> Check:
        if audit:
            status = AUDIT_PASS if ok else AUDIT_FAIL
        else:
            status = PASS if ok else FAIL
        check = Check(id, ref, status, witness)
        self.checks.append(check)
        return check

    def skip(self, id: str, ref: str, reason: str) -> Check:
        check = Check(id, ref, SKIPPED, {"reason": reason})
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.id, c.ref, c.status, c.witness))

    @property
    def ok(self) -> bool:
        """True iff no non-audit check failed."""
        return not any(c.failed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.failed]

    def get(self, id: str) -> Check:
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "ok": self.ok, "checks": [c.to_dict() for c in self.checks], "elapsed_ms": self.elapsed_ms}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


class timed:
    """Context manager that stamps ``elapsed_ms`` on a report."""

    def __init__(self, report: Report):
        self.report = report

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.elapsed_ms = int((time.perf_counter() - self._t0) * 1000)
        return False
