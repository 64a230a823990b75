"""Stable machine-readable output: certificate records as JSON, studies as CSV.

The JSON emitter renders floats with 17 significant digits (round-trippable),
uses a fixed field order, and writes no timestamps, so identical inputs give
byte-identical output.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import __version__

__all__ = [
    "CertificateRecord",
    "SCHEMA_VERSION",
    "canonical_digest",
    "emit_convergence_csv",
    "emit_json",
    "parse_records",
]

SCHEMA_VERSION = "1"

_KINDS = ("binding", "lemma1", "theorem", "hypothesis")


@dataclass(frozen=True)
class CertificateRecord:
    """One certified (or refuted) statement with its inputs digest and margins."""

    kind: str
    inputs_digest: str
    values: dict[str, float]
    passed: bool
    tolerances: dict[str, float] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    toolkit_version: str = __version__

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"record kind must be one of {_KINDS}, got {self.kind!r}")


def _render_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("records must contain finite numbers only")
    out = format(float(x), ".17g")
    if not any(c in out for c in ".eE"):
        out += ".0"  # keep it a JSON float; "-0" alone would re-parse as int 0
    return out


def _render(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _render_float(obj)
    if isinstance(obj, dict):
        inner = ",".join(f"{json.dumps(str(k))}:{_render(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_render(v) for v in obj) + "]"
    raise TypeError(f"cannot render {type(obj).__name__} deterministically")


def _record_payload(rec: CertificateRecord) -> dict:
    return {
        "kind": rec.kind,
        "inputs_digest": rec.inputs_digest,
        "values": {k: float(rec.values[k]) for k in sorted(rec.values)},
        "flags": {k: bool(rec.flags[k]) for k in sorted(rec.flags)},
        "passed": rec.passed,
        "tolerances": {k: float(rec.tolerances[k]) for k in sorted(rec.tolerances)},
        "toolkit_version": rec.toolkit_version,
    }


def emit_json(records) -> bytes:
    """Serialize records as a schema-versioned JSON document (deterministic bytes)."""
    payload = {
        "schema": SCHEMA_VERSION,
        "records": [_record_payload(r) for r in records],
    }
    return _render(payload).encode("ascii")


def parse_records(data: bytes) -> list[CertificateRecord]:
    """Inverse of emit_json; round-trips every emitted stream exactly."""
    doc = json.loads(data.decode("ascii"))
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema {doc.get('schema')!r}")
    out = []
    for raw in doc["records"]:
        out.append(
            CertificateRecord(
                kind=raw["kind"],
                inputs_digest=raw["inputs_digest"],
                values={k: float(v) for k, v in raw["values"].items()},
                passed=bool(raw["passed"]),
                tolerances={k: float(v) for k, v in raw["tolerances"].items()},
                flags={k: bool(v) for k, v in raw.get("flags", {}).items()},
                toolkit_version=raw["toolkit_version"],
            )
        )
    return out


def emit_convergence_csv(study) -> bytes:
    """Per-grid eigenvalue table: header `L,N,eigenvalue,residual,iterations`."""
    if not study.rows:
        raise ValueError("study has no rows")
    lines = ["L,N,eigenvalue,residual,iterations"]
    for row in study.rows:
        res = row.result
        lines.append(
            ",".join(
                (
                    _render_float(row.grid.length),
                    str(row.grid.points),
                    _render_float(res.eigenvalue),
                    _render_float(res.residual),
                    str(res.iterations),
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("ascii")


def canonical_digest(obj) -> str:
    """sha256 of the canonical JSON form of a config-like nested structure."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_digest_default)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _digest_default(obj):
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")
