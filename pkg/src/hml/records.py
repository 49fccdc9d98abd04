"""Verification records and deterministic number formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import mpmath

__all__ = ["VerificationRecord", "to_float", "hex_float", "fmt_num", "plain", "records_json", "rows_csv"]


def to_float(v) -> float:
    if isinstance(v, (mpmath.mpf, int)):
        return float(v)
    if isinstance(v, float):
        return v
    return float(v)


def hex_float(v) -> str:
    return float.hex(to_float(v))


def fmt_num(v) -> str:
    """Shortest round-trip decimal of the double-rounded value."""
    f = to_float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return repr(f)


def plain(v) -> Any:
    """JSON-ready form of numbers, tuples and nested containers."""
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, (float, mpmath.mpf)):
        f = to_float(v)
        return f if math.isfinite(f) else fmt_num(f)
    if isinstance(v, (complex, mpmath.mpc)):
        c = complex(v)
        return [plain(c.real), plain(c.imag)]
    if isinstance(v, dict):
        return {str(k): plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    return str(v)


@dataclass(frozen=True)
class VerificationRecord:
    """One checked quantity: inputs, both sides, the residual and its tolerance."""

    check: str
    params: dict = field(default_factory=dict)
    lhs: Any = None
    rhs: Any = None
    residual: Any = None
    tolerance: Any = None
    passed: bool = False

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "params": plain(self.params),
            "lhs": plain(self.lhs),
            "rhs": plain(self.rhs),
            "residual": plain(self.residual),
            "tolerance": plain(self.tolerance),
            "pass": bool(self.passed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationRecord":
        return cls(d["check"], d.get("params", {}), d.get("lhs"), d.get("rhs"),
                   d.get("residual"), d.get("tolerance"), bool(d["pass"]))

    @classmethod
    def bound(cls, check: str, params: dict, value, limit, lhs=None, rhs=None) -> "VerificationRecord":
        """Record asserting value <= limit."""
        ok = to_float(value) <= to_float(limit)
        return cls(check, params, value if lhs is None else lhs, rhs, value, limit, ok)


def records_json(records: Iterable[VerificationRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=1, sort_keys=True) + "\n"


def rows_csv(columns: Sequence[str], rows: Iterable[Sequence], hex_columns: Sequence[str] = ()) -> str:
    """CSV text with fixed formatting; every column in ``hex_columns`` gains a ``_hex`` twin."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    idx = [columns.index(c) for c in hex_columns]
    w.writerow(list(columns) + [c + "_hex" for c in hex_columns])
    for row in rows:
        cells = [v if isinstance(v, str) else (str(v) if isinstance(v, (int, bool)) and not isinstance(v, float)
                                               else fmt_num(v)) for v in row]
        cells += [hex_float(row[i]) for i in idx]
        w.writerow(cells)
    return buf.getvalue()
