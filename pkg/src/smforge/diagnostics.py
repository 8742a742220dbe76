"""Source spans and diagnostics shared by every pipeline stage.

Diagnostic codes are stable identifiers: tests key on them, so a code is
never renumbered or reused once released. Parse-stage codes are P01..P03,
analysis errors E01..E11, warnings W01..W03.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Span:
    """Half-open region of a source file, 1-based lines and columns."""

    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def merge(self, other: "Span") -> "Span":
        a, b = sorted([self, other], key=lambda s: (s.line, s.col))
        return Span(self.file, a.line, a.col, b.end_line, b.end_col)


DUMMY_SPAN = Span("<none>", 1, 1, 1, 1)


@dataclass(frozen=True, slots=True)
class Diagnostic:
    code: str
    severity: str  # "error" | "warning"
    span: Span
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        return (
            f"{self.span.file}:{self.span.line}:{self.span.col}: "
            f"{self.code} {self.severity}: {self.message}"
        )


def error(code: str, span: Span, message: str) -> Diagnostic:
    return Diagnostic(code, "error", span, message)


def warning(code: str, span: Span, message: str) -> Diagnostic:
    return Diagnostic(code, "warning", span, message)


def sort_diagnostics(diags: list[Diagnostic]) -> list[Diagnostic]:
    """Stable report order: by file, then span start, then code."""
    return sorted(diags, key=lambda d: (d.span.file, d.span.line, d.span.col, d.code))


def diagnostics_to_text(diags: list[Diagnostic]) -> str:
    return "\n".join(str(d) for d in diags)


def diagnostics_to_json(diags: list[Diagnostic]) -> str:
    rows = [
        {
            "code": d.code,
            "severity": d.severity,
            "file": d.span.file,
            "line": d.span.line,
            "col": d.span.col,
            "endLine": d.span.end_line,
            "endCol": d.span.end_col,
            "message": d.message,
        }
        for d in diags
    ]
    return json.dumps(rows, indent=2)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)
