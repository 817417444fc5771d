"""Human-readable rendering of positioned errors: line excerpt plus caret."""

from __future__ import annotations

from .lexer import LexError, Span
from .parser import ParseDiagnostic, ParseErrors


def format_diagnostic(error: object, source: str) -> str:
    """Render a lex/parse/type error against its source text."""
    if isinstance(error, LexError):
        return _render(source, error.line, error.col, error.message)
    if isinstance(error, ParseDiagnostic):
        return _render(source, error.span.line, error.span.col, error.message)
    if isinstance(error, ParseErrors):
        return "\n".join(format_diagnostic(e, source) for e in error.errors)
    span = getattr(error, "span", None)
    message = getattr(error, "message", str(error))
    if isinstance(span, Span) and span.line > 0:
        return _render(source, span.line, span.col, message)
    return message


def _render(source: str, line: int, col: int, message: str) -> str:
    lines = source.splitlines()
    out = [f"error: line {line}, column {col}: {message}"]
    if 1 <= line <= len(lines):
        excerpt = lines[line - 1]
        out.append(f"  {excerpt}")
        out.append("  " + " " * (col - 1) + "^")
    return "\n".join(out)
