"""Tokenizer for the surface language.

Produces a flat token stream with line/column spans. Comments (`//` to end
of line) are skipped. Illegal characters and unterminated strings raise
:class:`LexError` carrying the offending position.
"""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = {
    "class", "trait", "object", "enum", "extends", "def", "val", "proof",
    "if", "else", "match", "case", "new", "forall", "exists", "true",
    "false", "this",
}

# Multi-char operators, longest first so maximal munch works.
OPERATORS = [
    "=>:", "==", "!=", "<=", ">=", "&&", "||", "=>", "<:", "=", "<", ">",
    "+", "-", "*", "/", "!", ".", ",", ":", ";", "(", ")", "[", "]",
    "{", "}", "|", "_", "@",
]


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'int' | 'string' | 'kw' | 'op' | 'eof'
    text: str
    span: Span


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


def tokenize(source: str) -> list[Token]:
    """Tokenize ``source`` into a list of tokens ending with an EOF token."""
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def make_span(sl: int, sc: int) -> Span:
        return Span(sl, sc, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_" and i + 1 < n and (source[i + 1].isalnum() or source[i + 1] == "_"):
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            col += j - i
            i = j
            kind = "kw" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, make_span(start_line, start_col)))
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            tokens.append(Token("int", text, make_span(start_line, start_col)))
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError("unterminated string literal", start_line, start_col)
                c = source[j]
                if c == '"':
                    j += 1
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise LexError("unterminated string literal", start_line, start_col)
                    esc = source[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                    continue
                buf.append(c)
                j += 1
            col += j - i
            i = j
            tokens.append(Token("string", "".join(buf), make_span(start_line, start_col)))
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                i += len(op)
                col += len(op)
                tokens.append(Token("op", op, make_span(start_line, start_col)))
                break
        else:
            raise LexError(f"illegal character {ch!r}", line, col)
    tokens.append(Token("eof", "", Span(line, col, line, col)))
    return tokens
