"""Hand-written tokenizer for the controller language.

Line comments start with `//`. Reals require a decimal point; a bare digit
run is an integer. Keywords are reserved and never usable as identifiers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, Span, error

KEYWORDS = {
    "interface", "var", "event", "op", "machine", "requires", "clock",
    "state", "initial", "final", "transition", "on", "operation", "pre",
    "post", "module", "platform", "controller", "entry", "during", "exit",
    "boolean", "int", "real", "vector2d", "true", "false", "and", "or",
    "not", "since",
}

# multi-char operators first so maximal munch works
_PUNCT = [
    (":=", "ASSIGN"), ("->", "ARROW"), ("==", "EQ"), ("!=", "NE"),
    ("<=", "LE"), (">=", "GE"),
    ("{", "LBRACE"), ("}", "RBRACE"), ("(", "LPAREN"), (")", "RPAREN"),
    ("[", "LBRACKET"), ("]", "RBRACKET"),
    ("<", "LT"), (">", "GT"), ("+", "PLUS"), ("-", "MINUS"),
    ("*", "STAR"), ("/", "SLASH"), ("#", "HASH"), (",", "COMMA"),
    (";", "SEMI"), (":", "COLON"), ("=", "EQUALS"), ("?", "QUESTION"),
]


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # keyword itself, "IDENT", "INT", "REAL", punct name, "EOF"
    text: str
    span: Span


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    """Tokenize `source`; raises LexError on the first bad character."""
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def span_from(l0: int, c0: int) -> Span:
        return Span(filename, l0, c0, line, col)

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
                col += 1
            continue
        l0, c0 = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            col += j - i
            i = j
            kind = text if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, span_from(l0, c0)))
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            kind = "INT"
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                kind = "REAL"
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                # optional exponent, only on reals: 1.5e-12
                if j < n and source[j] in "eE":
                    k = j + 1
                    if k < n and source[k] in "+-":
                        k += 1
                    if k < n and source[k].isdigit():
                        j = k
                        while j < n and source[j].isdigit():
                            j += 1
            text = source[i:j]
            col += j - i
            i = j
            tokens.append(Token(kind, text, span_from(l0, c0)))
            continue
        for lit, name in _PUNCT:
            if source.startswith(lit, i):
                i += len(lit)
                col += len(lit)
                tokens.append(Token(name, lit, span_from(l0, c0)))
                break
        else:
            sp = Span(filename, l0, c0, l0, c0 + 1)
            raise LexError(error("P01", sp, f"unexpected character {ch!r}"))

    tokens.append(Token("EOF", "", Span(filename, line, col, line, col)))
    return tokens
