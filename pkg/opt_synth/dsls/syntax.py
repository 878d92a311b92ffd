"""Tokenizer and parsing helpers shared by the DSL text syntaxes."""
import re
from typing import List, NamedTuple

from opt_synth.api.interval import Interval
from opt_synth.api.space import Constant, ConstantHole


_TOKEN_RE = re.compile(
    r"""
    (?P<number>[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?|[-+]?inf\b)
    |(?P<name>[A-Za-z_][A-Za-z_0-9]*)
    |(?P<op>\?\?|>=|[()\[\],*+;&])
    |(?P<space>\s+)
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ValueError(f"Unexpected character {text[pos]!r} at {pos} in `{text}`")
        kind = match.lastgroup
        if kind != "space":
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class Parser:
    """Recursive-descent helper over a token list. DSL parsers subclass it
    and implement `parse`."""

    def __init__(self, text: str):
        self._text = text
        self._tokens = tokenize(text)
        self._pos = 0

    @property
    def current(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def _check(self, text: str) -> bool:
        return self.current.text == text and self.current.kind != "end"

    def _consume(self, expected: str) -> Token:
        if not self._check(expected):
            self._error(f"expected `{expected}`")
        return self._advance()

    def _error(self, message: str):
        token = self.current
        found = token.text if token.kind != "end" else "end of input"
        raise ValueError(
            f"Parse error at {token.pos} in `{self._text}`: {message}, found `{found}`"
        )

    def _number(self) -> float:
        if self.current.kind != "number":
            self._error("expected a number")
        return float(self._advance().text)

    def _at_box(self) -> bool:
        return self._check("[") or self._check("(")

    def _constant(self) -> Constant:
        """A number or a box; `(` and `)` mark open ends, as in `(0,1]`."""
        if not self._at_box():
            return self._number()
        lo_open = self._advance().text == "("
        lo = self._number()
        self._consume(",")
        hi = self._number()
        if not (self._check("]") or self._check(")")):
            self._error("expected `]` or `)`")
        hi_open = self._advance().text == ")"
        if not lo <= hi or (lo == hi and (lo_open or hi_open)):
            self._error(f"empty box {lo},{hi}")
        return ConstantHole(Interval(lo, hi, lo_open, hi_open))

    def _expect_end(self):
        if self.current.kind != "end":
            self._error("unexpected trailing input")
