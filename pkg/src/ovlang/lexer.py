"""Tokenizer for .ov source text."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import OvError

KEYWORDS = {
    "class", "extends", "where", "inv", "final", "main", "new", "this",
    "null", "true", "false", "int", "bool", "uint", "uint256", "void",
    "atomic", "fork", "valid", "require", "emit", "return", "throw",
    "public", "private", "var", "top", "bot",
}

# Longest match first.
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<num>[0-9]+(?:[eE][0-9]+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><<|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=
      |[{}()\[\]<>,;.=!+\-*/%])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # 'num', 'id', keyword text, or operator text
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"Token({self.kind!r},{self.text!r},{self.line}:{self.col})"


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(src)
    while pos < n:
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise OvError("E-PARSE", f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        if m.lastgroup == "num":
            toks.append(Token("num", text, line, col))
        elif m.lastgroup == "id":
            kind = text if text in KEYWORDS else "id"
            toks.append(Token(kind, text, line, col))
        elif m.lastgroup == "op":
            toks.append(Token(text, text, line, col))
        # whitespace and comments are dropped
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


def num_value(text: str) -> int:
    """Integer value of a numeric literal, including 1e30-style spellings."""
    if "e" in text or "E" in text:
        mant, _, exp = text.replace("E", "e").partition("e")
        return int(mant) * 10 ** int(exp)
    return int(text)
