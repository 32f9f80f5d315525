"""S-expression proof scripts.

A script is a tree of rule applications::

    (proof :pre "adj(d<1>, d<2>)" :post "r<1> = r<2>" :eps 1
      (forall-eq :var r :lvar v
        (conseq ...)))

Field values are double-quoted strings (assertions and expressions),
integers, fractions such as ``1/2``, bare symbols, or parenthesized lists of
such atoms.  ``;`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Tuple

from ..lang.errors import ParseError


class Symbol(str):
    """A bare identifier in a script (as opposed to a quoted string)."""


@dataclass
class ProofNode:
    rule: str
    fields: Dict[str, Any] = field(default_factory=dict)
    children: List["ProofNode"] = field(default_factory=list)
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def get(self, name: str, default=None):
        return self.fields.get(name, default)


_TOKEN = re.compile(r"""
    (?P<ws>\s+|;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<field>:[A-Za-z][A-Za-z0-9_-]*)
  | (?P<frac>-?[0-9]+/[0-9]+)
  | (?P<int>-?[0-9]+)
  | (?P<symbol>[A-Za-z_][A-Za-z0-9_.-]*)
""", re.VERBOSE)


def _tokens(text: str) -> List[Tuple[str, Any, int, int]]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "string":
            value: Any = re.sub(r"\\(.)", r"\1", s[1:-1])
        elif kind == "field":
            value = s[1:]
        elif kind == "frac":
            num, den = s.split("/")
            if int(den) == 0:
                raise ParseError("zero denominator", line, col)
            value = Fraction(int(num), int(den))
        elif kind == "int":
            value = int(s)
        elif kind == "symbol":
            value = Symbol(s)
        else:
            value = s
        if kind != "ws":
            out.append((kind, value, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    out.append(("eof", None, line, pos - line_start + 1))
    return out


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg: str):
        _, _, line, col = self.tok
        raise ParseError(msg, line, col)

    def node(self) -> ProofNode:
        kind, _, line, col = self.tok
        if kind != "open":
            self.error("expected '('")
        self.i += 1
        kind, name, _, _ = self.tok
        if kind != "symbol":
            self.error("expected a rule name")
        self.i += 1
        node = ProofNode(str(name), line=line, col=col)
        while True:
            kind, value, _, _ = self.tok
            if kind == "close":
                self.i += 1
                return node
            if kind == "field":
                self.i += 1
                if value in node.fields:
                    self.error(f"duplicate field :{value}")
                node.fields[value] = self.value()
            elif kind == "open":
                node.children.append(self.node())
            else:
                self.error("expected a field, a child rule or ')'")

    def value(self):
        kind, value, _, _ = self.tok
        if kind in ("string", "int", "frac", "symbol"):
            self.i += 1
            return value
        if kind == "open":
            nxt = self.toks[self.i + 1][0]
            if nxt == "symbol":
                self.error("a field value cannot be a rule application")
            self.i += 1
            items = []
            while self.tok[0] != "close":
                if self.tok[0] not in ("string", "int", "frac", "symbol"):
                    self.error("expected an atom in the list")
                items.append(self.tok[1])
                self.i += 1
            self.i += 1
            return tuple(items)
        self.error("expected a field value")


def parse_proof(text: str) -> ProofNode:
    r = _Reader(text)
    node = r.node()
    if r.tok[0] != "eof":
        r.error("unexpected input after the proof")
    return node


def _show_value(v) -> str:
    if isinstance(v, Symbol):
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, tuple):
        return "(" + " ".join(_show_value(x) for x in v) + ")"
    return str(v)


def show_proof(node: ProofNode, indent: int = 0) -> str:
    """Render a script; long assertion fields go on their own lines."""
    pad = "  " * indent
    head = pad + "(" + node.rule
    parts = []
    for k, v in node.fields.items():
        parts.append(f":{k} {_show_value(v)}")
    one_line = head + "".join(" " + p for p in parts)
    if len(one_line) <= 100:
        lines = [one_line]
    else:
        lines = [head] + [pad + "    " + p for p in parts]
    for c in node.children:
        lines.append(show_proof(c, indent + 1))
    lines[-1] += ")"
    return "\n".join(lines)
