"""Abstract syntax for pWhile programs and relational assertions.

Program expressions and relational assertions share one expression type:
assertions additionally use tagged variables (``x<1>``, ``x<2>``), logical
variables and the ``adj``/``sens1`` predicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple, Union


# ---------------------------------------------------------------------------
# Types and values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Type:
    kind: str  # "int" | "bool" | "db" | "querylist" | "query"
    size: Optional[int] = None

    def __str__(self) -> str:
        if self.size is None:
            return self.kind
        return f"{self.kind}({self.size})"


INT = Type("int")
BOOL = Type("bool")
QUERY = Type("query")


def db_type(n: int) -> Type:
    return Type("db", n)


def querylist_type(n: int) -> Type:
    return Type("querylist", n)


# ints and query indices are Python ints, databases and query lists are
# tuples of ints
Value = Union[int, bool, Tuple[int, ...]]


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class TVar(Expr):
    """Program variable read from memory 1 or memory 2."""

    name: str
    side: int


@dataclass(frozen=True)
class LVar(Expr):
    """Logical variable bound by a proof script (untagged)."""

    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" | "!"
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Bars(Expr):
    """``|e|``: absolute value on ints, length on databases and query lists."""

    arg: Expr


@dataclass(frozen=True)
class Index(Expr):
    """1-based indexing into a database or query list."""

    base: Expr
    index: Expr


@dataclass(frozen=True)
class EvalQ(Expr):
    query: Expr
    db: Expr


@dataclass(frozen=True)
class Call(Expr):
    """Built-in relational predicates ``adj`` and ``sens1``."""

    name: str
    args: Tuple[Expr, ...]


ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||", "=>", "<=>")
PREDICATES = ("adj", "sens1")

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def conj(*parts: Expr) -> Expr:
    """Right-nested conjunction, dropping literal ``true``."""
    items = [p for p in parts if p != TRUE]
    if not items:
        return TRUE
    out = items[-1]
    for p in reversed(items[:-1]):
        out = Binary("&&", p, out)
    return out


def conjuncts(e: Expr) -> list:
    """Flatten top-level conjunctions."""
    if isinstance(e, Binary) and e.op == "&&":
        return conjuncts(e.left) + conjuncts(e.right)
    if e == TRUE:
        return []
    return [e]


def neg(e: Expr) -> Expr:
    return Unary("!", e)


def implies(a: Expr, b: Expr) -> Expr:
    return Binary("=>", a, b)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

class Command:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Command):
    pass


@dataclass(frozen=True)
class Assign(Command):
    var: str
    expr: Expr


@dataclass(frozen=True)
class Sample(Command):
    """``var <-$ dist(scale*eps, center)`` with ``dist`` in {lap, oslap}."""

    var: str
    dist: str
    scale: Fraction
    center: Expr


@dataclass(frozen=True)
class If(Command):
    cond: Expr
    then: Command
    orelse: Command = field(default_factory=Skip)


@dataclass(frozen=True)
class While(Command):
    cond: Expr
    body: Command


@dataclass(frozen=True)
class Seq(Command):
    cmds: Tuple[Command, ...]


def as_list(c: Command) -> list:
    """View a command as a flat statement list (``skip`` is empty)."""
    if isinstance(c, Seq):
        out = []
        for sub in c.cmds:
            out.extend(as_list(sub))
        return out
    if isinstance(c, Skip):
        return []
    return [c]


def from_list(cmds) -> Command:
    cmds = [c for sub in cmds for c in as_list(sub)]
    if not cmds:
        return Skip()
    if len(cmds) == 1:
        return cmds[0]
    return Seq(tuple(cmds))


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decl:
    name: str
    type: Type
    domain: Optional[Tuple[Value, ...]] = None
    is_input: bool = False
    domain_src: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Program:
    decls: Tuple[Decl, ...]
    body: Command
    returns: Tuple[str, ...]

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.decls)

    @property
    def inputs(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.decls if d.is_input)
