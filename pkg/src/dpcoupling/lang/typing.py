"""Static typing of programs and assertions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping

from .ast import (
    BOOL, INT, QUERY, Assign, Bars, Binary, BoolLit, Call, Command, EvalQ,
    Expr, If, Index, IntLit, LVar, Program, Sample, Seq, Skip, TVar, Type,
    Unary, Var, While,
)
from .errors import TypeCheckError
from .printer import show_expr


class _Mismatch(Exception):
    pass


def _int_like(t: Type) -> bool:
    return t == INT or t == QUERY


@dataclass
class TypedProgram:
    """A program together with the static type of every sub-expression."""

    program: Program
    var_types: Dict[str, Type]
    expr_types: Dict[Expr, Type] = field(default_factory=dict)

    def type_of(self, e: Expr) -> Type:
        return self.expr_types[e]


class _Typer:
    def __init__(self, env: Mapping[str, Type]):
        self.env = env
        self.errors: List[str] = []
        self.types: Dict[Expr, Type] = {}

    def fail(self, e: Expr, expected: str, actual) -> None:
        self.errors.append(
            f"{show_expr(e)}: expected {expected}, got {actual}")
        raise _Mismatch

    def want(self, e: Expr, pred, expected: str) -> Type:
        t = self.infer(e)
        if not pred(t):
            self.fail(e, expected, t)
        return t

    def infer(self, e: Expr) -> Type:
        t = self._infer(e)
        self.types[e] = t
        return t

    def _infer(self, e: Expr) -> Type:
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, (Var, TVar)):
            if e.name not in self.env:
                self.errors.append(f"undeclared variable {e.name!r}")
                raise _Mismatch
            return self.env[e.name]
        if isinstance(e, LVar):
            return INT
        if isinstance(e, Unary):
            if e.op == "!":
                self.want(e.arg, lambda t: t == BOOL, "bool")
                return BOOL
            self.want(e.arg, lambda t: t == INT, "int")
            return INT
        if isinstance(e, Binary):
            op = e.op
            if op in ("&&", "||", "=>", "<=>"):
                self.want(e.left, lambda t: t == BOOL, "bool")
                self.want(e.right, lambda t: t == BOOL, "bool")
                return BOOL
            if op in ("+", "-", "*"):
                self.want(e.left, lambda t: t == INT, "int")
                self.want(e.right, lambda t: t == INT, "int")
                return INT
            if op in ("<", "<=", ">", ">="):
                self.want(e.left, _int_like, "int")
                self.want(e.right, _int_like, "int")
                return BOOL
            lt = self.infer(e.left)
            rt = self.infer(e.right)
            if lt != rt and not (_int_like(lt) and _int_like(rt)):
                self.fail(e.right, str(lt), rt)
            return BOOL
        if isinstance(e, Bars):
            self.want(e.arg, lambda t: t == INT or t.kind in ("db", "querylist"),
                      "int, db or querylist")
            return INT
        if isinstance(e, Index):
            bt = self.want(e.base, lambda t: t.kind in ("db", "querylist"),
                           "db or querylist")
            self.want(e.index, _int_like, "int")
            return INT if bt.kind == "db" else QUERY
        if isinstance(e, EvalQ):
            self.want(e.query, _int_like, "query")
            self.want(e.db, lambda t: t.kind == "db", "db")
            return INT
        if isinstance(e, Call):
            kinds = ("db", "db") if e.name == "adj" else ("querylist", "db", "db")
            if len(e.args) != len(kinds):
                self.errors.append(
                    f"{e.name} expects {len(kinds)} arguments, got {len(e.args)}")
                raise _Mismatch
            for a, k in zip(e.args, kinds):
                self.want(a, lambda t, k=k: t.kind == k, k)
            return BOOL
        raise TypeError(f"not an expression: {e!r}")

    def check(self, e: Expr, expected: Type) -> None:
        try:
            t = self.infer(e)
            if t != expected and not (_int_like(t) and _int_like(expected)):
                self.fail(e, str(expected), t)
        except _Mismatch:
            pass

    def command(self, c: Command) -> None:
        if isinstance(c, Skip):
            return
        if isinstance(c, Seq):
            for s in c.cmds:
                self.command(s)
        elif isinstance(c, Assign):
            self.check(c.expr, self.env[c.var])
        elif isinstance(c, Sample):
            if self.env[c.var] != INT:
                self.errors.append(
                    f"sampling target {c.var}: expected int, got {self.env[c.var]}")
            self.check(c.center, INT)
        elif isinstance(c, If):
            self.check(c.cond, BOOL)
            self.command(c.then)
            self.command(c.orelse)
        elif isinstance(c, While):
            self.check(c.cond, BOOL)
            self.command(c.body)
        else:
            raise TypeError(f"not a command: {c!r}")


def type_of(e: Expr, env: Mapping[str, Type]) -> Type:
    """Type of a single expression or assertion; raises TypeCheckError."""
    t = _Typer(env)
    try:
        return t.infer(e)
    except _Mismatch:
        raise TypeCheckError(t.errors) from None


def typecheck(p: Program) -> TypedProgram:
    """Type-check ``p``; raises TypeCheckError listing every mismatch."""
    env = {d.name: d.type for d in p.decls}
    t = _Typer(env)
    t.command(p.body)
    if t.errors:
        raise TypeCheckError(t.errors)
    return TypedProgram(p, env, t.types)


def check_assertion(e: Expr, env: Mapping[str, Type]) -> None:
    """Require an assertion to be boolean-typed."""
    t = type_of(e, env)
    if t != BOOL:
        raise TypeCheckError([f"{show_expr(e)}: expected bool, got {t}"])
