"""Deterministic expression semantics.

``compile_expr`` turns an expression into a closure over an environment
object; the caller supplies how variable nodes are looked up.  Every hot path
(interpreter, implication checker) evaluates compiled closures.
"""

from __future__ import annotations

import operator
from typing import Any, Callable, Mapping

from .ast import (
    Bars, Binary, BoolLit, Call, EvalQ, Expr, Index, IntLit, LVar, TVar,
    Unary, Var,
)
from .errors import EvalError

Closure = Callable[[Any], Any]

_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}
_CMP = {
    "=": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


def _bars(v):
    if isinstance(v, tuple):
        return len(v)
    return abs(v)


def _index(seq, i):
    if not isinstance(seq, tuple):
        raise EvalError(f"cannot index {seq!r}")
    if not 1 <= i <= len(seq):
        raise EvalError(f"index {i} out of bounds for length {len(seq)}")
    return seq[i - 1]


def adjacent(d1, d2) -> bool:
    """Componentwise distance at most one."""
    return len(d1) == len(d2) and all(abs(a - b) <= 1 for a, b in zip(d1, d2))


def sens1(queries, d1, d2) -> bool:
    """Every lookup query in ``queries`` differs by at most one on d1, d2."""
    return all(abs(_index(d1, q) - _index(d2, q)) <= 1 for q in queries)


def compile_expr(e: Expr, lookup: Callable[[Expr], Closure]) -> Closure:
    """Compile ``e``; ``lookup`` maps Var/TVar/LVar nodes to closures."""
    if isinstance(e, IntLit) or isinstance(e, BoolLit):
        v = e.value
        return lambda a: v
    if isinstance(e, (Var, TVar, LVar)):
        return lookup(e)
    if isinstance(e, Unary):
        f = compile_expr(e.arg, lookup)
        if e.op == "!":
            return lambda a: not f(a)
        return lambda a: -f(a)
    if isinstance(e, Binary):
        f = compile_expr(e.left, lookup)
        g = compile_expr(e.right, lookup)
        op = e.op
        if op == "&&":
            return lambda a: f(a) and g(a)
        if op == "||":
            return lambda a: f(a) or g(a)
        if op == "=>":
            return lambda a: (not f(a)) or g(a)
        if op == "<=>":
            return lambda a: bool(f(a)) == bool(g(a))
        fn = _ARITH.get(op) or _CMP[op]
        return lambda a: fn(f(a), g(a))
    if isinstance(e, Bars):
        f = compile_expr(e.arg, lookup)
        return lambda a: _bars(f(a))
    if isinstance(e, Index):
        f = compile_expr(e.base, lookup)
        g = compile_expr(e.index, lookup)
        return lambda a: _index(f(a), g(a))
    if isinstance(e, EvalQ):
        f = compile_expr(e.query, lookup)
        g = compile_expr(e.db, lookup)
        return lambda a: _index(g(a), f(a))
    if isinstance(e, Call):
        fs = [compile_expr(x, lookup) for x in e.args]
        if e.name == "adj":
            f, g = fs
            return lambda a: adjacent(f(a), g(a))
        if e.name == "sens1":
            q, f, g = fs
            return lambda a: sens1(q(a), f(a), g(a))
    raise TypeError(f"cannot compile {e!r}")


def _mapping_lookup(node: Expr) -> Closure:
    if isinstance(node, Var):
        name = node.name

        def get(m):
            try:
                return m[name]
            except KeyError:
                raise EvalError(f"unbound variable {name!r}", m) from None
        return get
    raise EvalError(f"{node!r} cannot be evaluated against a single memory")


def eval_expr(e: Expr, m: Mapping[str, Any]):
    """Evaluate a program expression in memory ``m`` (name -> value)."""
    try:
        return compile_expr(e, _mapping_lookup)(m)
    except EvalError as err:
        if err.memory is None:
            err.memory = m
        raise
