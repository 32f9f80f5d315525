"""Syntactic analyses: free variables, modified variables, liveness."""

from __future__ import annotations

from typing import FrozenSet, Set

from .ast import (
    Assign, Bars, Binary, BoolLit, Call, Command, EvalQ, Expr, If, Index,
    IntLit, LVar, Sample, Seq, Skip, TVar, Unary, Var, While,
)


def _walk(e: Expr):
    yield e
    if isinstance(e, Unary):
        yield from _walk(e.arg)
    elif isinstance(e, Binary):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, Bars):
        yield from _walk(e.arg)
    elif isinstance(e, Index):
        yield from _walk(e.base)
        yield from _walk(e.index)
    elif isinstance(e, EvalQ):
        yield from _walk(e.query)
        yield from _walk(e.db)
    elif isinstance(e, Call):
        for a in e.args:
            yield from _walk(a)


def free_vars(e: Expr) -> FrozenSet[str]:
    """Program variables occurring in ``e`` (tags ignored)."""
    return frozenset(n.name for n in _walk(e) if isinstance(n, (Var, TVar)))


def tagged_vars(e: Expr) -> FrozenSet[tuple]:
    """``(name, side)`` pairs of the tagged variables in an assertion."""
    return frozenset((n.name, n.side) for n in _walk(e) if isinstance(n, TVar))


def logical_vars(e: Expr) -> FrozenSet[str]:
    return frozenset(n.name for n in _walk(e) if isinstance(n, LVar))


def modified_vars(c: Command) -> FrozenSet[str]:
    """All assignment and sampling targets of ``c``."""
    if isinstance(c, (Assign, Sample)):
        return frozenset([c.var])
    if isinstance(c, Seq):
        out: Set[str] = set()
        for s in c.cmds:
            out |= modified_vars(s)
        return frozenset(out)
    if isinstance(c, If):
        return modified_vars(c.then) | modified_vars(c.orelse)
    if isinstance(c, While):
        return modified_vars(c.body)
    return frozenset()


def live_before(c: Command, live_out: FrozenSet[str]) -> FrozenSet[str]:
    """Variables whose value at entry of ``c`` may influence ``live_out``."""
    if isinstance(c, Skip):
        return live_out
    if isinstance(c, Assign):
        return (live_out - {c.var}) | free_vars(c.expr)
    if isinstance(c, Sample):
        return (live_out - {c.var}) | free_vars(c.center)
    if isinstance(c, Seq):
        live = live_out
        for s in reversed(c.cmds):
            live = live_before(s, live)
        return live
    if isinstance(c, If):
        return (free_vars(c.cond) | live_before(c.then, live_out)
                | live_before(c.orelse, live_out))
    if isinstance(c, While):
        live = live_out | free_vars(c.cond)
        while True:
            nxt = live | live_before(c.body, live)
            if nxt == live:
                return live
            live = nxt
    raise TypeError(f"not a command: {c!r}")


def is_literal(e: Expr) -> bool:
    return isinstance(e, (IntLit, BoolLit))


def walk_commands(c: Command, depth: int = 0):
    """Yield ``(command, loop depth)`` for every sub-command."""
    yield c, depth
    if isinstance(c, Seq):
        for sub in c.cmds:
            yield from walk_commands(sub, depth)
    elif isinstance(c, If):
        yield from walk_commands(c.then, depth)
        yield from walk_commands(c.orelse, depth)
    elif isinstance(c, While):
        yield from walk_commands(c.body, depth + 1)
