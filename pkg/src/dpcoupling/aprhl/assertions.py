"""Relational assertions: tagging, substitution, evaluation."""

from __future__ import annotations

from typing import Any, Callable, FrozenSet, Hashable, Mapping, Optional, Tuple

from ..lang.ast import (
    Bars, Binary, BoolLit, Call, EvalQ, Expr, Index, IntLit, LVar, TVar, Unary, Var,
    conjuncts,
)
from ..lang.errors import EvalError
from ..lang.evaluate import compile_expr
from ..lang.parser import parse_assertion
from ..lang.printer import show_expr


class UnboundLogicalVariable(EvalError):
    pass


def _map(e: Expr, f: Callable[[Expr], Optional[Expr]]) -> Expr:
    """Bottom-up rewrite; ``f`` returns a replacement or None."""
    r = f(e)
    if r is not None:
        return r
    if isinstance(e, Unary):
        return Unary(e.op, _map(e.arg, f))
    if isinstance(e, Binary):
        return Binary(e.op, _map(e.left, f), _map(e.right, f))
    if isinstance(e, Bars):
        return Bars(_map(e.arg, f))
    if isinstance(e, Index):
        return Index(_map(e.base, f), _map(e.index, f))
    if isinstance(e, EvalQ):
        return EvalQ(_map(e.query, f), _map(e.db, f))
    if isinstance(e, Call):
        return Call(e.name, tuple(_map(a, f) for a in e.args))
    return e


def tag(e: Expr, side: int) -> Expr:
    """``e<side>``: tag every program variable of ``e``."""
    return _map(e, lambda n: TVar(n.name, side) if isinstance(n, Var) else None)


def substitute(psi: Expr, side: int, x: str, e: Expr) -> Expr:
    """Replace ``x<side>`` by ``e<side>`` (``e`` is an untagged expression)."""
    te = tag(e, side)
    return _map(psi, lambda n: te if isinstance(n, TVar) and n.name == x and n.side == side else None)


def bind_lvars(psi: Expr, env: Mapping[str, int]) -> Expr:
    """Replace bound logical variables by integer literals."""
    if not env:
        return psi
    return _map(psi, lambda n: IntLit(env[n.name]) if isinstance(n, LVar) and n.name in env else None)


def rename_lvar(psi: Expr, old: str, new: Expr) -> Expr:
    return _map(psi, lambda n: new if isinstance(n, LVar) and n.name == old else None)


def conj_set(e: Expr) -> FrozenSet[Expr]:
    return frozenset(conjuncts(e))


def same_assertion(a: Expr, b: Expr) -> bool:
    """Syntactic equality modulo associativity/commutativity of conjunction."""
    return conj_set(a) == conj_set(b)


def entails_syntactically(a: Expr, b: Expr) -> bool:
    """Every conjunct of ``b`` is a conjunct of ``a``."""
    return conj_set(b) <= conj_set(a)


Key = Tuple[str, Any]


def var_key(node: Expr) -> Key:
    if isinstance(node, TVar):
        return (node.name, node.side)
    if isinstance(node, LVar):
        return (node.name, "lvar")
    raise EvalError(f"untagged program variable {show_expr(node)} in an assertion")


def compile_assertion(psi: Expr) -> Callable[[Mapping[Key, Any]], Any]:
    """Closure evaluating ``psi`` over an environment keyed by
    ``(name, side)`` for tagged variables and ``(name, "lvar")``."""

    def lookup(node):
        key = var_key(node)

        def get(env):
            try:
                return env[key]
            except KeyError:
                if key[1] == "lvar":
                    raise UnboundLogicalVariable(f"unbound logical variable {key[0]!r}") from None
                raise EvalError(f"no value for {key[0]}<{key[1]}>") from None
        return get
    return compile_expr(psi, lookup)


def assertion_eval(psi: Expr, m1: Mapping[str, Any], m2: Mapping[str, Any],
                   env: Optional[Mapping[str, int]] = None) -> bool:
    """Truth of ``psi`` on the memory pair (m1, m2)."""
    env = env or {}

    def lookup(node):
        if isinstance(node, TVar):
            m = m1 if node.side == 1 else m2
            name = node.name
            return lambda _: m[name]
        if isinstance(node, LVar):
            name = node.name
            if name not in env:
                raise UnboundLogicalVariable(f"unbound logical variable {name!r}")
            v = env[name]
            return lambda _: v
        raise EvalError(f"untagged program variable {show_expr(node)} in an assertion")
    return bool(compile_expr(psi, lookup)(None))


def assertion(text: str, declared=None) -> Expr:
    return parse_assertion(text, declared)


def is_true(e: Expr) -> bool:
    return e == BoolLit(True)


def tagged_keys(e: Expr) -> FrozenSet[Hashable]:
    from ..lang.analysis import _walk
    return frozenset(var_key(n) for n in _walk(e) if isinstance(n, (TVar, LVar)))
