"""Bounded validity of implications between relational assertions.

Validity is decided by enumerating every assignment of the free tagged and
logical variables over finite per-variable ranges.  The search backtracks,
evaluates antecedent conjuncts as soon as their variables are bound, and
solves equalities that are affine in a single unbound variable instead of
enumerating it.  Each consequent conjunct is checked against the part of the
antecedent connected to it through shared variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from ..lang.analysis import _walk
from ..lang.ast import TRUE, Binary, Expr, IntLit, LVar, TVar, Unary, conjuncts
from ..lang.errors import EvalError
from ..lang.printer import show_expr
from .assertions import Key, compile_assertion, tagged_keys

DEFAULT_BUDGET = 10 ** 7
DEFAULT_INT_RANGE = tuple(range(-2, 5))
DEFAULT_LVAR_PROBE = tuple(range(-1, 6))


class ImplicationBudgetExceeded(RuntimeError):
    """The enumeration needed more assignments than the budget allows."""


@dataclass
class ImplicationResult:
    valid: bool
    counterexample: Optional[Dict[str, Any]] = None
    failed_conjunct: Optional[str] = None
    explored: int = 0
    bounded: bool = True

    def __bool__(self) -> bool:
        return self.valid


@dataclass
class Ranges:
    """Finite value ranges used for bounded checking.

    ``by_name`` maps an untagged variable name to its candidate values; the
    same range is used on both sides.  Unlisted integer variables fall back
    to ``default_int``; free logical variables range over ``lvar_probe``.
    """

    by_name: Mapping[str, Sequence[Any]] = field(default_factory=dict)
    default_int: Sequence[int] = DEFAULT_INT_RANGE
    lvar_probe: Sequence[int] = DEFAULT_LVAR_PROBE
    cache: Dict[tuple, "ImplicationResult"] = field(default_factory=dict, repr=False, compare=False)

    def values(self, key: Key) -> Sequence[Any]:
        name, side = key
        if side == "lvar":
            return self.by_name.get("@" + name, self.lvar_probe)
        return self.by_name.get(name, self.default_int)


def show_key(key: Key) -> str:
    return key[0] if key[1] == "lvar" else f"{key[0]}<{key[1]}>"


# ---------------------------------------------------------------------------
# Static analysis of conjuncts
# ---------------------------------------------------------------------------

def _affine_in(e: Expr, target: Key) -> bool:
    """``e`` is an integer expression affine in ``target`` with the target
    only reached through +, -, negation and multiplication by literals."""
    hits = [n for n in _walk(e) if isinstance(n, (TVar, LVar)) and _key(n) == target]
    if not hits:
        return True

    def ok(n: Expr) -> bool:
        if isinstance(n, (TVar, LVar)):
            return True
        if not any(isinstance(m, (TVar, LVar)) and _key(m) == target for m in _walk(n)):
            return True
        if isinstance(n, Unary) and n.op == "-":
            return ok(n.arg)
        if isinstance(n, Binary) and n.op in ("+", "-"):
            return ok(n.left) and ok(n.right)
        if isinstance(n, Binary) and n.op == "*":
            return ((isinstance(n.left, IntLit) and ok(n.right))
                    or (isinstance(n.right, IntLit) and ok(n.left)))
        return False
    return ok(e)


def _key(n: Expr) -> Key:
    return (n.name, n.side) if isinstance(n, TVar) else (n.name, "lvar")


class _Conjunct:
    __slots__ = ("expr", "fn", "keys", "text")

    def __init__(self, expr: Expr):
        self.expr = expr
        self.fn = compile_assertion(expr)
        self.keys = tagged_keys(expr)
        self.text = show_expr(expr)

    def holds(self, env) -> bool:
        try:
            return bool(self.fn(env))
        except EvalError:
            return False
        except (TypeError, ZeroDivisionError):
            return False


class _Pinner:
    """Computes the unique value of ``target`` forced by an equality."""

    __slots__ = ("target", "solve", "needs")

    def __init__(self, target: Key, solve: Callable, needs: FrozenSet[Key]):
        self.target = target
        self.solve = solve
        self.needs = needs


def _pinners(c: _Conjunct) -> List[_Pinner]:
    e = c.expr
    if not (isinstance(e, Binary) and e.op == "="):
        return []
    out = []
    for side_expr, other in ((e.left, e.right), (e.right, e.left)):
        if isinstance(side_expr, (TVar, LVar)):
            target = _key(side_expr)
            if target in tagged_keys(other):
                continue
            fn = compile_assertion(other)

            def solve(env, fn=fn):
                return fn(env)
            out.append(_Pinner(target, solve, tagged_keys(other)))
    seen = {p.target for p in out}
    diff = Binary("-", e.left, e.right)
    fdiff = compile_assertion(diff)
    for target in c.keys:
        if target in seen or not _affine_in(diff, target):
            continue

        def solve(env, target=target):
            env[target] = 0
            f0 = fdiff(env)
            env[target] = 1
            a = fdiff(env) - f0
            del env[target]
            if a == 0 or f0 % a:
                return None
            return -f0 // a
        out.append(_Pinner(target, solve, c.keys - {target}))
    return out


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------

class _Search:
    def __init__(self, ante: List[_Conjunct], cons: Optional[_Conjunct],
                 ranges: Ranges, budget: int):
        self.ante = ante
        self.cons = cons
        self.ranges = ranges
        self.budget = budget
        self.explored = 0
        keys = set()
        for c in ante:
            keys |= c.keys
        if cons is not None:
            keys |= cons.keys
        self.order, self.pin_at = self._plan(keys)
        pos = {k: i for i, k in enumerate(self.order)}
        # conjuncts become checkable once their last variable is bound
        self.check_at: List[List[_Conjunct]] = [[] for _ in range(len(self.order) + 1)]
        for c in ante:
            level = max((pos[k] + 1 for k in c.keys), default=0)
            self.check_at[level].append(c)
        self.cons_level = (max((pos[k] + 1 for k in cons.keys), default=0)
                           if cons is not None else None)

    def _plan(self, keys):
        pinners: Dict[Key, List[_Pinner]] = {}
        for c in self.ante:
            for p in _pinners(c):
                if p.target in keys:
                    pinners.setdefault(p.target, []).append(p)
        order: List[Key] = []
        pin_at: List[Optional[_Pinner]] = []
        bound: set = set()
        remaining = set(keys)
        goal = self.cons.keys if self.cons is not None else frozenset()
        while remaining:
            best = None
            # pinned variables cost nothing; goal variables come first so a
            # satisfied goal cuts the search early
            for k in sorted(remaining, key=lambda k: (k not in goal, show_key(k))):
                for p in pinners.get(k, ()):
                    if p.needs <= bound:
                        best = (k, p)
                        break
                if best:
                    break
            if best is None:
                # prefer variables sharing conjuncts with bound ones, then small ranges
                def score(k):
                    links = sum(1 for c in self.ante if k in c.keys and c.keys & bound)
                    return (k not in goal, -links, len(self.ranges.values(k)), show_key(k))
                k = min(remaining, key=score)
                best = (k, None)
            order.append(best[0])
            pin_at.append(best[1])
            bound.add(best[0])
            remaining.discard(best[0])
        return order, pin_at

    def run(self) -> Optional[Dict[Key, Any]]:
        env: Dict[Key, Any] = {}
        for c in self.check_at[0]:
            if not c.holds(env):
                return None
        if self.cons_level == 0 and self.cons.holds(env):
            return None
        return self._extend(0, env)

    def _extend(self, i: int, env: Dict[Key, Any]) -> Optional[Dict[Key, Any]]:
        if i == len(self.order):
            return dict(env)
        key = self.order[i]
        pin = self.pin_at[i]
        if pin is not None:
            try:
                v = pin.solve(env)
            except (EvalError, TypeError):
                return None
            if v is None or v not in self._allowed(key):
                return None
            candidates = (v,)
        else:
            candidates = self.ranges.values(key)
        for v in candidates:
            self.explored += 1
            if self.explored > self.budget:
                raise ImplicationBudgetExceeded(
                    f"more than {self.budget} assignments explored")
            env[key] = v
            if all(c.holds(env) for c in self.check_at[i + 1]):
                if not (self.cons_level == i + 1 and self.cons.holds(env)):
                    found = self._extend(i + 1, env)
                    if found is not None:
                        return found
            del env[key]
        return None

    def _allowed(self, key):
        vals = self.ranges.values(key)
        cache = getattr(self, "_sets", None)
        if cache is None:
            cache = self._sets = {}
        if key not in cache:
            try:
                cache[key] = frozenset(vals)
            except TypeError:
                cache[key] = tuple(vals)
        return cache[key]


def _components(ante: List[_Conjunct], seed: FrozenSet[Key]) -> Tuple[List[_Conjunct], List[_Conjunct]]:
    keys = set(seed)
    inside, outside = [], list(ante)
    changed = True
    while changed:
        changed = False
        rest = []
        for c in outside:
            if c.keys & keys:
                inside.append(c)
                keys |= c.keys
                changed = True
            else:
                rest.append(c)
        outside = rest
    return inside, outside


def _goals(e: Expr, premises: tuple):
    """Split a consequent into atomic goals, moving implication premises
    into the hypotheses: ``A => (B && C)`` yields ``(A; B)`` and ``(A; C)``."""
    if isinstance(e, Binary) and e.op == "&&":
        yield from _goals(e.left, premises)
        yield from _goals(e.right, premises)
    elif isinstance(e, Binary) and e.op == "=>":
        yield from _goals(e.right, premises + tuple(conjuncts(e.left)))
    elif e != TRUE:
        yield premises, e


def check_implication(ante: Expr, cons: Expr, ranges: Optional[Ranges] = None,
                      budget: int = DEFAULT_BUDGET) -> ImplicationResult:
    """Decide ``ante => cons`` over the bounded universe given by ``ranges``.

    The result is bounded validity: a counterexample is a genuine one, while
    a positive verdict only covers the enumerated ranges.
    """
    ranges = ranges or Ranges()
    cache_key = (ante, cons)
    hit = ranges.cache.get(cache_key)
    if hit is not None:
        return hit
    compiled: Dict[Expr, _Conjunct] = {}

    def compile_(e: Expr) -> _Conjunct:
        if e not in compiled:
            compiled[e] = _Conjunct(e)
        return compiled[e]

    base = [compile_(c) for c in conjuncts(ante)]
    explored = 0
    rest_sat: Dict[FrozenSet[Expr], Optional[Dict[Key, Any]]] = {}
    for premises, goal in _goals(cons, ()):
        hyps = base + [compile_(p) for p in premises]
        if goal in {c.expr for c in hyps}:
            continue
        gc = compile_(goal)
        inside, outside = _components(hyps, gc.keys)
        search = _Search(inside, gc, ranges, budget - explored)
        cex = search.run()
        explored += search.explored
        if cex is None:
            continue
        key = frozenset(c.expr for c in outside)
        if key not in rest_sat:
            s = _Search(outside, None, ranges, budget - explored)
            rest_sat[key] = s.run()
            explored += s.explored
        extra = rest_sat[key]
        if extra is None:
            # the antecedent is unsatisfiable within the ranges
            res = ImplicationResult(True, explored=explored)
            ranges.cache[cache_key] = res
            return res
        full = {**extra, **cex}
        return ImplicationResult(
            False, {show_key(k): v for k, v in sorted(full.items(), key=lambda kv: show_key(kv[0]))},
            gc.text, explored)
    res = ImplicationResult(True, explored=explored)
    ranges.cache[cache_key] = res
    return res


def satisfiable(e: Expr, ranges: Optional[Ranges] = None,
                budget: int = DEFAULT_BUDGET) -> Optional[Dict[str, Any]]:
    """A satisfying assignment of ``e`` within the ranges, or None."""
    s = _Search([_Conjunct(c) for c in conjuncts(e)], None, ranges or Ranges(), budget)
    found = s.run()
    if found is None:
        return None
    return {show_key(k): v for k, v in found.items()}
