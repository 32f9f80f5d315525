"""Exact denotational semantics of pWhile over finite sub-distributions.

Memories are tuples in declaration order.  Commands are compiled once into
functions on weighted state tables ``{memory tuple: weight}``.  When the
caller only observes some variables, variables that are dead at a program
point are reset to their defaults so that states differing only in dead
values merge; this keeps Above-Threshold-style loops polynomial.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, Optional, Sequence, Union

from .distribution import (
    DEFAULT_TAIL_TOLERANCE, SubDistribution, laplace_offsets, radius_for_tolerance,
)
from .lang.analysis import free_vars, live_before
from .lang.ast import (
    Assign, Command, Decl, Expr, If, Program, Sample, Seq, Skip, Var, While,
)
from .lang.errors import EvalError
from .lang.evaluate import compile_expr

States = Dict[tuple, float]
Step = Callable[[States], States]


@dataclass(frozen=True)
class InterpConfig:
    """Interpreter knobs.

    ``laplace_radius`` is a positive int, or ``"auto"`` / ``"auto(tol)"`` to
    pick the smallest radius whose tail mass is below the tolerance.
    """

    eps: float = 1.0
    max_loop_iterations: int = 64
    laplace_radius: Union[int, str] = "auto"

    def __post_init__(self):
        if self.max_loop_iterations < 1:
            raise ValueError("max_loop_iterations must be at least 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        self.tail_tolerance()  # validates the radius policy

    def tail_tolerance(self) -> Optional[float]:
        r = self.laplace_radius
        if isinstance(r, int):
            if r < 1:
                raise ValueError("laplace_radius must be positive")
            return None
        m = re.fullmatch(r"\s*auto\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*", str(r))
        if not m:
            raise ValueError(f"bad laplace_radius {r!r}")
        return float(m.group(1)) if m.group(1) else DEFAULT_TAIL_TOLERANCE

    def radius(self, scale_eps: float) -> int:
        tol = self.tail_tolerance()
        if tol is None:
            return int(self.laplace_radius)
        return radius_for_tolerance(scale_eps, tol)


class Layout:
    """Variable order shared by all memories of one program."""

    __slots__ = ("names", "index", "decls")

    def __init__(self, decls: Sequence[Decl]):
        self.decls = tuple(decls)
        self.names = tuple(d.name for d in decls)
        self.index = {n: i for i, n in enumerate(self.names)}

    def __eq__(self, other):
        return isinstance(other, Layout) and self.names == other.names

    def __hash__(self):
        return hash(self.names)


class Memory(Mapping):
    """Immutable total map from declared variables to values."""

    __slots__ = ("layout", "values")

    def __init__(self, layout: Layout, values: tuple):
        self.layout = layout
        self.values = values

    def __getitem__(self, name):
        return self.values[self.layout.index[name]]

    def __iter__(self):
        return iter(self.layout.names)

    def __len__(self):
        return len(self.values)

    def __hash__(self):
        return hash(self.values)

    def __eq__(self, other):
        if isinstance(other, Memory):
            return self.values == other.values and self.layout == other.layout
        return Mapping.__eq__(self, other)

    def __lt__(self, other):
        return self.values < other.values

    def __repr__(self):
        return "{" + ", ".join(f"{n}={v!r}" for n, v in zip(self.layout.names, self.values)) + "}"

    def set(self, **kw) -> "Memory":
        vals = list(self.values)
        for k, v in kw.items():
            vals[self.layout.index[k]] = v
        return Memory(self.layout, tuple(vals))


def default_value(d: Decl):
    """Initial value of a non-input variable."""
    if d.domain:
        return 0 if 0 in d.domain and d.type.kind == "int" else d.domain[0]
    if d.type.kind == "bool":
        return False
    if d.type.kind == "db":
        return (0,) * d.type.size
    if d.type.kind == "querylist":
        return tuple(range(1, d.type.size + 1))
    return 0


def _conforms(d: Decl, v) -> bool:
    k = d.type.kind
    if k == "bool":
        return isinstance(v, bool)
    if k in ("int", "query"):
        return isinstance(v, int) and not isinstance(v, bool)
    return (isinstance(v, tuple) and len(v) == d.type.size
            and all(isinstance(x, int) and not isinstance(x, bool) for x in v))


class Interpreter:
    """Compiles and runs commands over a fixed declaration table."""

    def __init__(self, decls: Sequence[Decl], cfg: InterpConfig = InterpConfig()):
        self.layout = Layout(decls)
        self.cfg = cfg
        self.defaults = tuple(default_value(d) for d in self.layout.decls)
        self._cache: Dict[tuple, Step] = {}

    # -- memories ------------------------------------------------------------
    def memory(self, assignment: Mapping[str, object], require_inputs: bool = True) -> Memory:
        """Build a memory; unassigned non-input variables take defaults."""
        vals = []
        for d, dflt in zip(self.layout.decls, self.defaults):
            if d.name in assignment:
                v = assignment[d.name]
                if isinstance(v, list):
                    v = tuple(v)
                if not _conforms(d, v):
                    raise EvalError(f"value {v!r} does not fit {d.name} : {d.type}")
                vals.append(v)
            elif d.is_input and require_inputs:
                raise EvalError(f"missing value for input {d.name!r}")
            else:
                vals.append(dflt)
        unknown = set(assignment) - set(self.layout.names)
        if unknown:
            raise EvalError(f"unknown variables {sorted(unknown)}")
        return Memory(self.layout, tuple(vals))

    # -- compilation ---------------------------------------------------------
    def _expr(self, e: Expr):
        index = self.layout.index

        def lookup(node):
            if isinstance(node, Var):
                i = index[node.name]
                return lambda m: m[i]
            raise EvalError(f"{node!r} is not a program expression")
        f = compile_expr(e, lookup)
        layout = self.layout

        def run(m):
            try:
                return f(m)
            except EvalError as err:
                if err.memory is None:
                    err.memory = Memory(layout, m)
                raise
        return run

    def _killer(self, live: FrozenSet[str], touched: FrozenSet[str]):
        """Reset variables in ``touched`` that are dead afterwards."""
        if live is None:
            return None
        dead = [self.layout.index[n] for n in sorted(touched - live)]
        if not dead:
            return None
        dflt = [(i, self.defaults[i]) for i in dead]

        def kill(m: tuple) -> tuple:
            lst = list(m)
            for i, v in dflt:
                lst[i] = v
            return tuple(lst)
        return kill

    def compile(self, c: Command, observe: Optional[Iterable[str]] = None) -> Step:
        obs = None if observe is None else frozenset(observe)
        key = (c, obs)
        if key not in self._cache:
            if obs is None:
                step = self._compile(c, None)
            else:
                # variables dead on entry can be reset up front too
                entry = self._killer(live_before(c, obs), frozenset(self.layout.names))
                body = self._compile(c, obs)
                step = body if entry is None else _then(_apply(entry), body)
            self._cache[key] = step
        return self._cache[key]

    def _compile(self, c: Command, live_out: Optional[FrozenSet[str]]) -> Step:
        if isinstance(c, Skip):
            return lambda s: s
        if isinstance(c, Seq):
            steps = []
            live = live_out
            for sub in reversed(c.cmds):
                steps.append(self._compile(sub, live))
                if live is not None:
                    live = live_before(sub, live)
            steps.reverse()

            def seq(s: States) -> States:
                for st in steps:
                    s = st(s)
                return s
            return seq
        if isinstance(c, Assign):
            i = self.layout.index[c.var]
            f = self._expr(c.expr)
            kill = self._killer(live_out, free_vars(c.expr) | {c.var})

            def assign(s: States) -> States:
                out: States = {}
                for m, p in s.items():
                    lst = list(m)
                    lst[i] = f(m)
                    m2 = tuple(lst)
                    if kill is not None:
                        m2 = kill(m2)
                    out[m2] = out.get(m2, 0.0) + p
                return out
            return assign
        if isinstance(c, Sample):
            i = self.layout.index[c.var]
            f = self._expr(c.center)
            scale = float(c.scale) * self.cfg.eps
            offs = laplace_offsets(scale, self.cfg.radius(scale), c.dist == "oslap")
            kill = self._killer(live_out, free_vars(c.center) | {c.var})
            if live_out is not None and c.var not in live_out:
                # the sample is never read, so only its mass matters
                return _apply(kill) if kill is not None else (lambda s: s)

            def sample(s: States) -> States:
                out: States = {}
                for m, p in s.items():
                    center = f(m)
                    lst = list(kill(m)) if kill is not None else list(m)
                    for off, q in offs:
                        lst[i] = center + off
                        m2 = tuple(lst)
                        out[m2] = out.get(m2, 0.0) + p * q
                return out
            return sample
        if isinstance(c, If):
            g = self._expr(c.cond)
            kill = self._killer(live_out, free_vars(c.cond))
            then = self._compile(c.then, live_out)
            orelse = self._compile(c.orelse, live_out)

            def branch(s: States) -> States:
                st: States = {}
                sf: States = {}
                for m, p in s.items():
                    (st if g(m) else sf)[m] = p
                a, b = then(st), orelse(sf)
                out = a
                for m, p in b.items():
                    out[m] = out.get(m, 0.0) + p
                if kill is not None:
                    out = _apply(kill)(out)
                return out
            return branch
        if isinstance(c, While):
            g = self._expr(c.cond)
            head = None
            if live_out is not None:
                head = live_before(c, live_out)
            body = self._compile(c.body, head)
            kill = self._killer(live_out, free_vars(c.cond))
            limit = self.cfg.max_loop_iterations

            def loop(s: States) -> States:
                out: States = {}
                for it in range(limit + 1):
                    active: States = {}
                    for m, p in s.items():
                        if g(m):
                            active[m] = p
                        else:
                            out[m] = out.get(m, 0.0) + p
                    if not active or it == limit:
                        break
                    s = body(active)
                # anything still looping after the bound is dropped
                if kill is not None:
                    out = _apply(kill)(out)
                return out
            return loop
        raise TypeError(f"not a command: {c!r}")

    # -- running -------------------------------------------------------------
    def run_states(self, c: Command, m0: Memory, observe: Optional[Iterable[str]] = None) -> States:
        return self.compile(c, observe)({m0.values: 1.0})

    def run(self, c: Command, m0: Memory, observe: Optional[Iterable[str]] = None) -> SubDistribution:
        """Output sub-distribution over memories.

        With ``observe`` given, only those variables are faithful; all
        others hold defaults wherever they are dead.
        """
        states = self.run_states(c, m0, observe)
        layout = self.layout
        return SubDistribution({Memory(layout, m): p for m, p in states.items()})

    def run_projected(self, c: Command, m0: Memory, names: Sequence[str]) -> SubDistribution:
        """Output sub-distribution of the tuple of ``names``."""
        idx = [self.layout.index[n] for n in names]
        out: Dict[tuple, float] = {}
        for m, p in self.run_states(c, m0, names).items():
            key = tuple(m[i] for i in idx)
            out[key] = out.get(key, 0.0) + p
        return SubDistribution(out)


def _apply(f) -> Step:
    def step(s: States) -> States:
        out: States = {}
        for m, p in s.items():
            m2 = f(m)
            out[m2] = out.get(m2, 0.0) + p
        return out
    return step


def _then(a: Step, b: Step) -> Step:
    return lambda s: b(a(s))


def _as_memory(interp: Interpreter, m0) -> Memory:
    if isinstance(m0, Memory):
        return m0
    return interp.memory(m0)


def interpret(p: Program, m0, cfg: InterpConfig = InterpConfig()) -> SubDistribution:
    """Distribution over final memories of ``p`` started in ``m0``."""
    interp = Interpreter(p.decls, cfg)
    return interp.run(p.body, _as_memory(interp, m0))


def output_distribution(p: Program, m0, cfg: InterpConfig = InterpConfig(),
                        interp: Optional[Interpreter] = None) -> SubDistribution:
    """Distribution of the returned value (a tuple for multiple returns)."""
    interp = interp or Interpreter(p.decls, cfg)
    dist = interp.run_projected(p.body, _as_memory(interp, m0), p.returns)
    if len(p.returns) == 1:
        return dist.map(lambda t: t[0])
    return dist
