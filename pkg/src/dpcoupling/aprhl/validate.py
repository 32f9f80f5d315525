"""Empirical validation of checked judgments.

A judgment ``c1 ~ c2 : pre => post <eps, delta>`` is valid when every pair of
memories satisfying ``pre`` leads to output distributions related by the
(eps, delta)-lifting of ``post``.  At desk scale this can be tested directly:
enumerate the pre-related memory pairs, run both commands with the exact
interpreter and ask the lifting LP for a witness.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from ..interpreter import InterpConfig, Interpreter
from ..lang.ast import Command, Expr, Program
from ..lang.errors import EvalError
from ..lifting import Relation, approx_lifting, min_delta
from .assertions import compile_assertion, tagged_keys
from .checker import CheckedJudgment, PrivacyCost

DEFAULT_SLACK = 1e-6
DEFAULT_PAIR_BUDGET = 10 ** 6


class ValidationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ValidationConfig:
    """Knobs for ``validate_empirically``.

    ``slack`` is the additive delta allowance covering Laplace truncation.
    ``ranges`` overrides the declared domain of a variable; every variable
    the precondition mentions needs a finite range from one of the two.
    """

    laplace_radius: Any = "auto(1e-9)"
    max_loop_iterations: int = 64
    slack: float = DEFAULT_SLACK
    jobs: int = 1
    pair_budget: int = DEFAULT_PAIR_BUDGET
    ranges: Mapping[str, Sequence[Any]] = field(default_factory=dict)

    def interp(self, eps_value: float) -> InterpConfig:
        return InterpConfig(eps=eps_value, max_loop_iterations=self.max_loop_iterations,
                            laplace_radius=self.laplace_radius)


@dataclass
class Violation:
    """An input pair whose outputs admit no lifting at the checked cost."""

    m1: Dict[str, Any]
    m2: Dict[str, Any]
    out1: List[Tuple[Any, float]]
    out2: List[Tuple[Any, float]]
    # smallest delta at which the lifting exists (None: not even at delta = 1)
    needed_delta: Optional[float]

    def describe(self) -> str:
        need = "none" if self.needed_delta is None else f"{self.needed_delta:.3g}"
        return f"m1={self.m1} m2={self.m2} needed delta={need}"


@dataclass
class ValidationReport:
    eps_value: float
    cost: PrivacyCost
    eps: float
    delta: float
    slack: float
    observed: Tuple[Tuple[str, ...], Tuple[str, ...]]
    pairs: int = 0
    violations: List[Violation] = field(default_factory=list)
    duration: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        verdict = "feasible" if self.ok else f"{len(self.violations)} infeasible"
        return (f"{self.pairs} pairs at eps={self.eps:g}, delta={self.delta:g} "
                f"(+{self.slack:g} slack): {verdict}")


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def _side_vars(program: Program, pre: Expr) -> List[str]:
    names = set(program.inputs)
    names |= {k[0] for k in tagged_keys(pre) if k[1] != "lvar"}
    return [n for n in program.names if n in names]


def _values(program: Program, name: str, cfg: ValidationConfig) -> Sequence[Any]:
    if name in cfg.ranges:
        return tuple(cfg.ranges[name])
    d = program.decl(name)
    if d.domain is None:
        raise EvalError(f"variable {name!r} needs a finite range for validation")
    return d.domain


def memory_pairs(program: Program, pre: Expr, cfg: ValidationConfig):
    """Assignment pairs (in lexicographic order) satisfying ``pre``.

    Only inputs and variables mentioned by ``pre`` are enumerated; every
    other variable starts from its default on both sides.
    """
    if any(k[1] == "lvar" for k in tagged_keys(pre)):
        raise EvalError("the precondition has free logical variables")
    names = _side_vars(program, pre)
    doms = [_values(program, n, cfg) for n in names]
    total = math.prod(len(d) for d in doms) ** 2
    if total > cfg.pair_budget:
        raise ValidationBudgetExceeded(f"{total} candidate pairs exceed the budget {cfg.pair_budget}")
    fn = compile_assertion(pre)
    sides = [dict(zip(names, vals)) for vals in itertools.product(*doms)]
    for a in sides:
        for b in sides:
            env = {(n, 1): v for n, v in a.items()}
            env.update({(n, 2): v for n, v in b.items()})
            if fn(env):
                yield a, b


# ---------------------------------------------------------------------------
# Per-pair check
# ---------------------------------------------------------------------------

def _post_relation(post: Expr, names1: Tuple[str, ...], names2: Tuple[str, ...]) -> Relation:
    fn = compile_assertion(post)

    def pred(a, b):
        env = {(n, 1): v for n, v in zip(names1, a)}
        env.update({(n, 2): v for n, v in zip(names2, b)})
        try:
            return bool(fn(env))
        except EvalError:
            return False
    return Relation.predicate(pred, "post")


def observed(program: Program, post: Expr) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    """Variables the postcondition reads on each side, in declaration order."""
    keys = tagged_keys(post)
    return (tuple(n for n in program.names if (n, 1) in keys),
            tuple(n for n in program.names if (n, 2) in keys))


class _Worker:
    def __init__(self, program: Program, c1: Command, c2: Command, post: Expr,
                 eps: float, delta: float, eps_value: float, cfg: ValidationConfig):
        self.interp = Interpreter(program.decls, cfg.interp(eps_value))
        self.c1, self.c2 = c1, c2
        self.names1, self.names2 = observed(program, post)
        self.rel = _post_relation(post, self.names1, self.names2)
        self.eps, self.delta = eps, delta
        self._cache: Dict[tuple, Any] = {}

    def output(self, side: int, m: Mapping[str, Any]):
        c, names = (self.c1, self.names1) if side == 1 else (self.c2, self.names2)
        key = (side, tuple(sorted(m.items())))
        if key not in self._cache:
            self._cache[key] = self.interp.run_projected(c, self.interp.memory(m), names)
        return self._cache[key]

    def check(self, m1, m2) -> Optional[Violation]:
        mu1, mu2 = self.output(1, m1), self.output(2, m2)
        if approx_lifting(mu1, mu2, self.rel, self.eps, self.delta) is not None:
            return None
        return Violation(dict(m1), dict(m2), list(mu1.items()), list(mu2.items()),
                         min_delta(mu1, mu2, self.rel, self.eps))


def _run_chunk(args) -> List[Violation]:
    program, c1, c2, post, eps, delta, eps_value, cfg, pairs = args
    w = _Worker(program, c1, c2, post, eps, delta, eps_value, cfg)
    return [v for v in (w.check(a, b) for a, b in pairs) if v is not None]


def validate_empirically(j: CheckedJudgment, eps_value: float,
                         cfg: Optional[ValidationConfig] = None) -> ValidationReport:
    """Test the judgment's validity on every enumerated pre-related pair.

    The symbolic cost is instantiated at ``eps_value``; the lifting is asked
    for at ``(coeff * eps_value, delta + slack)``.
    """
    cfg = cfg or ValidationConfig()
    if not eps_value > 0:
        raise ValueError("eps_value must be positive")
    start = time.perf_counter()
    jd = j.judgment
    eps = jd.cost.eps_value(eps_value)
    delta = float(jd.cost.delta) + cfg.slack
    pairs = list(memory_pairs(j.program, jd.pre, cfg))
    args = (j.program, jd.c1, jd.c2, jd.post, eps, delta, eps_value, cfg)
    if cfg.jobs > 1 and len(pairs) > 1:
        # contiguous chunks keep most memories within one worker's cache
        size = -(-len(pairs) // cfg.jobs)
        chunks = [pairs[i:i + size] for i in range(0, len(pairs), size)]
        with ProcessPoolExecutor(cfg.jobs) as pool:
            found = [v for part in pool.map(_run_chunk, [args + (c,) for c in chunks]) for v in part]
    else:
        found = _run_chunk(args + (pairs,))
    return ValidationReport(
        eps_value, jd.cost, eps, delta - cfg.slack, cfg.slack,
        observed(j.program, jd.post), len(pairs), found,
        time.perf_counter() - start)
