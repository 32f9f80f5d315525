"""Black-box differential privacy test by exhaustive divergence search.

A program is (eps, delta)-DP for an adjacency relation exactly when the
eps-divergence of its output distributions is at most delta on every
adjacent input pair.  At desk scale the inputs range over small finite
domains, so the test computes every output distribution exactly and takes
the maximum divergence over all ordered adjacent pairs.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from ..distribution import SubDistribution, dp_divergence, tail_mass
from ..interpreter import InterpConfig, Interpreter
from ..lang.analysis import walk_commands
from ..lang.ast import Program, Sample
from ..lang.errors import EvalError
from ..lang.evaluate import adjacent
from ..lang.parser import parse_assertion
from ..aprhl.assertions import compile_assertion

DEFAULT_PAIR_BUDGET = 10 ** 6
SLACK = 1e-6

Assignment = Dict[str, Any]
Adjacency = Union[None, str, Callable[[Mapping[str, Any], Mapping[str, Any]], bool]]


@dataclass(frozen=True)
class DPTestConfig:
    laplace_radius: Any = "auto(1e-9)"
    max_loop_iterations: int = 64
    jobs: int = 1
    pair_budget: int = DEFAULT_PAIR_BUDGET
    # input name -> values, overriding the declared domain
    ranges: Mapping[str, Sequence[Any]] = field(default_factory=dict)

    def interp(self, eps_value: float) -> InterpConfig:
        return InterpConfig(eps=eps_value, max_loop_iterations=self.max_loop_iterations,
                            laplace_radius=self.laplace_radius)


@dataclass
class DPTestResult:
    verdict: str
    max_divergence: float
    witness: Optional[Tuple[Assignment, Assignment]]
    eps: float
    delta: float
    slack: float
    pairs: int
    duration: float = 0.0
    # divergence of every pair, in search order, when requested
    trace: List[Tuple[Assignment, Assignment, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def summary(self) -> str:
        line = (f"{self.verdict}: max divergence {self.max_divergence:.6g} over {self.pairs} "
                f"adjacent pairs at eps={self.eps:g} (bound {self.delta:g} + {self.slack:.3g})")
        if self.witness is not None and self.max_divergence > 0:
            line += f"\nwitness: {self.witness[0]} vs {self.witness[1]}"
        return line


# ---------------------------------------------------------------------------
# Adjacency and input enumeration
# ---------------------------------------------------------------------------

def default_adjacency(program: Program) -> Callable[[Mapping, Mapping], bool]:
    """Database inputs are componentwise adjacent, all other inputs equal."""
    dbs = [d.name for d in program.decls if d.is_input and d.type.kind == "db"]
    rest = [d.name for d in program.decls if d.is_input and d.type.kind != "db"]

    def adj(m1, m2) -> bool:
        return (all(adjacent(m1[n], m2[n]) for n in dbs)
                and all(m1[n] == m2[n] for n in rest))
    return adj


def _adjacency(program: Program, adjacency: Adjacency) -> Callable[[Mapping, Mapping], bool]:
    if adjacency is None or adjacency == "adj":
        return default_adjacency(program)
    if callable(adjacency):
        return adjacency
    # a relational assertion over the inputs, e.g. "adj(d<1>, d<2>) && t<1> = t<2>"
    fn = compile_assertion(parse_assertion(adjacency, program.names))
    names = program.inputs

    def rel(m1, m2) -> bool:
        env = {(n, 1): m1[n] for n in names}
        env.update({(n, 2): m2[n] for n in names})
        return bool(fn(env))
    return rel


def input_memories(program: Program, ranges: Mapping[str, Sequence[Any]] = None) -> List[Assignment]:
    """All input assignments, lexicographic in declaration order."""
    ranges = ranges or {}
    names = program.inputs
    doms = []
    for n in names:
        if n in ranges:
            doms.append(tuple(ranges[n]))
            continue
        dom = program.decl(n).domain
        if dom is None:
            raise EvalError(f"input {n!r} needs a finite domain")
        doms.append(dom)
    return [dict(zip(names, vals)) for vals in itertools.product(*doms)]


def truncation_budget(program: Program, cfg: DPTestConfig, eps_value: float) -> float:
    """Upper bound on the probability that some sample is truncated.

    Each sampling statement contributes its tail mass, counted once per
    allowed loop iteration for every enclosing loop.
    """
    icfg = cfg.interp(eps_value)
    total = 0.0
    for sub, depth in walk_commands(program.body):
        if isinstance(sub, Sample):
            scale = float(sub.scale) * eps_value
            total += icfg.max_loop_iterations ** depth * tail_mass(scale, icfg.radius(scale))
    return total


# ---------------------------------------------------------------------------
# The test
# ---------------------------------------------------------------------------

def _outputs(args) -> List[SubDistribution]:
    program, icfg, chunk = args
    interp = Interpreter(program.decls, icfg)
    out = []
    for m in chunk:
        dist = interp.run_projected(program.body, interp.memory(m), program.returns)
        out.append(dist.map(lambda t: t[0]) if len(program.returns) == 1 else dist)
    return out


def output_table(program: Program, inputs: List[Assignment], icfg: InterpConfig,
                 jobs: int = 1) -> List[SubDistribution]:
    if jobs > 1 and len(inputs) > 1:
        size = -(-len(inputs) // jobs)
        chunks = [inputs[i:i + size] for i in range(0, len(inputs), size)]
        with ProcessPoolExecutor(jobs) as pool:
            return [d for part in pool.map(_outputs, [(program, icfg, c) for c in chunks]) for d in part]
    return _outputs((program, icfg, inputs))


def empirical_dp_test(program: Program, adjacency: Adjacency = None, eps_value: float = 1.0,
                      cfg: Optional[DPTestConfig] = None, *, claim_eps: Optional[float] = None,
                      delta: float = 0.0, keep_trace: bool = False) -> DPTestResult:
    """Maximum eps-divergence over all ordered adjacent input pairs.

    The program runs with its symbolic epsilon set to ``eps_value``; the
    divergence is measured at ``claim_eps`` (default ``eps_value``).  The
    verdict is PASS when the maximum is at most ``delta`` plus the
    truncation budget plus 1e-6.  Pairs are visited in lexicographic order
    and the first pair reaching the maximum is the witness.
    """
    cfg = cfg or DPTestConfig()
    start = time.perf_counter()
    claim = eps_value if claim_eps is None else claim_eps
    adj = _adjacency(program, adjacency)
    inputs = input_memories(program, cfg.ranges)
    if len(inputs) ** 2 > cfg.pair_budget:
        raise EvalError(f"{len(inputs) ** 2} candidate pairs exceed the budget {cfg.pair_budget}")
    pairs = [(i, j) for i, a in enumerate(inputs) for j, b in enumerate(inputs)
             if i != j and adj(a, b)]
    used = sorted({k for p in pairs for k in p})
    dists = dict(zip(used, output_table(program, [inputs[k] for k in used],
                                        cfg.interp(eps_value), cfg.jobs)))
    best, witness = 0.0, None
    trace = []
    for i, j in pairs:
        div = dp_divergence(dists[i], dists[j], claim)
        if keep_trace:
            trace.append((inputs[i], inputs[j], div))
        if witness is None or div > best:
            best, witness = div, (inputs[i], inputs[j])
    slack = truncation_budget(program, cfg, eps_value) + SLACK
    verdict = "PASS" if best <= delta + slack else "FAIL"
    return DPTestResult(verdict, best, witness, claim, delta, slack, len(pairs),
                        time.perf_counter() - start, trace)


def divergence_at(program: Program, m1: Mapping, m2: Mapping, eps_value: float,
                  claim_eps: Optional[float] = None, cfg: Optional[DPTestConfig] = None) -> float:
    """Divergence of a single input pair (used to replay frozen witnesses)."""
    cfg = cfg or DPTestConfig()
    d1, d2 = output_table(program, [dict(m1), dict(m2)], cfg.interp(eps_value))
    return dp_divergence(d1, d2, eps_value if claim_eps is None else claim_eps)
