"""Bundled mechanisms: pWhile programs and their proof scripts.

Programs use the lookup database model: a database is a tuple of counts,
the query list holds 1-based positions, and ``evalQ(q, d) = d[q]``, so every
query is 1-sensitive under componentwise adjacency.  Thresholds and query
lists are public inputs held equal across adjacent runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..aprhl.checker import CheckConfig, PrivacyCost
from ..aprhl.proof import ProofNode, Symbol, show_proof
from ..lang.ast import Program
from ..lang.parser import parse_program
from ..lang.typing import typecheck

DEFAULT_DB_DIM = 2
DEFAULT_NQUERIES = 2
DB_VALUES = (0, 2)
THRESHOLDS = (0, 1)
# values enumerated for unbounded integers during implication checks
NOISE_RANGE = tuple(range(-1, 4))


@dataclass
class MechanismBundle:
    """A program with its proof script (None when no proof exists)."""

    name: str
    program: Program
    proof: Optional[ProofNode]
    claimed_cost: PrivacyCost
    adjacency: str = "adj"
    ranges: Dict[str, Sequence] = field(default_factory=dict)
    description: str = ""
    # "proved": proof checks; "rejected": proof must fail at the claim;
    # "refuted": not DP at the claim; "empirical": DP at the claim, no proof
    expectation: str = "proved"
    source: str = ""

    def check_config(self) -> CheckConfig:
        return CheckConfig(ranges=dict(self.ranges))

    def proof_text(self) -> Optional[str]:
        return None if self.proof is None else show_proof(self.proof) + "\n"


# ---------------------------------------------------------------------------
# Script construction helpers
# ---------------------------------------------------------------------------

def node(rule: str, *children: ProofNode, **fields) -> ProofNode:
    out = {}
    for k, v in fields.items():
        if v is None:
            continue
        out[k.replace("_", "-")] = Symbol(v) if isinstance(v, Symbol) else v
    return ProofNode(rule, out, list(children))


def sym(s: str) -> Symbol:
    return Symbol(s)


def _and(*parts: str) -> str:
    return " && ".join(p if _atomic(p) else f"({p})" for p in parts if p)


def _atomic(p: str) -> bool:
    # conjunctions of comparisons need no parentheses when joined by &&
    return "=>" not in p and "||" not in p


def _db_decl(db_dim: int) -> str:
    lo, hi = DB_VALUES
    return f"input d : db({db_dim}) in [{lo}, {hi}];"


def query_list(nqueries: int, db_dim: int) -> Tuple[int, ...]:
    """Query positions cycle through the database when there are more
    queries than entries."""
    return tuple((j % db_dim) + 1 for j in range(nqueries))


# ---------------------------------------------------------------------------
# Above Threshold
# ---------------------------------------------------------------------------

def _above_threshold_source(nqueries: int, db_dim: int, *, returns: str = "r",
                            buggy: bool = False, fresh: bool = False) -> str:
    qs = ", ".join(map(str, query_list(nqueries, db_dim)))
    n1 = nqueries + 1
    lines = [
        _db_decl(db_dim),
        f"input Q : querylist({nqueries}) in {{({qs}{',' if nqueries == 1 else ''})}};",
        f"input t : int in [{THRESHOLDS[0]}, {THRESHOLDS[1]}];",
        f"var i : int in [1, {n1}];",
        f"var r : int in [1, {n1}];",
        "var T : int;",
        "var S : int;",
    ]
    if buggy or fresh:
        lines.append("var v : int;")
    lines += [
        "",
        "i := 1;",
        "r := |Q| + 1;",
    ]
    if buggy:
        lines.append("v := 0;")
    lines += [
        "T <-$ lap(eps/2, t);",
        "while i <= |Q| do",
        "  S <-$ lap(eps/4, evalQ(Q[i], d));",
    ]
    if buggy:
        lines.append("  if T <= S && r = |Q| + 1 then r := i; v := S end;")
    else:
        lines.append("  if T <= S && r = |Q| + 1 then r := i end;")
    lines += [
        "  i := i + 1",
        "end;",
    ]
    if fresh:
        lines.append("if r <= |Q| then v <-$ lap(eps, evalQ(Q[r], d)) end;")
    lines.append(f"return {returns}")
    return "\n".join(lines) + "\n"


def _threshold_invariant(n: int, r: str, T: str, imax: int) -> str:
    """Loop invariant of one Above Threshold pass for output value ``v``."""
    n1 = n + 1
    return _and(
        "Q<1> = Q<2>", "adj(d<1>, d<2>)", "t<1> = t<2>", f"{T}<1> + 1 = {T}<2>",
        "i<1> = i<2>", "1 <= i<1>", f"i<1> <= {imax}",
        f"i<1> <= v => ({r}<1> = {n1} => {r}<2> = {n1}) && ({r}<1> = {n1} || {r}<1> < v)",
        f"i<1> > v => ({r}<1> = v => {r}<2> = v)",
    )


_AT_GUARD = ("i<1> <= |Q<1>|", "i<2> <= |Q<2>|")


def _loop_exit(inv: str, guards: Tuple[str, str]) -> str:
    return _and(inv, f"!({guards[0]})", f"!({guards[1]})")
_AT_VARIANT = "|Q| + 1 - i"
_AT_VARIANT1 = "|Q<1>| + 1 - i<1>"


def _iteration(inv: str, guards: Tuple[str, str], variant1: str, sample_rel: str,
               sample_rule: ProofNode, cond: str) -> ProofNode:
    """One loop iteration: couple the sample, then split on the branch."""
    mid = _and(inv, guards[0], guards[1], f"{variant1} = k", sample_rel)
    if cond == "one-sided":
        branch = node("cond-l",
                      node("cond-r", node("assn"), node("assn")),
                      node("cond-r", node("assn"), node("assn")))
    else:
        branch = node("cond", node("assn"), node("assn"))
    return node("conseq",
                node("seq",
                     node("conseq", node("frame", sample_rule), post=mid),
                     branch,
                     node("assn")))


def _threshold_pass(n: int, r: str, T: str, S: str, imax: int, init: int,
                    pre: Optional[str], loop_path: str) -> ProofNode:
    """Forall-Eq sub-proof of ``r<1> = r<2>`` for one Above Threshold pass
    made of ``init`` initial assignments, the threshold sample and the loop."""
    inv = _threshold_invariant(n, r, T, imax)
    loop_pre = _and(inv, f"({_AT_GUARD[0]}) = ({_AT_GUARD[1]})", f"{_AT_VARIANT1} <= {n}")
    null_rel = f"{S}<1> - {S}<2> = evalQ(Q<1>[i<1>], d<1>) - evalQ(Q<2>[i<2>], d<2>)"
    gen_rel = f"{S}<1> + 1 = {S}<2>"
    cases = [
        _iteration(inv, _AT_GUARD, _AT_VARIANT1, null_rel, node("lapnull"), "one-sided"),
        _iteration(inv, _AT_GUARD, _AT_VARIANT1, gen_rel, node("lapgen", k=1, kp=2), "one-sided"),
        _iteration(inv, _AT_GUARD, _AT_VARIANT1, null_rel, node("lapnull"), "one-sided"),
    ]
    loop = node("while-ext", *cases, inv=inv, variant=_AT_VARIANT, bound=n,
                at=f"{n + 1} - v", lvar=sym("k"), path=loop_path)
    body = node("seq",
                node("assn", take=(init, init)),
                node("frame", node("lapgen", k=1, kp=1)),
                node("conseq", loop, pre=loop_pre, post=_loop_exit(inv, _AT_GUARD)),
                cost=1)
    return node("forall-eq", node("conseq", body, pre=pre), var=sym(r), lvar=sym("v"))


ADJ_PRE = "adj(d<1>, d<2>) && Q<1> = Q<2> && t<1> = t<2>"


def above_threshold(nqueries: int = DEFAULT_NQUERIES, db_dim: int = DEFAULT_DB_DIM) -> MechanismBundle:
    """Report the first query whose noisy answer clears a noisy threshold."""
    if nqueries < 1:
        raise ValueError("nqueries must be at least 1")
    src = _above_threshold_source(nqueries, db_dim)
    program = parse_program(src)
    typecheck(program)
    proof = node("proof",
                 _threshold_pass(nqueries, "r", "T", "S", nqueries + 1, 2, None, "body.4"),
                 pre=ADJ_PRE, post="r<1> = r<2>", eps=1)
    return MechanismBundle(
        "above-threshold", program, proof, PrivacyCost(Fraction(1)),
        ranges=dict(T=NOISE_RANGE, S=NOISE_RANGE),
        description=f"Above Threshold over {nqueries} queries (coupling proof, cost eps)",
        source=src)


def naive_above_threshold(nqueries: int = 3, db_dim: int = DEFAULT_DB_DIM) -> MechanismBundle:
    """Above Threshold with a composition-style proof that pays for every
    query; its cost 1/2 + n/4 exceeds eps once n >= 3."""
    b = above_threshold(nqueries, db_dim)
    n = nqueries
    n1 = n + 1
    inv = _and("Q<1> = Q<2>", "adj(d<1>, d<2>)", "t<1> = t<2>", "T<1> = T<2>",
               "i<1> = i<2>", "r<1> = r<2>", "1 <= i<1>", f"i<1> <= {n1}")
    loop_pre = _and(inv, f"({_AT_GUARD[0]}) = ({_AT_GUARD[1]})", f"{_AT_VARIANT1} <= {n}")
    it = _iteration(inv, _AT_GUARD, _AT_VARIANT1, "S<1> = S<2>", node("lapeq", kp=1), "two-sided")
    loop = node("while", it, inv=inv, variant=_AT_VARIANT, bound=n, lvar=sym("k"), path="body.4")
    proof = node("proof",
                 node("conseq",
                      node("seq",
                           node("assn", take=(2, 2)),
                           node("frame", node("lapeq", kp=1)),
                           node("conseq", loop, pre=loop_pre, post=_loop_exit(inv, _AT_GUARD)))),
                 pre=ADJ_PRE, post="r<1> = r<2>", eps=1)
    b.name = "naive-above-threshold"
    b.proof = proof
    b.expectation = "rejected"
    b.description = (f"Above Threshold over {nqueries} queries with a per-query "
                     "composition proof (rejected at cost eps)")
    return b


def naive_cost(nqueries: int) -> Fraction:
    return Fraction(1, 2) + Fraction(nqueries, 4)


def sparse_vector(nqueries: int = DEFAULT_NQUERIES, db_dim: int = DEFAULT_DB_DIM,
                  k: int = 2) -> MechanismBundle:
    """``k`` Above Threshold passes, each resuming after the previous hit."""
    if not 1 <= k <= nqueries:
        raise ValueError("need 1 <= k <= nqueries")
    qs = ", ".join(map(str, query_list(nqueries, db_dim)))
    n1 = nqueries + 1
    lines = [
        _db_decl(db_dim),
        f"input Q : querylist({nqueries}) in {{({qs}{',' if nqueries == 1 else ''})}};",
        f"input t : int in [{THRESHOLDS[0]}, {THRESHOLDS[1]}];",
        f"var i : int in [1, {n1 + 1}];",
    ]
    for j in range(1, k + 1):
        lines.append(f"var r{j} : int in [1, {n1}];")
    lines += ["var T : int;", "var S : int;", ""]
    for j in range(1, k + 1):
        start = "1" if j == 1 else f"r{j - 1} + 1"
        lines += [
            f"i := {start};",
            f"r{j} := |Q| + 1;",
            "T <-$ lap(eps/2, t);",
            "while i <= |Q| do",
            "  S <-$ lap(eps/4, evalQ(Q[i], d));",
            f"  if T <= S && r{j} = |Q| + 1 then r{j} := i end;",
            "  i := i + 1",
            "end;",
        ]
    lines.append("return " + ", ".join(f"r{j}" for j in range(1, k + 1)))
    src = "\n".join(lines) + "\n"
    program = parse_program(src)
    typecheck(program)

    def eqs(upto: int) -> List[str]:
        return [f"r{j}<1> = r{j}<2>" for j in range(1, upto + 1)]

    parts = []
    for j in range(1, k + 1):
        known = _and(ADJ_PRE, *eqs(j - 1))
        imax = n1 if j == 1 else n1 + 1
        sub = _threshold_pass(nqueries, f"r{j}", "T", "S", imax, 2, known,
                              f"body.{4 * j}")
        # carry the precondition and the earlier outputs past this pass
        framed = node("frame", sub, keep=_and(ADJ_PRE, *eqs(j - 1)))
        parts.append(node("conseq", framed, pre=known, post=_and(ADJ_PRE, *eqs(j)),
                          take=(4, 4)))
    parts[-1].fields.pop("take")
    proof = node("proof", node("seq", *parts), pre=ADJ_PRE, post=_and(*eqs(k)), eps=k)
    return MechanismBundle(
        "sparse-vector", program, proof, PrivacyCost(Fraction(k)),
        ranges=dict(T=NOISE_RANGE, S=NOISE_RANGE),
        description=f"Sparse Vector: {k} Above Threshold passes over {nqueries} queries",
        source=src)


def buggy_above_threshold(nqueries: int = DEFAULT_NQUERIES,
                          db_dim: int = DEFAULT_DB_DIM) -> MechanismBundle:
    """Variant that releases the noisy answer that crossed the threshold."""
    src = _above_threshold_source(nqueries, db_dim, returns="v", buggy=True)
    program = parse_program(src)
    typecheck(program)
    return MechanismBundle(
        "buggy-above-threshold", program, None, PrivacyCost(Fraction(1)),
        description="Above Threshold releasing the noisy value (not eps-DP)",
        expectation="refuted", source=src)


def fresh_noise_above_threshold(nqueries: int = DEFAULT_NQUERIES,
                                db_dim: int = DEFAULT_DB_DIM) -> MechanismBundle:
    """Repair of the buggy variant: the released value gets fresh noise."""
    src = _above_threshold_source(nqueries, db_dim, returns="v", fresh=True)
    program = parse_program(src)
    typecheck(program)
    return MechanismBundle(
        "fresh-noise-above-threshold", program, None, PrivacyCost(Fraction(2)),
        description="Above Threshold releasing a freshly noised value (2 eps, no script)",
        expectation="empirical", source=src)


# ---------------------------------------------------------------------------
# Exponential mechanism and Report-noisy-max
# ---------------------------------------------------------------------------

def _noisy_max_source(ncandidates: int, dist: str) -> str:
    r1 = ncandidates + 1
    return "\n".join([
        _db_decl(ncandidates),
        f"var r : int in [1, {r1}];",
        f"var max : int in [1, {ncandidates}];",
        "var bq : int;",
        "var cq : int;",
        "",
        "r := 1;",
        "bq := 0;",
        "while r <= |d| do",
        f"  cq <-$ {dist}(eps/2, d[r]);",
        "  if cq > bq || r = 1 then max := r; bq := cq end;",
        "  r := r + 1",
        "end;",
        "return max",
    ]) + "\n"


def _noisy_max_proof(R: int, one_sided: bool) -> ProofNode:
    inv = _and(
        "r<1> = r<2>", "adj(d<1>, d<2>)", "1 <= r<1>", f"r<1> <= {R + 1}",
        "r<1> <= v => (r<1> > 1 => max<1> < v && max<2> < v) && |bq<1> - bq<2>| <= 1",
        "r<1> > v => max<1> = v && max<2> = v && bq<1> + 1 = bq<2> || max<1> != v",
    )
    guards = ("r<1> <= |d<1>|", "r<2> <= |d<2>|")
    variant1 = "|d<1>| + 1 - r<1>"
    null_rel = "cq<1> - cq<2> = d<1>[r<1>] - d<2>[r<2>]"
    gen_rel = "cq<1> + 1 = cq<2>"
    null, gen = ("onelapnull", "onelapgen") if one_sided else ("lapnull", "lapgen")
    cases = [
        _iteration(inv, guards, variant1, null_rel, node(null), "one-sided"),
        _iteration(inv, guards, variant1, gen_rel, node(gen, k=1, kp=2), "one-sided"),
        _iteration(inv, guards, variant1, null_rel, node(null), "one-sided"),
    ]
    loop_pre = _and(inv, f"({guards[0]}) = ({guards[1]})", f"{variant1} <= {R}")
    loop = node("while-ext", *cases, inv=inv, variant="|d| + 1 - r", bound=R,
                at=f"{R + 1} - v", lvar=sym("k"), path="body.3")
    body = node("seq",
                node("assn", take=(2, 2)),
                node("conseq", loop, pre=loop_pre, post=_loop_exit(inv, guards)))
    return node("proof",
                node("forall-eq", node("conseq", body), var=sym("max"), lvar=sym("v")),
                pre="adj(d<1>, d<2>)", post="max<1> = max<2>", eps=1)


def exp_mechanism(ncandidates: int = DEFAULT_DB_DIM, db_dim: Optional[int] = None) -> MechanismBundle:
    """Noisy arg-max with one-sided noise (exponential mechanism)."""
    if ncandidates < 1:
        raise ValueError("ncandidates must be at least 1")
    if db_dim is not None and db_dim != ncandidates:
        raise ValueError("candidate scores are database entries: db_dim must equal ncandidates")
    src = _noisy_max_source(ncandidates, "oslap")
    program = parse_program(src)
    typecheck(program)
    return MechanismBundle(
        "exp-mechanism", program, _noisy_max_proof(ncandidates, True), PrivacyCost(Fraction(1)),
        ranges=dict(bq=NOISE_RANGE, cq=NOISE_RANGE),
        description=f"Exponential mechanism over {ncandidates} candidates (one-sided noise)",
        source=src)


def report_noisy_max(ncandidates: int = DEFAULT_DB_DIM, db_dim: Optional[int] = None) -> MechanismBundle:
    """Noisy arg-max with two-sided Laplace noise."""
    if ncandidates < 1:
        raise ValueError("ncandidates must be at least 1")
    if db_dim is not None and db_dim != ncandidates:
        raise ValueError("candidate scores are database entries: db_dim must equal ncandidates")
    src = _noisy_max_source(ncandidates, "lap")
    program = parse_program(src)
    typecheck(program)
    return MechanismBundle(
        "report-noisy-max", program, _noisy_max_proof(ncandidates, False), PrivacyCost(Fraction(1)),
        ranges=dict(bq=NOISE_RANGE, cq=NOISE_RANGE),
        description=f"Report-noisy-max over {ncandidates} candidates (two-sided noise)",
        source=src)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

BUILDERS: Dict[str, Callable[[], MechanismBundle]] = {
    "above-threshold": above_threshold,
    "sparse-vector": sparse_vector,
    "exp-mechanism": exp_mechanism,
    "report-noisy-max": report_noisy_max,
    "buggy-above-threshold": buggy_above_threshold,
    "fresh-noise-above-threshold": fresh_noise_above_threshold,
    "naive-above-threshold": naive_above_threshold,
}
