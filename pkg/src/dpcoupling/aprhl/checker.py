"""Checking apRHL derivations.

The checker reconstructs a judgment ``c1 ~ c2 : pre => post <eps, delta>``
for every node of a proof script.  Commands flow top-down: the root receives
the program body on both sides, ``seq`` splits statement lists, structural
rules descend into branches and loop bodies.  Postconditions also flow
top-down, and every node returns the precondition it establishes, computed
backwards in the style of weakest preconditions (``assn`` substitutes,
``cond`` builds guarded conjunctions).  Explicit assertions in the script
(``conseq :pre``, loop invariants) are where the author steps in, and every
such step is discharged with a bounded implication check.

Costs are exact rationals: ``eps`` counts multiples of the symbolic privacy
parameter, ``delta`` is an absolute constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from ..lang.analysis import free_vars, modified_vars, tagged_vars
from ..lang.ast import (
    Assign, Bars, Binary, Command, Expr, If, IntLit, Program, Sample, TVar,
    While, as_list, conj, conjuncts, from_list, implies, neg,
)
from ..lang.errors import EvalError, LangError
from ..lang.parser import parse_assertion, parse_expr
from ..lang.printer import show_expr
from ..lang.typing import check_assertion
from .assertions import bind_lvars, compile_assertion, conj_set, substitute, tag
from .implication import (
    DEFAULT_BUDGET, ImplicationBudgetExceeded, Ranges, check_implication,
)
from .proof import ProofNode, Symbol, parse_proof


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class ProofError(Exception):
    """Base class; ``path`` locates the offending node in the script."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.message = message
        self.path = path


class RuleError(ProofError):
    """A rule was applied to commands or assertions of the wrong shape."""

    def __init__(self, message: str, path: str = "", field: Optional[str] = None):
        super().__init__(message, path)
        self.field = field


class SideConditionError(ProofError):
    """An implication required by a rule is not valid."""

    def __init__(self, message: str, path: str = "",
                 counterexample: Optional[Dict[str, Any]] = None):
        super().__init__(message, path)
        self.counterexample = counterexample


class CostOverflow(ProofError):
    """The cost derived at a node exceeds the cost the script claims there."""

    def __init__(self, path: str, actual: "PrivacyCost", claimed: "PrivacyCost",
                 rule: str = "proof"):
        super().__init__(f"{rule} derives cost {actual}, exceeding the claimed {claimed}", path)
        self.actual = actual
        self.claimed = claimed
        self.rule = rule


# ---------------------------------------------------------------------------
# Judgments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrivacyCost:
    """``eps`` is a coefficient of the symbolic epsilon; ``delta`` is absolute."""

    eps: Fraction = Fraction(0)
    delta: Fraction = Fraction(0)

    def __add__(self, other: "PrivacyCost") -> "PrivacyCost":
        return PrivacyCost(self.eps + other.eps, self.delta + other.delta)

    def __le__(self, other: "PrivacyCost") -> bool:
        return self.eps <= other.eps and self.delta <= other.delta

    def is_zero(self) -> bool:
        return self.eps == 0 and self.delta == 0

    def eps_value(self, eps: float) -> float:
        return float(self.eps) * eps

    def __str__(self) -> str:
        return f"({_frac(self.eps)}*eps, {_frac(self.delta)})"


ZERO = PrivacyCost()


def _frac(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


@dataclass
class Judgment:
    pre: Expr
    c1: Command
    c2: Command
    post: Expr
    cost: PrivacyCost

    def show(self) -> str:
        return (f"pre:  {show_expr(self.pre)}\npost: {show_expr(self.post)}\n"
                f"cost: {self.cost}")


@dataclass
class Derivation:
    """One checked rule instance."""

    rule: str
    path: str
    pre: Expr
    post: Expr
    cost: PrivacyCost
    children: List["Derivation"] = field(default_factory=list)
    bindings: Dict[str, int] = field(default_factory=dict)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class CheckedJudgment:
    program: Program
    judgment: Judgment
    derivation: Derivation
    claimed: PrivacyCost
    implications: int = 0
    bounded: bool = True

    @property
    def cost(self) -> PrivacyCost:
        return self.judgment.cost

    @property
    def pre(self) -> Expr:
        return self.judgment.pre

    @property
    def post(self) -> Expr:
        return self.judgment.post


@dataclass
class CheckConfig:
    """Bounds for side-condition checks.

    ``ranges`` maps variable names to the finite set of values enumerated
    when an implication is checked; variables with a declared finite domain
    default to it.
    """

    ranges: Mapping[str, Sequence[Any]] = field(default_factory=dict)
    default_int: Sequence[int] = tuple(range(-2, 5))
    lvar_probe: Sequence[int] = tuple(range(-1, 6))
    budget: int = DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# Rule table
# ---------------------------------------------------------------------------

_COMMON = {"take", "cost", "delta", "label", "path"}

# rule -> (required fields, optional fields, number of children or None for >= 1)
RULES: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...], Optional[int]]] = {
    "skip": ((), (), 0),
    "assn": ((), (), 0),
    "seq": ((), (), None),
    "cond": ((), (), 2),
    "cond-l": ((), (), 2),
    "cond-r": ((), (), 2),
    "while": (("inv", "variant", "bound"), ("lvar",), 1),
    "while-ext": (("inv", "variant", "bound", "at"), ("lvar",), 3),
    "conseq": ((), ("pre", "post"), 1),
    "frame": ((), ("keep",), 1),
    "frame-trivial": ((), ("keep",), 1),
    "forall-eq": (("var", "lvar"), (), 1),
    "lapgen": (("k", "kp"), (), 0),
    "lapnull": ((), (), 0),
    "onelapgen": (("k", "kp"), (), 0),
    "onelapnull": ((), (), 0),
    "lapeq": (("kp",), (), 0),
}

_SAMPLING = {"lapgen": "lap", "lapnull": "lap", "lapeq": "lap",
             "onelapgen": "oslap", "onelapnull": "oslap"}


def _cmds(c: Sequence[Command]) -> str:
    from ..lang.printer import show_command
    text = show_command(from_list(c)).replace("\n", " ")
    return text if len(text) <= 60 else text[:57] + "..."


def resolve_path(program: Program, spec, where: str = "") -> List[Command]:
    """Statements named by a path such as ``body.4.while.body.2``.

    Numbers select a 1-based statement (``2-3`` a slice) of the current
    list; ``while``/``if`` assert the statement kind; ``body``, ``then`` and
    ``else`` descend into loops and conditionals.
    """
    if not isinstance(spec, str):
        raise RuleError("field :path must be a string", where, "path")
    parts = spec.split(".")
    if parts[0] != "body":
        raise RuleError(f"path {spec!r} must start with 'body'", where, "path")
    cur = as_list(program.body)
    kinds = {"while": While, "if": If, "assign": Assign, "sample": Sample}
    for p in parts[1:]:
        single = cur[0] if len(cur) == 1 else None
        if p.isdigit() or (p.count("-") == 1 and p.replace("-", "").isdigit()):
            lo, _, hi = p.partition("-")
            lo, hi = int(lo), int(hi or lo)
            if not 1 <= lo <= hi <= len(cur):
                raise RuleError(f"path {spec!r}: index {p} out of range", where, "path")
            cur = cur[lo - 1:hi]
        elif p in kinds:
            if not isinstance(single, kinds[p]):
                raise RuleError(f"path {spec!r}: not a {p} statement", where, "path")
        elif p == "body" and isinstance(single, While):
            cur = as_list(single.body)
        elif p in ("then", "else") and isinstance(single, If):
            cur = as_list(single.then if p == "then" else single.orelse)
        else:
            raise RuleError(f"path {spec!r}: cannot follow {p!r}", where, "path")
    return cur


class _Checker:
    def __init__(self, program: Program, cfg: CheckConfig):
        self.program = program
        self.cfg = cfg
        self.types = {d.name: d.type for d in program.decls}
        self.declared = set(self.types)
        by_name: Dict[str, Sequence[Any]] = {}
        for d in program.decls:
            if d.domain is not None:
                by_name[d.name] = d.domain
        by_name.update(cfg.ranges)
        self.ranges = Ranges(by_name, tuple(cfg.default_int), tuple(cfg.lvar_probe))
        self.implications = 0
        self._parsed: Dict[Tuple[str, str], Expr] = {}

    # -- helpers -------------------------------------------------------------
    def assertion(self, n: ProofNode, name: str, lv: Mapping[str, int], path: str) -> Expr:
        text = n.fields[name]
        if not isinstance(text, str) or isinstance(text, Symbol):
            raise RuleError(f"field :{name} must be a quoted assertion", path, name)
        key = ("a", text)
        if key not in self._parsed:
            try:
                e = parse_assertion(text, self.declared)
                check_assertion(e, self.types)
            except LangError as err:
                raise RuleError(f"bad assertion in :{name}: {err}", path, name) from None
            self._parsed[key] = e
        return bind_lvars(self._parsed[key], lv)

    def program_expr(self, n: ProofNode, name: str, path: str) -> Expr:
        text = n.fields[name]
        if not isinstance(text, str):
            raise RuleError(f"field :{name} must be a quoted expression", path, name)
        key = ("e", text)
        if key not in self._parsed:
            try:
                self._parsed[key] = parse_expr(text, self.declared)
            except LangError as err:
                raise RuleError(f"bad expression in :{name}: {err}", path, name) from None
        return self._parsed[key]

    def int_field(self, n: ProofNode, name: str, lv: Mapping[str, int], path: str,
                  minimum: Optional[int] = None) -> int:
        v = n.fields[name]
        if isinstance(v, str) and not isinstance(v, Symbol):
            try:
                e = bind_lvars(parse_assertion(v, self.declared), lv)
                v = compile_assertion(e)({})
            except (LangError, EvalError) as err:
                raise RuleError(f"cannot evaluate :{name}: {err}", path, name) from None
        if isinstance(v, Fraction) and v.denominator == 1:
            v = int(v)
        if not isinstance(v, int) or isinstance(v, bool):
            raise RuleError(f"field :{name} must be an integer", path, name)
        if minimum is not None and v < minimum:
            raise RuleError(f"field :{name} must be at least {minimum}", path, name)
        return v

    def symbol(self, n: ProofNode, name: str, path: str) -> str:
        v = n.fields[name]
        if not isinstance(v, str) or not v.isidentifier():
            raise RuleError(f"field :{name} must be a name", path, name)
        return str(v)

    def implies(self, a: Expr, b: Expr, path: str, what: str) -> None:
        if conj_set(b) <= conj_set(a):
            return
        self.implications += 1
        try:
            res = check_implication(a, b, self.ranges, self.cfg.budget)
        except ImplicationBudgetExceeded as err:
            raise SideConditionError(f"{what}: undecided ({err})", path) from None
        if not res.valid:
            raise SideConditionError(
                f"{what} fails on conjunct {res.failed_conjunct}", path, res.counterexample)

    def covers(self, established: Expr, required: Expr, path: str) -> None:
        missing = conj_set(required) - conj_set(established)
        if missing:
            shown = ", ".join(sorted(show_expr(m) for m in missing))
            raise RuleError(f"rule establishes {show_expr(established)}, not {shown}", path)

    # -- dispatch ------------------------------------------------------------
    def node(self, n: ProofNode, c1: List[Command], c2: List[Command], post: Expr,
             hint: Optional[Expr], lv: Dict[str, int], path: str) -> Derivation:
        rule = n.rule
        if rule not in RULES:
            raise RuleError(f"unknown rule {rule!r}", path)
        required, optional, arity = RULES[rule]
        for f in n.fields:
            if f not in required and f not in optional and f not in _COMMON:
                raise RuleError(f"rule {rule} does not take field :{f}", path, f)
        for f in required:
            if f not in n.fields:
                raise RuleError(f"rule {rule} needs field :{f}", path, f)
        if arity is None and not n.children:
            raise RuleError(f"rule {rule} needs at least one premise", path)
        if arity is not None and len(n.children) != arity:
            raise RuleError(f"rule {rule} takes {arity} premises, got {len(n.children)}", path)
        if "path" in n.fields:
            target = resolve_path(self.program, n.fields["path"], path)
            if c1 != target or c2 != target:
                raise RuleError(f"path {n.fields['path']} does not name the commands "
                                f"{_cmds(c1)} this rule applies to", path, "path")
        handler = getattr(self, "r_" + rule.replace("-", "_"))
        d = handler(n, c1, c2, post, hint, lv, path)
        d.bindings = dict(lv)
        if "cost" in n.fields or "delta" in n.fields:
            claimed = PrivacyCost(self.fraction(n, "cost", path), self.fraction(n, "delta", path))
            if not d.cost <= claimed:
                raise CostOverflow(path, d.cost, claimed, rule)
        return d

    def fraction(self, n: ProofNode, name: str, path: str) -> Fraction:
        v = n.fields.get(name, 0)
        if isinstance(v, (int, Fraction)) and not isinstance(v, bool) and v >= 0:
            return Fraction(v)
        raise RuleError(f"field :{name} must be a non-negative rational", path, name)

    # -- structural rules ----------------------------------------------------
    def r_skip(self, n, c1, c2, post, hint, lv, path):
        if c1 or c2:
            raise RuleError(f"skip applied to non-empty commands {_cmds(c1)} ~ {_cmds(c2)}", path)
        return Derivation("skip", path, post, post, ZERO)

    def r_assn(self, n, c1, c2, post, hint, lv, path):
        pre = post
        for side, cs in ((1, c1), (2, c2)):
            for s in reversed(cs):
                if not isinstance(s, Assign):
                    raise RuleError(f"assn applied to non-assignment {_cmds([s])}", path)
                pre = substitute(pre, side, s.var, s.expr)
        return Derivation("assn", path, pre, post, ZERO)

    def r_seq(self, n, c1, c2, post, hint, lv, path):
        segments = []
        i1 = i2 = 0
        last = len(n.children) - 1
        for idx, child in enumerate(n.children):
            cpath = f"{path}/seq.{idx + 1}"
            take = child.fields.get("take")
            if idx == last:
                rest = (len(c1) - i1, len(c2) - i2)
                if take is not None and tuple(take) != rest:
                    raise RuleError(f"last premise takes {rest}, not {tuple(take)}", cpath, "take")
                a, b = rest
            else:
                if take is None:
                    take = (1, 1)
                if (not isinstance(take, tuple) or len(take) != 2
                        or not all(isinstance(x, int) and x >= 0 for x in take)):
                    raise RuleError(":take must be a pair of non-negative integers", cpath, "take")
                a, b = take
                if i1 + a > len(c1) or i2 + b > len(c2):
                    raise RuleError(f":take {take} exceeds the remaining statements", cpath, "take")
            segments.append((c1[i1:i1 + a], c2[i2:i2 + b], cpath))
            i1 += a
            i2 += b
        cur = post
        derivs = []
        total = ZERO
        for idx in range(last, -1, -1):
            s1, s2, cpath = segments[idx]
            d = self.node(n.children[idx], s1, s2, cur, hint if idx == 0 else None, lv, cpath)
            derivs.append(d)
            total = total + d.cost
            cur = d.pre
        derivs.reverse()
        return Derivation("seq", path, cur, post, total, derivs)

    def _guard(self, cs: List[Command], kind, path: str, side: str):
        if len(cs) != 1 or not isinstance(cs[0], kind):
            raise RuleError(f"expected a single {kind.__name__.lower()} statement on the "
                            f"{side} side, got {_cmds(cs) or 'skip'}", path)
        return cs[0]

    def r_cond(self, n, c1, c2, post, hint, lv, path):
        s1 = self._guard(c1, If, path, "left")
        s2 = self._guard(c2, If, path, "right")
        b1, b2 = tag(s1.cond, 1), tag(s2.cond, 2)
        dt = self.node(n.children[0], as_list(s1.then), as_list(s2.then), post,
                       _and(hint, b1, b2), lv, path + "/then")
        df = self.node(n.children[1], as_list(s1.orelse), as_list(s2.orelse), post,
                       _and(hint, neg(b1), neg(b2)), lv, path + "/else")
        pre = conj(Binary("=", b1, b2), _guarded(b1, dt.pre), _guarded(neg(b1), df.pre))
        return Derivation("cond", path, pre, post, _max(dt.cost, df.cost), [dt, df])

    def r_cond_l(self, n, c1, c2, post, hint, lv, path):
        s1 = self._guard(c1, If, path, "left")
        b1 = tag(s1.cond, 1)
        dt = self.node(n.children[0], as_list(s1.then), c2, post, _and(hint, b1), lv, path + "/then")
        df = self.node(n.children[1], as_list(s1.orelse), c2, post, _and(hint, neg(b1)), lv,
                       path + "/else")
        pre = conj(_guarded(b1, dt.pre), _guarded(neg(b1), df.pre))
        return Derivation("cond-l", path, pre, post, _max(dt.cost, df.cost), [dt, df])

    def r_cond_r(self, n, c1, c2, post, hint, lv, path):
        s2 = self._guard(c2, If, path, "right")
        b2 = tag(s2.cond, 2)
        dt = self.node(n.children[0], c1, as_list(s2.then), post, _and(hint, b2), lv, path + "/then")
        df = self.node(n.children[1], c1, as_list(s2.orelse), post, _and(hint, neg(b2)), lv,
                       path + "/else")
        pre = conj(_guarded(b2, dt.pre), _guarded(neg(b2), df.pre))
        return Derivation("cond-r", path, pre, post, _max(dt.cost, df.cost), [dt, df])

    def r_conseq(self, n, c1, c2, post, hint, lv, path):
        if "pre" in n.fields:
            pre = self.assertion(n, "pre", lv, path)
        elif hint is not None:
            pre = hint
        else:
            raise RuleError("conseq needs :pre here (no precondition flows in)", path, "pre")
        inner_post = self.assertion(n, "post", lv, path) if "post" in n.fields else post
        d = self.node(n.children[0], c1, c2, inner_post, pre, lv, path + "/conseq")
        self.implies(pre, d.pre, path, "precondition strengthening")
        if inner_post is not post:
            self.implies(inner_post, post, path, "postcondition weakening")
        return Derivation("conseq", path, pre, post, d.cost, [d])

    def r_frame(self, n, c1, c2, post, hint, lv, path):
        mod1 = modified_vars(from_list(c1))
        mod2 = modified_vars(from_list(c2))

        def untouched(e: Expr) -> bool:
            return all((side == 1 and x not in mod1) or (side == 2 and x not in mod2)
                       for x, side in tagged_vars(e))
        if "keep" in n.fields:
            keep = conjuncts(self.assertion(n, "keep", lv, path))
            for k in keep:
                if not untouched(k):
                    raise RuleError(f"framed assertion {show_expr(k)} mentions a modified variable",
                                    path, "keep")
        else:
            keep = [c for c in conjuncts(post) if untouched(c)]
        kept = set(keep)
        inner = conj(*[c for c in conjuncts(post) if c not in kept])
        d = self.node(n.children[0], c1, c2, inner, hint, lv, path + "/frame")
        return Derivation(n.rule, path, conj(d.pre, *keep), post, d.cost, [d])

    r_frame_trivial = r_frame

    def r_forall_eq(self, n, c1, c2, post, hint, lv, path):
        x = self.symbol(n, "var", path)
        lvar = self.symbol(n, "lvar", path)
        if x not in self.types:
            raise RuleError(f"undeclared variable {x!r}", path, "var")
        if lvar in lv or lvar in self.declared:
            raise RuleError(f"logical variable {lvar!r} is already bound", path, "lvar")
        x1, x2 = TVar(x, 1), TVar(x, 2)
        self.covers(Binary("=", x1, x2), post, path)
        domain = self.program.decl(x).domain
        if not domain:
            raise RuleError(f"{x} needs a finite declared domain", path, "var")
        pres: List[Expr] = []
        derivs = []
        eps, delta = Fraction(0), Fraction(0)
        for v in domain:
            sub_post = implies(Binary("=", x1, IntLit(v)), Binary("=", x2, IntLit(v)))
            d = self.node(n.children[0], c1, c2, sub_post, hint, {**lv, lvar: v},
                          f"{path}/{lvar}={v}")
            derivs.append(d)
            eps = max(eps, d.cost.eps)
            delta += d.cost.delta
            for c in conjuncts(d.pre):
                if c not in pres:
                    pres.append(c)
        return Derivation("forall-eq", path, conj(*pres), post, PrivacyCost(eps, delta), derivs)

    # -- loops ---------------------------------------------------------------
    def _loop(self, n, c1, c2, lv, path):
        w1 = self._guard(c1, While, path, "left")
        w2 = self._guard(c2, While, path, "right")
        inv = self.assertion(n, "inv", lv, path)
        variant = tag(self.program_expr(n, "variant", path), 1)
        bound = self.int_field(n, "bound", lv, path, minimum=0)
        lvar = self.symbol(n, "lvar", path) if "lvar" in n.fields else "k"
        if lvar in lv:
            raise RuleError(f"logical variable {lvar!r} is already bound", path, "lvar")
        b1, b2 = tag(w1.cond, 1), tag(w2.cond, 2)
        self.implies(conj(inv, Binary("<=", variant, IntLit(0))), neg(b1), path,
                     "loop exit when the variant is exhausted")
        return w1, w2, inv, variant, bound, lvar, b1, b2

    def _iterations(self, n, child_for, c1, c2, post, lv, path):
        w1, w2, inv, variant, bound, lvar, b1, b2 = self._loop(n, c1, c2, lv, path)
        body1, body2 = as_list(w1.body), as_list(w2.body)
        derivs = []
        total = ZERO
        for k in range(1, bound + 1):
            pre_k = conj(inv, b1, b2, Binary("=", variant, IntLit(k)))
            post_k = conj(inv, Binary("=", b1, b2), Binary("<", variant, IntLit(k)))
            idx, child = child_for(k)
            kpath = f"{path}/{lvar}={k}"
            d = self.node(child, body1, body2, post_k, pre_k, {**lv, lvar: k}, kpath)
            if idx is not None and idx != 1 and not d.cost.is_zero():
                raise RuleError(f"off-critical iteration costs {d.cost}, expected 0", kpath)
            self.implies(pre_k, d.pre, kpath, "iteration precondition")
            derivs.append(d)
            total = total + d.cost
        established = conj(inv, neg(b1), neg(b2))
        self.covers(established, post, path)
        pre = conj(inv, Binary("=", b1, b2), Binary("<=", variant, IntLit(bound)))
        return Derivation(n.rule, path, pre, post, total, derivs)

    def r_while(self, n, c1, c2, post, hint, lv, path):
        return self._iterations(n, lambda k: (None, n.children[0]), c1, c2, post, lv, path)

    def r_while_ext(self, n, c1, c2, post, hint, lv, path):
        at = self.int_field(n, "at", lv, path)

        def pick(k):
            idx = 0 if k > at else (1 if k == at else 2)
            return idx, n.children[idx]
        return self._iterations(n, pick, c1, c2, post, lv, path)

    # -- sampling axioms -----------------------------------------------------
    def _samples(self, n, c1, c2, path) -> Tuple[Sample, Sample]:
        s1 = self._guard(c1, Sample, path, "left")
        s2 = self._guard(c2, Sample, path, "right")
        want = _SAMPLING[n.rule]
        for s in (s1, s2):
            if s.dist != want:
                raise RuleError(f"{n.rule} needs {want} sampling, found {s.dist}", path)
        if s1.scale != s2.scale:
            raise RuleError(f"sampling scales differ: {s1.scale} vs {s2.scale}", path)
        return s1, s2

    def _null(self, n, c1, c2, post, path):
        s1, s2 = self._samples(n, c1, c2, path)
        if s1.var in free_vars(s1.center) or s2.var in free_vars(s2.center):
            raise RuleError("the sampled variable occurs in its own center", path)
        est = Binary("=", Binary("-", TVar(s1.var, 1), TVar(s2.var, 2)),
                     Binary("-", tag(s1.center, 1), tag(s2.center, 2)))
        self.covers(est, post, path)
        return Derivation(n.rule, path, conj(), post, ZERO)

    def _gen(self, n, c1, c2, post, lv, path, k: int, one_sided: bool):
        s1, s2 = self._samples(n, c1, c2, path)
        kp = self.int_field(n, "kp", lv, path, minimum=0)
        y1, y2 = TVar(s1.var, 1), TVar(s2.var, 2)
        e1, e2 = tag(s1.center, 1), tag(s2.center, 2)
        lhs = y1 if k == 0 else (Binary("+", y1, IntLit(k)) if k > 0 else Binary("-", y1, IntLit(-k)))
        self.covers(Binary("=", lhs, y2), post, path)
        diff = Binary("-", e1 if k == 0 else Binary("+", IntLit(k), e1), e2)
        if one_sided:
            pre = conj(Binary("<=", IntLit(0), diff), Binary("<=", diff, IntLit(kp)))
        else:
            pre = Binary("<=", Bars(diff), IntLit(kp))
        return Derivation(n.rule, path, pre, post, PrivacyCost(kp * s1.scale, Fraction(0)))

    def r_lapnull(self, n, c1, c2, post, hint, lv, path):
        return self._null(n, c1, c2, post, path)

    r_onelapnull = r_lapnull

    def r_lapgen(self, n, c1, c2, post, hint, lv, path):
        return self._gen(n, c1, c2, post, lv, path, self.int_field(n, "k", lv, path), False)

    def r_onelapgen(self, n, c1, c2, post, hint, lv, path):
        return self._gen(n, c1, c2, post, lv, path, self.int_field(n, "k", lv, path), True)

    def r_lapeq(self, n, c1, c2, post, hint, lv, path):
        return self._gen(n, c1, c2, post, lv, path, 0, False)


def _and(hint: Optional[Expr], *extra: Expr) -> Optional[Expr]:
    return None if hint is None else conj(hint, *extra)


def _guarded(b: Expr, e: Expr) -> Expr:
    return conj() if not conjuncts(e) else implies(b, e)


def _max(a: PrivacyCost, b: PrivacyCost) -> PrivacyCost:
    return PrivacyCost(max(a.eps, b.eps), max(a.delta, b.delta))


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def check_proof(script, program: Program, cfg: Optional[CheckConfig] = None) -> CheckedJudgment:
    """Check a proof script against ``program`` (run on both sides).

    The script root is ``(proof :pre P :post Q :eps c [:delta d] RULE)``.
    Raises RuleError, SideConditionError or CostOverflow.
    """
    cfg = cfg or CheckConfig()
    root = parse_proof(script) if isinstance(script, str) else script
    if root.rule != "proof":
        raise RuleError("the script must start with (proof ...)", "proof")
    for f in ("pre", "post"):
        if f not in root.fields:
            raise RuleError(f"proof needs field :{f}", "proof", f)
    for f in root.fields:
        if f not in ("pre", "post", "eps", "delta", "label"):
            raise RuleError(f"proof does not take field :{f}", "proof", f)
    if len(root.children) != 1:
        raise RuleError("proof takes exactly one rule", "proof")
    ck = _Checker(program, cfg)
    pre = ck.assertion(root, "pre", {}, "proof")
    post = ck.assertion(root, "post", {}, "proof")
    body = as_list(program.body)
    d = ck.node(root.children[0], body, body, post, pre, {}, "proof")
    ck.implies(pre, d.pre, "proof", "root precondition")
    claimed = None
    if "eps" in root.fields or "delta" in root.fields:
        claimed = PrivacyCost(ck.fraction(root, "eps", "proof"), ck.fraction(root, "delta", "proof"))
        if not d.cost <= claimed:
            raise CostOverflow("proof", d.cost, claimed)
    j = Judgment(pre, program.body, program.body, post, d.cost)
    return CheckedJudgment(program, j, d, claimed or d.cost, ck.implications)
