import dataclasses
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dpcoupling.aprhl import (
    CheckConfig, CostOverflow, ImplicationBudgetExceeded, PrivacyCost, RuleError,
    SideConditionError, ValidationConfig, assertion, assertion_eval, check_implication,
    check_proof, parse_proof, show_proof, substitute, validate_empirically,
)
from dpcoupling.aprhl.assertions import UnboundLogicalVariable
from dpcoupling.aprhl.implication import Ranges
from dpcoupling.lang import eval_expr, parse_program
from dpcoupling.lang.ast import Binary, BoolLit, IntLit, LVar, TVar, Var
from dpcoupling.mechanisms import load_bundle

ASSIGN = parse_program("input a : int in [0, 2];\nvar x : int;\nx := a + 1;\nreturn x")

RELEASE = parse_program(
    "input a : int in [0, 3];\nvar x : int;\nx <-$ lap(eps, a);\nreturn x")

ONE_SIDED = parse_program(
    "input a : int in [0, 3];\nvar x : int;\nx <-$ oslap(eps/2, a);\nreturn x")

BRANCH = parse_program(
    "input a : int in [0, 3];\nvar x : int in [0, 3];\n"
    "if a < 2 then x := 0 else x := 1 end;\nreturn x")

LOOP = parse_program(
    "input a : int in [0, 2];\nvar i : int in [0, 3];\nvar x : int;\n"
    "i := 0;\nwhile i < 2 do x <-$ lap(eps, a); i := i + 1 end;\nreturn x")


def proof(pre, post, rule, eps=None):
    claim = "" if eps is None else f" :eps {eps}"
    return f'(proof :pre "{pre}" :post "{post}"{claim} {rule})'


# -- assertions --------------------------------------------------------------

def test_assertion_eval_examples():
    assert assertion_eval(assertion("x<1> = x<2>"), {"x": 3}, {"x": 3})
    assert assertion_eval(assertion("T<1> + 1 = T<2>"), {"T": 4}, {"T": 5})
    assert not assertion_eval(assertion("adj(d<1>, d<2>)"), {"d": (0, 0)}, {"d": (0, 2)})
    assert assertion_eval(assertion("adj(d<1>, d<2>)"), {"d": (0, 1)}, {"d": (1, 2)})


def test_assertion_eval_unbound_logical_variable():
    with pytest.raises(UnboundLogicalVariable):
        assertion_eval(assertion("x<1> = k"), {"x": 1}, {"x": 1})
    assert assertion_eval(assertion("x<1> = k"), {"x": 1}, {"x": 1}, {"k": 1})


def test_substitute_examples():
    psi = assertion("x<1> = x<2>")
    out = substitute(psi, 1, "x", Binary("+", Var("y"), IntLit(1)))
    assert out == assertion("y<1> + 1 = x<2>")
    assert substitute(psi, 1, "z", IntLit(3)) == psi


side_terms = st.sampled_from([TVar("x", 1), TVar("y", 1), TVar("x", 2), TVar("y", 2), LVar("k")])
plain_terms = st.sampled_from([Var("x"), Var("y")])


def _terms(atoms):
    return st.recursive(
        st.one_of(atoms, st.integers(-3, 3).map(IntLit)),
        lambda sub: st.tuples(st.sampled_from(["+", "-", "*"]), sub, sub).map(lambda t: Binary(*t)),
        max_leaves=5,
    )


def _formulas():
    atom = st.tuples(st.sampled_from(["<", "<=", "=", "!="]), _terms(side_terms), _terms(side_terms)) \
        .map(lambda t: Binary(*t))
    return st.recursive(
        st.one_of(atom, st.booleans().map(BoolLit)),
        lambda sub: st.tuples(st.sampled_from(["&&", "||", "=>"]), sub, sub).map(lambda t: Binary(*t)),
        max_leaves=4,
    )


@settings(max_examples=300, deadline=None)
@given(_formulas(), _terms(plain_terms), st.sampled_from(["x", "y"]), st.sampled_from([1, 2]),
       st.tuples(*[st.integers(-4, 4)] * 5))
def test_substitution_lemma(psi, e, var, side, vals):
    x1, y1, x2, y2, k = vals
    m1, m2 = {"x": x1, "y": y1}, {"x": x2, "y": y2}
    env = {"k": k}
    updated = dict(m1 if side == 1 else m2)
    updated[var] = eval_expr(e, m1 if side == 1 else m2)
    n1, n2 = (updated, m2) if side == 1 else (m1, updated)
    assert assertion_eval(substitute(psi, side, var, e), m1, m2, env) == \
        assertion_eval(psi, n1, n2, env)


# -- implication -------------------------------------------------------------

def test_implication_examples():
    ranges = Ranges({"x": range(-8, 9)})
    phi = assertion("x<1> < x<2> && x<2> <= 3")
    assert check_implication(phi, phi, ranges).valid
    assert check_implication(assertion("x<1> = 1"), assertion("x<1> >= 0"), ranges).valid
    res = check_implication(assertion("x<1> >= 0"), assertion("x<1> = 1"), ranges)
    assert not res.valid and res.counterexample == {"x<1>": 0}
    assert res.bounded


def test_implication_budget():
    big = Ranges({n: range(-50, 50) for n in "abcd"})
    ante = assertion("a<1> + b<1> + c<1> + d<1> != 7")
    with pytest.raises(ImplicationBudgetExceeded):
        check_implication(ante, assertion("a<1> * b<1> != c<2> * d<2> + 1000000"), big, budget=1000)


# -- rules: positive instances ----------------------------------------------

def test_assn_axiom():
    j = check_proof(proof("a<1> = a<2>", "x<1> = x<2>", "(assn)", 0), ASSIGN)
    assert j.cost == PrivacyCost()


def test_lapeq_release():
    j = check_proof(proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 1)", 1), RELEASE)
    assert j.cost == PrivacyCost(Fraction(1))


def test_lapgen_shift():
    j = check_proof(proof("a<1> = a<2>", "x<1> + 2 = x<2>", "(lapgen :k 2 :kp 2)"), RELEASE)
    assert j.cost.eps == 2


def test_lapnull_and_onelap_rules():
    check_proof(proof("true", "x<1> - x<2> = a<1> - a<2>", "(lapnull)", 0), RELEASE)
    check_proof(proof("true", "x<1> - x<2> = a<1> - a<2>", "(onelapnull)", 0), ONE_SIDED)
    j = check_proof(proof("a<2> = a<1> + 1", "x<1> + 1 = x<2>", "(onelapgen :k 1 :kp 2)"), ONE_SIDED)
    assert j.cost.eps == 1  # 2 * (1/2)


def test_cond_rules():
    check_proof(proof("a<1> = a<2>", "x<1> = x<2>", "(cond (assn) (assn))", 0), BRANCH)
    script = proof("true", "x<1> <= 1 && x<2> <= 1",
                   "(cond-l (cond-r (assn) (assn)) (cond-r (assn) (assn)))", 0)
    check_proof(script, BRANCH)


def test_while_rule():
    script = proof(
        "a<1> = a<2> && x<1> = x<2>", "x<1> = x<2>",
        '(seq (assn) (while :inv "a<1> = a<2> && i<1> = i<2> && x<1> = x<2> && 0 <= i<1> && i<1> <= 2"'
        ' :variant "2 - i" :bound 2 :path "body.2"'
        ' (seq (frame (lapeq :kp 0)) (assn))))')
    j = check_proof(script, LOOP)
    assert j.cost.eps == 0


def test_while_costs_add_per_iteration():
    script = proof(
        "|a<1> - a<2>| <= 1", "i<1> = i<2>",
        '(seq (assn) (while :inv "|a<1> - a<2>| <= 1 && i<1> = i<2> && 0 <= i<1> && i<1> <= 2"'
        ' :variant "2 - i" :bound 2 (seq (frame (lapeq :kp 1)) (assn))))', 2)
    assert check_proof(script, LOOP).cost.eps == 2


def test_forall_eq():
    j = check_proof(proof("a<1> = a<2>", "x<1> = x<2>", "(forall-eq :var x :lvar v (cond (assn) (assn)))"),
                    BRANCH)
    assert len(j.derivation.children) == 4


# -- rules: negative instances ----------------------------------------------

NEGATIVE = [
    ("unknown rule", ASSIGN, proof("true", "x<1> = x<2>", "(teleport)"), RuleError),
    ("skip on assignment", ASSIGN, proof("true", "x<1> = x<2>", "(skip)"), RuleError),
    ("assn on sampling", RELEASE, proof("true", "x<1> = x<2>", "(assn)"), RuleError),
    ("seq take too large", ASSIGN, proof("true", "x<1> = x<2>", "(seq (assn :take (2 2)) (skip))"), RuleError),
    ("cond on assignment", ASSIGN, proof("true", "x<1> = x<2>", "(cond (assn) (assn))"), RuleError),
    ("cond-l arity", BRANCH, proof("true", "x<1> = x<2>", "(cond-l (assn))"), RuleError),
    ("cond-r arity", BRANCH, proof("true", "x<1> = x<2>", "(cond-r (assn) (assn) (assn))"), RuleError),
    ("while without invariant", LOOP,
     proof("true", "x<1> = x<2>", '(seq (assn) (while :variant "2 - i" :bound 2 (assn)))'), RuleError),
    ("while-ext without case index", LOOP,
     proof("true", "x<1> = x<2>",
           '(seq (assn) (while-ext :inv "true" :variant "2 - i" :bound 2 (assn) (assn) (assn)))'),
     RuleError),
    ("conseq with false implication", ASSIGN,
     proof("true", "x<1> = x<2>", '(conseq :pre "true" (assn))'), SideConditionError),
    ("frame keeps modified variable", RELEASE,
     proof("true", "x<1> = x<2>", '(frame :keep "x<1> = 0" (lapnull))'), RuleError),
    ("forall-eq over unbounded variable", RELEASE,
     proof("true", "x<1> = x<2>", "(forall-eq :var x :lvar v (lapeq :kp 1))"), RuleError),
    ("lapgen on one-sided sampler", ONE_SIDED,
     proof("true", "x<1> = x<2>", "(lapgen :k 0 :kp 1)"), RuleError),
    ("lapnull wrong post", RELEASE, proof("true", "x<1> = x<2>", "(lapnull)"), RuleError),
    ("onelapgen on two-sided sampler", RELEASE,
     proof("true", "x<1> = x<2>", "(onelapgen :k 0 :kp 1)"), RuleError),
    ("onelapnull on two-sided sampler", RELEASE,
     proof("true", "x<1> - x<2> = a<1> - a<2>", "(onelapnull)"), RuleError),
    ("lapeq without kp", RELEASE, proof("true", "x<1> = x<2>", "(lapeq)"), RuleError),
    ("lapeq budget too small", RELEASE,
     proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 0)"), SideConditionError),
    ("claimed cost too low", RELEASE,
     proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 1)", "1/2"), CostOverflow),
]


@pytest.mark.parametrize("label,program,script,error", NEGATIVE, ids=[n[0] for n in NEGATIVE])
def test_rule_rejections(label, program, script, error):
    with pytest.raises(error):
        check_proof(script, program)


def test_rule_error_names_field():
    with pytest.raises(RuleError) as err:
        check_proof(proof("true", "x<1> = x<2>", "(lapeq)"), RELEASE)
    assert err.value.field == "kp"


def test_side_condition_counterexample():
    with pytest.raises(SideConditionError) as err:
        check_proof(proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 0)"), RELEASE)
    assert err.value.counterexample


# -- the bundled Above Threshold script ---------------------------------------

@pytest.fixture(scope="module")
def above():
    return load_bundle("above-threshold")


def independent_cost(d):
    """Cost recomputed from the derivation tree and the leaf axioms alone."""
    if not d.children:
        if d.rule in ("assn", "skip", "lapnull", "onelapnull"):
            assert d.cost == PrivacyCost()
        return d.cost
    costs = [independent_cost(c) for c in d.children]
    if d.rule in ("seq", "while", "while-ext"):
        return sum(costs, PrivacyCost())
    if d.rule in ("cond", "cond-l", "cond-r"):
        return PrivacyCost(max(c.eps for c in costs), max(c.delta for c in costs))
    if d.rule == "forall-eq":
        return PrivacyCost(max(c.eps for c in costs), sum(c.delta for c in costs))
    (only,) = costs
    return only


def test_above_threshold_cost_by_tree_walk(above):
    j = check_proof(above.proof, above.program, above.check_config())
    assert independent_cost(j.derivation) == j.cost == PrivacyCost(Fraction(1))
    leaves = [d for d in j.derivation.walk() if d.rule == "lapgen"]
    assert sorted({d.cost.eps for d in leaves}) == [Fraction(1, 2)]


def test_proof_text_round_trip(above):
    assert parse_proof(show_proof(above.proof)) == above.proof


def test_lowered_cost_overflows_at_seq(above):
    text = above.proof_text().replace("(seq :cost 1", "(seq :cost 3/4", 1)
    with pytest.raises(CostOverflow) as err:
        check_proof(text, above.program, above.check_config())
    assert err.value.rule == "seq"
    assert err.value.actual.eps == 1 and err.value.claimed.eps == Fraction(3, 4)


def test_dropping_threshold_coupling_fails(above):
    text = above.proof_text().replace(" && T<1> + 1 = T<2>", "")
    with pytest.raises(SideConditionError):
        check_proof(text, above.program, above.check_config())


def test_null_coupling_at_critical_iteration_fails(above):
    text = above.proof_text().replace("(lapgen :k 1 :kp 2)", "(lapnull)")
    with pytest.raises(RuleError):
        check_proof(text, above.program, above.check_config())


def test_underpaid_critical_iteration_fails(above):
    text = above.proof_text().replace("(lapgen :k 1 :kp 2)", "(lapgen :k 1 :kp 1)")
    with pytest.raises(SideConditionError):
        check_proof(text, above.program, above.check_config())


# -- empirical validation -----------------------------------------------------

def test_validate_assignment_judgment():
    j = check_proof(proof("a<1> = a<2>", "x<1> = x<2>", "(assn)", 0), ASSIGN)
    report = validate_empirically(j, 1.0)
    assert report.ok and report.pairs == 3


def test_validate_release_judgment():
    j = check_proof(proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 1)", 1), RELEASE)
    report = validate_empirically(j, 0.5)
    assert report.ok and report.pairs == 10


def test_validate_detects_corrupted_post():
    j = check_proof(proof("a<1> = a<2>", "x<1> = x<2>", "(assn)", 0), ASSIGN)
    bad = dataclasses.replace(j, judgment=dataclasses.replace(j.judgment, post=assertion("x<1> = x<2> && false")))
    report = validate_empirically(bad, 1.0)
    assert not report.ok and len(report.violations) == 3
    assert report.violations[0].needed_delta is None


def test_validate_detects_underpaid_cost():
    j = check_proof(proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 1)", 1), RELEASE)
    cheap = dataclasses.replace(j, judgment=dataclasses.replace(j.judgment, cost=PrivacyCost(Fraction(1, 2))))
    report = validate_empirically(cheap, 1.0)
    assert not report.ok
    assert all(v.needed_delta > 0.1 for v in report.violations)


def test_validate_parallel_matches_serial():
    j = check_proof(proof("|a<1> - a<2>| <= 1", "x<1> = x<2>", "(lapeq :kp 1)", 1), RELEASE)
    cheap = dataclasses.replace(j, judgment=dataclasses.replace(j.judgment, cost=PrivacyCost(Fraction(1, 2))))
    serial = validate_empirically(cheap, 1.0)
    parallel = validate_empirically(cheap, 1.0, ValidationConfig(jobs=2))
    assert [(v.m1, v.m2) for v in serial.violations] == [(v.m1, v.m2) for v in parallel.violations]


def test_validate_rejects_bad_eps():
    j = check_proof(proof("a<1> = a<2>", "x<1> = x<2>", "(assn)", 0), ASSIGN)
    with pytest.raises(ValueError):
        validate_empirically(j, 0.0)


def test_check_config_ranges_are_used():
    # with x unconstrained the weakening fails; a tight range makes it hold
    script = proof("true", "x<1> <= 5", "(conseq :post \"x<1> = 1\" (assn))")
    prog = parse_program("var x : int;\nx := 1;\nreturn x")
    check_proof(script, prog, CheckConfig(ranges={"x": range(0, 3)}))
