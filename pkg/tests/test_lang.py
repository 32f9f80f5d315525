from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dpcoupling.lang import (
    EvalError, ParseError, TypeCheckError, UndeclaredVariable, eval_expr, free_vars,
    modified_vars, parse_command, parse_expr, parse_program, show_command, show_expr,
    show_program, typecheck,
)
from dpcoupling.lang.analysis import walk_commands
from dpcoupling.lang.ast import (
    Assign, Binary, BoolLit, If, IntLit, Sample, Seq, Skip, Unary, Var, While, as_list,
)
from dpcoupling.lang.typing import type_of
from dpcoupling.mechanisms import BUILDERS, load_bundle

ABOVE_T = """\
input d : db(2) in [0, 2];
input Q : querylist(2) in {(1, 2)};
input t : int in [0, 1];
var i : int in [1, 3];
var r : int in [1, 3];
var T : int;
var S : int;

i := 1;
r := |Q| + 1;
T <-$ lap(eps/2, t);
while i <= |Q| do
  S <-$ lap(eps/4, evalQ(Q[i], d));
  if T <= S && r = |Q| + 1 then r := i end;
  i := i + 1
end;
return r
"""


# -- parsing ---------------------------------------------------------------

def test_smallest_program():
    p = parse_program("var x : int;\nx := 1;\nreturn x")
    assert p.body == Assign("x", IntLit(1))
    assert p.returns == ("x",)


def test_above_threshold_structure():
    p = parse_program(ABOVE_T)
    body = as_list(p.body)
    assert [type(s) for s in body] == [Assign, Assign, Sample, While]
    threshold = body[2]
    assert (threshold.var, threshold.dist, threshold.scale) == ("T", "lap", Fraction(1, 2))
    loop = as_list(body[3].body)
    assert [type(s) for s in loop] == [Sample, If, Assign]
    assert loop[0].scale == Fraction(1, 4)
    assert p.returns == ("r",)


def test_missing_expression_reports_position():
    with pytest.raises(ParseError) as err:
        parse_program("var x : int;\nx := ;\nreturn x")
    assert (err.value.line, err.value.col) == (2, 6)


def test_truncated_source_is_a_syntax_error():
    with pytest.raises(ParseError):
        parse_command("x := ")


def test_undeclared_variable():
    with pytest.raises(UndeclaredVariable):
        parse_program("var x : int;\ny := 1;\nreturn x")


def test_program_round_trip():
    p = parse_program(ABOVE_T)
    assert parse_program(show_program(p)) == p


# Random ASTs for the round-trip property.  Unary minus is kept off literals
# because "-3" reads back as the literal -3.
names = st.sampled_from(["x", "y", "z"])
int_atoms = st.one_of(st.integers(-20, 20).map(IntLit), names.map(Var))


def _int_exprs():
    return st.recursive(
        int_atoms,
        lambda sub: st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*"]), sub, sub).map(lambda t: Binary(*t)),
            names.map(lambda n: Unary("-", Var(n))),
        ),
        max_leaves=8,
    )


int_exprs = _int_exprs()


def _bool_exprs():
    atom = st.one_of(
        st.booleans().map(BoolLit),
        st.tuples(st.sampled_from(["<", "<=", "=", ">", ">=", "!="]), int_exprs, int_exprs)
        .map(lambda t: Binary(*t)),
    )
    return st.recursive(
        atom,
        lambda sub: st.one_of(
            st.tuples(st.sampled_from(["&&", "||", "=>"]), sub, sub).map(lambda t: Binary(*t)),
            sub.map(lambda e: Unary("!", e)),
        ),
        max_leaves=6,
    )


bool_exprs = _bool_exprs()


def _commands():
    simple = st.one_of(
        st.just(Skip()),
        st.tuples(names, int_exprs).map(lambda t: Assign(*t)),
        st.tuples(names, st.sampled_from(["lap", "oslap"]),
                  st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(3, 4)]), int_exprs)
        .map(lambda t: Sample(*t)),
    )

    def compound(sub):
        return st.one_of(
            st.tuples(bool_exprs, sub, sub).map(lambda t: If(*t)),
            st.tuples(bool_exprs, sub).map(lambda t: While(*t)),
            st.lists(sub.filter(lambda c: not isinstance(c, (Seq, Skip))), min_size=2, max_size=3)
            .map(lambda cs: Seq(tuple(cs))),
        )
    return st.recursive(simple, compound, max_leaves=6)


@settings(max_examples=200, deadline=None)
@given(int_exprs)
def test_int_expression_round_trip(e):
    assert parse_expr(show_expr(e)) == e


@settings(max_examples=200, deadline=None)
@given(bool_exprs)
def test_bool_expression_round_trip(e):
    assert parse_expr(show_expr(e)) == e


@settings(max_examples=150, deadline=None)
@given(_commands())
def test_command_round_trip(c):
    assert parse_command(show_command(c)) == c


# -- typing ----------------------------------------------------------------

def test_bool_into_int_rejected():
    p = parse_program("var x : int;\nx := true;\nreturn x")
    with pytest.raises(TypeCheckError) as err:
        typecheck(p)
    assert err.value.errors


def test_above_threshold_typechecks():
    typecheck(parse_program(ABOVE_T))


def test_guard_is_bool():
    p = parse_program(ABOVE_T)
    env = {d.name: d.type for d in p.decls}
    assert type_of(parse_expr("i < |Q|"), env).kind == "bool"


def test_sampling_center_must_be_int():
    p = parse_program("var x : int;\nx <-$ lap(eps, true);\nreturn x")
    with pytest.raises(TypeCheckError):
        typecheck(p)


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_bundled_programs_typecheck(name):
    typecheck(load_bundle(name).program)


# -- evaluation ------------------------------------------------------------

def test_eval_arithmetic():
    assert eval_expr(parse_expr("1 + 2"), {}) == 3


def test_eval_lookup_query():
    m = {"Q": (1, 2), "d": (5, 7)}
    assert eval_expr(parse_expr("evalQ(Q[1], d)"), m) == 5
    assert eval_expr(parse_expr("evalQ(Q[2], d)"), m) == 7


def test_eval_length():
    assert eval_expr(parse_expr("|Q|"), {"Q": (1, 2, 1)}) == 3


def test_eval_index_out_of_bounds():
    with pytest.raises(EvalError):
        eval_expr(parse_expr("Q[4]"), {"Q": (1, 2, 1)})


@settings(max_examples=100, deadline=None)
@given(int_exprs, st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
def test_eval_deterministic(e, x, y, z):
    m = {"x": x, "y": y, "z": z}
    assert eval_expr(e, m) == eval_expr(e, dict(m))


# -- variable analyses -------------------------------------------------------

def test_free_vars():
    assert free_vars(parse_expr("x + y")) == {"x", "y"}
    assert free_vars(parse_expr("3")) == set()
    assert free_vars(parse_expr("evalQ(Q[i], d)")) == {"Q", "i", "d"}


def test_modified_vars():
    assert modified_vars(parse_command("x := 1; y <-$ lap(eps, x)")) == {"x", "y"}
    assert modified_vars(parse_command("skip")) == set()
    loop = as_list(parse_program(ABOVE_T).body)[3]
    assert modified_vars(loop.body) == {"S", "r", "i"}


def test_walk_commands_reports_loop_depth():
    p = parse_program(ABOVE_T)
    samples = [(c.var, depth) for c, depth in walk_commands(p.body) if isinstance(c, Sample)]
    assert samples == [("T", 0), ("S", 1)]
