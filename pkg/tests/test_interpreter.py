import itertools

import pytest

from dpcoupling.distribution import radius_for_tolerance, truncated_laplace
from dpcoupling.interpreter import InterpConfig, interpret, output_distribution
from dpcoupling.lang import EvalError, parse_program
from dpcoupling.mechanisms import (
    above_threshold, exp_mechanism, load_bundle, report_noisy_max, sparse_vector,
)
from dpcoupling.mechanisms.dptest import input_memories

CFG = InterpConfig(eps=1.0, laplace_radius="auto(1e-9)")


def close(a, b, tol=1e-9):
    keys = set(a.support()) | set(b.support())
    return all(abs(a[k] - b[k]) <= tol for k in keys)


def test_assignment_gives_point():
    p = parse_program("var x : int;\nvar y : int in [0, 9];\nx := 1;\nreturn x")
    for y in range(3):
        out = interpret(p, {"y": y}, CFG)
        assert len(out) == 1 and out.mass() == 1.0
        (m, _), = out.items()
        assert m["x"] == 1 and m["y"] == y


def test_sampling_pushes_laplace_into_memory():
    p = parse_program("var x : int;\nx <-$ lap(eps, 0);\nreturn x")
    cfg = InterpConfig(eps=0.7, laplace_radius=6)
    out = interpret(p, {}, cfg).map(lambda m: m["x"])
    assert close(out, truncated_laplace(0, 0.7, 6), 1e-15)


def test_nontermination_has_no_mass():
    p = parse_program("var x : int;\nwhile true do skip end;\nreturn x")
    assert interpret(p, {}, CFG).mass() == 0.0


def test_constant_output():
    p = parse_program("var x : int;\nx := 3;\nreturn x")
    assert output_distribution(p, {}, CFG).items() == [(3, 1.0)]


def test_runtime_error_carries_memory():
    p = parse_program("input Q : querylist(2) in {(1, 2)};\nvar x : int;\nx := Q[3];\nreturn x")
    with pytest.raises(EvalError) as err:
        interpret(p, {"Q": (1, 2)}, CFG)
    assert err.value.memory is not None


def test_above_threshold_single_query_matches_convolution():
    bundle = above_threshold(nqueries=1, db_dim=1)
    p = bundle.program
    for d, t in itertools.product(range(3), range(2)):
        out = output_distribution(p, {"d": (d,), "Q": (1,), "t": t}, CFG)
        # r = 1 exactly when the noisy threshold is at most the noisy answer
        T = truncated_laplace(t, 0.5, radius_for_tolerance(0.5, 1e-9))
        S = truncated_laplace(d, 0.25, radius_for_tolerance(0.25, 1e-9))
        hit = sum(pt * ps for a, pt in T.items() for b, ps in S.items() if a <= b)
        assert set(out.support()) <= {1, 2}
        assert abs(out[1] - hit) < 1e-12
        assert abs(out.mass() - 1) < 1e-9


def test_exp_mechanism_single_candidate():
    p = exp_mechanism(ncandidates=1).program
    for m in input_memories(p):
        assert output_distribution(p, m, CFG).items() == [(1, 1.0)]


def test_loop_free_mass_conservation():
    p = parse_program(
        "input a : int in [0, 3];\nvar x : int;\nvar y : int;\n"
        "x <-$ lap(eps/2, a);\nif x > a then y <-$ oslap(eps, x) else y := x - 1 end;\nreturn y")
    for m in input_memories(p):
        assert abs(output_distribution(p, m, CFG).mass() - 1) < 1e-9


@pytest.mark.parametrize("make", [above_threshold, exp_mechanism, report_noisy_max,
                                  lambda: sparse_vector(2, 2, 2)])
def test_counter_bounded_loops_exact_at_static_bound(make):
    p = make().program
    tight = InterpConfig(eps=1.0, laplace_radius="auto(1e-9)", max_loop_iterations=2)
    loose = InterpConfig(eps=1.0, laplace_radius="auto(1e-9)", max_loop_iterations=10)
    for m in input_memories(p)[:6]:
        a = output_distribution(p, m, tight)
        b = output_distribution(p, m, loose)
        assert close(a, b, 1e-12)


def test_loop_bound_too_small_drops_mass():
    p = above_threshold().program
    short = InterpConfig(eps=1.0, laplace_radius="auto(1e-9)", max_loop_iterations=1)
    m = input_memories(p)[0]
    assert output_distribution(p, m, short).mass() < 1e-6


def test_sparse_vector_single_round_equals_above_threshold():
    at = load_bundle("above-threshold").program
    sv = sparse_vector(2, 2, 1).program
    for m in input_memories(at):
        assert close(output_distribution(at, m, CFG), output_distribution(sv, m, CFG), 1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        InterpConfig(max_loop_iterations=0)
    with pytest.raises(ValueError):
        InterpConfig(laplace_radius="sometimes")
