import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from dpcoupling.distribution import (
    SubDistribution, dp_divergence, point, tail_mass, truncated_laplace, truncated_oslaplace,
)
from dpcoupling.lifting import (
    DimensionError, LiftingWitness, LinearFeasibilityProblem, Relation, WindowOverflowError,
    approx_lifting, check_witness, difference, equality, event_bound_check, event_implication,
    exact_lifting, lifting_window, lp_feasible, min_delta, parse_relation,
    pointwise_equality, shift,
)
from dpcoupling.lifting.lp import phase_one_gap


def dists(max_size=5, values=range(6), full=True):
    @st.composite
    def build(draw):
        vals = draw(st.lists(st.sampled_from(list(values)), min_size=1, max_size=max_size, unique=True))
        ws = draw(st.lists(st.integers(1, 20), min_size=len(vals), max_size=len(vals)))
        scale = 1.0 if full else draw(st.floats(0.1, 1.0))
        return SubDistribution({v: w * scale / sum(ws) for v, w in zip(vals, ws)})
    return build()


def relations(values=range(6)):
    pairs = [(a, b) for a in values for b in values]
    return st.lists(st.sampled_from(pairs), min_size=1, max_size=20, unique=True).map(Relation.explicit)


def hall_condition(mu1, mu2, rel):
    """Independent oracle for exact liftings of full distributions.

    A coupling supported in ``rel`` exists iff every set A of left support
    points has mu1(A) <= mu2(rel(A)).
    """
    s1, s2 = mu1.support(), mu2.support()
    for r in range(1, len(s1) + 1):
        for A in itertools.combinations(s1, r):
            nbrs = {b for b in s2 if any(rel(a, b) for a in A)}
            if sum(mu1[a] for a in A) > sum(mu2[b] for b in nbrs) + 1e-9:
                return False
    return True


# -- LP backend --------------------------------------------------------------

def test_lp_trivial_feasible():
    res = lp_feasible(LinearFeasibilityProblem(1, sparse.csr_matrix([[1.0]]), [1.0]))
    assert res.feasible and abs(res.x[0] - 1) < 1e-8


def test_lp_trivial_infeasible():
    p = LinearFeasibilityProblem(1, sparse.csr_matrix([[1.0]]), [-1.0])
    res = lp_feasible(p)
    assert not res.feasible and res.gap == pytest.approx(1.0)
    assert phase_one_gap(p) == pytest.approx(1.0)


def test_lp_transportation_polytope():
    a, b = [0.2, 0.5, 0.3], [0.6, 0.4]
    rows = []
    for i in range(3):
        rows.append([1.0 if k // 2 == i else 0.0 for k in range(6)])
    for j in range(2):
        rows.append([1.0 if k % 2 == j else 0.0 for k in range(6)])
    res = lp_feasible(LinearFeasibilityProblem(6, sparse.csr_matrix(rows), a + b))
    assert res.feasible and res.residual <= 1e-8
    # the product coupling is a feasible point, so the polytope is nonempty
    product = np.array([x * y for x in a for y in b])
    assert np.allclose(np.array(rows) @ product, a + b)


def test_lp_dimension_mismatch():
    with pytest.raises(DimensionError):
        lp_feasible(LinearFeasibilityProblem(2, sparse.csr_matrix([[1.0]]), [1.0]))


# -- exact liftings -----------------------------------------------------------

def test_exact_lifting_examples():
    mu = SubDistribution({0: 0.25, 1: 0.75})
    w = exact_lifting(mu, mu, equality())
    assert w is not None and all(a == b for a, b in w.support())
    w = exact_lifting(point(0), point(1), Relation.explicit([(0, 1)]))
    assert w.items() == [((0, 1), 1.0)]
    assert exact_lifting(SubDistribution({0: 0.5, 1: 0.5}), point(0), equality()) is None


@settings(max_examples=150, deadline=None)
@given(dists(), dists(), relations())
def test_exact_lifting_matches_hall(mu1, mu2, rel):
    w = exact_lifting(mu1, mu2, rel)
    assert (w is not None) == hall_condition(mu1, mu2, rel)
    if w is not None:
        assert all(rel(a, b) for a, b in w.support())


# -- approximate liftings -------------------------------------------------

def test_empty_distributions_lift_trivially():
    empty = SubDistribution({})
    assert approx_lifting(empty, empty, Relation.explicit([]), 0.0, 0.0) is not None


@settings(max_examples=120, deadline=None)
@given(dists(), dists(), relations())
def test_zero_cost_lifting_is_exact_lifting(mu1, mu2, rel):
    assert (approx_lifting(mu1, mu2, rel, 0.0, 0.0) is not None) == \
        (exact_lifting(mu1, mu2, rel) is not None)


@settings(max_examples=120, deadline=None)
@given(dists(full=False), dists(full=False), st.floats(0, 2), st.floats(0, 1))
def test_equality_lifting_characterizes_divergence(mu1, mu2, eps, delta):
    div = dp_divergence(mu1, mu2, eps)
    if abs(div - delta) < 1e-7:
        return
    assert (approx_lifting(mu1, mu2, equality(), eps, delta) is not None) == (div <= delta)


@settings(max_examples=80, deadline=None)
@given(dists(full=False), dists(full=False), relations(), st.floats(0, 1.5), st.floats(0, 0.5),
       st.floats(0, 1), st.floats(0, 0.5), st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5))))
def test_lifting_monotone(mu1, mu2, rel, eps, delta, deps, ddelta, extra):
    if approx_lifting(mu1, mu2, rel, eps, delta) is None:
        return
    assert approx_lifting(mu1, mu2, rel, eps + deps, delta + ddelta) is not None
    bigger = Relation.explicit(set(rel.pairs) | set(extra))
    assert approx_lifting(mu1, mu2, bigger, eps, delta) is not None


@settings(max_examples=80, deadline=None)
@given(dists(full=False), dists(full=False), relations(), st.floats(0, 1.5), st.floats(0, 0.5))
def test_returned_witness_passes_check(mu1, mu2, rel, eps, delta):
    w = approx_lifting(mu1, mu2, rel, eps, delta)
    if w is not None:
        assert check_witness(mu1, mu2, rel, eps, delta, w).ok


def test_check_witness_examples():
    mu = SubDistribution({0: 0.5, 1: 0.5})
    diag = SubDistribution({(0, 0): 0.5, (1, 1): 0.5})
    assert check_witness(mu, mu, equality(), 0, 0, LiftingWitness(diag, diag)).ok
    bad = SubDistribution({(0, 1): 0.5, (1, 1): 0.5})
    report = check_witness(mu, mu, equality(), 0, 0, LiftingWitness(bad, diag))
    assert not report.support_ok and ("left", (0, 1)) in report.support_violations


@settings(max_examples=80, deadline=None)
@given(dists(full=False), dists(full=False), st.sets(st.integers(0, 5)), st.sets(st.integers(0, 5)),
       st.floats(0, 1.5), st.floats(0, 0.5))
def test_event_bound_follows_from_lifting(mu1, mu2, E1, E2, eps, delta):
    rel = event_implication(E1.__contains__, E2.__contains__)
    if approx_lifting(mu1, mu2, rel, eps, delta, carrier=range(6)) is not None:
        assert event_bound_check(mu1, mu2, E1.__contains__, E2.__contains__, eps, delta)


def test_event_bound_examples():
    mu = SubDistribution({0: 0.3, 1: 0.7})
    assert event_bound_check(mu, mu, lambda v: False, lambda v: False, 0, 0)
    assert event_bound_check(mu, mu, lambda v: v == 1, lambda v: True, 0, 0)


def test_pointwise_equality_examples():
    mu = SubDistribution({0: 0.3, 1: 0.7})
    assert pointwise_equality(mu, mu)
    assert not pointwise_equality(point(0), point(1))


@settings(max_examples=120, deadline=None)
@given(dists(max_size=3, values=range(3)), dists(max_size=3, values=range(3)))
def test_pointwise_equality_agrees_with_weights(mu1, mu2):
    same = all(abs(mu1[v] - mu2[v]) <= 1e-9 for v in range(3))
    assert pointwise_equality(mu1, mu2) == same


def test_window_overflow():
    with pytest.raises(WindowOverflowError):
        lifting_window(point(0), point(1), shift(5), carrier=range(3))
    assert lifting_window(point(0), point(1), shift(1)) == [0, 1]
    assert lifting_window(point(0), point(0), shift(1)) == [-1, 0, 1]


def test_min_delta_matches_divergence():
    a = SubDistribution({0: 0.5, 1: 0.5})
    b = SubDistribution({0: 0.75, 1: 0.25})
    assert min_delta(a, b, equality(), 0.0) == pytest.approx(0.25, abs=1e-6)


def test_parse_relation():
    assert parse_relation("shift:2")(1, 3)
    assert parse_relation("diff:-1")(1, 2)
    assert parse_relation("impl:4")(3, 9) and not parse_relation("impl:4")(4, 9)
    assert parse_relation("eq")(5, 5)


# -- Laplace coupling propositions on truncated samplers ----------------------

R = 12


@pytest.mark.parametrize("v1,v2", [(0, 0), (0, 2), (-1, 1), (2, -2)])
@pytest.mark.parametrize("sampler", [truncated_laplace, truncated_oslaplace])
def test_null_couplings_are_exact(sampler, v1, v2):
    mu1, mu2 = sampler(v1, 0.5, R), sampler(v2, 0.5, R)
    assert approx_lifting(mu1, mu2, difference(v1 - v2), 0.0, 0.0) is not None


@pytest.mark.parametrize("k,v1,v2", [(1, 0, 0), (-1, 0, 1), (2, 1, 0), (0, 1, 2)])
def test_shift_coupling_cost(k, v1, v2):
    eps = 0.5
    c = k + v1 - v2
    slack = 2 * tail_mass(eps, R - abs(c))
    mu1, mu2 = truncated_laplace(v1, eps, R), truncated_laplace(v2, eps, R)
    assert approx_lifting(mu1, mu2, shift(k), abs(c) * eps, slack) is not None
    if c != 0:
        assert approx_lifting(mu1, mu2, shift(k), 0.5 * abs(c) * eps, slack) is None


def one_sided_witness(k: int, G: SubDistribution) -> LiftingWitness:
    """Witness pair for shifting a one-sided sampler by k >= 0.

    The left witness keeps G on its first coordinate and the right witness
    keeps G on its second, both supported on {(j, j + k)}.
    """
    left = SubDistribution({(j, j + k): p for j, p in G.items()})
    right = SubDistribution({(j - k, j): p for j, p in G.items()})
    return LiftingWitness(left, right)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("eps", [0.5, 1.0])
def test_one_sided_witness_construction(k, eps):
    G = truncated_oslaplace(0, eps, R)
    w = one_sided_witness(k, G)
    # truncation: the left witness keeps mass at j > R - k with no partner
    slack = sum(p for j, p in G.items() if j > R - k)
    report = check_witness(G, G, shift(k), k * eps, slack, w)
    assert report.ok, report
    assert slack <= 2 * tail_mass(eps, R - k)


@pytest.mark.parametrize("k", [1, 2])
def test_literal_left_witness_has_wrong_marginal(k):
    # placing G(i) at (i - k, i) shifts the first marginal instead of matching it
    G = truncated_oslaplace(0, 1.0, R)
    left = SubDistribution({(i - k, i): p for i, p in G.items()})
    right = SubDistribution({(j, j + k): p for j, p in G.items()})
    report = check_witness(G, G, shift(k), k * 1.0, 0.0, LiftingWitness(left, right))
    assert report.marginal1_residual > 0.1
