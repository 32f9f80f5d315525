import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpcoupling.distribution import (
    DistributionError, SubDistribution, bind, dp_divergence, dp_divergence_bruteforce, empty,
    marginal1, marginal2, mass, point, prob, radius_for_tolerance, support, tail_mass,
    truncated_laplace, truncated_oslaplace,
)

TOL = 1e-9


def close(a: SubDistribution, b: SubDistribution, tol=TOL) -> bool:
    keys = set(a.support()) | set(b.support())
    return all(abs(a[k] - b[k]) <= tol for k in keys)


def subdists(max_size=6, values=range(8), full=False):
    """Random sub-distributions (or full distributions) over small ints."""
    @st.composite
    def build(draw):
        vals = draw(st.lists(st.sampled_from(list(values)), min_size=1, max_size=max_size, unique=True))
        ws = draw(st.lists(st.floats(0.01, 1.0), min_size=len(vals), max_size=len(vals)))
        total = sum(ws)
        scale = 1.0 if full else draw(st.floats(0.05, 1.0))
        return SubDistribution({v: w * scale / total for v, w in zip(vals, ws)})
    return build()


# -- basic operations --------------------------------------------------------

def test_point():
    assert point(0).items() == [(0, 1.0)]
    assert mass(point(7)) == 1.0
    assert support(point(7)) == [7]


def test_prob_and_mass():
    assert prob(point(0), lambda v: v == 0) == 1.0
    assert prob(SubDistribution({0: 0.5, 1: 0.5}), lambda v: v <= 0) == 0.5
    assert mass(empty()) == 0.0


def test_invariants_enforced():
    with pytest.raises(DistributionError):
        SubDistribution({0: 0.7, 1: 0.7})
    with pytest.raises(DistributionError):
        SubDistribution({0: -0.1})
    with pytest.raises(DistributionError):
        SubDistribution({0: 0.5}, full=True)
    assert SubDistribution({0: 0.5, 1: 0.0}).support() == [0]


def test_bind_examples():
    k = lambda v: point(v + 1)
    assert close(bind(point(3), k), k(3))
    mu = SubDistribution({0: 0.5, 1: 0.5})
    assert close(bind(mu, point), mu)
    assert close(bind(mu, k), SubDistribution({1: 0.5, 2: 0.5}))


def test_marginals():
    assert close(marginal1(SubDistribution({(0, 1): 1.0})), point(0))
    assert close(marginal2(SubDistribution({(0, 1): 0.5, (0, 2): 0.5})),
                 SubDistribution({1: 0.5, 2: 0.5}))


@settings(max_examples=100, deadline=None)
@given(subdists(values=[(a, b) for a in range(3) for b in range(3)]))
def test_marginal_mass(mu):
    assert abs(marginal1(mu).mass() - mu.mass()) < 1e-12
    assert abs(marginal2(mu).mass() - mu.mass()) < 1e-12


def test_text_round_trip():
    mu = SubDistribution({-2: 0.125, 3: 0.5, 7: 1 / 3})
    text = mu.to_text()
    assert text.splitlines()[0].split("\t")[0] == "-2"
    back = SubDistribution.from_text(text)
    assert back.items() == mu.items()


# -- divergence --------------------------------------------------------------

def brute_divergence(mu1, mu2, eps):
    """Independent oracle: sup over every event of the union of supports."""
    pts = sorted(set(mu1.support()) | set(mu2.support()))
    best = 0.0
    for r in range(len(pts) + 1):
        for ev in itertools.combinations(pts, r):
            best = max(best, sum(mu1[v] for v in ev) - math.exp(eps) * sum(mu2[v] for v in ev))
    return best


def test_divergence_examples():
    mu = SubDistribution({0: 0.3, 1: 0.7})
    for eps in (0.0, 0.5, 2.0):
        assert dp_divergence(mu, mu, eps) == 0
        assert dp_divergence(point(0), point(1), eps) == 1.0
    a = SubDistribution({0: 0.5, 1: 0.5})
    b = SubDistribution({0: 0.75, 1: 0.25})
    assert abs(dp_divergence(a, b, 0) - brute_divergence(a, b, 0)) < 1e-15
    assert abs(dp_divergence(a, b, 0) - 0.25) < 1e-15


def test_negative_eps_rejected():
    with pytest.raises(ValueError):
        dp_divergence(point(0), point(0), -1.0)


@settings(max_examples=150, deadline=None)
@given(subdists(), subdists(), st.floats(0, 3))
def test_divergence_matches_brute_force(mu1, mu2, eps):
    assert abs(dp_divergence(mu1, mu2, eps) - brute_divergence(mu1, mu2, eps)) <= 1e-10
    assert abs(dp_divergence_bruteforce(mu1, mu2, eps) - brute_divergence(mu1, mu2, eps)) <= 1e-10


@settings(max_examples=150, deadline=None)
@given(subdists(), subdists(), st.floats(0, 3), st.floats(0, 3))
def test_divergence_monotone_in_eps(mu1, mu2, e1, e2):
    lo, hi = sorted((e1, e2))
    assert dp_divergence(mu1, mu2, hi) <= dp_divergence(mu1, mu2, lo) + 1e-15


# -- bind laws and composition ---------------------------------------------

def kernels(values=range(4)):
    return st.lists(subdists(max_size=3, values=values, full=True),
                    min_size=len(values), max_size=len(values))


@settings(max_examples=100, deadline=None)
@given(subdists(values=range(4)), kernels(), kernels())
def test_bind_associative_and_mass_nonincreasing(mu, ks, hs):
    k = lambda v: ks[v]
    h = lambda v: SubDistribution({w: p * 0.9 for w, p in hs[v].items()})
    left = bind(bind(mu, k), h)
    right = bind(mu, lambda v: bind(k(v), h))
    assert close(left, right, 1e-10)
    assert left.mass() <= mu.mass() + 1e-12


@settings(max_examples=150, deadline=None)
@given(subdists(values=range(4), full=True), subdists(values=range(4), full=True),
       kernels(), kernels(), st.floats(0, 1.5), st.floats(0, 1.5))
def test_sequential_composition(mu1, mu2, k1, k2, e1, e2):
    lhs = dp_divergence(bind(mu1, lambda v: k1[v]), bind(mu2, lambda v: k2[v]), e1 + e2)
    rhs = dp_divergence(mu1, mu2, e1) + max(dp_divergence(k1[v], k2[v], e2) for v in range(4))
    assert lhs <= rhs + 1e-10


# -- Laplace builders -----------------------------------------------------

@pytest.mark.parametrize("scale", [0.25, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("radius", [1, 5, 20])
def test_truncated_laplace_shape(scale, radius):
    mu = truncated_laplace(3, scale, radius)
    assert mu.full and abs(mu.mass() - 1) <= 1e-12
    assert mu.support() == list(range(3 - radius, 3 + radius + 1))
    for nu in range(radius + 1):
        assert abs(mu[3 + nu] - mu[3 - nu]) < 1e-15
        assert mu[3] >= mu[3 + nu]
    assert abs(mu[3] / mu[4] - math.exp(scale)) < 1e-12 * math.exp(scale)


@pytest.mark.parametrize("center", [-4, 0, 7])
def test_truncated_laplace_shift(center):
    base = truncated_laplace(0, 0.5, 12)
    moved = truncated_laplace(center, 0.5, 12)
    assert [(v + center, w) for v, w in base.items()] == moved.items()


@pytest.mark.parametrize("scale", [0.25, 1.0])
def test_truncated_oslaplace_shape(scale):
    mu = truncated_oslaplace(2, scale, 10)
    assert mu.prob(lambda v: v < 2) == 0
    assert mu.support() == list(range(2, 13))
    assert abs(mu.mass() - 1) <= 1e-12
    assert abs(mu[2] / mu[3] - math.exp(scale)) < 1e-12 * math.exp(scale)


def test_laplace_rejects_bad_parameters():
    with pytest.raises(ValueError):
        truncated_laplace(0, 0.0, 3)
    with pytest.raises(ValueError):
        truncated_laplace(0, 1.0, 0)
    with pytest.raises(ValueError):
        truncated_oslaplace(0, -1.0, 3)


def tail_partial_sum(scale, radius, terms=20000):
    """Tail mass of the untruncated discrete Laplace, by direct summation."""
    nu = np.arange(1, terms)
    body = np.exp(-scale * nu)
    z = 1 + 2 * body.sum()
    return 2 * body[radius:].sum() / z


@pytest.mark.parametrize("scale", [0.125, 0.5, 1.0])
def test_tail_mass_matches_partial_sums(scale):
    for radius in (0, 1, 5, 30):
        assert abs(tail_mass(scale, radius) - tail_partial_sum(scale, radius)) < 1e-12


def test_tail_mass_properties():
    vals = [tail_mass(0.5, r) for r in range(40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert tail_mass(0.5, 0) < 1
    for scale in (0.125, 0.25, 0.5, 1.0):
        r = radius_for_tolerance(scale, 1e-9)
        assert tail_mass(scale, r) < 1e-9 <= tail_mass(scale, r - 1)
