"""Exact and approximate liftings between finite sub-distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Collection, Dict, Hashable, List, Optional, Tuple

import numpy as np
from scipy import sparse

from ..distribution import SubDistribution, dp_divergence, marginal1, marginal2
from .flow import bipartite_max_flow
from .lp import IterationLimitError, LinearFeasibilityProblem, lp_feasible
from .relations import Relation, pointwise, reachable

MARGINAL_TOL = 1e-7
DIVERGENCE_TOL = 1e-7
FLOW_TOL = 1e-9


class WindowOverflowError(ValueError):
    """The relation reaches values outside the configured carrier."""


@dataclass
class LiftingWitness:
    left: SubDistribution
    right: SubDistribution
    residual: float = 0.0


@dataclass
class WitnessReport:
    marginal1_residual: float
    marginal2_residual: float
    support_violations: List[Tuple[str, Hashable]] = field(default_factory=list)
    divergence: float = 0.0
    delta: float = 0.0

    @property
    def marginals_ok(self) -> bool:
        return self.marginal1_residual <= MARGINAL_TOL and self.marginal2_residual <= MARGINAL_TOL

    @property
    def support_ok(self) -> bool:
        return not self.support_violations

    @property
    def divergence_ok(self) -> bool:
        return self.divergence <= self.delta + DIVERGENCE_TOL

    @property
    def ok(self) -> bool:
        return self.marginals_ok and self.support_ok and self.divergence_ok


def _pair_dist(weights: Dict[Tuple, float]) -> SubDistribution:
    w = {k: v for k, v in weights.items() if v > 0}
    total = math.fsum(w.values())
    if total > 1.0:
        # solver round-off only; the caps hold up to the LP tolerance
        w = {k: v / total for k, v in w.items()}
    return SubDistribution(w)


def _distance(mu: SubDistribution, nu: SubDistribution) -> float:
    keys = set(mu.support()) | set(nu.support())
    return max((abs(mu[k] - nu[k]) for k in keys), default=0.0)


def lifting_window(mu1: SubDistribution, mu2: SubDistribution, rel: Relation,
                   carrier: Optional[Collection] = None) -> List[Hashable]:
    """Candidate values for the free coordinates of a witness.

    This is the union of both supports plus everything the relation reaches
    from them in one step.  When ``carrier`` is given every such value must
    belong to it (else WindowOverflowError), and predicate relations, which
    cannot enumerate their images, also draw candidates from it.
    """
    s1, s2 = set(mu1.support()), set(mu2.support())
    win = s1 | s2 | reachable(rel, s1, True) | reachable(rel, s2, False)
    if carrier is not None:
        outside = win - set(carrier)
        if outside:
            raise WindowOverflowError(
                f"relation {rel.name} reaches {sorted(outside, key=repr)[:5]} outside the carrier")
        if rel.image is None or rel.preimage is None:
            win |= set(carrier)
    try:
        return sorted(win)
    except TypeError:
        return sorted(win, key=repr)


def exact_lifting(mu1: SubDistribution, mu2: SubDistribution, rel: Relation
                  ) -> Optional[SubDistribution]:
    """Coupling of mu1 and mu2 supported in ``rel``, or None.

    Decided by max-flow on the bipartite support graph.
    """
    m1, m2 = mu1.mass(), mu2.mass()
    if abs(m1 - m2) > FLOW_TOL:
        return None
    if m1 == 0:
        return SubDistribution({})
    a_vals, b_vals = mu1.support(), mu2.support()
    edges = [(i, j) for i, a in enumerate(a_vals) for j, b in enumerate(b_vals) if rel(a, b)]
    value, flows = bipartite_max_flow([mu1[a] for a in a_vals], [mu2[b] for b in b_vals], edges)
    if value < m1 - FLOW_TOL:
        return None
    return _pair_dist({(a_vals[i], b_vals[j]): f for (i, j), f in flows.items()})


def approx_lifting(mu1: SubDistribution, mu2: SubDistribution, rel: Relation,
                   eps: float, delta: float, carrier: Optional[Collection] = None,
                   max_iter: Optional[int] = None) -> Optional[LiftingWitness]:
    """Witness of the (eps, delta)-lifting of ``rel``, or None.

    Variables are the witness weights on related pairs over the window of
    ``lifting_window``; one slack per pair bounds mu_L - e^eps mu_R and the
    slacks sum to at most delta.
    """
    if eps < 0 or delta < 0:
        raise ValueError("eps and delta must be non-negative")
    if len(mu1) == 0 and len(mu2) == 0:
        return LiftingWitness(SubDistribution({}), SubDistribution({}))
    window = lifting_window(mu1, mu2, rel, carrier)
    s1, s2 = mu1.support(), mu2.support()

    left_pairs = [(a, b) for a in s1 for b in window if rel(a, b)]
    right_pairs = [(a, b) for a in window for b in s2 if rel(a, b)]
    nl, nr = len(left_pairs), len(right_pairs)
    right_idx = {p: nl + k for k, p in enumerate(right_pairs)}
    slack0 = nl + nr
    n = nl + nr + nl  # one slack per left pair; right-only pairs never exceed
    if n == 0:
        return None

    eq_rows, eq_cols, eq_b = [], [], []
    row_of_a = {a: r for r, a in enumerate(s1)}
    for k, (a, _) in enumerate(left_pairs):
        eq_rows.append(row_of_a[a])
        eq_cols.append(k)
    off = len(s1)
    row_of_b = {b: off + r for r, b in enumerate(s2)}
    for k, (_, b) in enumerate(right_pairs):
        eq_rows.append(row_of_b[b])
        eq_cols.append(nl + k)
    eq_b = [mu1[a] for a in s1] + [mu2[b] for b in s2]
    A_eq = sparse.csr_matrix((np.ones(len(eq_rows)), (eq_rows, eq_cols)),
                             shape=(len(eq_b), n))

    factor = math.exp(eps)
    ub_rows, ub_cols, ub_vals = [], [], []
    for k, p in enumerate(left_pairs):
        ub_rows += [k, k]
        ub_cols += [k, slack0 + k]
        ub_vals += [1.0, -1.0]
        if p in right_idx:
            ub_rows.append(k)
            ub_cols.append(right_idx[p])
            ub_vals.append(-factor)
    r_delta, r_cap = nl, nl + 1
    for k in range(nl):
        ub_rows.append(r_delta)
        ub_cols.append(slack0 + k)
        ub_vals.append(1.0)
    for k in range(nr):
        ub_rows.append(r_cap)
        ub_cols.append(nl + k)
        ub_vals.append(1.0)
    A_ub = sparse.csr_matrix((ub_vals, (ub_rows, ub_cols)), shape=(nl + 2, n))
    b_ub = [0.0] * nl + [delta, 1.0]

    res = lp_feasible(LinearFeasibilityProblem(n, A_eq, eq_b, A_ub, b_ub), max_iter)
    if res.status == "iteration_limit":
        raise IterationLimitError("lifting LP hit the iteration limit")
    if not res.feasible:
        return None
    x = res.x
    left = _pair_dist({p: x[k] for k, p in enumerate(left_pairs)})
    right = _pair_dist({p: x[nl + k] for k, p in enumerate(right_pairs)})
    return LiftingWitness(left, right, res.residual)


def check_witness(mu1: SubDistribution, mu2: SubDistribution, rel: Relation,
                  eps: float, delta: float, w: LiftingWitness) -> WitnessReport:
    """Check the three lifting conditions for a candidate witness."""
    violations = [("left", p) for p in w.left.support() if not rel(*p)]
    violations += [("right", p) for p in w.right.support() if not rel(*p)]
    return WitnessReport(
        marginal1_residual=_distance(marginal1(w.left), mu1),
        marginal2_residual=_distance(marginal2(w.right), mu2),
        support_violations=violations,
        divergence=dp_divergence(w.left, w.right, eps),
        delta=delta,
    )


def event_bound_check(mu1: SubDistribution, mu2: SubDistribution,
                      e1: Callable, e2: Callable, eps: float, delta: float) -> bool:
    """Pr[E1] <= e^eps Pr[E2] + delta (+1e-9)."""
    return mu1.prob(e1) <= math.exp(eps) * mu2.prob(e2) + delta + 1e-9


def pointwise_equality(mu1: SubDistribution, mu2: SubDistribution) -> bool:
    """Equality of full distributions via one lifting per support point."""
    if not (mu1.full and mu2.full):
        raise ValueError("pointwise_equality needs full distributions")
    values = set(mu1.support()) | set(mu2.support())
    return all(exact_lifting(mu1, mu2, pointwise(b)) is not None for b in values)


def min_delta(mu1: SubDistribution, mu2: SubDistribution, rel: Relation, eps: float,
              tol: float = 1e-7, carrier: Optional[Collection] = None) -> Optional[float]:
    """Smallest delta (up to ``tol``) at which the lifting exists, by bisection.

    Returns None when the relation admits no lifting even at delta = 1.
    """
    hi = max(mu1.mass(), mu2.mass(), 0.0)
    if approx_lifting(mu1, mu2, rel, eps, hi, carrier) is None:
        return None
    lo = 0.0
    if approx_lifting(mu1, mu2, rel, eps, 0.0, carrier) is not None:
        return 0.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if approx_lifting(mu1, mu2, rel, eps, mid, carrier) is None:
            lo = mid
        else:
            hi = mid
    return hi
