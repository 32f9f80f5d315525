"""Linear feasibility via the HiGHS solver, with an independent post-check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

FEAS_TOL = 1e-8

Matrix = Union[np.ndarray, sparse.spmatrix]


class LPError(RuntimeError):
    pass


class DimensionError(LPError, ValueError):
    pass


class IterationLimitError(LPError):
    """The solver stopped before deciding feasibility."""


class NumericalError(LPError):
    """The solver claimed feasibility but its point fails the post-check."""


@dataclass
class LinearFeasibilityProblem:
    """Find x with A_eq x = b_eq, A_ub x <= b_ub and x_i >= 0 where flagged."""

    n_vars: int
    A_eq: Optional[Matrix] = None
    b_eq: Optional[Sequence[float]] = None
    A_ub: Optional[Matrix] = None
    b_ub: Optional[Sequence[float]] = None
    nonneg: Union[bool, Sequence[bool]] = True

    def validate(self) -> None:
        for name, A, b in (("eq", self.A_eq, self.b_eq), ("ub", self.A_ub, self.b_ub)):
            if (A is None) != (b is None):
                raise DimensionError(f"A_{name} and b_{name} must be given together")
            if A is None:
                continue
            rows, cols = A.shape
            if cols != self.n_vars:
                raise DimensionError(f"A_{name} has {cols} columns, expected {self.n_vars}")
            if len(b) != rows:
                raise DimensionError(f"b_{name} has {len(b)} entries, expected {rows}")
        if not isinstance(self.nonneg, bool) and len(self.nonneg) != self.n_vars:
            raise DimensionError("nonneg flags do not match the variable count")

    def bounds(self):
        flags = ([self.nonneg] * self.n_vars if isinstance(self.nonneg, bool)
                 else list(self.nonneg))
        return [(0, None) if f else (None, None) for f in flags]

    def residual(self, x: np.ndarray) -> float:
        """Largest constraint violation at ``x``."""
        worst = 0.0
        if self.A_eq is not None and len(self.b_eq):
            worst = max(worst, float(np.max(np.abs(self.A_eq @ x - np.asarray(self.b_eq)))))
        if self.A_ub is not None and len(self.b_ub):
            worst = max(worst, float(np.max(self.A_ub @ x - np.asarray(self.b_ub))))
        for xi, (lo, _) in zip(x, self.bounds()):
            if lo is not None:
                worst = max(worst, lo - xi)
        return worst


@dataclass
class LPResult:
    status: str  # "feasible" | "infeasible" | "iteration_limit"
    x: Optional[np.ndarray] = None
    residual: float = 0.0
    gap: Optional[float] = None  # phase-1 optimum, the evidence of infeasibility

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
    "presolve": True,
}


def _solve(c, p: LinearFeasibilityProblem, bounds, max_iter):
    opts = dict(_OPTIONS)
    if max_iter is not None:
        opts["maxiter"] = max_iter
    return linprog(
        c,
        A_ub=p.A_ub, b_ub=p.b_ub, A_eq=p.A_eq, b_eq=p.b_eq,
        bounds=bounds, method="highs", options=opts,
    )


def phase_one_gap(p: LinearFeasibilityProblem, max_iter: Optional[int] = None) -> float:
    """Minimum total constraint violation (zero iff feasible)."""
    n = p.n_vars
    m_eq = 0 if p.A_eq is None else p.A_eq.shape[0]
    m_ub = 0 if p.A_ub is None else p.A_ub.shape[0]
    n_art = 2 * m_eq + m_ub
    blocks_eq = blocks_ub = None
    if m_eq:
        blocks_eq = sparse.hstack([
            sparse.csr_matrix(p.A_eq), sparse.identity(m_eq), -sparse.identity(m_eq),
            sparse.csr_matrix((m_eq, m_ub)),
        ]).tocsr()
    if m_ub:
        blocks_ub = sparse.hstack([
            sparse.csr_matrix(p.A_ub), sparse.csr_matrix((m_ub, 2 * m_eq)),
            -sparse.identity(m_ub),
        ]).tocsr()
    elastic = LinearFeasibilityProblem(
        n + n_art, blocks_eq, p.b_eq if m_eq else None, blocks_ub, p.b_ub if m_ub else None,
    )
    c = np.concatenate([np.zeros(n), np.ones(n_art)])
    res = _solve(c, elastic, p.bounds() + [(0, None)] * n_art, max_iter)
    if res.status == 1:
        raise IterationLimitError("iteration limit in phase one")
    return float(res.fun) if res.status == 0 else float("nan")


def lp_feasible(p: LinearFeasibilityProblem, max_iter: Optional[int] = None) -> LPResult:
    """Decide feasibility of ``p``.

    A returned point is re-checked here against every constraint; the
    solver's own claim is not trusted beyond ``FEAS_TOL``.
    """
    p.validate()
    res = _solve(np.zeros(p.n_vars), p, p.bounds(), max_iter)
    if res.status == 1:
        return LPResult("iteration_limit")
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        r = p.residual(x)
        if r > FEAS_TOL:
            raise NumericalError(f"solver point violates constraints by {r:.3g}")
        return LPResult("feasible", x, r)
    if res.status == 2:
        try:
            gap = phase_one_gap(p, max_iter)
        except IterationLimitError:
            gap = None
        return LPResult("infeasible", gap=gap)
    raise LPError(f"solver failed: {res.message}")
