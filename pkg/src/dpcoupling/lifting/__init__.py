"""Decision procedures for exact and approximate liftings."""

from .core import (
    LiftingWitness, WindowOverflowError, WitnessReport, approx_lifting, check_witness,
    event_bound_check, exact_lifting, lifting_window, min_delta, pointwise_equality,
)
from .lp import (
    DimensionError, IterationLimitError, LinearFeasibilityProblem, LPResult,
    NumericalError, lp_feasible,
)
from .relations import (
    Relation, RelationError, difference, equality, event_implication, parse_relation,
    pointwise, shift,
)

__all__ = [
    "DimensionError", "IterationLimitError", "LPResult", "LiftingWitness",
    "LinearFeasibilityProblem", "NumericalError", "Relation", "RelationError",
    "WindowOverflowError", "WitnessReport", "approx_lifting", "check_witness",
    "difference", "equality", "event_bound_check", "event_implication",
    "exact_lifting", "lifting_window", "lp_feasible", "min_delta",
    "parse_relation", "pointwise", "pointwise_equality", "shift",
]
