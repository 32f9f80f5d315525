"""Relational program logic: assertions, proof scripts, checking, validation."""

from .assertions import assertion, assertion_eval, compile_assertion, substitute, tag
from .checker import (
    CheckConfig, CheckedJudgment, CostOverflow, Derivation, Judgment, PrivacyCost,
    ProofError, RuleError, SideConditionError, check_proof, resolve_path,
)
from .implication import ImplicationBudgetExceeded, ImplicationResult, Ranges, check_implication
from .proof import ProofNode, parse_proof, show_proof
from .validate import ValidationConfig, ValidationReport, Violation, validate_empirically

__all__ = [
    "CheckConfig", "CheckedJudgment", "CostOverflow", "Derivation",
    "ImplicationBudgetExceeded", "ImplicationResult", "Judgment", "PrivacyCost",
    "ProofError", "ProofNode", "Ranges", "RuleError", "SideConditionError",
    "ValidationConfig", "ValidationReport", "Violation", "assertion",
    "assertion_eval", "check_implication", "check_proof", "compile_assertion",
    "parse_proof", "resolve_path", "show_proof", "substitute", "tag",
    "validate_empirically",
]
