"""The pWhile language: syntax, parsing, typing and expression evaluation."""

from .analysis import free_vars, live_before, modified_vars
from .ast import Decl, Program
from .errors import EvalError, LangError, ParseError, TypeCheckError, UndeclaredVariable
from .evaluate import eval_expr
from .parser import parse_assertion, parse_command, parse_expr, parse_program
from .printer import show_command, show_expr, show_program
from .typing import TypedProgram, typecheck

__all__ = [
    "Decl", "EvalError", "LangError", "ParseError", "Program", "TypeCheckError",
    "TypedProgram", "UndeclaredVariable", "eval_expr", "free_vars",
    "live_before", "modified_vars", "parse_assertion", "parse_command",
    "parse_expr", "parse_program", "show_command", "show_expr",
    "show_program", "typecheck",
]
