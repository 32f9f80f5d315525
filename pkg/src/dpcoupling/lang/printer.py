"""Pretty-printer producing text that parses back to the same AST."""

from __future__ import annotations

from fractions import Fraction

from .ast import (
    Assign, Bars, Binary, BoolLit, Call, Command, EvalQ, Expr, If, Index,
    IntLit, LVar, Program, Sample, Seq, Skip, TVar, Unary, Var, While,
)

_LEVEL = {
    "<=>": 1, "=>": 2, "||": 3, "&&": 4,
    "=": 6, "!=": 6, "<": 6, "<=": 6, ">": 6, ">=": 6,
    "+": 7, "-": 7, "*": 8,
}
_ATOM = 11


def _level(e: Expr) -> int:
    if isinstance(e, Binary):
        return _LEVEL[e.op]
    if isinstance(e, Unary):
        return 5 if e.op == "!" else 9
    if isinstance(e, IntLit) and e.value < 0:
        return 9
    if isinstance(e, Index):
        return 10
    return _ATOM


def _wrap(e: Expr, min_level: int) -> str:
    s = show_expr(e)
    return s if _level(e) >= min_level else f"({s})"


def show_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, (Var, LVar)):
        return e.name
    if isinstance(e, TVar):
        return f"{e.name}<{e.side}>"
    if isinstance(e, Unary):
        if e.op == "!":
            return "!" + _wrap(e.arg, 5)
        if isinstance(e.arg, IntLit):
            return f"-({e.arg.value})" if e.arg.value >= 0 else f"-({show_expr(e.arg)})"
        return "-" + _wrap(e.arg, 9)
    if isinstance(e, Binary):
        lv = _LEVEL[e.op]
        if e.op == "=>":
            left, right = _wrap(e.left, lv + 1), _wrap(e.right, lv)
        elif lv == 6:
            left, right = _wrap(e.left, 7), _wrap(e.right, 7)
        else:
            left, right = _wrap(e.left, lv), _wrap(e.right, lv + 1)
        return f"{left} {e.op} {right}"
    if isinstance(e, Bars):
        return f"|{show_expr(e.arg)}|" if _level(e.arg) >= 7 else f"|({show_expr(e.arg)})|"
    if isinstance(e, Index):
        return f"{_wrap(e.base, 10)}[{show_expr(e.index)}]"
    if isinstance(e, EvalQ):
        return f"evalQ({show_expr(e.query)}, {show_expr(e.db)})"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(show_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def show_scale(s: Fraction) -> str:
    num = "" if s.numerator == 1 else f"{s.numerator}*"
    den = "" if s.denominator == 1 else f"/{s.denominator}"
    return f"{num}eps{den}"


def show_command(c: Command, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(c, Seq):
        return ";\n".join(show_command(s, indent) for s in c.cmds)
    if isinstance(c, Skip):
        return pad + "skip"
    if isinstance(c, Assign):
        return f"{pad}{c.var} := {show_expr(c.expr)}"
    if isinstance(c, Sample):
        return (f"{pad}{c.var} <-$ {c.dist}({show_scale(c.scale)}, "
                f"{show_expr(c.center)})")
    if isinstance(c, If):
        out = f"{pad}if {show_expr(c.cond)} then\n{show_command(c.then, indent + 1)}\n"
        if not isinstance(c.orelse, Skip):
            out += f"{pad}else\n{show_command(c.orelse, indent + 1)}\n"
        return out + pad + "end"
    if isinstance(c, While):
        return (f"{pad}while {show_expr(c.cond)} do\n"
                f"{show_command(c.body, indent + 1)}\n{pad}end")
    raise TypeError(f"not a command: {c!r}")


def _show_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return "(" + ", ".join(str(x) for x in v) + ("," if len(v) == 1 else "") + ")"
    return str(v)


def show_program(p: Program) -> str:
    lines = []
    for d in p.decls:
        kw = "input" if d.is_input else "var"
        rng = ""
        if d.domain is not None and d.type.kind != "bool":
            if d.domain_src:
                rng = " in " + d.domain_src
            else:
                rng = " in {" + ", ".join(_show_value(v) for v in d.domain) + "}"
        lines.append(f"{kw} {d.name} : {d.type}{rng};")
    body = show_command(p.body)
    lines.append(body + ";")
    lines.append("return " + ", ".join(p.returns))
    return "\n".join(lines) + "\n"
