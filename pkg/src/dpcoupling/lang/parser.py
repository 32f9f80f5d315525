"""Tokenizer and recursive-descent parser for ``.pwhile`` programs and
relational assertions."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Mapping, Optional

from .ast import (
    BOOL, INT, Assign, Bars, Binary, BoolLit, Call, Command, Decl, EvalQ,
    Expr, If, Index, IntLit, LVar, Program, Sample, Skip, TVar, Type, Unary,
    Var, While, db_type, from_list, querylist_type,
)
from .errors import ParseError, UndeclaredVariable

KEYWORDS = {
    "skip", "if", "then", "else", "end", "while", "do", "return", "var",
    "input", "in", "lap", "oslap", "eps", "evalQ", "abs", "adj", "sens1",
    "true", "false",
}

_OPS = [
    "<-$", "<=>", ":=", "=>", "<=", ">=", "!=", "==", "&&", "||", "<", ">",
    "=", "+", "-", "*", "/", "!", "(", ")", "[", "]", "{", "}", ",", ";",
    ":", "|",
]

_TVAR = re.compile(r"([A-Za-z_][A-Za-z_0-9]*)(?:<([12])>|⟨([12])⟩)")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_INT = re.compile(r"[0-9]+")


@dataclass
class Token:
    kind: str  # INT, IDENT, TVAR, OP, EOF
    text: str
    line: int
    col: int
    side: int = 0


def tokenize(text: str, tagged: bool = False) -> List[Token]:
    toks = []
    line, col, pos = 1, 1, 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            line, col, pos = line + 1, 1, pos + 1
            continue
        if ch.isspace():
            pos, col = pos + 1, col + 1
            continue
        if ch == "#":
            while pos < n and text[pos] != "\n":
                pos += 1
            continue
        if tagged:
            m = _TVAR.match(text, pos)
            if m:
                side = int(m.group(2) or m.group(3))
                toks.append(Token("TVAR", m.group(1), line, col, side))
                col += m.end() - pos
                pos = m.end()
                continue
        m = _IDENT.match(text, pos)
        if m:
            toks.append(Token("IDENT", m.group(0), line, col))
            col += m.end() - pos
            pos = m.end()
            continue
        m = _INT.match(text, pos)
        if m:
            toks.append(Token("INT", m.group(0), line, col))
            col += m.end() - pos
            pos = m.end()
            continue
        for op in _OPS:
            if text.startswith(op, pos):
                toks.append(Token("OP", "=" if op == "==" else op, line, col))
                pos += len(op)
                col += len(op)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


_STMT_END = {"end", "else", "return"}


def _compact(toks: List[Token]) -> str:
    """Render a token run the way a person would type it."""
    out = ""
    for t in toks:
        if out and out[-1] not in "[({-" and t.text not in ",])}":
            out += " "
        out += t.text
    return out


class Parser:
    def __init__(self, text: str, tagged: bool = False,
                 declared: Optional[Iterable[str]] = None):
        self.toks = tokenize(text, tagged)
        self.pos = 0
        self.tagged = tagged
        self.declared = None if declared is None else set(declared)

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "IDENT") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.pos += 1
        return t

    def error(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.col)

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "IDENT" or t.text in KEYWORDS:
            self.error("expected identifier")
        self.pos += 1
        return t

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "INT":
            self.error("expected integer")
        self.pos += 1
        return -int(t.text) if neg else int(t.text)

    def check_declared(self, t: Token):
        if self.declared is not None and t.text not in self.declared:
            raise UndeclaredVariable(f"undeclared variable {t.text!r}",
                                     t.line, t.col)

    # -- expressions -------------------------------------------------------
    def expr(self) -> Expr:
        left = self.imp()
        while self.accept("<=>"):
            left = Binary("<=>", left, self.imp())
        return left

    def imp(self) -> Expr:
        left = self.disj()
        if self.accept("=>"):
            return Binary("=>", left, self.imp())
        return left

    def disj(self) -> Expr:
        left = self.conj()
        while self.accept("||"):
            left = Binary("||", left, self.conj())
        return left

    def conj(self) -> Expr:
        left = self.negation()
        while self.accept("&&"):
            left = Binary("&&", left, self.negation())
        return left

    def negation(self) -> Expr:
        if self.accept("!"):
            return Unary("!", self.negation())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.arith()
        t = self.tok
        if t.kind == "OP" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self.pos += 1
            return Binary(t.text, left, self.arith())
        return left

    def arith(self) -> Expr:
        left = self.term()
        while self.tok.kind == "OP" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.pos += 1
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.accept("*"):
            left = Binary("*", left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at("-"):
            if self.peek().kind == "INT":
                self.pos += 1
                return self.postfix(self._neg_int())
            self.pos += 1
            return Unary("-", self.unary())
        return self.postfix(self.atom())

    def _neg_int(self) -> Expr:
        t = self.tok
        self.pos += 1
        return IntLit(-int(t.text))

    def postfix(self, e: Expr) -> Expr:
        while self.accept("["):
            idx = self.expr()
            self.expect("]")
            e = Index(e, idx)
        return e

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "INT":
            self.pos += 1
            return IntLit(int(t.text))
        if t.kind == "TVAR":
            self.check_declared(t)
            self.pos += 1
            return TVar(t.text, t.side)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("|"):
            e = self.arith()
            self.expect("|")
            return Bars(e)
        if t.kind == "IDENT":
            if t.text == "true":
                self.pos += 1
                return BoolLit(True)
            if t.text == "false":
                self.pos += 1
                return BoolLit(False)
            if t.text == "evalQ":
                self.pos += 1
                self.expect("(")
                q = self.expr()
                self.expect(",")
                d = self.expr()
                self.expect(")")
                return EvalQ(q, d)
            if t.text == "abs":
                self.pos += 1
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Bars(e)
            if t.text in ("adj", "sens1"):
                self.pos += 1
                self.expect("(")
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                return Call(t.text, tuple(args))
            if t.text in KEYWORDS:
                self.error("expected expression")
            self.pos += 1
            if self.tagged:
                return LVar(t.text)
            self.check_declared(t)
            return Var(t.text)
        self.error("expected expression")

    # -- commands ----------------------------------------------------------
    def stmts(self) -> Command:
        out = [self.stmt()]
        while self.accept(";"):
            if self.tok.kind == "EOF" or (self.tok.kind == "IDENT"
                                          and self.tok.text in _STMT_END):
                break
            out.append(self.stmt())
        return from_list(out)

    def stmt(self) -> Command:
        if self.accept("skip"):
            return Skip()
        if self.accept("if"):
            cond = self.expr()
            self.expect("then")
            then = self.stmts()
            orelse = Skip()
            if self.accept("else"):
                orelse = self.stmts()
            self.expect("end")
            return If(cond, then, orelse)
        if self.accept("while"):
            cond = self.expr()
            self.expect("do")
            body = self.stmts()
            self.expect("end")
            return While(cond, body)
        t = self.ident()
        self.check_declared(t)
        if self.accept(":="):
            return Assign(t.text, self.expr())
        if self.accept("<-$"):
            dist = self.tok.text
            if dist not in ("lap", "oslap"):
                self.error("expected 'lap' or 'oslap'")
            self.pos += 1
            self.expect("(")
            scale = self.scale()
            self.expect(",")
            center = self.expr()
            self.expect(")")
            return Sample(t.text, dist, scale, center)
        self.error("expected ':=' or '<-$'")

    def scale(self) -> Fraction:
        num = 1
        if self.tok.kind == "INT":
            num = self.integer()
            self.expect("*")
        self.expect("eps")
        den = 1
        if self.accept("/"):
            den = self.integer()
        if num <= 0 or den <= 0:
            self.error("scale coefficient must be positive")
        return Fraction(num, den)

    # -- declarations ------------------------------------------------------
    def decl(self) -> Decl:
        is_input = self.tok.text == "input"
        self.pos += 1
        name = self.ident().text
        self.expect(":")
        typ = self.type_()
        domain, src = None, None
        if self.accept("in"):
            start = self.pos
            domain = self.domain(typ)
            src = _compact(self.toks[start:self.pos])
        elif typ == BOOL:
            domain = (False, True)
        self.expect(";")
        return Decl(name, typ, domain, is_input, src)

    def type_(self) -> Type:
        if self.accept("int"):
            return INT
        if self.accept("bool"):
            return BOOL
        t = self.ident()
        if t.text in ("db", "querylist"):
            self.expect("(")
            n = self.integer()
            self.expect(")")
            return db_type(n) if t.text == "db" else querylist_type(n)
        raise ParseError(f"unknown type {t.text!r}", t.line, t.col)

    def domain(self, typ: Type) -> tuple:
        if self.accept("["):
            lo = self.integer()
            self.expect(",")
            hi = self.integer()
            self.expect("]")
            if lo > hi:
                self.error("empty range")
            if typ == INT:
                return tuple(range(lo, hi + 1))
            if typ.kind in ("db", "querylist"):
                return tuple(itertools.product(range(lo, hi + 1),
                                               repeat=typ.size))
            self.error(f"interval range not allowed for {typ}")
        self.expect("{")
        vals = [self.value(typ)]
        while self.accept(","):
            vals.append(self.value(typ))
        self.expect("}")
        return tuple(vals)

    def value(self, typ: Type):
        if typ == BOOL:
            if self.accept("true"):
                return True
            self.expect("false")
            return False
        if typ == INT:
            return self.integer()
        self.expect("(")
        items = [self.integer()]
        while self.accept(","):
            if self.at(")"):
                break
            items.append(self.integer())
        self.expect(")")
        if len(items) != typ.size:
            self.error(f"expected {typ.size} entries for {typ}")
        return tuple(items)

    def program(self, extra: Optional[Mapping[str, Decl]] = None) -> Program:
        decls = list((extra or {}).values())
        while self.tok.kind == "IDENT" and self.tok.text in ("var", "input"):
            d = self.decl()
            if any(x.name == d.name for x in decls):
                t = self.toks[self.pos - 1]
                raise ParseError(f"duplicate declaration {d.name!r}",
                                 t.line, t.col)
            decls.append(d)
        self.declared = {d.name for d in decls}
        body = self.stmts()
        self.expect("return")
        rets = [self.ident()]
        while self.accept(","):
            rets.append(self.ident())
        for t in rets:
            self.check_declared(t)
        self.accept(";")
        if self.tok.kind != "EOF":
            self.error("expected end of program")
        return Program(tuple(decls), body, tuple(t.text for t in rets))


def parse_program(text: str, decls: Optional[Iterable[Decl]] = None) -> Program:
    """Parse ``.pwhile`` source; ``decls`` supplies extra declarations."""
    extra = {d.name: d for d in (decls or ())}
    return Parser(text).program(extra)


def parse_expr(text: str, declared: Optional[Iterable[str]] = None) -> Expr:
    p = Parser(text, declared=declared)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.error("unexpected trailing input")
    return e


def parse_command(text: str, declared: Optional[Iterable[str]] = None) -> Command:
    p = Parser(text, declared=declared)
    c = p.stmts()
    if p.tok.kind != "EOF":
        p.error("unexpected trailing input")
    return c


def parse_assertion(text: str, declared: Optional[Iterable[str]] = None) -> Expr:
    """Parse a relational assertion: tagged ``x<1>``/``x<2>`` program
    variables, untagged identifiers are logical variables."""
    p = Parser(text, tagged=True, declared=declared)
    e = p.expr()
    if p.tok.kind != "EOF":
        p.error("unexpected trailing input")
    return e
