"""Concrete syntax: a recursive-descent parser and a canonical printer.

Grammar::

    expr    := "let" IDENT "=" expr "in" expr
             | "if" expr "then" expr "else" expr
             | or
    or      := and ("||" and)*
    and     := not ("&&" not)*
    not     := "!" not | atom
    atom    := "flip" PROB | "discrete" "(" PROB ("," PROB)* ")"
             | "(" expr ("," expr)* ")" | "fst" atom | "snd" atom
             | IDENT "==" INT | "true" | "false" | IDENT
    PROB    := DECIMAL | DECIMAL "/" DECIMAL

Tuples of more than two components are right-nested pairs.  ``//`` starts
a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .lang import (
    And, Const, Discrete, DpplError, Expr, Flip, Fst, IntEq, Ite, Let, Not,
    Or, ProbabilityError, ScopeError, Snd, Tuple, Var, assign_flip_ids,
    check_discrete, check_prob,
)

KEYWORDS = {"let", "in", "if", "then", "else", "flip", "discrete", "fst", "snd",
            "true", "false"}


@dataclass(frozen=True)
class SourceSpan:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.line}:{self.col}-{self.end_line}:{self.end_col}"


class ParseError(DpplError):
    def __init__(self, msg: str, span: SourceSpan):
        self.span = span
        super().__init__(f"{span}: {msg}")


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+(?:\.\d*)?|\.\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\|\||&&|==|[!=(),/])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(line, col, line, col))
        s = m.group()
        end_line, end_col = line, col
        for ch in s:
            if ch == "\n":
                end_line, end_col = end_line + 1, 1
            else:
                end_col += 1
        if m.lastgroup != "ws":
            kind = m.lastgroup
            if kind == "ident" and s in KEYWORDS:
                kind = s
            elif kind == "op":
                kind = s
            toks.append(_Tok(kind, s, SourceSpan(line, col, end_line, end_col)))
        pos, line, col = m.end(), end_line, end_col
    toks.append(_Tok("eof", "", SourceSpan(line, col, line, col)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.scope: list[str] = []

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.tok
        if t.kind != kind:
            found = t.text or "end of input"
            raise ParseError(f"expected {kind!r}, found {found!r}", t.span)
        return self.next()

    def fail(self, msg: str):
        raise ParseError(msg, self.tok.span)

    # -- grammar --

    def program(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r} after expression")
        return e

    def expr(self) -> Expr:
        if self.tok.kind == "let":
            self.next()
            name = self.expect("ident").text
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            self.scope.append(name)
            try:
                body = self.expr()
            finally:
                self.scope.pop()
            return Let(name, bound, body)
        if self.tok.kind == "if":
            self.next()
            g = self.expr()
            self.expect("then")
            t = self.expr()
            self.expect("else")
            f = self.expr()
            return Ite(g, t, f)
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.tok.kind == "||":
            self.next()
            e = Or(e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.tok.kind == "&&":
            self.next()
            e = And(e, self.not_expr())
        return e

    def not_expr(self) -> Expr:
        if self.tok.kind == "!":
            self.next()
            return Not(self.not_expr())
        return self.atom()

    def prob(self) -> Fraction:
        start = self.tok
        num = Fraction(self.expect("num").text)
        if self.tok.kind == "/":
            self.next()
            den = Fraction(self.expect("num").text)
            if den == 0:
                raise ParseError("division by zero in probability", start.span)
            num = num / den
        return num

    def atom(self) -> Expr:
        t = self.tok
        k = t.kind
        if k == "flip":
            self.next()
            theta = self.prob()
            try:
                check_prob(theta)
            except ProbabilityError as exc:
                raise ParseError(str(exc), t.span) from None
            return Flip(0, theta)
        if k == "discrete":
            self.next()
            self.expect("(")
            params = [self.prob()]
            while self.tok.kind == ",":
                self.next()
                params.append(self.prob())
            self.expect(")")
            try:
                return Discrete(check_discrete(params))
            except ProbabilityError as exc:
                raise ParseError(str(exc), t.span) from None
        if k == "(":
            self.next()
            items = [self.expr()]
            while self.tok.kind == ",":
                self.next()
                items.append(self.expr())
            self.expect(")")
            out = items[-1]
            for it in reversed(items[:-1]):
                out = Tuple(it, out)
            return out
        if k in ("fst", "snd"):
            self.next()
            arg = self.atom()
            return Fst(arg) if k == "fst" else Snd(arg)
        if k in ("true", "false"):
            self.next()
            return Const(k == "true")
        if k == "ident":
            self.next()
            if t.text not in self.scope:
                raise ScopeError(t.text, t.span)
            if self.tok.kind == "==":
                self.next()
                n = self.expect("num")
                if not n.text.isdigit():
                    raise ParseError("expected an integer after '=='", n.span)
                return IntEq(t.text, int(n.text))
            return Var(t.text)
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", t.span)


def parse(text: str) -> Expr:
    """Parse program text into a scope-checked Expr with flip ids assigned."""
    return assign_flip_ids(_Parser(text).program())


# ---------------------------------------------------------------------------
# Printing


def format_prob(p: Fraction) -> str:
    """Decimal when the expansion terminates ("0.5", "1.0"), else "a/b"."""
    d = p.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = max(twos, fives, 1)
    scaled = p.numerator * 10 ** digits // p.denominator
    s = str(scaled).rjust(digits + 1, "0")
    return f"{s[:-digits]}.{s[-digits:]}"


# Precedence levels used when deciding on parentheses.
_EXPR, _OR, _AND, _NOT, _ATOM = range(5)


def _level(e: Expr) -> int:
    match e:
        case Let() | Ite():
            return _EXPR
        case Or():
            return _OR
        case And():
            return _AND
        case Not():
            return _NOT
        case _:
            return _ATOM


def to_text(p: Expr, indent: str = "  ") -> str:
    """Canonical program text; ``parse(to_text(p)) == p``."""
    out: list[str] = []
    _emit(p, _EXPR, out, 0, indent)
    return "".join(out)


def _emit(e: Expr, ctx: int, out: list[str], depth: int, ind: str) -> None:
    if _level(e) < ctx:
        out.append("(")
        _emit(e, _EXPR, out, depth, ind)
        out.append(")")
        return
    match e:
        case Let(v, b, body):
            # let chains print one binding per line
            out.append(f"let {v} = ")
            _emit(b, _EXPR, out, depth + 1, ind)
            out.append(" in\n" + ind * depth)
            _emit(body, _EXPR, out, depth, ind)
        case Ite(g, t, f):
            out.append("if ")
            _emit(g, _EXPR, out, depth, ind)
            out.append(" then ")
            _emit(t, _EXPR, out, depth + 1, ind)
            if isinstance(f, Ite):
                out.append("\n" + ind * depth + "else ")
            else:
                out.append(" else ")
            _emit(f, _EXPR, out, depth, ind)
        case Or(a, b):
            _emit(a, _OR, out, depth, ind)
            out.append(" || ")
            _emit(b, _AND, out, depth, ind)
        case And(a, b):
            _emit(a, _AND, out, depth, ind)
            out.append(" && ")
            _emit(b, _NOT, out, depth, ind)
        case Not(a):
            out.append("!")
            _emit(a, _NOT, out, depth, ind)
        case Flip(_, theta):
            out.append(f"flip {format_prob(theta)}")
        case Discrete(params):
            out.append("discrete(" + ", ".join(format_prob(q) for q in params) + ")")
        case Tuple(a, b):
            out.append("(")
            _emit(a, _EXPR, out, depth, ind)
            while isinstance(b, Tuple):
                out.append(", ")
                _emit(b.left, _EXPR, out, depth, ind)
                b = b.right
            out.append(", ")
            _emit(b, _EXPR, out, depth, ind)
            out.append(")")
        case Fst(a) | Snd(a):
            out.append("fst " if isinstance(e, Fst) else "snd ")
            _emit(a, _ATOM, out, depth, ind)
        case IntEq(v, k):
            out.append(f"{v} == {k}")
        case Const(b):
            out.append("true" if b else "false")
        case Var(name):
            out.append(name)
        case _:
            raise TypeError(f"not an expression: {e!r}")
