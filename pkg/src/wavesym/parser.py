"""Recursive-descent parser for the expression grammar.

Grammar (whitespace-insensitive)::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := base ('^' exponent)?
    base     := number | ident | ident '(' expr (',' expr)* ')'
              | '(' expr ')' | '-' base
    exponent := rational | '(' rational ')'        # rational may be signed
    number   := digits                             # a/b arises via '/'

Identifier classes: ``x``, ``y``, ``t`` are coordinates; ``u`` and
``u_<letters>`` (letters from x, y, t, order-insensitive, total order <= 4)
are jet coordinates; ``exp`` and ``ln`` are the built-in functions and must
be applied to exactly one argument; any other identifier is a parameter
when bare and an opaque function when applied (``f`` included).

The parser returns normalized expressions, so ``parse(format_expr(e))``
reproduces ``normalize(e)`` for every grammar-expressible tree.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import (
    Expr, add, base, div, exp_, fn, jet, ln_, mul, neg, param, pow_, rat,
)

__all__ = ["parse", "ParseError"]

_COORDS = {"x", "y", "t"}
_RESERVED_FNS = {"exp", "ln"}


class ParseError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str):
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("num", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            toks.append(_Tok(c, c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Tok:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.pos)
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"trailing input {tok.text!r}", tok.pos)
        return e

    def expr(self) -> Expr:
        parts = [self.term()]
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            t = self.term()
            parts.append(t if op == "+" else neg(t))
        return add(*parts)

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            f = self.factor()
            e = mul(e, f) if op == "*" else div(e, f)
        return e

    def factor(self) -> Expr:
        e = self.base()
        if self.peek().kind == "^":
            self.next()
            e = pow_(e, self.exponent())
        return e

    def exponent(self) -> Fraction:
        parens = self.peek().kind == "("
        if parens:
            self.next()
        sign = 1
        if self.peek().kind == "-":
            self.next()
            sign = -1
        numtok = self.expect("num")
        num = int(numtok.text)
        den = 1
        if self.peek().kind == "/":
            self.next()
            den = int(self.expect("num").text)
        if parens:
            self.expect(")")
        return Fraction(sign * num, den)

    def base(self) -> Expr:
        tok = self.next()
        if tok.kind == "-":
            return neg(self.base())
        if tok.kind == "num":
            return rat(int(tok.text))
        if tok.kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            if self.peek().kind == "(":
                return self.call(tok)
            return self.atom(tok)
        raise ParseError(f"expected a value, found {tok.text!r}", tok.pos)

    def call(self, head: _Tok) -> Expr:
        self.expect("(")
        args = [self.expr()]
        while self.peek().kind == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        name = head.text
        if name in _RESERVED_FNS:
            if len(args) != 1:
                raise ParseError(f"{name} takes exactly one argument", head.pos)
            return exp_(args[0]) if name == "exp" else ln_(args[0])
        if name in _COORDS or name == "u" or name.startswith("u_"):
            raise ParseError(f"{name!r} is a variable, not a function", head.pos)
        return fn(name, tuple(args))

    def atom(self, tok: _Tok) -> Expr:
        name = tok.text
        if name in _COORDS:
            return base(name)
        if name == "u":
            return jet("")
        if name.startswith("u_"):
            letters = name[2:]
            if not letters or any(c not in _COORDS for c in letters):
                raise ParseError(f"unknown jet coordinate {name!r}", tok.pos)
            if len(letters) > 4:
                raise ParseError(f"jet order of {name!r} exceeds 4", tok.pos)
            return jet(letters)
        if name in _RESERVED_FNS:
            raise ParseError(f"{name!r} must be applied to an argument", tok.pos)
        return param(name)


def parse(text: str) -> Expr:
    """Parse ``text`` into a normalized expression."""
    return _Parser(text).parse()
