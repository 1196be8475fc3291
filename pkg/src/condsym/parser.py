"""Recursive-descent parser for the expression language.

Grammar (binding tightness ^ > unary minus > * / > + -, with ^ right
associative, so "-y^2" reads as -(y^2) and "2^3^2" as 2^(3^2)):

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := number | ident | ident '(' sum (',' sum)* ')' | '(' sum ')'

Identifiers must belong to the built-in alphabet or be registered through
the ``variables`` argument.  Integer literals parse exactly; literals with a
decimal point or exponent parse as floats.  Parsed trees mirror the source
text; no folding is applied.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Optional

from .expr import (BinOp, DEFAULT_VARIABLES, Expr, ExprError, FUNCTION_NAMES,
                   Num, Unary, Var)


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown identifier '{name}' (at offset {position})")
        self.name = name
        self.position = position


_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


def _tokenize(text: str):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        tokens.append((kind, m.group(), i))
        i = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, allowed):
        self.tokens = tokens
        self.pos = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect_op(self, text):
        kind, val, pos = self.peek()
        if kind != "op" or val != text:
            raise ExprSyntaxError(f"expected '{text}'", pos)
        return self.advance()

    def at_op(self, *ops):
        kind, val, _ = self.peek()
        return kind == "op" and val in ops

    def sum(self) -> Expr:
        node = self.product()
        while self.at_op("+", "-"):
            _, op, _ = self.advance()
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Expr:
        node = self.unary()
        while self.at_op("*", "/"):
            _, op, _ = self.advance()
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at_op("^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            if "." in val or "e" in val or "E" in val:
                return Num(float(val))
            return Num(Fraction(int(val)))
        if kind == "ident":
            self.advance()
            if self.at_op("("):
                if val not in FUNCTION_NAMES:
                    raise ExprSyntaxError(f"unknown function '{val}'", pos)
                self.advance()
                args = [self.sum()]
                while self.at_op(","):
                    self.advance()
                    args.append(self.sum())
                self.expect_op(")")
                if len(args) != 1:
                    raise ExprSyntaxError(
                        f"function '{val}' expects 1 argument, got {len(args)}", pos)
                return Unary(val, args[0])
            if val in FUNCTION_NAMES:
                raise ExprSyntaxError(f"function '{val}' must be called", pos)
            if val not in self.allowed:
                raise UnknownIdentifierError(val, pos)
            return Var(val)
        if kind == "op" and val == "(":
            self.advance()
            node = self.sum()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token '{val}'", pos)


def parse(text: str, variables: Optional[Iterable[str]] = None) -> Expr:
    """Parse ``text`` into an expression tree.

    ``variables`` registers identifiers beyond the built-in alphabet
    {y, z, u, omega, phi, t, x}.
    """
    allowed = DEFAULT_VARIABLES if variables is None else DEFAULT_VARIABLES | set(variables)
    p = _Parser(_tokenize(text), allowed)
    node = p.sum()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected token '{val}'", pos)
    return node
