"""
Expression Parser for bounded analytic functions of s
Recursive descent with operator precedence, scanning the source directly.

Grammar:
    expr   : term (('+' | '-') term)*
    term   : factor (('*' | '/') factor)*
    factor : NUMBER | 's' | '(' expr ')'
           | 'exp' '(' NUMBER '*' 's' ')'
           | 'blaschke' '(' NUMBER (',' NUMBER)? ')'
    NUMBER : REAL | REAL ('+' | '-') UREAL 'i'      (REAL may carry a leading '-')

Errors report byte offsets into the UTF-8 encoded source.
"""
from __future__ import annotations

import re
from typing import Optional

from src.core.errors import ExpressionSyntaxError
from src.funcspec.nodes import BinaryOp, Blaschke, Constant, ExpScale, Node, Variable

_REAL = r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
_NUMBER = re.compile(rf"(?P<re>-?(?:{_REAL}))(?:(?P<im>[+-](?:{_REAL}))i)?")
_WORD = re.compile(r"[A-Za-z_]+")


class ExpressionParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    # -- scanning -----------------------------------------------------------
    def _byte_offset(self, pos: Optional[int] = None) -> int:
        return len(self.text[: self.pos if pos is None else pos].encode("utf-8"))

    def _error(self, message: str, pos: Optional[int] = None) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(message, self._byte_offset(pos), self.text)

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _expect(self, char: str) -> None:
        if self._peek() != char:
            found = self._peek() or "end of input"
            raise self._error(f"expected '{char}', found '{found}'")
        self.pos += 1

    def _number(self) -> complex:
        self._skip_ws()
        match = _NUMBER.match(self.text, self.pos)
        if match is None:
            raise self._error("expected a number")
        self.pos = match.end()
        real = float(match.group("re"))
        imag = float(match.group("im")) if match.group("im") else 0.0
        return complex(real, imag)

    def _real(self, what: str) -> float:
        start = self.pos
        value = self._number()
        if value.imag != 0:
            raise self._error(f"{what} must be real", start)
        return value.real

    # -- grammar ------------------------------------------------------------
    def parse(self) -> Node:
        if not self.text.strip():
            raise self._error("empty expression")
        node = self._expr()
        if self._peek():
            raise self._error(f"unexpected '{self._peek()}'")
        return node

    def _expr(self) -> Node:
        node = self._term()
        while self._peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinaryOp(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._factor()
        while self._peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinaryOp(op, node, self._factor())
        return node

    def _factor(self) -> Node:
        char = self._peek()
        if not char:
            raise self._error("unexpected end of input")
        if char == "(":
            self.pos += 1
            node = self._expr()
            self._expect(")")
            return node
        word = _WORD.match(self.text, self.pos)
        if word is not None:
            name = word.group(0)
            if name == "s":
                self.pos = word.end()
                return Variable()
            if name == "exp":
                self.pos = word.end()
                return self._exp_call()
            if name == "blaschke":
                self.pos = word.end()
                return self._blaschke_call()
            raise self._error(f"unknown name '{name}'")
        return Constant(self._number())

    def _exp_call(self) -> Node:
        self._expect("(")
        coefficient = self._real("exp coefficient")
        self._expect("*")
        if self._peek() != "s" or _WORD.match(self.text, self.pos).group(0) != "s":
            raise self._error("expected 's' in exp(c*s)")
        self.pos += 1
        self._expect(")")
        return ExpScale(coefficient)

    def _blaschke_call(self) -> Node:
        self._expect("(")
        zero = self._number()
        if self._peek() == ",":
            self.pos += 1
            start = self.pos
            if zero.imag != 0:
                raise self._error("blaschke(x, y) takes two real numbers", start)
            zero = complex(zero.real, self._real("blaschke imaginary part"))
        self._expect(")")
        return Blaschke(zero)


def parse_expression(text: str) -> Node:
    """Parse source text into an AST without certification."""
    return ExpressionParser(text).parse()


__all__ = ["ExpressionParser", "parse_expression"]
