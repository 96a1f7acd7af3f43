"""AST for the bounded-analytic expression language and its source printer.

Nodes are frozen dataclasses so two parses of the same text compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

BINARY_OPS = ("+", "-", "*", "/")
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


@dataclass(frozen=True)
class Constant:
    value: complex


@dataclass(frozen=True)
class Variable:
    """The complex variable s."""


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class ExpScale:
    """e^{c s} with real c >= 0."""

    coefficient: float


@dataclass(frozen=True)
class Blaschke:
    """(s - a)/(s + conj(a)), zero at a with Re a < 0, pole at -conj(a)."""

    zero: complex

    @property
    def pole(self) -> complex:
        return -self.zero.conjugate()


Node = Union[Constant, Variable, BinaryOp, ExpScale, Blaschke]


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    yield node
    if isinstance(node, BinaryOp):
        yield from walk(node.left)
        yield from walk(node.right)


def format_real(x: float) -> str:
    return repr(float(x))


def format_number(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return format_real(z.real)
    imag = format_real(z.imag)
    return f"{format_real(z.real)}{imag if imag.startswith('-') else '+' + imag}i"


def to_source(node: Node) -> str:
    """Print with the fewest parentheses that reparse to the same tree."""
    if isinstance(node, Constant):
        return format_number(node.value)
    if isinstance(node, Variable):
        return "s"
    if isinstance(node, ExpScale):
        return f"exp({format_real(node.coefficient)}*s)"
    if isinstance(node, Blaschke):
        zero = complex(node.zero)
        if zero.imag == 0:
            return f"blaschke({format_real(zero.real)})"
        return f"blaschke({format_real(zero.real)}, {format_real(zero.imag)})"
    if isinstance(node, BinaryOp):
        prec = _PRECEDENCE[node.op]
        left = to_source(node.left)
        right = to_source(node.right)
        if isinstance(node.left, BinaryOp) and _PRECEDENCE[node.left.op] < prec:
            left = f"({left})"
        if isinstance(node.right, BinaryOp) and _PRECEDENCE[node.right.op] <= prec:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


__all__ = [
    "BINARY_OPS",
    "BinaryOp",
    "Blaschke",
    "Constant",
    "ExpScale",
    "Node",
    "Variable",
    "format_number",
    "format_real",
    "to_source",
    "walk",
]
