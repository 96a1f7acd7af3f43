"""Pointwise and matrix evaluation of expression trees.

``evaluate_node`` is the plain AST recursion in complex arithmetic over numpy
arrays. ``evaluate_matrix`` substitutes a generator for s; the factors of an
expression commute, so division is multiplication by an inverse.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from src.core.errors import SingularityError
from src.funcspec.nodes import BinaryOp, Blaschke, Constant, ExpScale, Node, Variable, to_source


def evaluate_node(node: Node, s: np.ndarray) -> np.ndarray:
    """Vectorised AST recursion; division by zero yields inf/nan, callers mask it."""
    if isinstance(node, Constant):
        return np.full(np.shape(s), complex(node.value), dtype=np.complex128)
    if isinstance(node, Variable):
        return np.asarray(s, dtype=np.complex128)
    if isinstance(node, ExpScale):
        return np.exp(node.coefficient * np.asarray(s, dtype=np.complex128))
    if isinstance(node, Blaschke):
        a = complex(node.zero)
        return (s - a) / (s + a.conjugate())
    if isinstance(node, BinaryOp):
        left = evaluate_node(node.left, s)
        right = evaluate_node(node.right, s)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    raise TypeError(f"not an expression node: {node!r}")


def raw_evaluate(node: Node, s) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return evaluate_node(node, np.asarray(s, dtype=np.complex128))


def _divide(numerator: np.ndarray, denominator: np.ndarray, subterm: Node) -> np.ndarray:
    if np.linalg.cond(denominator) > 1e14:
        raise SingularityError(f"denominator '{to_source(subterm)}' is singular at the generator")
    return np.linalg.solve(denominator.T, numerator.T).T


def evaluate_matrix(node: Node, A: np.ndarray) -> np.ndarray:
    """g(A) by substitution; exp(c*s) becomes the matrix exponential e^{cA}."""
    A = np.asarray(A, dtype=np.complex128)
    eye = np.eye(A.shape[0], dtype=np.complex128)
    if isinstance(node, Constant):
        return complex(node.value) * eye
    if isinstance(node, Variable):
        return A.copy()
    if isinstance(node, ExpScale):
        return scipy.linalg.expm(node.coefficient * A)
    if isinstance(node, Blaschke):
        a = complex(node.zero)
        return _divide(A - a * eye, A + a.conjugate() * eye, node)
    if isinstance(node, BinaryOp):
        left = evaluate_matrix(node.left, A)
        right = evaluate_matrix(node.right, A)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left @ right
        return _divide(left, right, node.right)
    raise TypeError(f"not an expression node: {node!r}")


__all__ = ["evaluate_matrix", "evaluate_node", "raw_evaluate"]
