"""
Membership certificates for the left half-plane algebra, checked evaluation
and boundary sup-norm estimates.

A function passes certification when every pole of every rational factor
lies to the right of ``delta_pole`` and every exponential coefficient is
real and nonnegative. Denominator zeros at which the whole expression stays
bounded are removable points; evaluation near them goes through a Cauchy
integral on a small circle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from src.core.config import settings
from src.core.errors import HinfViolationError, PoleProximityError
from src.funcspec.evaluator import raw_evaluate
from src.funcspec.nodes import BinaryOp, Blaschke, Constant, ExpScale, Node, Variable, to_source, walk
from src.funcspec.parser import parse_expression
from src.utils.system_logger import log_function

logger = logging.getLogger("hinf.funcspec")

_CIRCLE_POINTS = 16
_CAUCHY_POINTS = 32
_DEDUPE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    message: str
    subterm: str


@dataclass(frozen=True)
class HinfCertificate:
    passed: bool
    poles: Tuple[complex, ...]
    removable: Tuple[complex, ...]
    exp_coefficients: Tuple[float, ...]
    violations: Tuple[Violation, ...]
    delta_pole: float

    def summary(self) -> str:
        if self.passed:
            return f"pass: poles={list(self.poles)} removable={list(self.removable)}"
        return "fail: " + "; ".join(f"{v.message} in '{v.subterm}'" for v in self.violations)


@dataclass(frozen=True)
class FuncExpr:
    ast: Node
    source_text: str
    certificate: Optional[HinfCertificate] = field(default=None, compare=False)

    @classmethod
    def from_ast(cls, ast: Node) -> "FuncExpr":
        return cls(ast, to_source(ast), certify_hinf(ast))

    @property
    def poles(self) -> Tuple[complex, ...]:
        return self.certificate.poles if self.certificate else ()

    @property
    def exp_coefficients(self) -> Tuple[float, ...]:
        return tuple(n.coefficient for n in walk(self.ast) if isinstance(n, ExpScale))

    def __mul__(self, other: "FuncExpr") -> "FuncExpr":
        return FuncExpr.from_ast(BinaryOp("*", self.ast, other.ast))

    def __call__(self, s):
        return evaluate(self, s)


# ---------------------------------------------------------------------------
# Rational structure
# ---------------------------------------------------------------------------
class _NotRational(Exception):
    pass


def _trim(p: Polynomial) -> Polynomial:
    scale = float(np.max(np.abs(p.coef))) if p.coef.size else 0.0
    return p.trim(tol=1e-14 * scale) if scale > 0 else Polynomial([0.0])


def _rational(node: Node) -> Tuple[Polynomial, Polynomial]:
    """(P, Q) with node = P/Q; raises _NotRational on non-trivial exponentials."""
    if isinstance(node, Constant):
        return Polynomial([complex(node.value)]), Polynomial([1.0])
    if isinstance(node, Variable):
        return Polynomial([0.0, 1.0]), Polynomial([1.0])
    if isinstance(node, ExpScale):
        if node.coefficient == 0:
            return Polynomial([1.0]), Polynomial([1.0])
        raise _NotRational
    if isinstance(node, Blaschke):
        a = complex(node.zero)
        return Polynomial([-a, 1.0]), Polynomial([a.conjugate(), 1.0])
    lp, lq = _rational(node.left)
    rp, rq = _rational(node.right)
    if node.op == "+":
        p, q = lp * rq + rp * lq, lq * rq
    elif node.op == "-":
        p, q = lp * rq - rp * lq, lq * rq
    elif node.op == "*":
        p, q = lp * rp, lq * rq
    else:
        p, q = lp * rq, lq * rp
    return _trim(p), _trim(q)


def _zeros(node: Node) -> Optional[List[complex]]:
    """Zeros of a rational node, None when it vanishes identically."""
    p, q = _rational(node)
    if np.all(np.abs(p.coef) == 0):
        return None
    if p.degree() < 1:
        return []
    roots = list(p.roots())
    for pole in (q.roots() if q.degree() >= 1 else []):
        for k, root in enumerate(roots):
            if abs(root - pole) <= 1e-9 * max(1.0, abs(pole)):
                roots.pop(k)
                break
    return [complex(r) for r in roots]


def _candidates(node: Node, violations: List[Violation]) -> List[Tuple[complex, Node]]:
    if isinstance(node, Blaschke):
        return [(node.pole, node)]
    if not isinstance(node, BinaryOp):
        return []
    found = _candidates(node.left, violations) + _candidates(node.right, violations)
    if node.op == "/":
        try:
            zeros = _zeros(node.right)
        except _NotRational:
            violations.append(Violation("denominator is not rational and cannot be certified", to_source(node.right)))
            return found
        if zeros is None:
            violations.append(Violation("denominator vanishes identically", to_source(node.right)))
            return found
        found.extend((z, node) for z in zeros)
    return found


def _is_removable(root: Node, z: complex) -> bool:
    theta = 2 * np.pi * (np.arange(_CIRCLE_POINTS) + 0.5) / _CIRCLE_POINTS
    r_outer = 1e-4 * max(1.0, abs(z))
    outer = raw_evaluate(root, z + r_outer * np.exp(1j * theta))
    inner = raw_evaluate(root, z + (r_outer / 16) * np.exp(1j * theta))
    if not (np.all(np.isfinite(outer)) and np.all(np.isfinite(inner))):
        return False
    return float(np.max(np.abs(inner))) <= 4 * float(np.max(np.abs(outer))) + 1e-300


def _dedupe(points: List[complex]) -> List[complex]:
    unique: List[complex] = []
    for z in points:
        if all(abs(z - u) > _DEDUPE_TOL * max(1.0, abs(u)) for u in unique):
            unique.append(z)
    return unique


@log_function("DEBUG", "CERTIFY_HINF_OK")
def certify_hinf(g: Union[FuncExpr, Node]) -> HinfCertificate:
    """Certify membership; returns a failure report rather than raising."""
    root = g.ast if isinstance(g, FuncExpr) else g
    delta = settings.delta_pole
    violations: List[Violation] = []
    exp_coefficients: List[float] = []
    for node in walk(root):
        if isinstance(node, ExpScale):
            exp_coefficients.append(node.coefficient)
            if not np.isfinite(node.coefficient) or node.coefficient < 0:
                violations.append(Violation(f"exp coefficient {node.coefficient} is negative", to_source(node)))
        elif isinstance(node, Blaschke) and not complex(node.zero).real < -delta:
            violations.append(Violation(f"blaschke zero {node.zero} needs Re a < -{delta}", to_source(node)))
        elif isinstance(node, Constant) and not np.isfinite(complex(node.value)):
            violations.append(Violation("constant is not finite", to_source(node)))

    poles: List[complex] = []
    removable: List[complex] = []
    for z, owner in _candidates(root, violations):
        if any(abs(z - p) <= _DEDUPE_TOL * max(1.0, abs(p)) for p in poles + removable):
            continue
        if not isinstance(owner, Blaschke) and _is_removable(root, z):
            removable.append(z)
            continue
        poles.append(z)
        if not z.real > delta:
            violations.append(Violation(f"pole at {z:.6g} lies in the closed left half-plane", to_source(owner)))

    return HinfCertificate(
        passed=not violations,
        poles=tuple(_dedupe(poles)),
        removable=tuple(_dedupe(removable)),
        exp_coefficients=tuple(exp_coefficients),
        violations=tuple(violations),
        delta_pole=delta,
    )


@log_function("DEBUG", "PARSE_OK")
def parse(text: str, certify: bool = True) -> FuncExpr:
    """Parse and certify. With ``certify=False`` the report is attached but not enforced."""
    ast = parse_expression(text)
    certificate = certify_hinf(ast)
    if certify and not certificate.passed:
        first = certificate.violations[0]
        raise HinfViolationError(first.message, first.subterm)
    return FuncExpr(ast, text, certificate)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------
def _cauchy(root: Node, center: complex, radius: float, points: np.ndarray) -> np.ndarray:
    theta = 2 * np.pi * np.arange(_CAUCHY_POINTS) / _CAUCHY_POINTS
    ring = radius * np.exp(1j * theta)
    zeta = center + ring
    values = raw_evaluate(root, zeta)
    kernel = ring[np.newaxis, :] / (zeta[np.newaxis, :] - points[:, np.newaxis])
    return np.mean(values[np.newaxis, :] * kernel, axis=1)


def evaluate(g: FuncExpr, s):
    """g(s) for a scalar or array of points."""
    certificate = g.certificate or certify_hinf(g.ast)
    scalar = np.ndim(s) == 0
    points = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    for pole in certificate.poles:
        distance = np.abs(points - pole)
        k = int(np.argmin(distance)) if distance.size else 0
        if distance.size and distance[k] < settings.pole_proximity:
            raise PoleProximityError(complex(points.flat[k]), pole)
    values = raw_evaluate(g.ast, points)
    for z in certificate.removable:
        radius = 1e-3 * max(1.0, abs(z))
        if certificate.poles:
            radius = min(radius, 0.5 * min(abs(z - p) for p in certificate.poles))
        mask = np.abs(points - z) < radius / 4
        if np.any(mask):
            values[mask] = _cauchy(g.ast, z, radius, points[mask])
    return complex(values[0]) if scalar else values


# ---------------------------------------------------------------------------
# Sup norm on the imaginary axis
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FrequencyGrid:
    omegas: np.ndarray

    @classmethod
    def default(cls, min_omega: Optional[float] = None, max_omega: Optional[float] = None,
                points: Optional[int] = None) -> "FrequencyGrid":
        lo = settings.sup_grid_min if min_omega is None else min_omega
        hi = settings.sup_grid_max if max_omega is None else max_omega
        count = settings.sup_grid_points if points is None else points
        positive = np.logspace(np.log10(lo), np.log10(hi), count)
        return cls(np.concatenate([[0.0], positive, -positive]))

    def refined(self) -> "FrequencyGrid":
        """Every existing point plus the geometric midpoints of the positive grid, mirrored."""
        positive = np.unique(self.omegas[self.omegas > 0])
        mids = np.sqrt(positive[:-1] * positive[1:])
        return FrequencyGrid(np.concatenate([self.omegas, mids, -mids]))

    @property
    def size(self) -> int:
        return int(self.omegas.size)


@dataclass(frozen=True)
class SupNormEstimate:
    value: float
    grid_points: int
    is_lower_bound: bool = True
    argmax_omega: float = 0.0


@log_function("DEBUG", "SUP_NORM_OK")
def sup_norm(g: FuncExpr, grid: Optional[FrequencyGrid] = None) -> SupNormEstimate:
    """max |g(i omega)| over the grid; a lower bound of the true supremum."""
    certificate = g.certificate or certify_hinf(g.ast)
    if not certificate.passed:
        first = certificate.violations[0]
        raise HinfViolationError(first.message, first.subterm)
    grid = grid or FrequencyGrid.default()
    magnitudes = np.abs(evaluate(g, 1j * grid.omegas))
    k = int(np.argmax(magnitudes))
    return SupNormEstimate(float(magnitudes[k]), grid.size, True, float(grid.omegas[k]))


__all__ = [
    "FrequencyGrid",
    "FuncExpr",
    "HinfCertificate",
    "SupNormEstimate",
    "Violation",
    "certify_hinf",
    "evaluate",
    "parse",
    "sup_norm",
]
