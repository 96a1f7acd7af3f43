"""Expression language for bounded analytic functions on the left half-plane."""

from src.funcspec.certify import (
    FrequencyGrid,
    FuncExpr,
    HinfCertificate,
    SupNormEstimate,
    certify_hinf,
    evaluate,
    parse,
    sup_norm,
)
from src.funcspec.evaluator import evaluate_matrix
from src.funcspec.nodes import to_source
from src.funcspec.parser import parse_expression

__all__ = [
    "FrequencyGrid",
    "FuncExpr",
    "HinfCertificate",
    "SupNormEstimate",
    "certify_hinf",
    "evaluate",
    "evaluate_matrix",
    "parse",
    "parse_expression",
    "sup_norm",
    "to_source",
]
