import numpy as np
import pytest

from src.core.errors import ExpressionSyntaxError, HinfViolationError, PoleProximityError
from src.funcspec import (
    FrequencyGrid,
    certify_hinf,
    evaluate,
    evaluate_matrix,
    parse,
    parse_expression,
    sup_norm,
    to_source,
)
from src.funcspec.nodes import BinaryOp, Blaschke, Constant, ExpScale, Variable
from src.library.families import build_family


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def test_precedence_and_associativity():
    ast = parse_expression("1-s-2*s/3")
    assert ast == BinaryOp("-", BinaryOp("-", Constant(1), Variable()),
                           BinaryOp("/", BinaryOp("*", Constant(2), Variable()), Constant(3)))


@pytest.mark.parametrize(
    "text,zero",
    [("blaschke(-1)", -1), ("blaschke(-0.5, 2)", -0.5 + 2j), ("blaschke(-2-3i)", -2 - 3j), ("blaschke( -1 , -4 )", -1 - 4j)],
)
def test_blaschke_forms(text, zero):
    assert parse_expression(text) == Blaschke(complex(zero))


def test_complex_literals_and_exp():
    assert parse_expression("2.5e-1+3i") == Constant(0.25 + 3j)
    assert parse_expression("exp(0.5*s)") == ExpScale(0.5)


@pytest.mark.parametrize(
    "text,offset",
    [("", 0), ("1+", 2), ("(1+s", 4), ("sin(s)", 0), ("1+\u00a0)", 4), ("exp(s)", 4), ("blaschke(-1+2i, 3)", 15)],
)
def test_syntax_errors_report_byte_offsets(text, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(text)
    assert info.value.offset == offset


@pytest.mark.parametrize(
    "text",
    ["(1+s)/(1-s)", "1/(1-s)", "exp(1.0*s)*blaschke(-0.5, 2.0)", "(exp(1.0*s)-1.0)/s", "1-(s-2)", "2/(3/(1-s))"],
)
def test_printer_round_trip(text):
    ast = parse_expression(text)
    assert parse_expression(to_source(ast)) == ast


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("text", ["1", "(1+s)/(1-s)", "1/(1-s)", "exp(1*s)", "blaschke(-1, 3)*blaschke(-2)"])
def test_reference_functions_certify(text):
    assert certify_hinf(parse(text)).passed


def test_boxcar_transform_has_removable_point_at_origin():
    g = parse("(exp(1*s)-1)/s")
    assert g.certificate.passed
    assert g.certificate.poles == ()
    assert len(g.certificate.removable) == 1 and abs(g.certificate.removable[0]) < 1e-12
    assert g.exp_coefficients == (1.0,)
    assert evaluate(g, 0.0) == pytest.approx(1.0, abs=1e-8)
    assert evaluate(g, 1e-9j) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize(
    "text,subterm",
    [("1/(s+1)", "1.0/(s+1.0)"), ("exp(-1*s)", "exp(-1.0*s)"), ("blaschke(1)", "blaschke(1.0)"), ("1/(s-s)", "s-s"),
     ("1/exp(1*s)", "exp(1.0*s)")],
)
def test_violations_name_the_subterm(text, subterm):
    report = certify_hinf(parse_expression(text))
    assert not report.passed
    assert any(v.subterm == subterm for v in report.violations)
    with pytest.raises(HinfViolationError):
        parse(text)


def test_parse_without_enforcement_keeps_report():
    g = parse("1/(s+1)", certify=False)
    assert not g.certificate.passed
    assert "closed left half-plane" in g.certificate.summary()


def test_pole_on_imaginary_axis_rejected():
    assert not certify_hinf(parse_expression("1/s")).passed


# ---------------------------------------------------------------------------
# Evaluation and sup norm
# ---------------------------------------------------------------------------
def test_evaluate_scalar_and_vector():
    g = parse("(1+s)/(1-s)")
    assert g(-1.0) == pytest.approx(0.0)
    values = g(np.array([-2.0, 0.0]))
    np.testing.assert_allclose(values, [-1 / 3, 1.0])


def test_evaluate_near_pole_raises():
    g = parse("1/(1-s)")
    with pytest.raises(PoleProximityError):
        g(1.0 + 1e-14)


def test_sup_norm_values():
    assert sup_norm(parse("blaschke(-1, 2)*blaschke(-3)")).value == pytest.approx(1.0, abs=1e-12)
    assert sup_norm(parse("(1+s)/(1-s)")).value == pytest.approx(1.0, abs=1e-12)
    estimate = sup_norm(parse("1/(1-s)"))
    assert estimate.value == pytest.approx(1.0)
    assert estimate.argmax_omega == 0.0
    assert estimate.is_lower_bound


def test_sup_norm_monotone_under_refinement():
    g = parse("s/((s-1)*(s-2))*exp(0.3*s)")
    grid = FrequencyGrid.default(points=64)
    finer = grid.refined()
    assert set(grid.omegas).issubset(set(finer.omegas))
    assert sup_norm(g, finer).value >= sup_norm(g, grid).value


def test_sup_norm_rejects_uncertified():
    with pytest.raises(HinfViolationError):
        sup_norm(parse("1/(s+1)", certify=False))


def test_product_of_expressions():
    f, g = parse("1/(1-s)"), parse("exp(1*s)")
    fg = f * g
    assert fg.certificate.passed
    assert fg(-0.5) == pytest.approx(f(-0.5) * g(-0.5))


@pytest.mark.parametrize("text", ["(1+s)/(1-s)", "exp(1*s)", "(exp(1*s)-1)/s", "blaschke(-1, 3)*blaschke(-0.5)"])
def test_matrix_substitution_matches_eigenvalues(text):
    A = build_family("geometric", 3, 0)
    g = parse(text)
    expected = np.diag(g(np.diag(np.asarray(A.entries))))
    np.testing.assert_allclose(evaluate_matrix(g.ast, np.asarray(A.entries)), expected, atol=1e-10)
