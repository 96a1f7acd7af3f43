import json

import numpy as np
import pytest

from src.core.admissibility import (
    ObservationMatrix,
    admissibility_gramian,
    admissibility_profile_rows,
    admissibility_quadrature,
    check_thm26,
    classify_growth,
    discrete_gramian,
    load_observation,
    sqrt_admissibility_profile,
)
from src.core.config import settings
from src.core.errors import InvalidInputError
from src.core.linops import GeneratorMatrix, lyapunov_gram
from src.core.signals import TimeGrid
from src.funcspec import parse
from src.library.families import build_family
from src.library.functions import FUNCTIONS
from src.schemas.payloads import ObservationPayload

HALF_SQRT = 1 / np.sqrt(2)


@pytest.fixture(scope="module")
def scalar():
    return GeneratorMatrix.from_array([[-1.0]], label="scalar:1")


@pytest.fixture(scope="module")
def diag():
    return GeneratorMatrix.from_array(np.diag([-1.0, -2.0]), label="diag:-1,-2")


def test_observation_shapes():
    C = ObservationMatrix.from_array([1.0, 2.0])
    assert (C.rows, C.cols) == (1, 2)
    assert not C.entries.flags.writeable
    assert np.allclose(C.scaled(2.0).entries, [[2.0, 4.0]])
    with pytest.raises(InvalidInputError):
        ObservationMatrix.from_array([1.0, 2.0], n=3)


def test_load_observation(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(ObservationPayload.from_array(np.array([[1.0, 1j]])).model_dump_json())
    C = load_observation(path)
    assert C.label == "c"
    np.testing.assert_allclose(C.entries, [[1.0, 1j]])

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"rows": 1, "cols": 2, "entries": [[1.0, 0.0]]}))
    with pytest.raises(InvalidInputError):
        load_observation(bad)
    with pytest.raises(InvalidInputError):
        load_observation(tmp_path / "missing.json")


def test_gramian_scalar_value(scalar):
    report = admissibility_gramian(scalar, [1.0])
    assert report.kappa == pytest.approx(HALF_SQRT, abs=1e-12)
    assert report.method == "gramian" and not report.lower_bound
    assert report.generator_id == "scalar:1"


def test_gramian_diagonal_value(diag):
    # X = [[1/2, 1/3], [1/3, 1/4]]
    X = np.array([[0.5, 1 / 3], [1 / 3, 0.25]])
    expected = np.sqrt(np.linalg.eigvalsh(X).max())
    assert admissibility_gramian(diag, [1.0, 1.0]).kappa == pytest.approx(expected, rel=1e-10)


def test_dimension_mismatch_rejected(diag):
    with pytest.raises(InvalidInputError):
        admissibility_gramian(diag, ObservationMatrix.from_array([1.0, 1.0, 1.0]))


@pytest.mark.parametrize("C", [[1.0], [[1.0], [2.0]]])
def test_quadrature_matches_gramian_on_scalar(scalar, C):
    C = np.array(C).reshape(-1, 1)
    exact = admissibility_gramian(scalar, C).kappa
    estimate = admissibility_quadrature(scalar, C, TimeGrid.for_generator(scalar), seed=1)
    assert estimate.lower_bound and not estimate.horizon_warning
    assert estimate.kappa == pytest.approx(exact, rel=1e-4)


def test_quadrature_matches_gramian_on_diagonal(diag):
    exact = admissibility_gramian(diag, [1.0, 1.0]).kappa
    estimate = admissibility_quadrature(diag, [1.0, 1.0], seed=1).kappa
    assert estimate == pytest.approx(exact, rel=1e-4)


def test_discrete_gramian_converges(diag):
    C = np.array([[1.0, 1.0]])
    W = discrete_gramian(diag, C, TimeGrid.for_generator(diag))
    np.testing.assert_allclose(W, lyapunov_gram(diag, C).entries, atol=1e-6)


def test_short_horizon_flags_warning(scalar):
    report = admissibility_quadrature(scalar, [1.0], TimeGrid(0.01, 64), seed=1)
    assert report.horizon_warning
    assert report.kappa < HALF_SQRT


@pytest.mark.parametrize("source", ["1", "(1+s)/(1-s)"])
def test_output_intertwining_on_diagonal(diag, source):
    g = parse(source)
    report = check_thm26(diag, [1.0, 1.0], g, TimeGrid.for_generator(diag, g, n_samples=2**12))
    assert report.passed(3e-2)
    assert report.probes == 4
    assert np.isfinite(report.output_admissibility.kappa)
    assert all(t > 0 for t in report.sample_times)


def test_intertwining_with_slow_blaschke_pole():
    A = build_family("dirichlet", 2)
    g = FUNCTIONS.get("blaschke5", settings.seed)
    assert min(p.real for p in g.poles) < 0.2
    report = check_thm26(A, [1.0, 1.0], g, TimeGrid.for_generator(A, g, n_samples=2**12))
    assert report.passed(1e-2)


def test_output_admissibility_of_identity_matches_input(diag):
    report = check_thm26(diag, [1.0, 1.0], parse("1"), TimeGrid.for_generator(diag, n_samples=2**12))
    assert report.output_admissibility.kappa == pytest.approx(admissibility_gramian(diag, [1.0, 1.0]).kappa,
                                                              rel=1e-6)


@pytest.mark.parametrize("family", ["geometric", "dirichlet"])
@pytest.mark.parametrize("n", [2, 8, 32])
def test_self_adjoint_profile_is_constant(family, n):
    kappa, kappa_star = sqrt_admissibility_profile(build_family(family, n, 0))
    assert kappa.kappa == pytest.approx(HALF_SQRT, abs=1e-8)
    assert kappa_star.kappa == pytest.approx(HALF_SQRT, abs=1e-8)


def test_profile_rejects_unknown_method(diag):
    with pytest.raises(InvalidInputError):
        sqrt_admissibility_profile(diag, method="monte-carlo")


@pytest.mark.parametrize(
    "profile,expected",
    [
        ({2: (0.7, 0.7), 8: (0.7, 0.7)}, "bounded"),
        ({2: (0.7, 0.7), 8: (0.9, 0.7)}, "sqrt_log"),
        ({2: (0.7, 0.7), 8: (0.7, 1.0)}, "sqrt_log"),
        ({2: (0.7, 0.7), 8: (1.0, 1.0)}, "log"),
        ({8: (1.0, 1.0), 2: (0.7, 0.7), 32: (1.02, 1.03)}, "bounded"),
    ],
)
def test_classify_growth(profile, expected):
    assert classify_growth(profile) == expected


def test_classify_growth_needs_two_sizes():
    with pytest.raises(InvalidInputError):
        classify_growth({4: (1.0, 1.0)})


def test_profile_rows_for_nested_family():
    rows = admissibility_profile_rows("dirichlet", lambda n: build_family("dirichlet", n, 0), [2, 4, 8])
    assert [r["n"] for r in rows] == [2, 4, 8]
    assert set(rows[0]) == {"family", "n", "kappa", "kappa_star", "method"}
    profile = {r["n"]: (r["kappa"], r["kappa_star"]) for r in rows}
    assert classify_growth(profile) == "bounded"


def test_jordan_perturbed_profile_grows():
    rows = admissibility_profile_rows("jordan_perturbed", lambda n: build_family("jordan_perturbed", n, 0),
                                      [2, 8, 32])
    kappas = [r["kappa"] for r in rows]
    assert all(k >= HALF_SQRT - 1e-9 for k in kappas)
    assert kappas[-1] > 1.001 * HALF_SQRT
