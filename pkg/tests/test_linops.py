import json

import numpy as np
import pytest
import scipy.integrate

from src.core.errors import InvalidInputError, StabilityError
from src.core.linops import (
    GeneratorMatrix,
    load_generator,
    lyapunov_gram,
    matrix_exponential,
    operator_norm,
    propagate,
    resolvent,
    save_generator,
    spectral_abscissa,
    spectral_decompose,
    sqrt_minus_A,
)
from src.library.families import build_family

JORDAN = [[-1.0, 1.0], [0.0, -1.0]]


def test_stability_gate_rejects_marginal_and_unstable():
    with pytest.raises(StabilityError):
        GeneratorMatrix.from_array([[0.0]])
    with pytest.raises(StabilityError):
        GeneratorMatrix.from_array(np.diag([-1.0, 0.5]))


@pytest.mark.parametrize("values", [[[1.0, 2.0]], [[np.nan]], [1.0, 2.0, 3.0]])
def test_malformed_generators_are_invalid_input(values):
    with pytest.raises(InvalidInputError):
        GeneratorMatrix.from_array(values)


def test_generator_is_read_only_and_caches_abscissa():
    A = GeneratorMatrix.from_array(np.diag([-1.0, -3.0]))
    assert A.spectral_abscissa == pytest.approx(-1.0)
    assert A.decay_rate == pytest.approx(3.0)
    with pytest.raises(ValueError):
        A.entries[0, 0] = 5.0


def test_adjoint_keeps_abscissa():
    A = build_family("random_stable", 6, seed=3)
    assert A.adjoint().spectral_abscissa == pytest.approx(A.spectral_abscissa, abs=1e-10)
    np.testing.assert_allclose(A.adjoint().entries, np.asarray(A.entries).conj().T)


def test_exponential_scalar_and_zero_time():
    A = GeneratorMatrix.from_array([[-1.0]])
    assert matrix_exponential(A, 1.0)[0, 0] == pytest.approx(np.exp(-1.0), abs=1e-14)
    np.testing.assert_allclose(matrix_exponential(build_family("dirichlet", 5, 0), 0.0), np.eye(5), atol=1e-14)


def test_exponential_of_jordan_block_uses_closed_form():
    A = GeneratorMatrix.from_array(JORDAN)
    t = 0.7
    expected = np.exp(-t) * np.array([[1.0, t], [0.0, 1.0]])
    np.testing.assert_allclose(matrix_exponential(A, t), expected, atol=1e-12)


def test_exponential_rejects_negative_time():
    with pytest.raises(InvalidInputError):
        matrix_exponential(GeneratorMatrix.from_array([[-1.0]]), -0.5)


@pytest.mark.parametrize("family,n", [("geometric", 4), ("random_stable", 5), ("jordan", 3), ("jordan_perturbed", 6)])
def test_sqrt_minus_A_squares_back(family, n):
    A = build_family(family, n, seed=11)
    root = sqrt_minus_A(A)
    np.testing.assert_allclose(root @ root, -np.asarray(A.entries), atol=1e-9)
    assert np.all(np.linalg.eigvals(root).real > 0)


def test_resolvent_matches_inverse():
    A = build_family("random_stable", 4, seed=2)
    r = 0.5 + 0.25j
    np.testing.assert_allclose(resolvent(A, r), np.linalg.inv(np.asarray(A.entries) - r * np.eye(4)), atol=1e-12)


def test_scalar_gramian_is_one_half():
    gram = lyapunov_gram(GeneratorMatrix.from_array([[-1.0]]), [[1.0]])
    assert gram.entries[0, 0].real == pytest.approx(0.5, abs=1e-14)
    assert gram.lambda_max == pytest.approx(0.5)
    assert gram.residual < 1e-12


def test_zero_observation_gives_zero_gramian():
    gram = lyapunov_gram(build_family("geometric", 3, 0), np.zeros((1, 3)))
    assert gram.method == "trivial"
    assert gram.lambda_max == 0.0


def test_gramian_routes_agree_on_non_diagonalizable_generator():
    A = GeneratorMatrix.from_array(JORDAN)
    gram = lyapunov_gram(A, [[1.0, 0.0]])
    assert gram.method == "kronecker"
    M = np.asarray(A.entries)
    Q = np.array([[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(M.T @ gram.entries + gram.entries @ M, -Q, atol=1e-12)


def test_gramian_matches_time_integral():
    A = build_family("jordan_perturbed", 3, 0)
    C = np.array([[1.0, -1.0, 2.0]])
    gram = lyapunov_gram(A, C)
    t = np.linspace(0, 40, 40001)
    orbit = propagate(A, np.eye(3), t[1] - t[0], t.size)
    integrand = np.einsum("kji,jl,klm->kim", orbit.conj(), C.conj().T @ C, orbit)
    integral = scipy.integrate.trapezoid(integrand, t, axis=0)
    np.testing.assert_allclose(gram.entries, integral, atol=1e-6)


def test_propagate_matches_exponential_both_routes():
    for A in (build_family("random_stable", 4, 5), GeneratorMatrix.from_array(JORDAN)):
        orbit = propagate(A, np.eye(A.dim), 0.1, 12)
        np.testing.assert_allclose(orbit[11], matrix_exponential(A, 1.1), atol=1e-10)


def test_operator_norm_is_largest_singular_value():
    M = np.array([[3.0, 0.0], [4.0, 0.0]])
    assert operator_norm(M) == pytest.approx(5.0)
    assert operator_norm(np.zeros((2, 2))) == 0.0


def test_spectral_data():
    A = build_family("geometric", 4, 0)
    assert spectral_abscissa(A) == pytest.approx(-1.0)
    dec = spectral_decompose(A)
    assert dec.hermitian and dec.well_conditioned
    assert not GeneratorMatrix.from_array(JORDAN).decomposition.diagonalizable


def test_generator_json_round_trip(tmp_path):
    A = build_family("random_stable", 3, seed=9)
    path = save_generator(A, tmp_path / "gen.json")
    loaded = load_generator(path)
    np.testing.assert_allclose(loaded.entries, A.entries)
    assert loaded.label == "gen"


@pytest.mark.parametrize(
    "content",
    ["{not json", json.dumps({"dim": 2, "entries": [[1, 0]]}), json.dumps({"dim": 1, "entries": [[1.0, 0.0]]})],
)
def test_bad_generator_files_are_invalid_input(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(InvalidInputError):
        load_generator(path)
