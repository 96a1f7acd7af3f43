"""
Dense complex linear algebra kernels.

Matrix exponentials, principal square roots of -A, resolvents, Lyapunov
Gramians, operator norms and spectral data for small stable generators.
Every routine picks an eigenvector route when the eigenbasis is well
conditioned and falls back to scipy otherwise.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.linalg
from pydantic import ValidationError

from src.core.config import settings
from src.core.errors import (
    BranchError,
    ConditioningError,
    InvalidInputError,
    SingularityError,
    StabilityError,
)
from src.schemas.payloads import MatrixPayload
from src.utils.system_logger import log_function

logger = logging.getLogger("hinf.linops")

ArrayLike = Union[np.ndarray, list, tuple, complex, float]


def _as_complex_matrix(values: ArrayLike, name: str = "matrix") -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def is_hermitian(M: np.ndarray, tol: float = 1e-12) -> bool:
    if M.shape[0] != M.shape[1]:
        return False
    scale = max(float(np.max(np.abs(M))), 1.0)
    return bool(np.max(np.abs(M - M.conj().T)) <= tol * scale)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    inverse_vectors: np.ndarray
    condition: float
    hermitian: bool = False

    @property
    def diagonalizable(self) -> bool:
        return self.condition <= settings.non_diagonalizable_condition

    @property
    def well_conditioned(self) -> bool:
        return self.condition <= settings.eigen_condition_limit

    def apply(self, values: np.ndarray) -> np.ndarray:
        """V diag(values) V^-1."""
        return (self.right_vectors * values[np.newaxis, :]) @ self.inverse_vectors


def _decompose(M: np.ndarray) -> SpectralDecomposition:
    if is_hermitian(M):
        w, V = np.linalg.eigh(M)
        return SpectralDecomposition(w.astype(np.complex128), V, V.conj().T, 1.0, hermitian=True)
    w, V = np.linalg.eig(M)
    try:
        Vinv = np.linalg.inv(V)
        condition = float(np.linalg.norm(V, 2) * np.linalg.norm(Vinv, 2))
    except np.linalg.LinAlgError:
        Vinv = np.full_like(V, np.nan)
        condition = float("inf")
    if not np.isfinite(condition):
        condition = float("inf")
    return SpectralDecomposition(w, V, Vinv, max(condition, 1.0))


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Exponentially stable generator A (dense, complex).

    Construct through :meth:`from_array`, which enforces finiteness and the
    stability gate. The spectral decomposition is cached on first use.
    """

    entries: np.ndarray
    spectral_abscissa: float
    label: str = "A"

    @classmethod
    def from_array(cls, values: ArrayLike, label: str = "A") -> "GeneratorMatrix":
        arr = _as_complex_matrix(values, "generator")
        if arr.shape[0] != arr.shape[1]:
            raise InvalidInputError(f"generator must be square, got shape {arr.shape}")
        abscissa = spectral_abscissa(arr)
        if abscissa >= -settings.stability_margin:
            raise StabilityError(abscissa, settings.stability_margin)
        arr = arr.copy()
        arr.setflags(write=False)
        return cls(arr, abscissa, label)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @cached_property
    def decomposition(self) -> SpectralDecomposition:
        return _decompose(np.asarray(self.entries))

    @property
    def decay_rate(self) -> float:
        """Fastest modal decay rate, max |Re lambda|."""
        return float(np.max(-self.decomposition.eigenvalues.real))

    def adjoint(self) -> "GeneratorMatrix":
        return GeneratorMatrix.from_array(self.entries.conj().T, label=f"{self.label}*")

    def to_payload(self) -> MatrixPayload:
        return MatrixPayload.from_array(self.entries)


def as_generator(A: Union[GeneratorMatrix, ArrayLike]) -> GeneratorMatrix:
    return A if isinstance(A, GeneratorMatrix) else GeneratorMatrix.from_array(A)


@log_function("DEBUG", "LOAD_GENERATOR_OK")
def load_generator(path: Union[str, Path], label: Optional[str] = None) -> GeneratorMatrix:
    """Read a generator JSON file and validate it."""
    path = Path(path)
    try:
        payload = MatrixPayload.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise InvalidInputError(f"cannot load generator file {path}: {exc}") from exc
    return GeneratorMatrix.from_array(payload.to_array(), label=label or path.stem)


def save_generator(A: GeneratorMatrix, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(A.to_payload().model_dump_json(indent=2), encoding="utf-8")
    return path


def spectral_abscissa(A: Union[GeneratorMatrix, ArrayLike]) -> float:
    if isinstance(A, GeneratorMatrix):
        return A.spectral_abscissa
    M = _as_complex_matrix(A)
    return float(np.max(np.linalg.eigvals(M).real))


@log_function("DEBUG", "SPECTRAL_DECOMPOSE_OK")
def spectral_decompose(A: Union[GeneratorMatrix, ArrayLike]) -> SpectralDecomposition:
    if isinstance(A, GeneratorMatrix):
        return A.decomposition
    return _decompose(_as_complex_matrix(A))


@log_function("DEBUG", "MATRIX_EXPONENTIAL_OK")
def matrix_exponential(A: Union[GeneratorMatrix, ArrayLike], t: float) -> np.ndarray:
    """e^{At} for t >= 0."""
    A = as_generator(A)
    if not np.isfinite(t) or t < 0:
        raise InvalidInputError(f"time must be finite and nonnegative, got {t}")
    if t == 0:
        return np.eye(A.dim, dtype=np.complex128)
    dec = A.decomposition
    if dec.well_conditioned:
        return dec.apply(np.exp(dec.eigenvalues * t))
    return scipy.linalg.expm(np.asarray(A.entries) * t)


def propagate(A: GeneratorMatrix, X0: np.ndarray, dt: float, count: int) -> np.ndarray:
    """Orbit e^{A k dt} X0 for k = 0..count-1, shape (count, *X0.shape)."""
    X0 = np.asarray(X0, dtype=np.complex128)
    squeeze = X0.ndim == 1
    block = X0.reshape(A.dim, -1)
    dec = A.decomposition
    if dec.well_conditioned:
        coeffs = dec.inverse_vectors @ block
        phases = np.exp(np.outer(np.arange(count) * dt, dec.eigenvalues))
        orbit = np.einsum("ij,kj,jm->kim", dec.right_vectors, phases, coeffs, optimize=True)
    else:
        step = scipy.linalg.expm(np.asarray(A.entries) * dt)
        orbit = np.empty((count,) + block.shape, dtype=np.complex128)
        current = block
        for k in range(count):
            orbit[k] = current
            current = step @ current
    return orbit[:, :, 0] if squeeze else orbit.reshape((count,) + X0.shape)


@log_function("DEBUG", "SQRT_MINUS_A_OK")
def sqrt_minus_A(A: Union[GeneratorMatrix, ArrayLike]) -> np.ndarray:
    """Principal square root of -A (all eigenvalues with positive real part)."""
    A = as_generator(A)
    dec = A.decomposition
    mu = -dec.eigenvalues
    scale = max(float(np.max(np.abs(mu))), 1.0)
    on_cut = (mu.real <= 0) & (np.abs(mu.imag) <= 1e-14 * scale)
    if np.any(on_cut):
        raise BranchError(f"-A has eigenvalues on the closed negative real axis: {mu[on_cut]}")
    if dec.well_conditioned:
        return dec.apply(np.sqrt(mu))
    root = scipy.linalg.sqrtm(-np.asarray(A.entries))
    return np.asarray(root, dtype=np.complex128)


@log_function("DEBUG", "RESOLVENT_OK")
def resolvent(A: Union[GeneratorMatrix, ArrayLike], r: complex) -> np.ndarray:
    """(A - rI)^{-1}."""
    A = as_generator(A)
    if not np.isfinite(r):
        raise InvalidInputError(f"resolvent point must be finite, got {r}")
    shifted = np.asarray(A.entries) - r * np.eye(A.dim)
    if np.linalg.cond(shifted) > 1e14:
        raise SingularityError(f"A - rI is numerically singular at r={r}")
    try:
        return np.linalg.solve(shifted, np.eye(A.dim, dtype=np.complex128))
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"A - rI is singular at r={r}") from exc


@dataclass(frozen=True)
class GramianMatrix:
    entries: np.ndarray
    residual: float
    method: str

    @property
    def lambda_max(self) -> float:
        return float(np.max(np.linalg.eigvalsh(self.entries)))

    def quadratic_form(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.complex128)
        return float(np.real(np.vdot(x, self.entries @ x)))


def as_observation_block(C: ArrayLike, n: int) -> np.ndarray:
    arr = np.array(C, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    arr = _as_complex_matrix(arr, "observation")
    if arr.shape[1] != n:
        raise InvalidInputError(f"observation has {arr.shape[1]} columns, generator dimension is {n}")
    return arr


@log_function("DEBUG", "LYAPUNOV_GRAM_OK")
def lyapunov_gram(A: Union[GeneratorMatrix, ArrayLike], C: ArrayLike) -> GramianMatrix:
    """Observability Gramian X solving A*X + XA = -C*C."""
    A = as_generator(A)
    n = A.dim
    C = as_observation_block(C, n)
    Q = C.conj().T @ C
    M = np.asarray(A.entries)
    dec = A.decomposition
    if not np.any(Q):
        return GramianMatrix(np.zeros((n, n), dtype=np.complex128), 0.0, "trivial")

    if dec.well_conditioned:
        lam = dec.eigenvalues
        denom = lam.conj()[:, np.newaxis] + lam[np.newaxis, :]
        if np.min(np.abs(denom)) < 1e-12:
            raise ConditioningError("eigenvalue sums lambda_j* + lambda_k are numerically degenerate")
        V, Vinv = dec.right_vectors, dec.inverse_vectors
        Y = -(V.conj().T @ Q @ V) / denom
        X = Vinv.conj().T @ Y @ Vinv
        method = "eigen"
    elif n <= settings.kronecker_max_dim:
        eye = np.eye(n)
        system = np.kron(eye, M.conj().T) + np.kron(M.T, eye)
        X = np.linalg.solve(system, -Q.reshape(-1, order="F")).reshape((n, n), order="F")
        method = "kronecker"
    else:
        X = scipy.linalg.solve_continuous_lyapunov(M.conj().T, -Q)
        method = "bartels-stewart"

    X = 0.5 * (X + X.conj().T)
    residual = float(np.linalg.norm(M.conj().T @ X + X @ M + Q) / max(np.linalg.norm(Q), 1e-300))
    if residual > 1e-8:
        logger.warning("Lyapunov residual %.2e above 1e-8 (method=%s, n=%d)", residual, method, n)
    return GramianMatrix(X, residual, method)


def operator_norm(M: ArrayLike) -> float:
    """Largest singular value."""
    arr = np.asarray(M, dtype=np.complex128)
    if arr.ndim == 0:
        return float(abs(arr))
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("operator_norm needs finite entries")
    if arr.size == 0:
        return 0.0
    return float(np.linalg.norm(arr if arr.ndim == 2 else arr.reshape(1, -1), 2))


__all__ = [
    "GeneratorMatrix",
    "GramianMatrix",
    "SpectralDecomposition",
    "as_generator",
    "as_observation_block",
    "is_hermitian",
    "load_generator",
    "lyapunov_gram",
    "matrix_exponential",
    "operator_norm",
    "propagate",
    "resolvent",
    "save_generator",
    "spectral_abscissa",
    "spectral_decompose",
    "sqrt_minus_A",
]
