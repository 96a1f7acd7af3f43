"""
Builtin generator families.

All families are nested in n and keep their spectra inside [-16, -1], so a
uniform grid with the default sample count resolves every member.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.core.admissibility import ObservationMatrix, load_observation
from src.core.config import project_path, settings
from src.core.errors import InvalidInputError
from src.core.linops import GeneratorMatrix, load_generator, spectral_abscissa, sqrt_minus_A
from src.library.registry import Registry
from src.utils.system_logger import log_function

logger = logging.getLogger("hinf.library")

SPECTRUM_SPAN = 16.0


def _check_size(n: int) -> int:
    if int(n) != n or n < 1:
        raise InvalidInputError(f"family size must be a positive integer, got {n}")
    return int(n)


def geometric_spectrum(n: int) -> np.ndarray:
    """lambda_k = -2^{k*min(1, 4/(n-1))}, k = 0..n-1."""
    n = _check_size(n)
    if n == 1:
        return np.array([-1.0])
    step = min(1.0, np.log2(SPECTRUM_SPAN) / (n - 1))
    return -(2.0 ** (step * np.arange(n)))


def scalar_family(n: int, seed: int) -> np.ndarray:
    return -np.eye(_check_size(n))


def geometric_family(n: int, seed: int) -> np.ndarray:
    return np.diag(geometric_spectrum(n))


def dirichlet_family(n: int, seed: int) -> np.ndarray:
    """-I - (15/4) tridiag(-1, 2, -1); self-adjoint with spectrum in (-16, -1)."""
    n = _check_size(n)
    laplacian = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return -np.eye(n) - (SPECTRUM_SPAN - 1) / 4 * laplacian


def jordan_perturbed_family(n: int, seed: int) -> np.ndarray:
    spectrum = geometric_spectrum(n)
    A = np.diag(spectrum)
    if n > 1:
        A += np.diag(0.5 * np.abs(np.diff(spectrum)), k=1)
    return A


def random_stable_family(n: int, seed: int) -> np.ndarray:
    """Seeded Gaussian G/sqrt(n), shifted so the spectral abscissa is -1."""
    n = _check_size(n)
    rng = np.random.default_rng([seed, n])
    G = rng.standard_normal((n, n)) / np.sqrt(n)
    return G - (spectral_abscissa(G) + 1.0) * np.eye(n)


def jordan_family(n: int, seed: int) -> np.ndarray:
    n = _check_size(n)
    return -np.eye(n) + np.eye(n, k=1)


def _generator(builder, name: str):
    def construct(n: int, seed: int) -> GeneratorMatrix:
        return GeneratorMatrix.from_array(builder(n, seed), label=f"{name}:{n}")
    return construct


FAMILIES: Registry[GeneratorMatrix] = Registry("generator family")
FAMILIES.register("scalar", _generator(scalar_family, "scalar"), "-I", normal=True)
FAMILIES.register("geometric", _generator(geometric_family, "geometric"), "diagonal, geometric spectrum", normal=True)
FAMILIES.register("dirichlet", _generator(dirichlet_family, "dirichlet"), "scaled Dirichlet Laplacian", normal=True)
FAMILIES.register("jordan_perturbed", _generator(jordan_perturbed_family, "jordan_perturbed"),
                  "geometric diagonal plus superdiagonal coupling", normal=False)
FAMILIES.register("random_stable", _generator(random_stable_family, "random_stable"),
                  "shifted Gaussian matrix", normal=False)
FAMILIES.register("jordan", _generator(jordan_family, "jordan"), "-I plus nilpotent shift", normal=False)

REFERENCE_FAMILIES = ("geometric", "dirichlet", "jordan_perturbed", "random_stable")
SELF_ADJOINT_FAMILIES = tuple(key for key, meta in FAMILIES.list().items() if meta["normal"])


def build_family(name: str, n: int, seed: Optional[int] = None) -> GeneratorMatrix:
    return FAMILIES.get(name, _check_size(n), settings.seed if seed is None else int(seed))


def _parse_complex_list(text: str) -> List[complex]:
    try:
        return [complex(token.strip().replace("i", "j")) for token in text.split(",") if token.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"cannot read diagonal entries '{text}'") from exc


@log_function("DEBUG", "RESOLVE_GENERATOR_OK")
def resolve_generator(spec: str, seed: Optional[int] = None) -> GeneratorMatrix:
    """``diag:v1,v2,...`` | ``<family>:<n>`` | builtin name | JSON file path."""
    spec = spec.strip()
    head, sep, tail = spec.partition(":")
    if sep and head == "diag":
        values = _parse_complex_list(tail)
        if not values:
            raise InvalidInputError("diag: needs at least one entry")
        return GeneratorMatrix.from_array(np.diag(values), label=spec)
    if sep and head in FAMILIES:
        try:
            n = int(tail)
        except ValueError as exc:
            raise InvalidInputError(f"family size '{tail}' is not an integer") from exc
        return build_family(head, n, seed)
    builtin = project_path(settings.builtin_data_dir) / f"{spec}.json"
    if builtin.is_file():
        return load_generator(builtin)
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return load_generator(path)
    raise InvalidInputError(f"cannot resolve generator '{spec}' (families: {', '.join(FAMILIES.keys())}; "
                            "or diag:v1,v2, a builtin name, a JSON path)")


def resolve_observation(spec: Optional[str], A: GeneratorMatrix) -> ObservationMatrix:
    """``row:c1,...`` | ``eye`` | ``sqrt`` ((-A)^{1/2}) | JSON file path; default is the all-ones row."""
    if spec is None or spec.strip() == "":
        return ObservationMatrix.from_array(np.ones(A.dim), A.dim, label="ones")
    spec = spec.strip()
    head, sep, tail = spec.partition(":")
    if sep and head == "row":
        return ObservationMatrix.from_array(_parse_complex_list(tail), A.dim, label=spec)
    if spec == "eye":
        return ObservationMatrix.from_array(np.eye(A.dim), A.dim, label="eye")
    if spec == "sqrt":
        return ObservationMatrix.from_array(sqrt_minus_A(A), A.dim, label="(-A)^1/2")
    observation = load_observation(spec)
    if observation.cols != A.dim:
        raise InvalidInputError(f"observation has {observation.cols} columns, generator dimension is {A.dim}")
    return observation


__all__ = [
    "FAMILIES",
    "REFERENCE_FAMILIES",
    "SELF_ADJOINT_FAMILIES",
    "build_family",
    "geometric_spectrum",
    "resolve_generator",
    "resolve_observation",
]
