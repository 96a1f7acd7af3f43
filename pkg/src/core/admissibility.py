"""
Admissibility constants of observation operators.

At finite dimension every C is admissible; what is measured here is the
constant kappa = sup_{|x|=1} ||C e^{A.} x||_{L2}, computed exactly from the
observability Gramian or estimated by time quadrature, and its growth along
nested generator families.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from src.core.calculus import CalculusResult, construct_gA, extraction_indices, semigroup_trajectory
from src.core.config import settings
from src.core.errors import InvalidInputError
from src.core.linops import (
    GeneratorMatrix,
    as_generator,
    as_observation_block,
    lyapunov_gram,
    matrix_exponential,
    operator_norm,
    sqrt_minus_A,
)
from src.core.signals import TimeGrid, boundary_multiplier, l2_norm, toeplitz_apply
from src.funcspec import FuncExpr
from src.schemas.payloads import ObservationPayload
from src.utils.system_logger import log_function, log_metric_function

logger = logging.getLogger("hinf.admissibility")


@dataclass(frozen=True)
class ObservationMatrix:
    entries: np.ndarray
    label: str = "C"

    @classmethod
    def from_array(cls, values, n: Optional[int] = None, label: str = "C") -> "ObservationMatrix":
        arr = np.array(values, dtype=np.complex128)
        if arr.ndim <= 1:
            arr = arr.reshape(1, -1)
        block = as_observation_block(arr, n if n is not None else arr.shape[1])
        block.setflags(write=False)
        return cls(block, label)

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    def scaled(self, alpha: complex) -> "ObservationMatrix":
        return ObservationMatrix.from_array(alpha * np.asarray(self.entries), label=f"{alpha}*{self.label}")


def load_observation(path: Union[str, Path]) -> ObservationMatrix:
    path = Path(path)
    try:
        payload = ObservationPayload.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise InvalidInputError(f"cannot load observation file {path}: {exc}") from exc
    return ObservationMatrix.from_array(payload.to_array(), label=path.stem)


def _as_observation(C, n: int) -> ObservationMatrix:
    if isinstance(C, ObservationMatrix):
        if C.cols != n:
            raise InvalidInputError(f"observation has {C.cols} columns, generator dimension is {n}")
        return C
    return ObservationMatrix.from_array(C, n)


@dataclass(frozen=True)
class AdmissibilityReport:
    kappa: float
    method: str
    generator_id: str
    observation_id: str
    lower_bound: bool = False
    horizon_warning: bool = False


@log_function("DEBUG", "ADMISSIBILITY_GRAMIAN_OK")
def admissibility_gramian(A: GeneratorMatrix, C) -> AdmissibilityReport:
    """kappa = sqrt(lambda_max(X)) with A*X + XA = -C*C."""
    A = as_generator(A)
    C = _as_observation(C, A.dim)
    gramian = lyapunov_gram(A, C.entries)
    kappa = float(np.sqrt(max(gramian.lambda_max, 0.0)))
    return AdmissibilityReport(kappa, "gramian", A.label, C.label)


def discrete_gramian(A: GeneratorMatrix, C: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Trapezoid Gramian dt * sum' Phi^{k*} C*C Phi^k over the grid, accumulated by doubling."""
    Q = C.conj().T @ C
    step = matrix_exponential(A, grid.dt)
    total, power, covered = Q.copy(), step, 1
    while covered < grid.n_samples:
        total = total + power.conj().T @ total @ power
        power = power @ power
        covered *= 2
    W = grid.dt * (total - 0.5 * Q)
    return 0.5 * (W + W.conj().T)


@log_function("DEBUG", "ADMISSIBILITY_QUADRATURE_OK")
def admissibility_quadrature(A: GeneratorMatrix, C, grid: Optional[TimeGrid] = None,
                             seed: Optional[int] = None) -> AdmissibilityReport:
    """Largest trapezoid L2 norm of C e^{At}x over probes, refined by power iteration."""
    A = as_generator(A)
    C = _as_observation(C, A.dim)
    grid = grid or TimeGrid.for_generator(A)
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    n = A.dim

    probes: List[np.ndarray] = list(np.eye(n, dtype=np.complex128))
    for _ in range(settings.quadrature_random_probes):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        probes.append(v / np.linalg.norm(v))

    best, best_probe, warning = 0.0, probes[0], False
    for x in probes:
        trajectory = semigroup_trajectory(A, x, grid)
        warning = warning or trajectory.horizon_warning
        value = l2_norm(trajectory.project(C.entries), rule="trapezoid")
        if value > best:
            best, best_probe = value, x

    W = discrete_gramian(A, np.asarray(C.entries), grid)
    v = best_probe
    rayleigh = best ** 2
    for _ in range(settings.power_iterations):
        w = W @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        v = w / norm
        rayleigh = max(rayleigh, float(np.real(np.vdot(v, W @ v))))
    if warning:
        logger.warning("quadrature admissibility for %s ran on an undecayed horizon", A.label)
    return AdmissibilityReport(float(np.sqrt(max(rayleigh, 0.0))), "quadrature", A.label, C.label,
                               lower_bound=True, horizon_warning=warning)


@dataclass(frozen=True)
class IntertwiningReport:
    deviation: float
    output_admissibility: AdmissibilityReport
    probes: int
    sample_times: Tuple[float, ...]

    def passed(self, tolerance: float = 1e-2) -> bool:
        return self.deviation <= tolerance and np.isfinite(self.output_admissibility.kappa)


@log_metric_function("CHECK_INTERTWINING_OK")
def check_thm26(A: GeneratorMatrix, C, g: FuncExpr, grid: Optional[TimeGrid] = None,
                calculus: Optional[CalculusResult] = None, seed: Optional[int] = None) -> IntertwiningReport:
    """Compare M_g(C e^{A.}x0)(t) with C g(A) e^{At} x0 and report the admissibility constant of C g(A)."""
    A = as_generator(A)
    C = _as_observation(C, A.dim)
    grid = grid or (calculus.grid if calculus is not None and calculus.grid is not None else TimeGrid.for_generator(A, g))
    result = calculus or construct_gA(A, g, grid)
    gA = result.gA
    n = A.dim

    rng = np.random.default_rng(settings.seed if seed is None else seed)
    probes = [np.eye(n, dtype=np.complex128)[j] for j in sorted({0, n // 2, n - 1})]
    for _ in range(2):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        probes.append(v / np.linalg.norm(v))

    indices = np.unique(np.concatenate([
        extraction_indices(A, grid),
        np.round(np.linspace(settings.extraction_min_index, grid.n_samples // 8, 8)).astype(int),
    ]))
    multiplier = boundary_multiplier(g, grid)
    CgA = np.asarray(C.entries) @ gA
    error, reference_scale, state_scale = 0.0, 0.0, 0.0
    for x in probes:
        trajectory = semigroup_trajectory(A, x, grid)
        output = toeplitz_apply(g, trajectory.project(C.entries), multiplier=multiplier)
        states = trajectory.values[indices]
        reference = states @ CgA.T
        error = max(error, float(np.max(np.linalg.norm(output.values[indices] - reference, axis=1))))
        reference_scale = max(reference_scale, float(np.max(np.linalg.norm(reference, axis=1))))
        state_scale = max(state_scale, float(np.max(np.linalg.norm(states, axis=1))))
    # one scale over every probe and time; late samples have decayed
    scale = max(reference_scale, operator_norm(C.entries) * operator_norm(gA) * state_scale)
    deviation = error / scale if scale > 0 else error

    output_report = admissibility_gramian(A, ObservationMatrix.from_array(CgA, n, label=f"{C.label}*g(A)"))
    return IntertwiningReport(deviation, output_report, len(probes), tuple(float(t) for t in indices * grid.dt))


@log_function("DEBUG", "SQRT_PROFILE_OK")
def sqrt_admissibility_profile(A: GeneratorMatrix, method: str = "gramian",
                               grid: Optional[TimeGrid] = None) -> Tuple[AdmissibilityReport, AdmissibilityReport]:
    """(kappa of (-A)^{1/2} under A, kappa* of (-A*)^{1/2} under A*)."""
    A = as_generator(A)
    adjoint = A.adjoint()
    root = ObservationMatrix.from_array(sqrt_minus_A(A), label="(-A)^1/2")
    root_star = ObservationMatrix.from_array(sqrt_minus_A(adjoint), label="(-A*)^1/2")
    if method == "gramian":
        return admissibility_gramian(A, root), admissibility_gramian(adjoint, root_star)
    if method == "quadrature":
        return admissibility_quadrature(A, root, grid), admissibility_quadrature(adjoint, root_star, grid)
    raise InvalidInputError(f"unknown admissibility method '{method}'")


def classify_growth(profile: Mapping[int, Tuple[float, float]], tolerance: float = 0.05) -> str:
    """Which clause a nested family exhibits: 'bounded', 'sqrt_log' or 'log'.

    A constant counts as bounded when it grows by less than ``tolerance`` between
    the two largest sizes in the profile.
    """
    sizes = sorted(profile)
    if len(sizes) < 2:
        raise InvalidInputError("growth classification needs at least two family sizes")
    (k_prev, ks_prev), (k_last, ks_last) = profile[sizes[-2]], profile[sizes[-1]]
    bounded = [k_last <= (1 + tolerance) * k_prev, ks_last <= (1 + tolerance) * ks_prev]
    if all(bounded):
        return "bounded"
    return "sqrt_log" if any(bounded) else "log"


def admissibility_profile_rows(family: str, builder: Callable[[int], GeneratorMatrix], sizes: Sequence[int],
                               method: str = "gramian") -> List[Dict[str, object]]:
    """CSV rows ``family, n, kappa, kappa_star, method`` along a nested family."""
    rows: List[Dict[str, object]] = []
    previous: Optional[float] = None
    for n in sizes:
        A = builder(n)
        kappa, kappa_star = sqrt_admissibility_profile(A, method)
        rows.append({"family": family, "n": n, "kappa": kappa.kappa,
                     "kappa_star": kappa_star.kappa, "method": method})
        if previous is not None and kappa.kappa < previous:
            logger.info("kappa for %s decreased from %.6g to %.6g at n=%d", family, previous, kappa.kappa, n)
        previous = kappa.kappa
    return rows


__all__ = [
    "AdmissibilityReport",
    "IntertwiningReport",
    "ObservationMatrix",
    "admissibility_gramian",
    "admissibility_profile_rows",
    "admissibility_quadrature",
    "check_thm26",
    "classify_growth",
    "discrete_gramian",
    "load_observation",
    "sqrt_admissibility_profile",
]
