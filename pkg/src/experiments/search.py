"""
Worst-case search for the log ratio ||g(A)e^{A eps}|| / (||g||_inf (1 + |log eps|)).

Candidates are Blaschke products with up to 32 factors. A seeded random phase
draws factor counts and zeros; a local phase then perturbs the zeros of the
best candidate and keeps improvements.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.core.calculus import compute_gA
from src.core.config import settings
from src.core.errors import InvalidInputError
from src.core.linops import GeneratorMatrix, as_generator, matrix_exponential, operator_norm
from src.funcspec import parse, sup_norm
from src.library.functions import MAX_BLASCHKE_FACTORS, blaschke_source, random_blaschke_zero
from src.utils.system_logger import log_metric_function

logger = logging.getLogger("hinf.search")

# zeros are kept this far inside the left half-plane
_MIN_ZERO_DEPTH = 1e-3


@dataclass(frozen=True)
class SearchStep:
    trial: int
    phase: str
    ratio: float
    best_ratio: float
    source: str


@dataclass(frozen=True)
class SearchReport:
    generator: str
    eps: float
    seed: int
    best_source: str
    best_ratio: float
    trajectory: Tuple[SearchStep, ...]

    def to_dict(self) -> dict:
        return {
            "generator": self.generator,
            "eps": self.eps,
            "seed": self.seed,
            "best_source": self.best_source,
            "best_ratio": self.best_ratio,
            "trajectory": [step.__dict__ for step in self.trajectory],
        }


def log_ratio(A: GeneratorMatrix, source: str, eps: float, method: str = "substitution") -> float:
    g = parse(source)
    sup = sup_norm(g).value
    if sup == 0:
        return 0.0
    gA = compute_gA(A, g, method, workers=1).gA
    return operator_norm(gA @ matrix_exponential(A, eps)) / (sup * (1 + abs(np.log(eps))))


def _perturb(zeros: List[complex], rng: np.random.Generator, scale: float) -> List[complex]:
    moved = []
    for z in zeros:
        step = complex(rng.normal(0, scale * max(1.0, abs(z.real))), rng.normal(0, scale * max(1.0, abs(z.imag))))
        w = z + step
        moved.append(complex(min(w.real, -_MIN_ZERO_DEPTH), w.imag))
    return moved


@log_metric_function("WORST_CASE_SEARCH_OK")
def run_search(A: GeneratorMatrix, eps: float, trials: int = 64, kmax: int = 8,
               seed: Optional[int] = None, method: str = "substitution") -> SearchReport:
    A = as_generator(A)
    if not 0 < eps <= settings.eps_cap:
        raise InvalidInputError(f"eps {eps} outside (0, {settings.eps_cap}]")
    if not 0 <= kmax <= MAX_BLASCHKE_FACTORS:
        raise InvalidInputError(f"kmax must lie in [0, {MAX_BLASCHKE_FACTORS}], got {kmax}")
    if trials < 1:
        raise InvalidInputError("search needs at least one trial")
    seed = settings.seed if seed is None else int(seed)
    rng = np.random.default_rng(seed)

    best_zeros: List[complex] = []
    best_source = "1"
    best = log_ratio(A, best_source, eps, method)
    steps = [SearchStep(0, "constant", best, best, best_source)]

    random_trials = max(1, (3 * trials) // 4) if kmax > 0 else 0
    for trial in range(1, random_trials + 1):
        zeros = [random_blaschke_zero(rng) for _ in range(int(rng.integers(1, kmax + 1)))]
        source = blaschke_source(zeros)
        ratio = log_ratio(A, source, eps, method)
        if ratio > best:
            best, best_source, best_zeros = ratio, source, zeros
        steps.append(SearchStep(trial, "random", ratio, best, source))

    scale = 0.25
    for trial in range(random_trials + 1, trials + 1 if best_zeros else random_trials + 1):
        zeros = _perturb(best_zeros, rng, scale)
        source = blaschke_source(zeros)
        ratio = log_ratio(A, source, eps, method)
        if ratio > best:
            best, best_source, best_zeros = ratio, source, zeros
        else:
            scale = max(scale * 0.7, 1e-3)
        steps.append(SearchStep(trial, "local", ratio, best, source))

    logger.info("search on %s at eps=%.3e: best ratio %.6g from %s", A.label, eps, best, best_source)
    return SearchReport(A.label, float(eps), seed, best_source, float(best), tuple(steps))


__all__ = ["SearchReport", "SearchStep", "log_ratio", "run_search"]
