"""
Norm sweeps over (generator, function, eps).

For each generator/function pair g(A) is built once, together with the
square-root Gramians and the analyticity constants; every eps row then only
costs matrix exponentials. Pairs run in a thread pool and rows are merged
in task order, so a fixed config produces the same CSV on every run.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.special

from src.core.calculus import SquareRootGramians, compute_gA, fit_analyticity_constants
from src.core.config import settings
from src.core.linops import GeneratorMatrix, matrix_exponential, operator_norm
from src.core.signals import TimeGrid
from src.funcspec import FuncExpr, sup_norm
from src.library.families import build_family, resolve_generator
from src.library.functions import resolve_function
from src.schemas.experiment import ExperimentConfig, SweepRecord
from src.utils.system_logger import log_metric_function

logger = logging.getLogger("hinf.sweep")


@dataclass(frozen=True)
class SweepCase:
    family: str
    A: GeneratorMatrix
    g_id: str
    g: FuncExpr


@dataclass(frozen=True)
class SweepOutcome:
    records: Tuple[SweepRecord, ...]
    violations: Tuple[SweepRecord, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _ratio(value: float, scale: float) -> float:
    if scale > 0:
        return value / scale
    return 0.0 if value == 0 else float("inf")


def sweep_generators(config: ExperimentConfig) -> List[Tuple[str, GeneratorMatrix]]:
    """(family label, A) for every explicit generator and every family size."""
    generators = [(spec, resolve_generator(spec, config.seed)) for spec in config.generators]
    if config.family:
        generators += [(config.family, build_family(config.family, n, config.seed)) for n in config.sizes]
    return generators


def sweep_cases(config: ExperimentConfig) -> List[SweepCase]:
    functions = [resolve_function(spec, config.seed) for spec in config.functions]
    return [SweepCase(label, A, g_id, g) for label, A in sweep_generators(config) for g_id, g in functions]


def sweep_case(case: SweepCase, eps_grid: Sequence[float], method: str = "toeplitz",
               n_samples: Optional[int] = None, horizon: Optional[float] = None) -> List[SweepRecord]:
    """All eps rows for one (A, g) pair."""
    A, g = case.A, case.g
    if not eps_grid:
        return []
    grid = TimeGrid.for_generator(A, g, n_samples=n_samples, horizon=horizon) if method == "toeplitz" else None
    gA = compute_gA(A, g, method, grid, workers=1).gA
    sup = sup_norm(g).value
    gramians = SquareRootGramians(A)
    constants = fit_analyticity_constants(A)
    constants_star = fit_analyticity_constants(A.adjoint())
    analytic_scale = 2 * constants.M * constants_star.M

    records = []
    for eps in eps_grid:
        E = matrix_exponential(A, eps)
        norm = operator_norm(gA @ E)
        norm_2eps = operator_norm(gA @ E @ E)
        kappa, kappa_star = gramians.kappa_pair(eps)
        log_eps = abs(np.log(eps))
        records.append(SweepRecord(
            family=case.family,
            n=A.dim,
            g_id=case.g_id,
            eps=float(eps),
            norm=norm,
            sup_norm=sup,
            log_ratio=_ratio(norm, sup * (1 + log_eps)),
            sqrtlog_ratio=_ratio(norm, sup * (1 + np.sqrt(log_eps))),
            certificate=2 * kappa * kappa_star,
            kappa=kappa,
            kappa_star=kappa_star,
            norm_2eps=norm_2eps,
            analytic_bound=float(analytic_scale * scipy.special.exp1(2 * constants.omega * eps)),
        ))
    return records


@log_metric_function("RUN_SWEEP_OK")
def run_sweep(config: ExperimentConfig) -> SweepOutcome:
    """Full factorial sweep with the per-row certificate check."""
    cases = sweep_cases(config)
    method = config.calculus_method()
    eps_grid = list(config.eps)

    def task(case: SweepCase) -> List[SweepRecord]:
        return sweep_case(case, eps_grid, method, config.n_samples, config.horizon)

    pool_size = max(1, min(config.workers or settings.workers, len(cases) or 1))
    if pool_size == 1:
        batches = [task(case) for case in cases]
    else:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            batches = list(pool.map(task, cases))

    records = tuple(r for batch in batches for r in batch)
    violations = tuple(r for r in records if not r.certificate_holds())
    for r in violations:
        logger.error("certificate breach: %s n=%d g=%s eps=%.3e norm_2eps=%.6g bound=%.6g",
                     r.family, r.n, r.g_id, r.eps, r.norm_2eps, r.sup_norm * r.certificate)
    return SweepOutcome(records, violations)


__all__ = ["SweepCase", "SweepOutcome", "run_sweep", "sweep_case", "sweep_cases", "sweep_generators"]
