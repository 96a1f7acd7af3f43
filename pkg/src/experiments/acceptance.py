"""
Acceptance suite behind ``cli.py verify``.

Each criterion is a function returning ``(passed, detail)``; the runner times
it and turns exceptions into failed outcomes. Invalid builtin data aborts the
suite with an invalid-input report before any criterion runs. Quick mode uses
N = 2^12 and three times the default tolerances.
"""
from __future__ import annotations

import logging
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.core.admissibility import (
    ObservationMatrix,
    admissibility_gramian,
    admissibility_quadrature,
    check_thm26,
    sqrt_admissibility_profile,
)
from src.core.calculus import (
    check_axioms,
    commutation_defect,
    construct_gA,
    fit_analyticity_constants,
    hille_phillips_gA,
    proof_certificate_eq6,
    relative_error,
    spectral_oracle_gA,
)
from src.core.config import project_path, settings
from src.core.errors import HinfCalcError, InvalidInputError
from src.core.linops import GeneratorMatrix, load_generator
from src.core.signals import TimeGrid, Trajectory, toeplitz_apply, transform_energy
from src.experiments.reporting import render_sweep_svg, write_sweep_csv
from src.experiments.sweep import run_sweep
from src.funcspec import FuncExpr, parse, sup_norm
from src.library.families import REFERENCE_FAMILIES, SELF_ADJOINT_FAMILIES, build_family
from src.library.functions import FUNCTIONS, KERNELS, blaschke_source, random_blaschke_zero
from src.schemas.experiment import ExperimentConfig
from src.utils.system_logger import EXIT_BREACH, EXIT_INVALID, EXIT_PASS, log_metric_function

logger = logging.getLogger("hinf.acceptance")

HALF_SQRT = 1 / np.sqrt(2)
ANALYTICITY_LIMIT = (2 * np.e) ** -0.5
REFERENCE_IDS = ("one", "cayley", "resolvent", "shift", "boxcar", "blaschke5")


@dataclass(frozen=True)
class AcceptanceContext:
    n_samples: int
    tolerance_scale: float
    seed: int
    quick: bool = False

    @classmethod
    def create(cls, quick: bool = False, seed: Optional[int] = None) -> "AcceptanceContext":
        return cls(
            n_samples=2**12 if quick else settings.n_samples,
            tolerance_scale=3.0 if quick else 1.0,
            seed=settings.seed if seed is None else int(seed),
            quick=quick,
        )

    def tol(self, value: float) -> float:
        return value * self.tolerance_scale

    def function(self, key: str) -> FuncExpr:
        return FUNCTIONS.get(key, self.seed)

    def family(self, name: str, n: int) -> GeneratorMatrix:
        return build_family(name, n, self.seed)

    def grid(self, A: GeneratorMatrix, g: Optional[FuncExpr] = None, n_samples: Optional[int] = None) -> TimeGrid:
        return TimeGrid.for_generator(A, g, n_samples=n_samples or self.n_samples)

    def eps_grid(self) -> List[float]:
        points = 6 if self.quick else settings.eps_points
        return [float(e) for e in np.logspace(np.log10(settings.eps_min), np.log10(settings.eps_max), points)]


@dataclass(frozen=True)
class CriterionOutcome:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class AcceptanceReport:
    outcomes: List[CriterionOutcome] = field(default_factory=list)
    invalid_input: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.invalid_input is None and all(o.passed for o in self.outcomes)

    @property
    def exit_code(self) -> int:
        if self.invalid_input is not None:
            return EXIT_INVALID
        return EXIT_PASS if self.passed else EXIT_BREACH

    def table(self) -> str:
        if self.invalid_input is not None:
            return f"invalid input: {self.invalid_input}"
        lines = [f"{'#':>3}  {'criterion':<28} {'result':<6} {'time':>8}  detail"]
        for o in self.outcomes:
            lines.append(f"{o.number:>3}  {o.name:<28} {'PASS' if o.passed else 'FAIL':<6} {o.seconds:>7.1f}s  {o.detail}")
        return "\n".join(lines)


Criterion = Callable[[AcceptanceContext], Tuple[bool, str]]


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------
def _random_trajectory(rng: np.random.Generator, grid: TimeGrid, dim: int = 2) -> Trajectory:
    t = grid.times()
    values = np.zeros((grid.n_samples, dim), dtype=np.complex128)
    for _ in range(3):
        rate = complex(-rng.uniform(0.5, 4.0), rng.uniform(-5.0, 5.0))
        direction = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        values += np.exp(rate * t)[:, np.newaxis] * direction[np.newaxis, :]
    return Trajectory(grid, values)


def _random_function_source(rng: np.random.Generator) -> str:
    choice = int(rng.integers(0, 4))
    scale = f"{rng.uniform(0.5, 2.0):.6f}"
    if choice == 0:
        return f"{scale}*" + blaschke_source(random_blaschke_zero(rng) for _ in range(int(rng.integers(1, 5))))
    if choice == 1:
        return f"{scale}*(1+s)/(1-s)"
    if choice == 2:
        return f"{scale}/({rng.uniform(0.2, 3.0):.6f}-s)"
    return f"{scale}*exp({rng.uniform(0.0, 2.0):.6f}*s)*blaschke({-rng.uniform(0.1, 5.0):.6f}, {rng.uniform(-5, 5):.6f})"


def criterion_contractivity(ctx: AcceptanceContext) -> Tuple[bool, str]:
    rng = np.random.default_rng([ctx.seed, 1])
    grid = TimeGrid(60.0 / 2**12, 2**12)
    worst = 0.0
    for _ in range(100):
        g = parse(_random_function_source(rng))
        f = _random_trajectory(rng, grid)
        out = toeplitz_apply(g, f)
        ratio = np.sqrt(transform_energy(out) / transform_energy(f)) / sup_norm(g).value
        worst = max(worst, ratio)
    return worst <= 1 + ctx.tol(0.02), f"max ||M_g f|| / (||g|| ||f||) = {worst:.6f} over 100 pairs"


def _oracle_error(A: GeneratorMatrix, g: FuncExpr, grid: TimeGrid) -> float:
    # small generators go column by column, larger ones through the eigenbasis
    route = "columns" if A.dim <= 8 else "auto"
    constructed = construct_gA(A, g, grid, route=route).gA
    return relative_error(constructed, spectral_oracle_gA(A, g))


def criterion_oracle_equivalence(ctx: AcceptanceContext) -> Tuple[bool, str]:
    sizes = (2, 8) if ctx.quick else (2, 8, 32)
    worst, where = 0.0, ""
    for family in REFERENCE_FAMILIES:
        for n in sizes:
            A = ctx.family(family, n)
            for key in REFERENCE_IDS:
                g = ctx.function(key)
                err = _oracle_error(A, g, ctx.grid(A, g))
                if err > worst:
                    worst, where = err, f"{family}:{n}/{key}"
    decreasing = []
    for family, n, key in (("geometric", 2, "cayley"), ("dirichlet", 2, "resolvent"), ("jordan_perturbed", 2, "cayley")):
        A, g = ctx.family(family, n), ctx.function(key)
        fine = ctx.grid(A, g)
        decreasing.append(_oracle_error(A, g, fine) < _oracle_error(A, g, fine.with_samples(fine.n_samples // 2)))
    ok = worst <= ctx.tol(1e-3) and all(decreasing)
    return ok, f"max relative error {worst:.2e} at {where}; refinement decreases error on {sum(decreasing)}/3"


def criterion_axioms(ctx: AcceptanceContext) -> Tuple[bool, str]:
    cases = (("geometric", 2, "cayley", "resolvent"), ("dirichlet", 8, "cayley", "blaschke5"),
             ("jordan_perturbed", 2, "resolvent", "shift"))
    worst_identity_oracle = 0.0
    failures = []
    for family, n, f_key, g_key in cases:
        A = ctx.family(family, n)
        f, g = ctx.function(f_key), ctx.function(g_key)
        worst_identity_oracle = max(worst_identity_oracle,
                                    relative_error(spectral_oracle_gA(A, parse("1")), np.eye(n)))
        report = check_axioms(A, f, g, ctx.grid(A, f * g))
        if not report.passed(ctx.tol(1e-3), ctx.tol(3e-3)):
            failures.append(f"{family}:{n} {report}")
    ok = worst_identity_oracle <= 1e-8 and not failures
    return ok, f"oracle identity {worst_identity_oracle:.1e}; failing cases: {failures or 'none'}"


def criterion_hille_phillips(ctx: AcceptanceContext) -> Tuple[bool, str]:
    h = KERNELS.get("boxcar", 1.0)
    A = GeneratorMatrix.from_array([[-1.0]], label="scalar")
    quadrature = complex(hille_phillips_gA(A, h)[0, 0])
    exact = 1 - np.exp(-1)
    g = h.laplace_transform()
    constructed = complex(construct_gA(A, g, ctx.grid(A, g)).gA[0, 0])
    D = GeneratorMatrix.from_array(np.diag([-1.0, -2.0]), label="diag")
    diag_exact = np.diag([1 - np.exp(-1), (1 - np.exp(-2)) / 2])
    diag_error = float(np.max(np.abs(hille_phillips_gA(D, h) - diag_exact)))
    kernel = KERNELS.get("exponential", 1.0)
    g_exp = kernel.laplace_transform()
    kernel_error = relative_error(construct_gA(D, g_exp, ctx.grid(D, g_exp)).gA, hille_phillips_gA(D, kernel))
    ok = (abs(quadrature - exact) <= ctx.tol(1e-6) and diag_error <= ctx.tol(1e-6)
          and abs(constructed - quadrature) <= ctx.tol(1e-3) and kernel_error <= ctx.tol(1e-3))
    return ok, (f"boxcar {quadrature.real:.8f} (exact {exact:.8f}); Toeplitz {abs(constructed - quadrature):.1e}; "
                f"exponential kernel {kernel_error:.1e}")


def criterion_commutation(ctx: AcceptanceContext) -> Tuple[bool, str]:
    worst = 0.0
    for family, n in (("geometric", 8), ("jordan_perturbed", 8), ("random_stable", 8), ("jordan", 2)):
        A = ctx.family(family, n)
        for key in ("cayley", "blaschke5"):
            g = ctx.function(key)
            result = construct_gA(A, g, ctx.grid(A, g))
            times = list(result.extraction_times) + [0.1, 1.0]
            worst = max(worst, commutation_defect(A, result.gA, times))
    return worst <= ctx.tol(1e-3), f"max relative commutator {worst:.2e}"


def criterion_intertwining(ctx: AcceptanceContext) -> Tuple[bool, str]:
    D = GeneratorMatrix.from_array(np.diag([-1.0, -2.0]), label="diag:-1,-2")
    C = ObservationMatrix.from_array([1.0, 1.0], 2, label="row:1,1")
    triples = [(D, C, "cayley"), (D, C, "one"), (ctx.family("geometric", 8), np.ones(8), "blaschke5")]
    worst = 0.0
    for A, obs, key in triples:
        g = ctx.function(key)
        worst = max(worst, check_thm26(A, obs, g, ctx.grid(A, g)).deviation)
    sizes = (2, 4, 8, 16, 32) if ctx.quick else (2, 4, 8, 16, 32, 64, 128)
    g = ctx.function("blaschke5")
    kappas = []
    oracle_gap = 0.0
    for n in sizes:
        A = ctx.family("dirichlet", n)
        C_row = np.ones((1, n))
        CgA = C_row @ construct_gA(A, g, ctx.grid(A, g)).gA
        oracle_gap = max(oracle_gap, relative_error(CgA, C_row @ spectral_oracle_gA(A, g)))
        kappas.append(admissibility_gramian(A, ObservationMatrix.from_array(CgA, n)).kappa)
    ok = worst <= ctx.tol(1e-2) and oracle_gap <= ctx.tol(1e-2) and all(np.isfinite(kappas))
    listing = ", ".join(f"{n}:{k:.4f}" for n, k in zip(sizes, kappas))
    return ok, (f"max deviation {worst:.2e}; constructed C g(A) vs oracle {oracle_gap:.1e}; "
                f"kappa(C g(A)) by n: {listing}")


def criterion_admissibility(ctx: AcceptanceContext) -> Tuple[bool, str]:
    scalar = GeneratorMatrix.from_array([[-1.0]], label="scalar")
    D = GeneratorMatrix.from_array(np.diag([-1.0, -2.0]), label="diag:-1,-2")
    cross = 0.0
    for A, C in ((scalar, [1.0]), (D, [1.0, 1.0])):
        exact = admissibility_gramian(A, C).kappa
        estimate = admissibility_quadrature(A, C, ctx.grid(A), seed=ctx.seed).kappa
        cross = max(cross, abs(estimate - exact) / exact)
    scalar_gap = abs(admissibility_gramian(scalar, [1.0]).kappa - HALF_SQRT)
    profile_gap = 0.0
    for family in SELF_ADJOINT_FAMILIES:
        for n in (2, 8, 32, 128):
            kappa, kappa_star = sqrt_admissibility_profile(ctx.family(family, n))
            profile_gap = max(profile_gap, abs(kappa.kappa - HALF_SQRT), abs(kappa_star.kappa - HALF_SQRT))
    ok = cross <= ctx.tol(1e-4) and scalar_gap <= 1e-4 and profile_gap <= 1e-8
    return ok, f"gramian/quadrature {cross:.1e}; scalar {scalar_gap:.1e}; self-adjoint profile {profile_gap:.1e}"


def criterion_analyticity(ctx: AcceptanceContext) -> Tuple[bool, str]:
    worst = 0.0
    for A in (ctx.family("geometric", 8), ctx.family("scalar", 1), ctx.family("scalar", 4)):
        worst = max(worst, abs(fit_analyticity_constants(A, omega=0.0).M - ANALYTICITY_LIMIT))
    return worst <= 1e-4, f"max |M - (2e)^-1/2| = {worst:.1e}"


def _sweep_config(ctx: AcceptanceContext, generators, functions, family=None, sizes=()) -> ExperimentConfig:
    return ExperimentConfig(generators=list(generators), family=family, sizes=list(sizes), functions=list(functions),
                            eps=ctx.eps_grid(), n_samples=ctx.n_samples, seed=ctx.seed)


def criterion_certificate(ctx: AcceptanceContext) -> Tuple[bool, str]:
    config = _sweep_config(ctx, ["scalar:1", "geometric:8", "jordan_perturbed:8"], ["one", "cayley", "blaschke5"])
    outcome = run_sweep(config)
    scalar = GeneratorMatrix.from_array([[-1.0]])
    closed_form = max(abs(proof_certificate_eq6(scalar, eps) - np.exp(-2 * eps)) for eps in config.eps)
    ok = outcome.passed and closed_form <= 1e-6
    return ok, f"{len(outcome.records)} rows, {len(outcome.violations)} breaches; scalar closed form {closed_form:.1e}"


def criterion_boundedness(ctx: AcceptanceContext) -> Tuple[bool, str]:
    sizes = (2, 32) if ctx.quick else (2, 32, 128)
    worst = 0.0
    for family in ("dirichlet", "geometric"):
        outcome = run_sweep(_sweep_config(ctx, [], ["blaschke5", "cayley"], family, sizes))
        for r in outcome.records:
            worst = max(worst, r.norm / r.sup_norm)
    return worst <= 1 + ctx.tol(1e-3), f"max ||g(A)e^(A eps)|| / ||g|| = {worst:.6f}"


def criterion_log_growth(ctx: AcceptanceContext) -> Tuple[bool, str]:
    sizes = (2, 8) if ctx.quick else (2, 8, 32)
    config = _sweep_config(ctx, [], ["blaschke5", "cayley"], "jordan_perturbed", sizes)
    files = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in range(2):
            outcome = run_sweep(config)
            csv_path = write_sweep_csv(outcome.records, Path(tmp) / f"run{run}" / "sweep.csv")
            svg_path = render_sweep_svg(csv_path, Path(tmp) / f"run{run}" / "sweep.svg")
            files.append((csv_path.read_bytes(), svg_path.read_bytes()))
        identical = files[0] == files[1]
    ok = outcome.passed and identical
    return ok, f"{len(outcome.records)} rows, {len(outcome.violations)} breaches; byte-identical reruns: {identical}"


CRITERIA: List[Tuple[int, str, Criterion]] = [
    (1, "toeplitz contractivity", criterion_contractivity),
    (2, "oracle equivalence", criterion_oracle_equivalence),
    (3, "calculus axioms", criterion_axioms),
    (4, "hille-phillips extension", criterion_hille_phillips),
    (5, "commutation", criterion_commutation),
    (6, "output intertwining", criterion_intertwining),
    (7, "admissibility engine", criterion_admissibility),
    (8, "analyticity constant", criterion_analyticity),
    (9, "certificate rows", criterion_certificate),
    (10, "boundedness clause", criterion_boundedness),
    (11, "log-growth sweep", criterion_log_growth),
]


def check_builtin_data(directory: Optional[str] = None) -> int:
    """Load every builtin generator file; raises InvalidInputError on the first bad one or on none."""
    root = project_path(directory or settings.builtin_data_dir)
    files = sorted(root.glob("*.json"))
    if not files:
        raise InvalidInputError(f"no builtin generator files in {root}")
    for path in files:
        load_generator(path)
    return len(files)


@log_metric_function("ACCEPTANCE_SUITE_OK")
def run_acceptance(quick: bool = False, seed: Optional[int] = None, only: Optional[List[int]] = None,
                   data_dir: Optional[str] = None) -> AcceptanceReport:
    report = AcceptanceReport()
    try:
        check_builtin_data(data_dir)
    except InvalidInputError as exc:
        report.invalid_input = str(exc)
        logger.error("builtin data rejected: %s", exc)
        return report

    ctx = AcceptanceContext.create(quick, seed)
    for number, name, criterion in CRITERIA:
        if only and number not in only:
            continue
        start = time.perf_counter()
        try:
            passed, detail = criterion(ctx)
        except HinfCalcError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        seconds = time.perf_counter() - start
        report.outcomes.append(CriterionOutcome(number, name, bool(passed), detail, seconds))
        logger.info("criterion %d (%s): %s in %.1fs", number, name, "pass" if passed else "FAIL", seconds)
    return report


__all__ = [
    "CRITERIA",
    "AcceptanceContext",
    "AcceptanceReport",
    "CriterionOutcome",
    "check_builtin_data",
    "run_acceptance",
]
