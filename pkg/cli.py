#!/usr/bin/env python3
"""
HinfCalc Command Line Interface
Functional calculus, admissibility profiles, norm sweeps, worst-case search
and the acceptance suite.

Exit codes: 0 pass, 1 invariant breach or numerical failure, 2 invalid input.
"""

import argparse
import json
import logging
import re
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.admissibility import (
    admissibility_gramian,
    admissibility_profile_rows,
    admissibility_quadrature,
    check_thm26,
    classify_growth,
)
from src.core.calculus import ORACLES, compute_gA, relative_error, semigroup_trajectory
from src.core.config import settings
from src.core.errors import HinfCalcError, InvalidInputError, InvariantBreachError
from src.core.signals import TimeGrid, boundary_multiplier, laplace_boundary, toeplitz_apply
from src.experiments.acceptance import run_acceptance
from src.experiments.reporting import (
    dump_spectrum,
    dump_trajectory,
    render_sweep_svg,
    write_admissibility_csv,
    write_calculus_json,
    write_sweep_csv,
)
from src.experiments.search import run_search
from src.experiments.sweep import run_sweep, sweep_generators
from src.library.families import build_family, resolve_generator, resolve_observation
from src.library.functions import resolve_function
from src.schemas.experiment import CalculusMethod, ExperimentConfig
from src.utils.system_logger import EXIT_INVALID, EXIT_PASS, init_system_logger, log_command_event, log_function

logger = logging.getLogger("hinf.cli")


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_")[:60] or "item"


class HinfCLI:
    """Command implementations; each returns a result dictionary for print_result."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.out)

    def _grid(self, A, g) -> TimeGrid:
        return TimeGrid.for_generator(A, g, n_samples=self.config.n_samples, horizon=self.config.horizon)

    def _generators(self):
        generators = sweep_generators(self.config)
        if not generators:
            raise InvalidInputError("no generator given; use --A or --family with --sizes")
        return generators

    @log_function("INFO", "CLI_CALC_OK")
    def calc(self) -> Dict[str, Any]:
        """g(A) for every (A, g); one JSON file per pair."""
        method = self.config.calculus_method()
        oracle = self.config.oracle.value if self.config.oracle else None
        needs_grid = "toeplitz" in (method, oracle)
        functions = [resolve_function(spec, self.config.seed) for spec in self.config.functions]
        rows, files = [], []
        for index, (label, A) in enumerate(self._generators()):
            for g_id, g in functions:
                grid = self._grid(A, g) if needs_grid else None
                result = compute_gA(A, g, method, grid if method == "toeplitz" else None, self.config.workers)
                oracle_error = None
                if oracle and oracle != method:
                    reference = ORACLES[oracle](A, g) if oracle in ORACLES else compute_gA(A, g, oracle, grid).gA
                    oracle_error = relative_error(result.gA, reference)
                stem = f"{index:03d}_{_slug(label)}_{_slug(g_id)}"
                payload = result.to_payload(g.source_text, label, oracle, oracle_error,
                                           grid if oracle == "toeplitz" else None)
                files.append(str(write_calculus_json(payload, self.out / "calc" / f"{stem}.json")))
                if self.config.dump and grid is not None:
                    self._dump(A, g, grid, stem)
                rows.append({"generator": label, "g": g_id, "residual": result.extraction_residual,
                             "oracle_error": oracle_error, "horizon_warning": result.horizon_warning})
        return {"status": "success", "message": f"computed {len(rows)} matrices", "results": rows, "files": files}

    def _dump(self, A, g, grid: TimeGrid, stem: str) -> None:
        basis = np.zeros(A.dim)
        basis[0] = 1.0
        trajectory = semigroup_trajectory(A, basis, grid)
        output = toeplitz_apply(g, trajectory, multiplier=boundary_multiplier(g, grid))
        dump_trajectory(trajectory, self.out / "dump" / f"{stem}_trajectory.csv")
        dump_trajectory(output, self.out / "dump" / f"{stem}_toeplitz.csv")
        dump_spectrum(laplace_boundary(trajectory), self.out / "dump" / f"{stem}_spectrum.csv")

    @log_function("INFO", "CLI_ADMISS_OK")
    def admiss(self, check_functions: bool = False) -> Dict[str, Any]:
        """Square-root profiles along a family, or kappa of C for explicit generators."""
        method = self.config.admissibility_method()
        result: Dict[str, Any] = {"status": "success"}
        rows: List[Dict[str, object]] = []
        if self.config.family:
            family = self.config.family
            rows = admissibility_profile_rows(
                family, lambda n: build_family(family, n, self.config.seed), self.config.sizes, method)
            if len(rows) >= 2:
                profile = {int(r["n"]): (float(r["kappa"]), float(r["kappa_star"])) for r in rows}
                result["growth"] = classify_growth(profile)
        reports = []
        for spec in self.config.generators:
            A = resolve_generator(spec, self.config.seed)
            C = resolve_observation(self.config.observation, A)
            if method == "gramian":
                report = admissibility_gramian(A, C)
            else:
                report = admissibility_quadrature(A, C, self._grid(A, None), seed=self.config.seed)
            entry = {"generator": spec, "observation": C.label, "kappa": report.kappa, "method": method,
                     "lower_bound": report.lower_bound}
            if check_functions:
                for g_id, g in (resolve_function(s, self.config.seed) for s in self.config.functions):
                    check = check_thm26(A, C, g, self._grid(A, g), seed=self.config.seed)
                    entry.setdefault("intertwining", []).append({
                        "g": g_id, "deviation": check.deviation,
                        "kappa_CgA": check.output_admissibility.kappa})
            reports.append(entry)
        if not rows and not reports:
            raise InvalidInputError("admiss needs --family with --sizes or --A")
        if rows:
            result["files"] = [str(write_admissibility_csv(rows, self.out / "admissibility.csv"))]
            result["profile"] = rows
        if reports:
            result["reports"] = reports
        result["message"] = f"{len(rows)} profile rows, {len(reports)} observation reports"
        return result

    @log_function("INFO", "CLI_SWEEP_OK")
    def sweep(self) -> Dict[str, Any]:
        outcome = run_sweep(self.config)
        csv_path = write_sweep_csv(outcome.records, self.out / "sweep.csv")
        files = [str(csv_path)]
        if self.config.svg:
            files.append(str(render_sweep_svg(csv_path, self.out / "sweep.svg")))
        if not outcome.passed:
            raise InvariantBreachError(
                f"{len(outcome.violations)} of {len(outcome.records)} rows break the certificate bound (see {csv_path})")
        return {"status": "success", "message": f"{len(outcome.records)} rows, certificate holds on every row",
                "files": files}

    @log_function("INFO", "CLI_SEARCH_OK")
    def search(self) -> Dict[str, Any]:
        if not self.config.eps:
            raise InvalidInputError("search needs at least one eps value")
        method = self.config.calculus_method(CalculusMethod.SUBSTITUTION)
        reports = []
        for _, A in self._generators():
            for eps in self.config.eps:
                report = run_search(A, eps, self.config.trials, self.config.kmax, self.config.seed, method)
                reports.append(report.to_dict())
        path = self.out / "search.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(reports, indent=2), encoding="utf-8")
        best = [{"generator": r["generator"], "eps": r["eps"], "best_ratio": r["best_ratio"],
                 "best_source": r["best_source"]} for r in reports]
        return {"status": "success", "message": f"{len(reports)} searches", "best": best, "files": [str(path)]}

    @log_function("INFO", "CLI_VERIFY_OK")
    def verify(self) -> Dict[str, Any]:
        report = run_acceptance(quick=self.config.quick, seed=self.config.seed)
        print(report.table())
        status = "success" if report.passed else "error"
        message = "acceptance suite passed" if report.passed else "acceptance suite failed"
        return {"status": status, "message": message, "exit_code": report.exit_code}

    @log_function("DEBUG", "CLI_PRINT_RESULT_OK")
    def print_result(self, result: Dict):
        """Print CLI command result in a formatted way."""
        if result["status"] == "success":
            print(f"✅ {result.get('message', 'Success')}")
            for key, value in result.items():
                if key not in ["status", "message", "exit_code"]:
                    if isinstance(value, (dict, list)):
                        print(f"\n{key.title()}:")
                        print(json.dumps(value, indent=2, default=str))
                    else:
                        print(f"{key.title()}: {value}")
        else:
            print(f"❌ {result.get('message', 'Error occurred')}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment config JSON file")
    common.add_argument("--A", dest="A", action="append", help="Generator: diag:v1,v2 | <family>:<n> | JSON path")
    common.add_argument("--g", dest="g", action="append", help="Reference id (one, cayley, ...) or expression")
    common.add_argument("--eps", help="Comma-separated eps values in (0, 0.1]")
    common.add_argument("--N", dest="n_samples", type=int, help="Time samples (power of two)")
    common.add_argument("--T", dest="horizon", type=float, help="Time horizon")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--dump", action="store_true", default=None, help="Dump trajectories and spectra")
    common.add_argument("--oracle", choices=[m.value for m in CalculusMethod], help="Reference method")
    common.add_argument("--family", help="Generator family")
    common.add_argument("--sizes", help="Comma-separated family sizes")
    common.add_argument("--method", help="gramian|quadrature (admiss) or toeplitz|spectral|substitution")
    common.add_argument("--C", dest="observation", help="Observation: row:c1,c2 | eye | sqrt | JSON path")
    common.add_argument("--trials", type=int, help="Search trials")
    common.add_argument("--kmax", type=int, help="Maximum Blaschke factors in search")
    common.add_argument("--svg", action="store_true", default=None, help="Render SVG next to the sweep CSV")
    common.add_argument("--quick", action="store_true", default=None, help="Reduced grids, 3x tolerances")
    common.add_argument("--workers", type=int, help="Worker threads")
    common.add_argument("--log-level", default=None, help="Logging level")

    parser = argparse.ArgumentParser(description="HinfCalc: Toeplitz functional calculus for stable generators")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    subparsers.add_parser("calc", parents=[common], help="Compute g(A) and write JSON results")
    subparsers.add_parser("admiss", parents=[common], help="Admissibility constants and square-root profiles")
    subparsers.add_parser("sweep", parents=[common], help="Norm sweep over eps with certificate check")
    subparsers.add_parser("search", parents=[common], help="Worst-case Blaschke product search")
    subparsers.add_parser("verify", parents=[common], help="Run the acceptance suite")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {
        "generators": args.A,
        "functions": args.g,
        "eps": args.eps,
        "n_samples": args.n_samples,
        "horizon": args.horizon,
        "seed": args.seed,
        "out": args.out,
        "dump": args.dump,
        "oracle": args.oracle,
        "family": args.family,
        "sizes": args.sizes,
        "method": args.method,
        "observation": args.observation,
        "trials": args.trials,
        "kmax": args.kmax,
        "svg": args.svg,
        "quick": args.quick,
        "workers": args.workers,
    }
    return base.merged(overrides)


def _explicit_functions(args: argparse.Namespace) -> bool:
    if args.g:
        return True
    if args.config:
        try:
            return "functions" in json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return False
    return False


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_INVALID

    level = getattr(logging, (args.log_level or settings.log_level).upper(), logging.INFO)
    init_system_logger(level)
    target = ",".join(args.A or []) or args.family or "-"
    start = time.perf_counter()
    cli: Optional[HinfCLI] = None
    try:
        cli = HinfCLI(load_config(args))
        if args.command == "calc":
            result = cli.calc()
        elif args.command == "admiss":
            result = cli.admiss(check_functions=_explicit_functions(args))
        elif args.command == "sweep":
            result = cli.sweep()
        elif args.command == "search":
            result = cli.search()
        else:
            result = cli.verify()
        exit_code = int(result.get("exit_code", EXIT_PASS))
        cli.print_result(result)
        log_command_event("INFO" if exit_code == EXIT_PASS else "ALERT", args.command, target, exit_code,
                          (time.perf_counter() - start) * 1000, remark=result.get("message"))
        return exit_code
    except HinfCalcError as exc:
        print(f"❌ Command failed: {exc}")
        log_command_event("ERROR", args.command, target, exc.exit_code, (time.perf_counter() - start) * 1000,
                          error=f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
