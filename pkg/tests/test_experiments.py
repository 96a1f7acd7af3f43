import json

import numpy as np
import pytest

from src.core.errors import InvalidInputError
from src.core.linops import GeneratorMatrix, save_generator
from src.experiments.acceptance import (
    AcceptanceContext,
    AcceptanceReport,
    CriterionOutcome,
    check_builtin_data,
    run_acceptance,
)
from src.experiments.reporting import (
    read_sweep_csv,
    render_sweep_svg,
    write_admissibility_csv,
    write_sweep_csv,
)
from src.experiments.search import log_ratio, run_search
from src.experiments.sweep import run_sweep, sweep_cases
from src.library import build_family, resolve_generator
from src.schemas.experiment import ExperimentConfig, SweepRecord

EPS = [1e-3, 1e-2, 1e-1]


def _config(**kwargs):
    base = dict(generators=["scalar:1"], functions=["one"], eps=EPS, method="spectral", seed=3, workers=2)
    base.update(kwargs)
    return ExperimentConfig(**base)


def _record(**kwargs):
    values = dict(family="scalar:1", n=1, g_id="one", eps=0.01, norm=1.0, sup_norm=1.0, log_ratio=0.1,
                  sqrtlog_ratio=0.3, certificate=1.0, kappa=0.7, kappa_star=0.7, norm_2eps=1.0, analytic_bound=2.0)
    values.update(kwargs)
    return SweepRecord(**values)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------
def test_scalar_sweep_closed_forms():
    outcome = run_sweep(_config())
    assert outcome.passed
    assert [r.eps for r in outcome.records] == EPS
    for r in outcome.records:
        assert r.norm == pytest.approx(np.exp(-r.eps))
        assert r.norm_2eps == pytest.approx(np.exp(-2 * r.eps))
        assert r.certificate == pytest.approx(np.exp(-2 * r.eps))
        assert r.log_ratio == pytest.approx(r.norm / (1 + abs(np.log(r.eps))))
        assert r.sqrtlog_ratio == pytest.approx(r.norm / (1 + np.sqrt(abs(np.log(r.eps)))))
        assert r.analytic_bound >= r.certificate


def test_sweep_cases_cover_generators_and_family():
    config = _config(family="dirichlet", sizes=[2, 4], functions=["one", "cayley"])
    cases = sweep_cases(config)
    assert [(c.family, c.A.dim, c.g_id) for c in cases] == [
        ("scalar:1", 1, "one"), ("scalar:1", 1, "cayley"),
        ("dirichlet", 2, "one"), ("dirichlet", 2, "cayley"),
        ("dirichlet", 4, "one"), ("dirichlet", 4, "cayley"),
    ]


def test_sweep_is_deterministic(tmp_path):
    config = _config(generators=["random_stable:4"], functions=["blaschke5", "cayley"])
    first = write_sweep_csv(run_sweep(config).records, tmp_path / "a" / "sweep.csv")
    second = write_sweep_csv(run_sweep(config.merged({"workers": 1})).records, tmp_path / "b" / "sweep.csv")
    assert first.read_bytes() == second.read_bytes()


def test_empty_eps_list_gives_header_only(tmp_path):
    outcome = run_sweep(_config(eps=[]))
    assert outcome.records == () and outcome.passed
    path = write_sweep_csv(outcome.records, tmp_path / "sweep.csv")
    assert path.read_text() == ",".join(SweepRecord.columns()) + "\n"


def test_toeplitz_sweep_respects_certificate():
    outcome = run_sweep(_config(generators=["geometric:2"], functions=["cayley"], method=None, n_samples=2**12))
    assert outcome.passed
    assert all(r.norm <= r.sup_norm * (1 + 3e-3) for r in outcome.records)


def test_certificate_breach_detected():
    assert _record().certificate_holds()
    assert not _record(norm_2eps=1.2).certificate_holds()
    assert _record(norm_2eps=1.005).certificate_holds()


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------
def test_sweep_csv_round_trip(tmp_path):
    records = run_sweep(_config()).records
    path = write_sweep_csv(records, tmp_path / "sweep.csv")
    loaded = read_sweep_csv(path)
    assert [(r.family, r.n, r.g_id) for r in loaded] == [(r.family, r.n, r.g_id) for r in records]
    np.testing.assert_allclose([r.norm for r in loaded], [r.norm for r in records], rtol=1e-11)


def test_svg_render_is_byte_identical(tmp_path):
    csv_path = write_sweep_csv(run_sweep(_config(functions=["one", "cayley"])).records, tmp_path / "sweep.csv")
    first = render_sweep_svg(csv_path, tmp_path / "one.svg").read_bytes()
    second = render_sweep_svg(csv_path, tmp_path / "two.svg").read_bytes()
    assert first == second
    assert b"<svg" in first


def test_svg_of_empty_sweep(tmp_path):
    csv_path = write_sweep_csv([], tmp_path / "sweep.csv")
    assert render_sweep_svg(csv_path, tmp_path / "sweep.svg").stat().st_size > 0


def test_svg_rejects_foreign_csv(tmp_path):
    path = write_admissibility_csv([{"family": "dirichlet", "n": 2, "kappa": 0.5, "kappa_star": 0.5,
                                     "method": "gramian"}], tmp_path / "admiss.csv")
    with pytest.raises(InvalidInputError):
        render_sweep_svg(path, tmp_path / "admiss.svg")


def test_admissibility_csv_columns(tmp_path):
    path = write_admissibility_csv([{"family": "dirichlet", "n": 2, "kappa": 0.5, "kappa_star": 0.5,
                                     "method": "gramian"}], tmp_path / "admiss.csv")
    assert path.read_text().splitlines()[0] == "family,n,kappa,kappa_star,method"


# ---------------------------------------------------------------------------
# Worst-case search
# ---------------------------------------------------------------------------
def test_log_ratio_of_constant():
    A = GeneratorMatrix.from_array([[-1.0]])
    assert log_ratio(A, "1", 0.01) == pytest.approx(np.exp(-0.01) / (1 + np.log(100)))


def test_search_without_factors_keeps_constant():
    report = run_search(build_family("geometric", 4, 0), 0.01, trials=8, kmax=0, seed=1)
    assert report.best_source == "1"
    assert len(report.trajectory) == 1


def test_search_is_deterministic_and_monotone():
    A = build_family("jordan_perturbed", 4, 0)
    first = run_search(A, 0.01, trials=12, kmax=3, seed=9)
    second = run_search(A, 0.01, trials=12, kmax=3, seed=9)
    assert first.to_dict() == second.to_dict()
    assert len(first.trajectory) in (10, 13)
    bests = [step.best_ratio for step in first.trajectory]
    assert bests == sorted(bests)
    assert first.best_ratio == bests[-1]
    assert json.loads(json.dumps(first.to_dict()))["best_source"] == first.best_source


def test_search_on_self_adjoint_generator_stays_bounded():
    eps = 0.01
    report = run_search(build_family("dirichlet", 4, 0), eps, trials=8, kmax=4, seed=2)
    assert report.best_ratio <= (1 + 1e-3) / (1 + abs(np.log(eps)))


@pytest.mark.parametrize("kwargs", [dict(eps=0.5), dict(eps=0.0), dict(kmax=33), dict(trials=0)])
def test_search_rejects_bad_arguments(kwargs):
    args = dict(eps=0.01, trials=4, kmax=2)
    args.update(kwargs)
    with pytest.raises(InvalidInputError):
        run_search(build_family("scalar", 1, 0), **args)


# ---------------------------------------------------------------------------
# Acceptance runner
# ---------------------------------------------------------------------------
def test_report_exit_codes():
    report = AcceptanceReport([CriterionOutcome(1, "a", True, "ok")])
    assert report.passed and report.exit_code == 0
    report.outcomes.append(CriterionOutcome(2, "b", False, "bad"))
    assert report.exit_code == 1
    assert "FAIL" in report.table()
    assert AcceptanceReport(invalid_input="broken").exit_code == 2


def test_quick_context():
    ctx = AcceptanceContext.create(quick=True, seed=4)
    assert ctx.n_samples == 2**12 and ctx.tol(1e-3) == pytest.approx(3e-3)
    assert len(ctx.eps_grid()) == 6


def test_builtin_data_check(tmp_path):
    save_generator(GeneratorMatrix.from_array([[-1.0]]), tmp_path / "scalar.json")
    assert check_builtin_data(str(tmp_path)) == 1
    (tmp_path / "broken.json").write_text('{"dim": 2, "entries": [[0, 0]]}')
    with pytest.raises(InvalidInputError):
        check_builtin_data(str(tmp_path))
    report = run_acceptance(quick=True, only=[8], data_dir=str(tmp_path))
    assert report.exit_code == 2 and report.outcomes == []


def test_single_criterion_run(tmp_path):
    save_generator(GeneratorMatrix.from_array([[-1.0]]), tmp_path / "scalar.json")
    report = run_acceptance(quick=True, only=[8], data_dir=str(tmp_path))
    assert [o.number for o in report.outcomes] == [8]
    assert report.exit_code == 0


def test_builtin_data_found_from_any_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert check_builtin_data() == 3
    with pytest.raises(InvalidInputError):
        check_builtin_data(str(tmp_path))
    assert resolve_generator("diag2").dim == 2


def test_intertwining_uses_constructed_gA():
    report = run_acceptance(quick=True, only=[6])
    [outcome] = report.outcomes
    assert outcome.passed, outcome.detail
    assert "constructed C g(A) vs oracle" in outcome.detail
