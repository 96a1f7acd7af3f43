import numpy as np
import pytest

from src.core.calculus import semigroup_trajectory
from src.core.errors import InvalidInputError
from src.core.linops import GeneratorMatrix
from src.core.signals import (
    SpectrumSamples,
    TimeGrid,
    Trajectory,
    boundary_multiplier,
    jump_kernel,
    laplace_boundary,
    laplace_inverse,
    l2_norm,
    multiplier_memory,
    riesz_project,
    spectrum_energy,
    spectrum_frame,
    toeplitz_apply,
    trajectory_frame,
    transform_energy,
)
from src.funcspec import parse


@pytest.fixture(scope="module")
def scalar():
    return GeneratorMatrix.from_array([[-1.0]], label="scalar:1")


@pytest.fixture(scope="module")
def decaying(scalar):
    grid = TimeGrid.for_generator(scalar)
    return Trajectory.from_function(grid, lambda t: np.exp(-t))


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        TimeGrid(0.1, 100)
    with pytest.raises(InvalidInputError):
        TimeGrid(-0.1, 64)
    with pytest.raises(InvalidInputError):
        TimeGrid(0.1, 64, pad_factor=3)
    grid = TimeGrid(0.5, 64)
    assert grid.horizon == 32.0
    assert grid.padded_length == 256
    assert grid.with_samples(128).horizon == pytest.approx(grid.horizon)


def test_grid_for_generator_snaps_to_exp_shift(scalar):
    grid = TimeGrid.for_generator(scalar, parse("exp(1*s)*exp(0.5*s)"))
    steps = 0.5 / grid.dt
    assert steps == pytest.approx(round(steps), abs=1e-9)
    assert grid.horizon >= 30.0


def test_trajectory_shape_checked():
    grid = TimeGrid(0.1, 16)
    with pytest.raises(InvalidInputError):
        Trajectory(grid, np.zeros((15, 2)))
    with pytest.raises(InvalidInputError):
        Trajectory(grid, np.full(16, np.nan))
    assert Trajectory(grid, np.zeros(16)).dim == 1


def test_boundary_transform_of_decaying_exponential(decaying):
    spectrum = laplace_boundary(decaying)
    band = np.abs(spectrum.frequencies) <= 10
    expected = 1 / (1 + 1j * spectrum.frequencies[band])
    error = np.abs(spectrum.values[band, 0] - expected) / np.abs(expected)
    assert error.max() <= 1e-4
    assert not spectrum.horizon_warning


def test_parseval_under_midpoint_convention():
    rng = np.random.default_rng(3)
    grid = TimeGrid(0.01, 256)
    f = Trajectory(grid, rng.standard_normal((256, 3)) + 1j * rng.standard_normal((256, 3)))
    assert spectrum_energy(laplace_boundary(f)) == pytest.approx(transform_energy(f), rel=1e-10)


def test_inverse_recovers_causal_samples(decaying):
    recovered = laplace_inverse(laplace_boundary(decaying))
    np.testing.assert_allclose(recovered.values, decaying.values, atol=1e-12)


def test_projection_is_identity_on_causal_spectra(decaying):
    spectrum = laplace_boundary(decaying)
    projected = riesz_project(spectrum)
    np.testing.assert_allclose(projected.values, spectrum.values, atol=1e-10)
    np.testing.assert_allclose(riesz_project(projected).values, projected.values, atol=1e-10)


def test_projection_splits_partial_fractions(decaying):
    grid = decaying.grid
    omega = grid.frequencies()
    s = 1j * omega
    samples = SpectrumSamples(grid, omega, (1 / ((1 - s) * (1 + s)))[:, np.newaxis])
    out = laplace_inverse(riesz_project(samples))
    k = np.arange(grid.n_samples // 16, grid.n_samples // 8)
    expected = 0.5 * np.exp(-k * grid.dt)
    assert np.max(np.abs(out.values[k, 0] - expected) / expected) <= 1e-2


def test_constant_multiplier_is_identity(decaying):
    out = toeplitz_apply(parse("1"), decaying)
    np.testing.assert_allclose(out.values, decaying.values, atol=1e-10)


def test_shift_multiplier_advances_time(scalar):
    g = parse("exp(1*s)")
    grid = TimeGrid.for_generator(scalar, g)
    f = semigroup_trajectory(scalar, [1.0], grid)
    out = toeplitz_apply(g, f)
    expected = Trajectory.from_function(grid, lambda t: np.exp(-(t + 1)))
    assert l2_norm(out - expected) <= 1e-3 * l2_norm(expected)


def test_multiplier_is_linear(decaying):
    g = parse("(1+s)/(1-s)")
    twice = toeplitz_apply(g, decaying.scaled(2.0) + decaying)
    once = toeplitz_apply(g, decaying)
    np.testing.assert_allclose(twice.values, 3 * once.values, atol=1e-10)


def test_blaschke_multiplier_is_contractive(decaying):
    out = toeplitz_apply(parse("blaschke(-0.5, 2)*blaschke(-3)"), decaying)
    assert np.sqrt(transform_energy(out) / transform_energy(decaying)) <= 1.02


def test_l2_norm_of_scalar_orbit(scalar, decaying):
    assert l2_norm(decaying, rule="trapezoid") == pytest.approx(1 / np.sqrt(2), rel=1e-6)
    assert l2_norm(decaying) >= l2_norm(decaying, rule="trapezoid")
    with pytest.raises(InvalidInputError):
        l2_norm(decaying, rule="simpson")


def test_undecayed_trajectory_sets_warning():
    grid = TimeGrid(0.01, 64)
    spectrum = laplace_boundary(Trajectory.from_function(grid, lambda t: np.exp(-t)))
    assert spectrum.horizon_warning


def test_frames_have_component_columns(decaying):
    frame = trajectory_frame(decaying)
    assert list(frame.columns) == ["t", "re_0", "im_0"]
    assert len(frame) == decaying.grid.n_samples
    assert list(spectrum_frame(laplace_boundary(decaying)).columns) == ["omega", "re_0", "im_0"]


def test_projection_removes_anticausal_resolvent():
    grid = TimeGrid(0.01, 4096)
    omega = grid.frequencies()
    samples = SpectrumSamples(grid, omega, (1 / (1j * omega - 1))[:, np.newaxis])
    projected = riesz_project(samples)
    assert np.sqrt(spectrum_energy(projected) / spectrum_energy(samples)) <= 1e-3


def test_projection_keeps_continuous_causal_resolvent():
    grid = TimeGrid(0.01, 4096)
    omega = grid.frequencies()
    samples = SpectrumSamples(grid, omega, (1 / (1j * omega + 1))[:, np.newaxis])
    out = laplace_inverse(riesz_project(samples))
    expected = np.exp(-grid.times())
    assert np.max(np.abs(out.values[8:, 0] - expected[8:])) <= 1e-3
    assert out.values[0, 0] == pytest.approx(1.0, abs=1e-2)


def test_jump_kernel_is_odd_and_alternating():
    kernel = jump_kernel(1024)
    assert kernel[0] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(kernel[1:512], -kernel[:512:-1], atol=1e-14)
    assert np.all(np.sign(kernel[1:20]) == -np.sign(kernel[2:21]))
    assert jump_kernel(1024) is kernel


def test_grid_covers_slowest_pole_of_g():
    A = GeneratorMatrix.from_array([[-4.75, 0.0], [0.0, -12.25]], label="diag")
    g = parse("blaschke(-0.131, 2)")
    grid = TimeGrid.for_generator(A, g, n_samples=2 ** 12)
    assert multiplier_memory(g) == pytest.approx(30 / 0.131)
    assert grid.horizon >= 30 / 0.131
    assert grid.n_samples == 2 ** 16
    assert grid.padded_length * grid.dt - grid.horizon >= multiplier_memory(g)


def test_grid_ignores_memory_of_fast_poles(scalar):
    grid = TimeGrid.for_generator(scalar, parse("(1+s)/(1-s)"), n_samples=2 ** 12)
    assert grid.n_samples == 2 ** 12
    assert grid.horizon == pytest.approx(30.0)


def test_boundary_multiplier_is_cached_per_grid(decaying):
    g = parse("(1+s)/(1-s)")
    first = boundary_multiplier(g, decaying.grid)
    assert boundary_multiplier(parse("(1+s)/(1-s)"), decaying.grid) is first
    assert not first.flags.writeable
    assert boundary_multiplier(g, decaying.grid.with_samples(1024)) is not first


@pytest.mark.parametrize("first, second", [("(1+s)/(1-s)", "blaschke(-2, 1)"), ("exp(0.5*s)", "1/(2-s)")])
def test_multipliers_compose(scalar, first, second):
    g1, g2 = parse(first), parse(second)
    grid = TimeGrid.for_generator(scalar, g1 * g2)
    f = semigroup_trajectory(scalar, [1.0], grid)
    composed = toeplitz_apply(g1, toeplitz_apply(g2, f))
    product = toeplitz_apply(g1 * g2, f)
    assert l2_norm(composed - product) <= 1e-3 * l2_norm(product)
