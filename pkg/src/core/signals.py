"""
Discretized transform pipeline for causal vector-valued trajectories.

Conventions
-----------
* Samples live on t_k = k*dt, k = 0..N-1, zero-padded to N' = pad_factor*N.
* The boundary Laplace transform is dt*FFT of the padded samples with the
  t = 0 sample halved (trapezoid end correction). In time domain the t = 0
  sample of a transformed signal therefore holds the jump midpoint.
* Frequencies are the standard DFT bins 2*pi*fftfreq(N', dt).
* The first half of the padded circle is t >= 0, the second half t < 0.
* Spectra sampled from continuous transforms carry an aliasing trace of
  their t = 0 jump; the projection fits and removes it from the samples just
  before t = 0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy import fft as sp_fft

from src.core.config import settings
from src.core.errors import HinfViolationError, InvalidInputError
from src.core.linops import GeneratorMatrix
from src.funcspec import FuncExpr, evaluate
from src.schemas.payloads import GridPayload
from src.utils.system_logger import log_function

logger = logging.getLogger("hinf.signals")

_JUMP_FIT_SAMPLES = 16
_JUMP_FIT_DEGREE = 3


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_samples: int
    pad_factor: int = 4

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidInputError(f"dt must be positive and finite, got {self.dt}")
        if self.n_samples < 16 or not _is_power_of_two(self.n_samples):
            raise InvalidInputError(f"n_samples must be a power of two >= 16, got {self.n_samples}")
        if self.pad_factor < 1 or not _is_power_of_two(self.pad_factor):
            raise InvalidInputError(f"pad_factor must be a power of two >= 1, got {self.pad_factor}")

    @property
    def horizon(self) -> float:
        return self.n_samples * self.dt

    @property
    def padded_length(self) -> int:
        return self.n_samples * self.pad_factor

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.padded_length, self.dt)

    def with_samples(self, n_samples: int) -> "TimeGrid":
        """Same horizon, different resolution."""
        return TimeGrid(self.horizon / n_samples, n_samples, self.pad_factor)

    def to_payload(self) -> GridPayload:
        return GridPayload(dt=self.dt, n_samples=self.n_samples, pad_factor=self.pad_factor, horizon=self.horizon)

    @classmethod
    def for_generator(
        cls,
        A: GeneratorMatrix,
        g: Optional[FuncExpr] = None,
        n_samples: Optional[int] = None,
        pad_factor: Optional[int] = None,
        horizon: Optional[float] = None,
    ) -> "TimeGrid":
        """Grid long enough for both the trajectories of A and the anti-causal tail of g.

        ``n_samples`` counts samples per A-horizon horizon_decay/|abscissa|.
        Without an explicit ``horizon`` the horizon grows to the memory of g
        and the sample count grows with it, up to ``settings.max_samples``.
        dt is snapped to the exp shifts of g.
        """
        n = n_samples or settings.n_samples
        if horizon is not None:
            T = horizon
        else:
            base = settings.horizon_decay / abs(A.spectral_abscissa)
            T = max(base, multiplier_memory(g)) if g is not None else base
            stretch = 1 << max(0, int(np.ceil(np.log2(T / base - 1e-12))))
            n = min(n * stretch, max(n, settings.max_samples))
            if stretch > 1:
                logger.debug("horizon %.4g (memory of %s) with %d samples", T, g.source_text, n)
        dt = T / n
        shifts = sorted(c for c in (g.exp_coefficients if g is not None else ()) if c > 0)
        if shifts:
            quantum = shifts[0]
            ratios = np.array(shifts) / quantum
            if np.allclose(ratios, np.round(ratios), rtol=0, atol=1e-9):
                steps = int(np.floor(quantum / dt))
                if steps >= 1:
                    dt = quantum / steps
                else:
                    logger.warning("exp shift %.3e is shorter than dt=%.3e; shifts are interpolated", quantum, dt)
            else:
                logger.warning("exp shifts %s share no grid quantum; shifts are interpolated", shifts)
        return cls(dt, n, pad_factor or settings.pad_factor)


def multiplier_memory(g: FuncExpr) -> float:
    """Time for the anti-causal kernel of g to decay by exp(-horizon_decay).

    Poles of g lie in Re s > 0 and the slowest one sets the tail; exp shifts
    move the kernel left by their coefficient.
    """
    rates = [p.real for p in g.poles if p.real > 0]
    memory = max((c for c in g.exp_coefficients if c > 0), default=0.0)
    if rates:
        memory += settings.horizon_decay / min(rates)
    return float(memory)


def _decayed(values: np.ndarray) -> bool:
    tail = values[-max(1, values.shape[0] // 100):]
    return bool(np.linalg.norm(tail) <= settings.decay_warning_ratio * np.linalg.norm(values))


@dataclass(frozen=True)
class Trajectory:
    """Causal samples, ``values[k]`` is the state at t = k*dt (shape (N, n))."""

    grid: TimeGrid
    values: np.ndarray
    horizon_warning: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        if values.ndim != 2 or values.shape[0] != self.grid.n_samples:
            raise InvalidInputError(f"trajectory needs shape (N={self.grid.n_samples}, n), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("trajectory has non-finite samples")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "Trajectory":
        return cls(grid, fn(grid.times()))

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def scaled(self, alpha: complex) -> "Trajectory":
        return replace(self, values=alpha * self.values)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.values + other.values, self.horizon_warning or other.horizon_warning)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.values - other.values, self.horizon_warning or other.horizon_warning)

    def project(self, C: np.ndarray) -> "Trajectory":
        """Output trajectory C x(t)."""
        return Trajectory(self.grid, self.values @ np.asarray(C, dtype=np.complex128).T, self.horizon_warning)


@dataclass(frozen=True)
class SpectrumSamples:
    grid: TimeGrid
    frequencies: np.ndarray
    values: np.ndarray
    horizon_warning: bool = field(default=False)


def _padded_transform(f: Trajectory) -> np.ndarray:
    grid = f.grid
    padded = np.zeros((grid.padded_length, f.dim), dtype=np.complex128)
    padded[: grid.n_samples] = f.values
    padded[0] *= 0.5
    return grid.dt * sp_fft.fft(padded, axis=0, workers=settings.fft_workers)


@log_function("DEBUG", "LAPLACE_BOUNDARY_OK")
def laplace_boundary(f: Trajectory) -> SpectrumSamples:
    grid = f.grid
    warning = f.horizon_warning
    if not _decayed(f.values):
        logger.warning("trajectory not decayed at horizon T=%.4g; wrap-around may leak", grid.horizon)
        warning = True
    return SpectrumSamples(grid, grid.frequencies(), _padded_transform(f), warning)


@lru_cache(maxsize=8)
def jump_kernel(padded_length: int) -> np.ndarray:
    """Time-domain trace of a unit jump at t = 0 sampled in frequency instead of time.

    Continuous transforms of a jump J exceed the midpoint DFT by
    -i dt J (1/theta - cot(theta/2)/2), theta = omega*dt. The inverse DFT of
    that excess is J times this odd, alternating, slowly decaying kernel.
    """
    theta = 2 * np.pi * np.fft.fftfreq(padded_length)
    excess = np.zeros(padded_length)
    inner = (theta != 0) & (np.abs(theta) < np.pi)
    excess[inner] = 1 / theta[inner] - 0.5 / np.tan(theta[inner] / 2)
    kernel = sp_fft.ifft(-1j * excess).real
    kernel.setflags(write=False)
    return kernel


def _jump_design(padded_length: int) -> np.ndarray:
    k = np.arange(1, _JUMP_FIT_SAMPLES + 1) / _JUMP_FIT_SAMPLES
    kernel = jump_kernel(padded_length)[padded_length - np.arange(1, _JUMP_FIT_SAMPLES + 1)]
    return np.column_stack([k ** p for p in range(_JUMP_FIT_DEGREE + 1)] + [kernel])


def _project_signal(signal: np.ndarray) -> np.ndarray:
    """In-place projection of time samples (padded circle) onto t >= 0.

    A polynomial plus the jump kernel is fitted to the samples just before
    t = 0. The kernel part is removed everywhere and the fitted left limit is
    taken off the t = 0 midpoint. Samples that are already DFT-consistent and
    causal fit to zero and pass unchanged.
    """
    length = signal.shape[0]
    if length > 4 * _JUMP_FIT_SAMPLES:
        before = signal[length - np.arange(1, _JUMP_FIT_SAMPLES + 1)]
        coefficients = np.linalg.lstsq(_jump_design(length), before, rcond=None)[0]
        signal -= np.outer(jump_kernel(length), coefficients[-1])
        signal[0] -= 0.5 * coefficients[0]
    signal[length // 2:] = 0
    return signal


@log_function("DEBUG", "RIESZ_PROJECT_OK")
def riesz_project(spectrum: SpectrumSamples) -> SpectrumSamples:
    """Keep the t >= 0 half of the padded circle."""
    dt = spectrum.grid.dt
    values = np.asarray(spectrum.values, dtype=np.complex128)
    column = values.ndim == 1
    signal = sp_fft.ifft(values.reshape(values.shape[0], -1), axis=0, workers=settings.fft_workers) / dt
    projected = dt * sp_fft.fft(_project_signal(signal), axis=0, workers=settings.fft_workers)
    return replace(spectrum, values=projected[:, 0] if column else projected)


def laplace_inverse(spectrum: SpectrumSamples) -> Trajectory:
    """Causal trajectory of an already projected spectrum."""
    grid = spectrum.grid
    signal = sp_fft.ifft(spectrum.values, axis=0, workers=settings.fft_workers) / grid.dt
    values = signal[: grid.n_samples].copy()
    values[0] *= 2
    return Trajectory(grid, values, spectrum.horizon_warning)


@lru_cache(maxsize=settings.multiplier_cache_size)
def _cached_multiplier(g: FuncExpr, grid: TimeGrid) -> np.ndarray:
    values = np.asarray(evaluate(g, 1j * grid.frequencies()), dtype=np.complex128)
    values = np.broadcast_to(values, (grid.padded_length,)).copy()
    values.setflags(write=False)
    return values


def boundary_multiplier(g: FuncExpr, grid: TimeGrid) -> np.ndarray:
    """g(i omega_k) on the DFT bins of the padded grid, cached per (g, grid); read-only."""
    if g.certificate is not None and not g.certificate.passed:
        first = g.certificate.violations[0]
        raise HinfViolationError(first.message, first.subterm)
    return _cached_multiplier(g, grid)


@log_function("DEBUG", "TOEPLITZ_APPLY_OK")
def toeplitz_apply(g: FuncExpr, f: Trajectory, multiplier: Optional[np.ndarray] = None) -> Trajectory:
    """M_g f: transform, multiply by g(i omega), project onto t >= 0, transform back.

    Same result as laplace_inverse(riesz_project(...)) on the product
    spectrum, with the projection done on the time samples directly.
    """
    grid = f.grid
    if multiplier is None:
        multiplier = boundary_multiplier(g, grid)
    warning = f.horizon_warning
    if not _decayed(f.values):
        logger.warning("trajectory not decayed at horizon T=%.4g; wrap-around may leak", grid.horizon)
        warning = True
    product = _padded_transform(f) * multiplier[:, np.newaxis]
    signal = _project_signal(sp_fft.ifft(product, axis=0, workers=settings.fft_workers) / grid.dt)
    values = signal[: grid.n_samples].copy()
    values[0] *= 2
    return Trajectory(grid, values, warning)


def l2_norm(f: Trajectory, rule: str = "rectangle") -> float:
    """sqrt(dt * sum ||values_k||^2); ``rule="trapezoid"`` halves both end samples."""
    energy = np.sum(np.abs(f.values) ** 2, axis=1)
    if rule == "trapezoid":
        total = energy.sum() - 0.5 * (energy[0] + energy[-1])
    elif rule == "rectangle":
        total = energy.sum()
    else:
        raise InvalidInputError(f"unknown quadrature rule '{rule}'")
    return float(np.sqrt(f.grid.dt * total))


def spectrum_energy(spectrum: SpectrumSamples) -> float:
    """(1/2pi) * integral of ||F||^2 d omega on the DFT bins."""
    return float(np.sum(np.abs(spectrum.values) ** 2) / (spectrum.values.shape[0] * spectrum.grid.dt))


def transform_energy(f: Trajectory) -> float:
    """Time-domain energy under the midpoint convention (Parseval partner of spectrum_energy)."""
    energy = np.sum(np.abs(f.values) ** 2, axis=1)
    return float(f.grid.dt * (0.25 * energy[0] + energy[1:].sum()))


def trajectory_frame(f: Trajectory) -> pd.DataFrame:
    columns = {"t": f.grid.times()}
    for i in range(f.dim):
        columns[f"re_{i}"] = f.values[:, i].real
        columns[f"im_{i}"] = f.values[:, i].imag
    return pd.DataFrame(columns)


def spectrum_frame(spectrum: SpectrumSamples) -> pd.DataFrame:
    columns = {"omega": spectrum.frequencies}
    for i in range(spectrum.values.shape[1]):
        columns[f"re_{i}"] = spectrum.values[:, i].real
        columns[f"im_{i}"] = spectrum.values[:, i].imag
    return pd.DataFrame(columns)


__all__ = [
    "SpectrumSamples",
    "TimeGrid",
    "Trajectory",
    "boundary_multiplier",
    "jump_kernel",
    "l2_norm",
    "laplace_boundary",
    "laplace_inverse",
    "multiplier_memory",
    "riesz_project",
    "spectrum_energy",
    "spectrum_frame",
    "toeplitz_apply",
    "trajectory_frame",
    "transform_energy",
]
