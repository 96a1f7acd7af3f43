"""
HinfCalc Configuration Management
Numerical defaults and run settings, overridable through HINF_* environment variables.
"""

from pathlib import Path
from typing import List

import numpy as np
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.utils.system_logger import log_function


PROJECT_ROOT = Path(__file__).resolve().parents[2]


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


def parse_float_list(v) -> List[float]:
    """Parse a float list from a comma-separated string or a list."""
    if v is None:
        return []
    if isinstance(v, str):
        v = v.strip("[]\"' ")
        return [float(item.strip()) for item in v.split(",") if item.strip()]
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(item) for item in v]


class Settings(BaseSettings):
    """Application settings with validation."""

    model_config = SettingsConfigDict(env_prefix="HINF_", env_file=".env", case_sensitive=False, extra="ignore")

    # Application Info
    app_name: str = "HinfCalc"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"
    workers: int = 4
    seed: int = 20150205

    # Time grid
    n_samples: int = 2 ** 14
    max_samples: int = 2 ** 16
    pad_factor: int = 4
    horizon_decay: float = 30.0
    decay_warning_ratio: float = 1e-8
    fft_workers: int = 2
    multiplier_cache_size: int = 16

    # Extraction of g(A) from trajectories
    extraction_points: int = 8
    extraction_min_index: int = 16
    extraction_transport_limit: float = 5.0
    construction_failure_residual: float = 0.1
    modal_batch: int = 16

    # Expression language
    delta_pole: float = 1e-6
    pole_proximity: float = 1e-12
    sup_grid_min: float = 1e-6
    sup_grid_max: float = 1e6
    sup_grid_points: int = 4096

    # Dense linear algebra
    stability_margin: float = 1e-9
    eigen_condition_limit: float = 1e6
    oracle_condition_limit: float = 1e6
    non_diagonalizable_condition: float = 1e12
    kronecker_max_dim: int = 64

    # Quadratures
    hille_phillips_nodes: int = 4097
    quadrature_random_probes: int = 8
    power_iterations: int = 50

    # Experiments
    eps_min: float = 1e-6
    eps_max: float = 1e-1
    eps_points: int = 24
    eps_cap: float = 0.1
    output_dir: str = "output"
    builtin_data_dir: str = "data/generators"

    @field_validator("n_samples", "max_samples")
    @classmethod
    def check_n_samples(cls, v: int) -> int:
        if v < 16 or not _is_power_of_two(v):
            raise ValueError("n_samples must be a power of two >= 16")
        return v

    @field_validator("pad_factor")
    @classmethod
    def check_pad_factor(cls, v: int) -> int:
        if not _is_power_of_two(v):
            raise ValueError("pad_factor must be a power of two")
        return v

    @field_validator("hille_phillips_nodes")
    @classmethod
    def check_simpson_nodes(cls, v: int) -> int:
        if v < 3 or v % 2 == 0:
            raise ValueError("Simpson quadrature needs an odd node count >= 3")
        return v

    @field_validator("eps_max", "eps_cap")
    @classmethod
    def check_eps_cap(cls, v: float) -> float:
        if not 0 < v <= 0.1:
            raise ValueError("eps upper limit must lie in (0, 0.1]")
        return v


# Global settings instance
settings = Settings()


@log_function("DEBUG", "DEFAULT_EPS_GRID_OK")
def default_eps_grid() -> List[float]:
    """Log-spaced eps grid in [eps_min, eps_max]."""
    grid = np.logspace(np.log10(settings.eps_min), np.log10(settings.eps_max), settings.eps_points)
    return [float(e) for e in grid]


def project_path(path: str) -> Path:
    """Relative paths are taken from the project root, not the working directory."""
    candidate = Path(path)
    return candidate if candidate.is_absolute() else PROJECT_ROOT / candidate


@log_function("DEBUG", "GET_SETTINGS_OK")
def get_settings() -> Settings:
    return settings
