"""
HinfCalc Experiment Schemas
Run configuration loaded from --config JSON and the rows written by sweeps.
"""

import json
from dataclasses import asdict, dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from src.core.config import default_eps_grid, parse_float_list, settings
from src.core.errors import InvalidInputError


class CalculusMethod(str, Enum):
    TOEPLITZ = "toeplitz"
    SPECTRAL = "spectral"
    SUBSTITUTION = "substitution"


class AdmissibilityMethod(str, Enum):
    GRAMIAN = "gramian"
    QUADRATURE = "quadrature"


def _int_list(v) -> List[int]:
    if v is None:
        return []
    if isinstance(v, str):
        return [int(item.strip()) for item in v.strip("[] ").split(",") if item.strip()]
    if isinstance(v, int):
        return [v]
    return [int(item) for item in v]


class ExperimentConfig(BaseModel):
    """One run of calc / admiss / sweep / search."""

    generators: List[str] = Field(default_factory=list)
    family: Optional[str] = None
    sizes: List[int] = Field(default_factory=lambda: [2, 8])
    functions: List[str] = Field(default_factory=lambda: ["blaschke5"])
    eps: List[float] = Field(default_factory=default_eps_grid)
    observation: Optional[str] = None
    n_samples: Optional[int] = None
    horizon: Optional[float] = Field(default=None, gt=0)
    seed: int = Field(default_factory=lambda: settings.seed, ge=0, lt=2**64)
    out: str = Field(default_factory=lambda: settings.output_dir)
    dump: bool = False
    oracle: Optional[CalculusMethod] = None
    method: Optional[Union[CalculusMethod, AdmissibilityMethod]] = None
    trials: int = Field(default=64, ge=1)
    kmax: int = Field(default=8, ge=0, le=32)
    svg: bool = False
    quick: bool = False
    workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("eps", mode="before")
    @classmethod
    def parse_eps(cls, v):
        return parse_float_list(v)

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v: List[float]) -> List[float]:
        for eps in v:
            if not 0 < eps <= settings.eps_cap:
                raise ValueError(f"eps {eps} outside (0, {settings.eps_cap}]")
        return v

    @field_validator("sizes", mode="before")
    @classmethod
    def parse_sizes(cls, v):
        return _int_list(v)

    @field_validator("sizes")
    @classmethod
    def check_sizes(cls, v: List[int]) -> List[int]:
        if any(n < 1 for n in v):
            raise ValueError("family sizes must be positive")
        return v

    @field_validator("generators", "functions", mode="before")
    @classmethod
    def as_list(cls, v):
        if v is None:
            return []
        return [v] if isinstance(v, str) else list(v)

    @field_validator("n_samples")
    @classmethod
    def check_n_samples(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and (v < 16 or v & (v - 1)):
            raise ValueError("n_samples must be a power of two >= 16")
        return v

    def calculus_method(self, default: CalculusMethod = CalculusMethod.TOEPLITZ) -> str:
        """Value of ``method`` for calc, sweep and search; admissibility methods are rejected."""
        if self.method is None:
            return default.value
        if not isinstance(self.method, CalculusMethod):
            known = ", ".join(m.value for m in CalculusMethod)
            raise InvalidInputError(f"calculus method must be one of {known}, got '{self.method.value}'")
        return self.method.value

    def admissibility_method(self) -> str:
        if self.method is None:
            return AdmissibilityMethod.GRAMIAN.value
        if not isinstance(self.method, AdmissibilityMethod):
            known = ", ".join(m.value for m in AdmissibilityMethod)
            raise InvalidInputError(f"admissibility method must be one of {known}, got '{self.method.value}'")
        return self.method.value

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        try:
            return cls.model_validate(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, ValidationError) as exc:
            raise InvalidInputError(f"cannot load experiment config {path}: {exc}") from exc

    def merged(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Copy with every non-None override applied and re-validated."""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as exc:
            raise InvalidInputError(str(exc)) from exc


@dataclass(frozen=True)
class SweepRecord:
    family: str
    n: int
    g_id: str
    eps: float
    norm: float
    sup_norm: float
    log_ratio: float
    sqrtlog_ratio: float
    certificate: float
    kappa: float
    kappa_star: float
    norm_2eps: float
    analytic_bound: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def certificate_holds(self, slack: float = 1e-2) -> bool:
        """||g(A)e^{2A eps}|| <= sup_norm * certificate * (1 + slack)."""
        return self.norm_2eps <= self.sup_norm * self.certificate * (1 + slack)


__all__ = ["AdmissibilityMethod", "CalculusMethod", "ExperimentConfig", "SweepRecord"]
