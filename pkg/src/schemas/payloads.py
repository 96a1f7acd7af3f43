"""
HinfCalc JSON payload schemas
Pydantic models for matrix files and calculus results.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

ComplexPair = List[float]


def pairs_from_array(M: np.ndarray) -> List[ComplexPair]:
    flat = np.asarray(M, dtype=np.complex128).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _array_from_pairs(pairs: List[ComplexPair], rows: int, cols: int) -> np.ndarray:
    data = np.array(pairs, dtype=np.float64).reshape(rows * cols, 2)
    return (data[:, 0] + 1j * data[:, 1]).reshape(rows, cols)


class MatrixPayload(BaseModel):
    """Square matrix, row-major ``[re, im]`` pairs."""

    dim: int = Field(..., gt=0)
    entries: List[ComplexPair]

    @model_validator(mode="after")
    def check_entries(self) -> "MatrixPayload":
        if len(self.entries) != self.dim * self.dim:
            raise ValueError(f"expected {self.dim * self.dim} entries, got {len(self.entries)}")
        for pair in self.entries:
            if len(pair) != 2 or not all(np.isfinite(pair)):
                raise ValueError(f"entry {pair!r} is not a finite [re, im] pair")
        return self

    @classmethod
    def from_array(cls, M: np.ndarray) -> "MatrixPayload":
        M = np.asarray(M)
        return cls(dim=int(M.shape[0]), entries=pairs_from_array(M))

    def to_array(self) -> np.ndarray:
        return _array_from_pairs(self.entries, self.dim, self.dim)


class ObservationPayload(BaseModel):
    """Rectangular observation matrix C (rows x cols)."""

    rows: int = Field(..., gt=0)
    cols: int = Field(..., gt=0)
    entries: List[ComplexPair]

    @model_validator(mode="after")
    def check_entries(self) -> "ObservationPayload":
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(f"expected {self.rows * self.cols} entries, got {len(self.entries)}")
        for pair in self.entries:
            if len(pair) != 2 or not all(np.isfinite(pair)):
                raise ValueError(f"entry {pair!r} is not a finite [re, im] pair")
        return self

    @classmethod
    def from_array(cls, M: np.ndarray) -> "ObservationPayload":
        M = np.atleast_2d(np.asarray(M))
        return cls(rows=int(M.shape[0]), cols=int(M.shape[1]), entries=pairs_from_array(M))

    def to_array(self) -> np.ndarray:
        return _array_from_pairs(self.entries, self.rows, self.cols)


class GridPayload(BaseModel):
    dt: float = Field(..., gt=0)
    n_samples: int
    pad_factor: int
    horizon: float


class CalculusResultPayload(BaseModel):
    """Serialized g(A) with its extraction diagnostics."""

    dim: int
    g: str
    generator: str
    gA: List[ComplexPair]
    residual: float
    grid: Optional[GridPayload] = None
    extraction_times: List[float]
    horizon_warning: bool = False
    oracle: Optional[str] = None
    oracle_error: Optional[float] = None
    oracle_grid: Optional[GridPayload] = None
