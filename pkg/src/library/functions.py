"""Reference functions of s and kernels addressable by id."""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from src.core.calculus import KernelFunction
from src.core.config import settings
from src.core.errors import InvalidInputError
from src.funcspec import FuncExpr, parse
from src.funcspec.nodes import format_real
from src.library.registry import Registry

MAX_BLASCHKE_FACTORS = 32

REFERENCE_SOURCES = {
    "one": "1",
    "cayley": "(1+s)/(1-s)",
    "resolvent": "1/(1-s)",
    "shift": "exp(1*s)",
    "boxcar": "(exp(1*s)-1)/s",
}


def random_blaschke_zero(rng: np.random.Generator) -> complex:
    """Zero in the left half-plane, scaled to the [-16, -1] spectral window."""
    return complex(-(10.0 ** rng.uniform(-1.0, 1.5)), rng.uniform(-20.0, 20.0))


def blaschke_source(zeros) -> str:
    zeros = list(zeros)
    if not zeros:
        return "1"
    return "*".join(f"blaschke({format_real(z.real)}, {format_real(z.imag)})" for z in zeros)


def random_blaschke_source(rng: np.random.Generator, k: int) -> str:
    """Source of a k-factor Blaschke product with random zeros; k = 0 gives "1"."""
    if not 0 <= k <= MAX_BLASCHKE_FACTORS:
        raise InvalidInputError(f"Blaschke factor count must lie in [0, {MAX_BLASCHKE_FACTORS}], got {k}")
    return blaschke_source(random_blaschke_zero(rng) for _ in range(k))


def _fixed(source: str):
    def construct(seed: int) -> FuncExpr:
        return parse(source)
    return construct


def _blaschke5(seed: int) -> FuncExpr:
    return parse(random_blaschke_source(np.random.default_rng([seed, 5]), 5))


FUNCTIONS: Registry[FuncExpr] = Registry("reference function")
for _key, _source in REFERENCE_SOURCES.items():
    FUNCTIONS.register(_key, _fixed(_source), _source)
FUNCTIONS.register("blaschke5", _blaschke5, "seeded 5-factor Blaschke product")

KERNELS: Registry[KernelFunction] = Registry("kernel")
KERNELS.register("zero", KernelFunction.zero, "h = 0")
KERNELS.register("boxcar", KernelFunction.boxcar, "indicator of [-T, 0]")
KERNELS.register("exponential", lambda T=1.0: KernelFunction.exponential(1.0, T), "e^{tau} on [-T, 0]")


def resolve_function(spec: str, seed: Optional[int] = None) -> Tuple[str, FuncExpr]:
    """(id, g) for a reference id, ``kernel:<id>`` (Laplace transform of a kernel) or expression source."""
    spec = spec.strip()
    head, sep, tail = spec.partition(":")
    if sep and head == "kernel":
        return spec, KERNELS.get(tail.strip()).laplace_transform()
    if spec in FUNCTIONS:
        return spec, FUNCTIONS.get(spec, settings.seed if seed is None else int(seed))
    return spec, parse(spec)


__all__ = [
    "FUNCTIONS",
    "KERNELS",
    "MAX_BLASCHKE_FACTORS",
    "REFERENCE_SOURCES",
    "blaschke_source",
    "random_blaschke_source",
    "random_blaschke_zero",
    "resolve_function",
]
