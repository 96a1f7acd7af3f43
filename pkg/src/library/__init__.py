"""Named generator families, reference functions and kernels."""

from src.library.families import FAMILIES, build_family, resolve_generator
from src.library.functions import FUNCTIONS, KERNELS, random_blaschke_source, resolve_function
from src.library.registry import Registry, RegistryEntry

__all__ = [
    "FAMILIES",
    "FUNCTIONS",
    "KERNELS",
    "Registry",
    "RegistryEntry",
    "build_family",
    "random_blaschke_source",
    "resolve_function",
    "resolve_generator",
]
