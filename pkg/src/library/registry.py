"""
Keyed registries for reproducible experiments.

Every builtin generator family, reference function and kernel is addressed by
a short string id from the command line. Builds are cached per argument tuple,
so repeated lookups inside a sweep return the same object.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Generic, Hashable, Tuple, TypeVar

from src.core.errors import InvalidInputError

T = TypeVar("T")


@dataclass
class RegistryEntry(Generic[T]):
    key: str
    constructor: Callable[..., T]
    description: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)


class Registry(Generic[T]):
    def __init__(self, kind: str):
        self.kind = kind
        self._entries: Dict[str, RegistryEntry[T]] = {}
        self._built: Dict[Tuple[str, Tuple[Hashable, ...]], T] = {}
        self._lock = threading.Lock()

    def register(self, key: str, constructor: Callable[..., T], description: str = "", **extra: Any) -> None:
        if key in self._entries:
            raise ValueError(f"{self.kind} key already registered: {key}")
        self._entries[key] = RegistryEntry(key, constructor, description, dict(extra))

    def entry(self, key: str) -> RegistryEntry[T]:
        if key not in self._entries:
            known = ", ".join(sorted(self._entries))
            raise InvalidInputError(f"unknown {self.kind} '{key}' (known: {known})")
        return self._entries[key]

    def get(self, key: str, *args: Hashable) -> T:
        """Build (once) the object registered under ``key`` for these arguments."""
        entry = self.entry(key)
        cache_key = (key, tuple(args))
        with self._lock:
            if cache_key not in self._built:
                self._built[cache_key] = entry.constructor(*args)
            return self._built[cache_key]

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def keys(self) -> Tuple[str, ...]:
        return tuple(sorted(self._entries))

    def list(self) -> Dict[str, Dict[str, Any]]:
        return {k: {"description": e.description, **e.extra} for k, e in sorted(self._entries.items())}


__all__ = ["Registry", "RegistryEntry"]
