"""
HinfCalc: Toeplitz-operator functional calculus for stable matrix generators
Version: 1.0.0

This package builds g(A) for bounded analytic functions g on the left
half-plane and checks it against independent references.

Features:
- Expression language with H-infinity certification
- Discrete Laplace transform, Riesz projection and Toeplitz multipliers
- Construction of g(A) with spectral, substitution and Hille-Phillips oracles
- Admissibility constants from Gramians and time quadrature
- Norm sweeps with computable certificates, worst-case search, acceptance suite
"""

__version__ = "1.0.0"

from src.core.config import settings

__all__ = ["settings"]
