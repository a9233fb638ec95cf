"""Numerical and exact tools for multi-loop box integrals over cycles of 2x2 complex matrices."""
from __future__ import annotations

from . import coeffs, diagrams, errors, evaluate, hc, laurent, operators
from .diagrams import BoxDiagram, assign_radii, enumerate_diagrams, from_word, one_loop, sample_point
from .errors import BoxMagicError, DomainViolation
from .results import EvalResult

__version__ = "0.1.0"

__all__ = [
    "coeffs", "diagrams", "errors", "evaluate", "hc", "laurent", "operators",
    "BoxDiagram", "assign_radii", "enumerate_diagrams", "from_word", "one_loop", "sample_point",
    "BoxMagicError", "DomainViolation", "EvalResult", "__version__",
]
