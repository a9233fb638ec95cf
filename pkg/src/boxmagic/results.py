"""Result records shared by the integrators and evaluators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class EvalResult:
    """A complex value with an error estimate.

    ``method`` is one of ``"quadrature"``, ``"montecarlo"`` or ``"spectral"``;
    ``cost`` counts integrand evaluations (nodes or samples) or basis terms.
    """

    value: complex
    error: float
    method: str
    cost: int = 0
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.error >= 0.0) or self.error == float("inf"):
            raise ValueError(f"error estimate must be finite and non-negative, got {self.error}")

    def to_record(self, **extra) -> dict[str, Any]:
        rec = {
            "method": self.method,
            "value_re": float(self.value.real),
            "value_im": float(self.value.imag),
            "error": float(self.error),
            "cost": int(self.cost),
        }
        rec.update(extra)
        return rec
