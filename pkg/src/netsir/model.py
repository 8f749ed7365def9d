"""Rate parameters shared by every layer of the model."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ModelParams"]


@dataclass(frozen=True)
class ModelParams:
    """Per-edge infection rate beta, per-infective recovery rate gamma,
    per-edge dropping rate omega (all per unit time, all >= 0)."""

    beta: float
    gamma: float
    omega: float = 0.0

    def __post_init__(self):
        for name in ("beta", "gamma", "omega"):
            v = getattr(self, name)
            if not v >= 0.0:
                raise ValueError(f"{name} must be >= 0, got {v}")

    @property
    def p_omega(self) -> float:
        """Probability a vanishing stub vanished by dropping rather than infection."""
        tot = self.beta + self.omega
        return self.omega / tot if tot > 0.0 else 0.0

    def modified(self) -> "ModelParams":
        """The no-dropping model with recovery sped up by the dropping rate."""
        return ModelParams(beta=self.beta, gamma=self.gamma + self.omega, omega=0.0)
