"""The odd power Phi(z) = |z|^(p-2) z and its clamped Lipschitz version."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Nonlinearity:
    p: float
    delta: float = 0.0

    def __post_init__(self):
        if not (1.0 < self.p < 2.0):
            raise ValidationError(f"p must lie in (1,2), got {self.p!r}")
        if not (self.delta >= 0.0) or not np.isfinite(self.delta):
            raise ValidationError(f"delta must be finite and >= 0, got {self.delta!r}")

    @property
    def lipschitz(self) -> float:
        """Global Lipschitz constant of phi_reg: delta^(p-2).

        Inside the clamp the map is linear with exactly this slope, and
        outside it the slope (p-1)|z|^(p-2) is smaller.
        """
        if self.delta == 0.0:
            return np.inf
        return self.delta ** (self.p - 2.0)

    def __call__(self, z):
        return phi_reg(z, self)


def phi(z, p: float):
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0.0, z * a ** (p - 2.0), 0.0)
    return out[()] if out.ndim == 0 else out


def phi_reg(z, nl: Nonlinearity):
    if nl.delta == 0.0:
        return phi(z, nl.p)
    z = np.asarray(z, dtype=float)
    out = z * np.maximum(np.abs(z), nl.delta) ** (nl.p - 2.0)
    return out[()] if out.ndim == 0 else out
