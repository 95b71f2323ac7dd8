"""Smooth spatial cutoffs chi used by the resolvent and propagator checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .potentials import _bump


@dataclass(frozen=True)
class CutoffSpec:
    """chi = amplitude on |x| <= inner, smooth decay to 0 at |x| = radius.

    ``inner = 0`` gives a plain bump supported in [-radius, radius].
    """

    radius: float = 1.0
    inner: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (0 <= self.inner < self.radius):
            raise InvalidParameter("cutoff needs 0 <= inner < radius")

    def __call__(self, x):
        u = np.abs(np.asarray(x, dtype=float))
        span = self.radius - self.inner
        a = _bump((self.radius - u) / span)
        b = _bump((u - self.inner) / span)
        denom = a + b
        out = np.where(denom > 0, a / np.where(denom > 0, denom, 1.0), 0.0)
        out = np.where(u <= self.inner, 1.0, out)
        out = np.where(u >= self.radius, 0.0, out)
        return self.amplitude * out

    def scaled(self, factor: float) -> "CutoffSpec":
        return CutoffSpec(self.radius, self.inner, self.amplitude * factor)

    def nodes(self, spacing: float):
        """Midpoint quadrature nodes over the support with spacing <= ``spacing``."""
        n = max(8, int(np.ceil(2 * self.radius / spacing)))
        dx = 2 * self.radius / n
        x = -self.radius + dx * (np.arange(n) + 0.5)
        return x, dx
