"""
Potential families, the smooth plateau cutoff and far-field truncation.

All potentials are immutable callables acting on numpy arrays.  Families
with compact support expose ``support`` (a half-width); everything else
returns ``None`` there and has to be truncated before it can be handed to
the Jost integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidParameter

FD_STEP = 1e-5


def _bump(t):
    t = np.asarray(t, dtype=np.result_type(t, float))
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


@dataclass(frozen=True)
class PlateauFunction:
    """Even C-infinity cutoff: 1 on |r| <= inner, 0 on |r| >= outer."""

    inner_radius: float = 1.0
    outer_radius: float = 2.0

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise InvalidParameter("plateau radii must satisfy 0 < inner < outer")

    def _split(self, r):
        u = np.abs(np.asarray(r, dtype=np.result_type(r, float)))
        span = self.outer_radius - self.inner_radius
        a = (self.outer_radius - u) / span
        b = (u - self.inner_radius) / span
        return u, a, b, span

    def __call__(self, r):
        u, a, b, _ = self._split(r)
        ba, bb = _bump(a), _bump(b)
        denom = ba + bb
        out = np.where(denom > 0, ba / np.where(denom > 0, denom, 1.0), 0.0)
        out = np.where(u <= self.inner_radius, 1.0, out)
        out = np.where(u >= self.outer_radius, 0.0, out)
        return out[()] if out.ndim == 0 else out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        u, a, b, span = self._split(r)
        ba, bb = _bump(a), _bump(b)
        dba, dbb = _bump_prime(a), _bump_prime(b)
        denom = ba + bb
        safe = np.where(denom > 0, denom, 1.0)
        # d/du of ba/(ba+bb) with da/du = -1/span, db/du = +1/span
        du = (-dba * bb - ba * dbb) / safe**2 / span
        inside = (u > self.inner_radius) & (u < self.outer_radius)
        out = np.where(inside, du * np.sign(r), 0.0)
        return out[()] if out.ndim == 0 else out


def plateau(g: PlateauFunction, r):
    return g(r)


class Potential:
    """Base class.  Subclasses implement ``_value`` and optionally ``_deriv``."""

    kind = "abstract"
    rho: float = np.inf
    support: Optional[float] = None
    # interior points where V or its derivatives jump; the integrator aligns
    # grid nodes with them
    breakpoints: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._value(x), dtype=float)
        return out[()] if out.ndim == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._deriv(x), dtype=float)
        return out[()] if out.ndim == 0 else out

    def extended(self, x):
        """V in extended (long double) precision, for cancellation-prone sums."""
        return np.asarray(self._value(np.asarray(x, dtype=np.longdouble)))

    def second_derivative(self, x, step=1e-4):
        x = np.asarray(x, dtype=float)
        return (self(x + step) - 2 * self(x) + self(x - step)) / step**2

    def _deriv(self, x):
        return (self._value(x + FD_STEP) - self._value(x - FD_STEP)) / (2 * FD_STEP)

    def to_config(self) -> dict:
        raise NotImplementedError


def evaluate(pot: Potential, x):
    return pot(x)


@dataclass(frozen=True, eq=False)
class Free(Potential):
    kind = "Free"
    support = 0.0

    def _value(self, x):
        return np.zeros_like(x)

    def _deriv(self, x):
        return np.zeros_like(x)

    def to_config(self):
        return {"kind": "Free"}


@dataclass(frozen=True, eq=False)
class SquareBarrier(Potential):
    """``height`` on |x| < halfwidth; a negative height gives a square well."""

    height: float = 2.0
    halfwidth: float = 1.0
    kind = "SquareBarrier"

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise InvalidParameter("halfwidth must be positive")

    @property
    def support(self):
        return self.halfwidth

    @property
    def breakpoints(self):
        return (-self.halfwidth, self.halfwidth)

    def _value(self, x):
        return np.where(np.abs(x) <= self.halfwidth, self.height, 0.0)

    def _deriv(self, x):
        return np.zeros_like(x)

    def to_config(self):
        return {"kind": "SquareBarrier", "height": self.height, "halfwidth": self.halfwidth}


@dataclass(frozen=True, eq=False)
class GaussianBarrier(Potential):
    """V(x) = E0 exp(-(x/width)^2); curvature mu = 2 sqrt(E0)/width."""

    E0: float = 1.0
    width: float = 1.0
    kind = "GaussianBarrier"

    def __post_init__(self):
        if self.width <= 0:
            raise InvalidParameter("width must be positive")

    @property
    def mu(self):
        return 2.0 * np.sqrt(self.E0) / self.width

    def _value(self, x):
        return self.E0 * np.exp(-((x / self.width) ** 2))

    def _deriv(self, x):
        return -2.0 * x / self.width**2 * self._value(x)

    def to_config(self):
        return {"kind": "GaussianBarrier", "E0": self.E0, "width": self.width}


@dataclass(frozen=True, eq=False)
class GaussianSum(Potential):
    """Sum of Gaussians a_i exp(-((x - c_i)/s_i)^2), optionally re-centred.

    With ``center_at_max`` the coordinate is shifted so that the local
    maximum nearest to ``max_guess`` sits at x = 0.
    """

    amplitudes: tuple = ()
    centers: tuple = ()
    widths: tuple = ()
    shift: float = 0.0
    kind = "GaussianSum"

    def __post_init__(self):
        if not (len(self.amplitudes) == len(self.centers) == len(self.widths)):
            raise InvalidParameter("amplitudes, centers and widths must have equal length")
        if any(w <= 0 for w in self.widths):
            raise InvalidParameter("Gaussian widths must be positive")

    def _terms(self, x):
        y = x[..., None] + self.shift
        a = np.asarray(self.amplitudes, dtype=float)
        c = np.asarray(self.centers, dtype=float)
        s = np.asarray(self.widths, dtype=float)
        return y, a, c, s

    def _value(self, x):
        y, a, c, s = self._terms(x)
        return np.sum(a * np.exp(-(((y - c) / s) ** 2)), axis=-1)

    def _deriv(self, x):
        y, a, c, s = self._terms(x)
        return np.sum(-2 * (y - c) / s**2 * a * np.exp(-(((y - c) / s) ** 2)), axis=-1)

    def to_config(self):
        return {
            "kind": self.kind,
            "amplitudes": list(self.amplitudes),
            "centers": list(self.centers),
            "widths": list(self.widths),
            "shift": self.shift,
        }


@dataclass(frozen=True, eq=False)
class WellInIsland(GaussianSum):
    """A Gaussian well dug into a broad Gaussian plateau.

    The plateau walls separate the well (the island) from the region where
    V falls back to zero (the sea).  Defaults keep the tunnelling action
    near 0.5 so that widths at h in [0.05, 0.08] stay above 1e-8.
    """

    kind = "WellInIsland"

    @classmethod
    def default(cls, plateau=0.5, plateau_width=1.2, depth=0.4, well_width=0.4):
        return cls(
            amplitudes=(plateau, -depth),
            centers=(0.0, 0.0),
            widths=(plateau_width, well_width),
        )

    @property
    def well_bottom(self):
        return float(self(0.0))

    @property
    def harmonic_frequency(self):
        # -h^2 u'' + (V0 + k x^2) u: levels V0 + h sqrt(k) (2n + 1), k = V''(0)/2
        return float(np.sqrt(self.second_derivative(0.0) / 2))


@dataclass(frozen=True, eq=False)
class DoubleStructure(GaussianSum):
    """Barrier top at x = 0 with a trapping well and a taller wall on its left.

    At the barrier-top energy the trapped set is the hyperbolic point plus
    a homoclinic loop over the well, the geometry of the homoclinic
    line-shape formula.
    """

    kind = "DoubleStructure"

    @classmethod
    def default(cls, top=1.0, top_width=1.0, wall=2.0, wall_center=-3.0, wall_width=0.7):
        amps = (top, wall)
        cents = (0.0, wall_center)
        wids = (top_width, wall_width)
        probe = GaussianSum(amplitudes=amps, centers=cents, widths=wids)
        res = minimize_scalar(lambda y: -float(probe(y)), bracket=(-0.5, 0.0, 0.5), tol=1e-14)
        return cls(amplitudes=amps, centers=cents, widths=wids, shift=float(res.x))

    @property
    def E0(self):
        return float(self(0.0))


@dataclass(frozen=True, eq=False)
class PowerTail(Potential):
    """V(x) = amplitude <x>^{-rho}, with <x> = sqrt(1 + x^2)."""

    amplitude: float = 1.0
    rho: float = 2.0
    kind = "PowerTail"

    def __post_init__(self):
        if self.rho <= 0:
            raise InvalidParameter("rho must be positive")

    @property
    def bound(self):
        # |V| <= C <x>^-rho and |V'| <= C rho <x>^-(rho+1)
        return abs(self.amplitude), abs(self.amplitude) * self.rho

    def _value(self, x):
        return self.amplitude * (1.0 + x * x) ** (-self.rho / 2)

    def _deriv(self, x):
        return -self.amplitude * self.rho * x * (1.0 + x * x) ** (-self.rho / 2 - 1)

    def to_config(self):
        return {"kind": "PowerTail", "amplitude": self.amplitude, "rho": self.rho}


@dataclass(frozen=True, eq=False)
class Truncated(Potential):
    """W(x) = g(x/R) V(x)."""

    base: Potential = field(default_factory=Free)
    R: float = 1.0
    plateau: PlateauFunction = field(default_factory=PlateauFunction)
    kind = "Truncated"

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidParameter("truncation radius R must be positive")

    @property
    def rho(self):
        return self.base.rho

    @property
    def support(self):
        outer = self.plateau.outer_radius * self.R
        if self.base.support is not None:
            return min(outer, self.base.support)
        return outer

    @property
    def breakpoints(self):
        return tuple(b for b in self.base.breakpoints if abs(b) < self.support)

    def _value(self, x):
        return self.plateau(x / self.R) * self.base._value(x)

    def _deriv(self, x):
        g = self.plateau(x / self.R)
        dg = self.plateau.derivative(x / self.R) / self.R
        return dg * self.base(x) + g * self.base.derivative(x)

    def to_config(self):
        return {
            "kind": "Truncated",
            "base": self.base.to_config(),
            "R": self.R,
            "plateau": [self.plateau.inner_radius, self.plateau.outer_radius],
        }


def truncate(base: Potential, R: float, g: Optional[PlateauFunction] = None) -> Truncated:
    if not R > 0:
        raise InvalidParameter(f"truncation radius must be positive, got {R}")
    return Truncated(base=base, R=float(R), plateau=g or PlateauFunction())


def japanese(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


@dataclass
class DecayReport:
    value_ratio: float
    derivative_ratio: float
    violated: bool


def decay_certificate(pot: Potential, rho: float, x_samples: Sequence[float], bound: float = np.inf) -> DecayReport:
    """Sample |V| <x>^rho and |V'| <x>^(rho+1); V' by central differences."""
    x = np.asarray(x_samples, dtype=float)
    v = np.abs(pot(x))
    dv = np.abs((pot(x + FD_STEP) - pot(x - FD_STEP)) / (2 * FD_STEP))
    jx = japanese(x)
    r0 = float(np.max(v * jx**rho)) if x.size else 0.0
    r1 = float(np.max(dv * jx ** (rho + 1))) if x.size else 0.0
    return DecayReport(r0, r1, violated=bool(r0 > bound or r1 > bound))


_FAMILIES = {
    "Free": Free,
    "SquareBarrier": SquareBarrier,
    "GaussianBarrier": GaussianBarrier,
    "PowerTail": PowerTail,
    "GaussianSum": GaussianSum,
}


def from_config(cfg: dict) -> Potential:
    """Build a potential from the ``potential`` block of an experiment config."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InvalidParameter("potential block needs a 'kind'")
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind == "Truncated":
        plat = cfg.get("plateau", [1.0, 2.0])
        return truncate(from_config(cfg["base"]), cfg["R"], PlateauFunction(*plat))
    if kind == "WellInIsland":
        if "amplitudes" in cfg:
            return WellInIsland(**_tuples(cfg))
        return WellInIsland.default(**cfg)
    if kind == "DoubleStructure":
        if "amplitudes" in cfg:
            return DoubleStructure(**_tuples(cfg))
        return DoubleStructure.default(**cfg)
    if kind not in _FAMILIES:
        raise InvalidParameter(f"unknown potential kind {kind!r}")
    return _FAMILIES[kind](**_tuples(cfg))


def _tuples(cfg):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in cfg.items()}
