"""
Two-channel scattering matrix, scattering phase, SSF derivative, Weyl term.

Channel labels follow the direction of propagation: ``+`` is a wave
exp(+i sqrt(lam) x/h) (moving right), ``-`` is exp(-i sqrt(lam) x/h).
S_{a,b} maps incoming direction b to outgoing direction a, so

    S = [[S_{+,+}, S_{+,-}],     [[t,   r_R],
         [S_{-,+}, S_{-,-}]]  =   [r_L, t  ]]

and the free problem gives the identity.  The diagonal carries the
transmission, the off-diagonal the reflections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import BelowThreshold, GridTooCoarse
from .potentials import Potential
from .schrodinger1d import EnergyPoint, Grid, build_grid, connection, jost_determinants, jost_left, jost_right

# largest |d theta| accepted between neighbouring energies
MAX_PHASE_STEP = 0.45 * np.pi


@dataclass
class ScatteringRecord:
    lam: float
    h: float
    s_pp: complex
    s_pm: complex
    s_mp: complex
    s_mm: complex
    theta: float = np.nan
    ssf_deriv: Optional[float] = None

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.s_pp, self.s_pm], [self.s_mp, self.s_mm]])

    @property
    def det(self) -> complex:
        return self.s_pp * self.s_mm - self.s_pm * self.s_mp

    @property
    def transmission(self) -> complex:
        return self.s_pp

    def unitarity_defect(self) -> float:
        s = self.matrix
        return float(np.linalg.norm(s.conj().T @ s - np.eye(2), 2))


def _check_energy(lam):
    if not lam > 0:
        raise BelowThreshold(f"scattering needs lambda > 0, got {lam}")


def smatrix(pot: Potential, lam: float, h: float, grid=None) -> ScatteringRecord:
    _check_energy(lam)
    ep = EnergyPoint.upper(lam, h)
    g = build_grid(pot, [ep.z], h, grid)
    fm = jost_left(pot, ep, g)
    fp = jost_right(pot, ep, g)
    w = connection(fm, fp).wronskian
    k = ep.k
    m = int(np.argmin(np.abs(fm.x)))
    a, da = fm.values[m], fm.derivs[m]
    b, db = fp.values[m], fp.derivs[m]
    t = 2j * k / w
    # r_L = -W(conj f_-, f_+)/w,  r_R = -W(f_-, conj f_+)/w
    r_left = -(np.conj(a) * db - np.conj(da) * b) / w
    r_right = -(a * np.conj(db) - da * np.conj(b)) / w
    return ScatteringRecord(float(lam), float(h), complex(t), complex(r_right), complex(r_left), complex(t))


def unwrap_phase(lams, angles) -> np.ndarray:
    """Continuous theta from samples of arg t (theta modulo 2 pi).

    det S = e^{2 i theta} only fixes theta modulo pi, so steps of pi/2 or
    more would alias silently; arg t keeps them visible up to pi.
    """
    theta = np.unwrap(np.asarray(angles, dtype=float))
    steps = np.abs(np.diff(theta))
    if steps.size and steps.max() >= MAX_PHASE_STEP:
        i = int(np.argmax(steps))
        raise GridTooCoarse(f"phase step {steps[i]:.3g} between lambda={lams[i]:.6g} and {lams[i + 1]:.6g}")
    # anchor theta(lam_min) in (-pi/2, pi/2]
    shift = np.pi * np.ceil((theta[0] - np.pi / 2) / np.pi) if theta.size else 0.0
    return theta - shift


def scattering_phase(records: Sequence[ScatteringRecord]) -> np.ndarray:
    lams = np.array([r.lam for r in records])
    if np.any(np.diff(lams) <= 0):
        raise ValueError("records must be sorted by increasing lambda")
    theta = unwrap_phase(lams, [np.angle(r.transmission) for r in records])
    for r, th in zip(records, theta):
        r.theta = float(th)
    return theta


def phase_from_determinant(pot: Potential, lams, h: float, grid=None) -> np.ndarray:
    """theta = arg t = arg(2ik) - arg w, using det S = t / conj(t)."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise BelowThreshold("scattering needs lambda > 0")
    ks = np.sqrt(lams) / h
    g = grid if isinstance(grid, Grid) else build_grid(pot, lams, h, grid)
    w = jost_determinants(pot, lams.astype(complex), h, grid=g, ks=ks)
    return np.pi / 2 - np.angle(w)


def ssf_derivative(pot: Potential, lam: float, h: float, dlambda: Optional[float] = None, grid=None) -> float:
    """s'(lam) = theta'(lam)/pi, five-point stencil on the unwrapped phase."""
    _check_energy(lam)
    d = dlambda if dlambda is not None else 1e-4 * lam
    if lam - 2 * d <= 0:
        raise BelowThreshold("stencil reaches below threshold")
    pts = lam + d * np.arange(-2, 3)
    th = unwrap_phase(pts, phase_from_determinant(pot, pts, h, grid))
    deriv = (th[0] - 8 * th[1] + 8 * th[3] - th[4]) / (12 * d)
    return float(deriv / np.pi)


def _wrapped(step):
    return (step + np.pi) % (2 * np.pi) - np.pi


def _bridge(pot, a, b, ta, tb, h, grid, depth, narrow):
    """Phase increment from a to b, bisecting until every step is small.

    A step of nearly pi that survives down to rounding-level spacing is a
    resonance narrower than double precision can resolve; theta rises by
    pi across it, so it is taken as +pi and recorded in ``narrow``.
    """
    step = _wrapped(tb - ta)
    if abs(step) < MAX_PHASE_STEP:
        return step
    mid = 0.5 * (a + b)
    if depth == 0 or not a < mid < b:
        if abs(step) > 0.9 * np.pi:
            narrow.append(mid)
            return np.pi
        raise GridTooCoarse(f"phase step {abs(step):.3g} near lambda={mid:.12g} survives refinement")
    tm = phase_from_determinant(pot, [mid], h, grid)[0]
    return _bridge(pot, a, mid, ta, tm, h, grid, depth - 1, narrow) + _bridge(pot, mid, b, tm, tb, h, grid, depth - 1, narrow)


def refined_phase(pot: Potential, lams, h: float, grid=None, max_depth: int = 60):
    """theta on a sorted grid, bisecting steps too large to unwrap safely.

    Returns (theta, narrow) with ``narrow`` the locations of resonances
    too narrow to resolve even at rounding-level spacing.
    """
    lams = np.asarray(lams, dtype=float)
    g = grid if isinstance(grid, Grid) else build_grid(pot, lams, h, grid)
    ang = phase_from_determinant(pot, lams, h, g)
    narrow: list = []
    inc = [_bridge(pot, lams[i], lams[i + 1], ang[i], ang[i + 1], h, g, max_depth, narrow) for i in range(lams.size - 1)]
    theta = ang[0] + np.concatenate([[0.0], np.cumsum(inc)])
    shift = np.pi * np.ceil((theta[0] - np.pi / 2) / np.pi)
    return theta - shift, narrow


def ssf_curve(pot: Potential, lams, h: float, grid=None, refine: bool = False):
    """s' sampled on a sorted grid by differentiating the unwrapped phase.

    With ``refine`` large phase steps are bisected instead of rejected; an
    unresolved resonance then shows up as a spike of unit mass.
    """
    lams = np.asarray(lams, dtype=float)
    if refine:
        th, _ = refined_phase(pot, lams, h, grid)
    else:
        th = unwrap_phase(lams, phase_from_determinant(pot, lams, h, grid))
    return np.gradient(th, lams, edge_order=2) / np.pi


@dataclass
class SsfCurve:
    lambdas: np.ndarray
    values: np.ndarray
    h: float


def _breaks(pot: Potential, lam: float, lo: float, hi: float):
    xs = np.linspace(lo, hi, 20001)
    f = lam - pot(xs)
    idx = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    pts = [float(xs[i]) for i in idx] + [b for b in pot.breakpoints if lo < b < hi]
    return sorted(set(pts))


def weyl_leading(pot: Potential, lam: float) -> float:
    """s_0(lam) = (1/pi) int (sqrt(lam - V)_+ - sqrt(lam)) dx."""
    _check_energy(lam)
    sl = np.sqrt(lam)

    def f(x):
        return np.sqrt(max(lam - float(pot(x)), 0.0)) - sl

    if pot.support is not None:
        lim = pot.support
        if lim == 0:
            return 0.0
        val, _ = quad(f, -lim, lim, points=_breaks(pot, lam, -lim, lim) or None, limit=500, epsabs=1e-11, epsrel=1e-11)
    else:
        core = 50.0
        val, _ = quad(f, -core, core, points=_breaks(pot, lam, -core, core) or None, limit=500, epsabs=1e-11, epsrel=1e-11)
        for a, b in ((core, np.inf), (-np.inf, -core)):
            tail, _ = quad(f, a, b, limit=500, epsabs=1e-12)
            val += tail
    return float(val / np.pi)


def integrated_ssf(pot: Potential, lam: float, h: float, lam_high: Optional[float] = None, n: int = 4000) -> float:
    """s(lam) = theta(lam)/pi with theta -> 0 at high energy.

    The phase is tracked from ``lam`` up to ``lam_high`` and anchored there
    with the Born value theta ~ -int V / (2 h sqrt(lam)).
    """
    _check_energy(lam)
    if lam_high is None:
        lam_high = max(50.0 * lam, 50.0 * float(np.max(np.abs(pot(np.linspace(-pot.support, pot.support, 2001))))) if pot.support else 50.0 * lam)
    lams = np.geomspace(lam, lam_high, n)
    th = unwrap_phase(lams, phase_from_determinant(pot, lams, h))
    xs = np.linspace(-pot.support, pot.support, 20001) if pot.support else np.zeros(1)
    born = -np.trapezoid(pot(xs), xs) / (2 * h * np.sqrt(lam_high)) if pot.support else 0.0
    return float((th[0] - th[-1] + born) / np.pi)
