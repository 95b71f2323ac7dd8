"""
Jost solutions, the Jost determinant and the outgoing Green kernel for

    -h^2 psi'' + V psi = z psi

with compactly supported V, at complex z.

The first-order system for (psi, psi') is integrated with the fourth-order
Magnus scheme (two Gauss nodes per cell).  Each cell map is the exact
exponential of a traceless 2x2 matrix, so the transfer matrices have unit
determinant to rounding; at real energy they are real.  This is what keeps
the scattering matrix unitary to ~1e-12 even on long grids.

Branch: sqrt(z) is the principal root.  For Im z > 0 this is the physical
sheet; continuing through (0, inf) it reaches the lower half-plane where
resonances live.  The negative real axis is the cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit

from .cutoff import CutoffSpec
from .errors import AtPole, BranchAmbiguity, NumericalFailure, ResolutionError, UnsupportedPotential
from .potentials import Potential

SQRT3 = np.sqrt(3.0)
GAUSS_LO = 0.5 - SQRT3 / 6.0
GAUSS_HI = 0.5 + SQRT3 / 6.0


class Side(Enum):
    UPPER = "upper"  # z = lambda + i0
    LOWER = "lower"  # z = lambda - i0
    INTERIOR = "interior"


class Orientation(Enum):
    FROM_RIGHT = "right"  # f_+ ~ exp(+i k x) as x -> +inf
    FROM_LEFT = "left"  # f_- ~ exp(-i k x) as x -> -inf


@dataclass(frozen=True)
class EnergyPoint:
    z: complex
    h: float
    side: Side = Side.INTERIOR

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "z", complex(self.z))
        if self.side is not Side.INTERIOR and self.z.imag != 0:
            raise ValueError("boundary values lambda +- i0 need a real energy")

    @classmethod
    def upper(cls, lam, h):
        return cls(complex(lam), h, Side.UPPER)

    @classmethod
    def lower(cls, lam, h):
        return cls(complex(lam), h, Side.LOWER)

    @property
    def k(self) -> complex:
        return momentum(self.z, self.h, self.side)


def momentum(z: complex, h: float, side: Side = Side.INTERIOR) -> complex:
    z = complex(z)
    if z.imag == 0 and z.real <= 0:
        if side is Side.UPPER:
            return 1j * np.sqrt(-z.real) / h
        if side is Side.LOWER:
            return -1j * np.sqrt(-z.real) / h
        raise BranchAmbiguity(f"z={z} lies on the branch cut; pass side=upper or side=lower")
    root = np.sqrt(z)
    if side is Side.LOWER:
        root = -root
    return complex(root / h)


@dataclass(frozen=True)
class GridSpec:
    """Integration grid over [-L, L].

    ``L`` defaults to the potential support plus ``margin``; ``dx`` defaults
    to min(max_dx, 0.1/k_max) with k_max the largest local wavenumber.
    Outside the support the Jost solutions are exact plane waves, and in the
    lower half-plane every extra unit of length amplifies rounding by
    exp(2 |Im k|), so the margin defaults to zero.
    """

    L: Optional[float] = None
    dx: Optional[float] = None
    margin: float = 0.0
    max_dx: float = 0.01
    kdx: float = 0.1


@njit(cache=True)
def _cell_map(q1, q2, dx, sgn):
    c = SQRT3 * dx * dx / 12.0
    a = sgn * c * (q1 - q2)
    b = sgn * dx
    d = sgn * 0.5 * dx * (q1 + q2)
    s2 = a * a + b * d
    if abs(s2) < 1e-3:
        ch = 1.0 + s2 / 2.0 * (1.0 + s2 / 12.0 * (1.0 + s2 / 30.0 * (1.0 + s2 / 56.0)))
        sh = 1.0 + s2 / 6.0 * (1.0 + s2 / 20.0 * (1.0 + s2 / 42.0 * (1.0 + s2 / 72.0)))
    else:
        s = np.sqrt(s2)
        ch = np.cosh(s)
        sh = np.sinh(s) / s
    return ch + sh * a, sh * b, sh * d, ch - sh * a


@njit(cache=True)
def _sweep(dxs, v1, v2, z, h2, psi0, dpsi0, forward, psi, dpsi):
    n = dxs.size + 1
    if forward:
        psi[0] = psi0
        dpsi[0] = dpsi0
        for j in range(n - 1):
            m11, m12, m21, m22 = _cell_map((v1[j] - z) / h2, (v2[j] - z) / h2, dxs[j], 1.0)
            psi[j + 1] = m11 * psi[j] + m12 * dpsi[j]
            dpsi[j + 1] = m21 * psi[j] + m22 * dpsi[j]
    else:
        psi[n - 1] = psi0
        dpsi[n - 1] = dpsi0
        for j in range(n - 2, -1, -1):
            m11, m12, m21, m22 = _cell_map((v1[j] - z) / h2, (v2[j] - z) / h2, dxs[j], -1.0)
            psi[j] = m11 * psi[j + 1] + m12 * dpsi[j + 1]
            dpsi[j] = m21 * psi[j + 1] + m22 * dpsi[j + 1]


@njit(cache=True)
def _wronskians(x, dxs, v1, v2, zs, ks, h2, m):
    """w(z) = f_- f_+' - f_-' f_+ at node m for every (z, k) pair."""
    n = x.size
    out = np.empty(zs.size, dtype=np.complex128)
    for i in range(zs.size):
        z = zs[i]
        k = ks[i]
        e = np.exp(-1j * k * x[0])
        p = e
        dp = -1j * k * e
        for j in range(m):
            m11, m12, m21, m22 = _cell_map((v1[j] - z) / h2, (v2[j] - z) / h2, dxs[j], 1.0)
            p, dp = m11 * p + m12 * dp, m21 * p + m22 * dp
        e = np.exp(1j * k * x[n - 1])
        r = e
        dr = 1j * k * e
        for j in range(n - 2, m - 1, -1):
            m11, m12, m21, m22 = _cell_map((v1[j] - z) / h2, (v2[j] - z) / h2, dxs[j], -1.0)
            r, dr = m11 * r + m12 * dr, m21 * r + m22 * dr
        out[i] = p * dr - dp * r
    return out


@dataclass(frozen=True)
class Grid:
    x: np.ndarray
    dxs: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    @property
    def L(self):
        return float(self.x[-1])

    @property
    def mid(self) -> int:
        return int(np.argmin(np.abs(self.x)))


def _local_kmax(pot: Potential, L: float, zs, h: float) -> float:
    xs = np.linspace(-L, L, 4001)
    v = pot(xs)
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    spread = np.max(np.abs(v[:, None] - zs[None, :]))
    kz = np.max(np.abs(np.sqrt(zs))) / h
    return float(max(np.sqrt(spread) / h, kz, 1e-12))


def build_grid(pot: Potential, zs, h: float, grid: Optional[GridSpec] = None) -> Grid:
    """Nodes over [-L, L] aligned with the potential's breakpoints."""
    grid = grid or GridSpec()
    if pot.support is None:
        raise UnsupportedPotential(f"{pot.kind} potential is not compactly supported; truncate it first")
    L = grid.L if grid.L is not None else pot.support + grid.margin
    if L <= 0:
        L = 1.0
    if L < pot.support:
        raise UnsupportedPotential(f"grid half-length {L} does not cover the support {pot.support}")
    kmax = _local_kmax(pot, L, zs, h)
    if grid.dx is not None:
        if kmax * grid.dx > 0.5:
            raise ResolutionError(f"k*dx = {kmax * grid.dx:.3g} > 0.5; refine the grid")
        dx = grid.dx
    else:
        dx = min(grid.max_dx, grid.kdx / kmax)
    edges = [-L] + sorted(b for b in pot.breakpoints if -L < b < L) + [L]
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(np.ceil((b - a) / dx)))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    x = np.concatenate(pieces + [np.array([L])])
    dxs = np.diff(x)
    v1 = pot(x[:-1] + GAUSS_LO * dxs)
    v2 = pot(x[:-1] + GAUSS_HI * dxs)
    return Grid(x, dxs, np.asarray(v1, float), np.asarray(v2, float))


@dataclass
class JostSolution:
    x: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    orientation: Orientation
    k: complex
    z: complex
    h: float
    pot: Potential = field(repr=False)

    def evaluate(self, xq):
        """(psi, psi') at arbitrary points: partial Magnus step inside the
        grid, exact plane waves outside."""
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        psi = np.empty(xq.shape, dtype=complex)
        dpsi = np.empty(xq.shape, dtype=complex)
        x = self.x
        k = self.k
        left = xq < x[0]
        right = xq > x[-1]
        inside = ~(left | right)
        for mask, idx in ((left, 0), (right, -1)):
            if not mask.any():
                continue
            p0, d0, x0 = self.values[idx], self.derivs[idx], x[idx]
            # psi = alpha e^{ikx} + beta e^{-ikx} matched at the end node
            e0 = np.exp(1j * k * x0)
            alpha = (p0 + d0 / (1j * k)) / (2 * e0)
            beta = (p0 - d0 / (1j * k)) * e0 / 2
            ep = np.exp(1j * k * xq[mask])
            psi[mask] = alpha * ep + beta / ep
            dpsi[mask] = 1j * k * (alpha * ep - beta / ep)
        if inside.any():
            xi = xq[inside]
            j = np.clip(np.searchsorted(x, xi, side="right") - 1, 0, x.size - 1)
            d = xi - x[j]
            q1 = (self.pot(x[j] + GAUSS_LO * d) - self.z) / self.h**2
            q2 = (self.pot(x[j] + GAUSS_HI * d) - self.z) / self.h**2
            c = SQRT3 * d * d / 12.0
            a = c * (q1 - q2)
            dd = 0.5 * d * (q1 + q2)
            s2 = a * a + d * dd
            s = np.sqrt(s2.astype(complex))
            small = np.abs(s2) < 1e-3
            ch = np.where(small, 1 + s2 / 2 * (1 + s2 / 12 * (1 + s2 / 30)), np.cosh(s))
            with np.errstate(invalid="ignore", divide="ignore"):
                sh = np.where(small, 1 + s2 / 6 * (1 + s2 / 20 * (1 + s2 / 42)), np.sinh(s) / s)
            p, dp = self.values[j], self.derivs[j]
            psi[inside] = (ch + sh * a) * p + sh * d * dp
            dpsi[inside] = sh * dd * p + (ch - sh * a) * dp
        return psi, dpsi

    def __call__(self, xq):
        return self.evaluate(xq)[0]


def _jost(pot, ep: EnergyPoint, grid, orientation) -> JostSolution:
    k = ep.k
    if abs(k) == 0:
        raise BranchAmbiguity("z = 0 is a threshold; Jost solutions degenerate")
    g = grid if isinstance(grid, Grid) else build_grid(pot, [ep.z], ep.h, grid)
    n = g.x.size
    psi = np.empty(n, dtype=np.complex128)
    dpsi = np.empty(n, dtype=np.complex128)
    if orientation is Orientation.FROM_RIGHT:
        e = np.exp(1j * k * g.x[-1])
        _sweep(g.dxs, g.v1, g.v2, ep.z, ep.h**2, e, 1j * k * e, False, psi, dpsi)
    else:
        e = np.exp(-1j * k * g.x[0])
        _sweep(g.dxs, g.v1, g.v2, ep.z, ep.h**2, e, -1j * k * e, True, psi, dpsi)
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(dpsi))):
        raise NumericalFailure("Jost solution overflowed")
    return JostSolution(g.x, psi, dpsi, orientation, k, ep.z, ep.h, pot)


def jost_right(pot: Potential, ep: EnergyPoint, grid=None) -> JostSolution:
    return _jost(pot, ep, grid, Orientation.FROM_RIGHT)


def jost_left(pot: Potential, ep: EnergyPoint, grid=None) -> JostSolution:
    return _jost(pot, ep, grid, Orientation.FROM_LEFT)


@dataclass(frozen=True)
class JostConnection:
    wronskian: complex
    z: complex
    h: float


def wronskian_profile(fm: JostSolution, fp: JostSolution) -> np.ndarray:
    return fm.values * fp.derivs - fm.derivs * fp.values


def connection(fm: JostSolution, fp: JostSolution) -> JostConnection:
    m = int(np.argmin(np.abs(fm.x)))
    w = fm.values[m] * fp.derivs[m] - fm.derivs[m] * fp.values[m]
    return JostConnection(complex(w), fm.z, fm.h)


def jost_determinant(pot: Potential, z: complex, h: float, side=None, grid=None) -> complex:
    """w(z) = f_- f_+' - f_-' f_+ (unscaled; the free value is 2i sqrt(z)/h)."""
    side = Side(side) if side is not None else Side.INTERIOR
    ep = EnergyPoint(z, h, side)
    return complex(jost_determinants(pot, [ep.z], h, grid=grid, ks=[ep.k])[0])


def jost_determinants(pot: Potential, zs, h: float, grid=None, ks=None) -> np.ndarray:
    """Vectorised w(z) on one shared grid (principal branch unless ``ks`` given)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    if ks is None:
        ks = np.array([momentum(z, h) for z in zs], dtype=np.complex128)
    else:
        ks = np.asarray(ks, dtype=np.complex128)
    g = grid if isinstance(grid, Grid) else build_grid(pot, zs, h, grid)
    return _wronskians(g.x, g.dxs, g.v1, g.v2, zs, ks, h * h, g.mid)


def determinant_noise(pot: Potential, zs, h: float, grid=None) -> np.ndarray:
    """Relative spread of w matched at three different nodes.

    w is x-independent, so the spread measures accumulated rounding.  Deep
    in the lower half-plane it grows like exp(c |Im k| L) and eventually
    swamps w itself.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    ks = np.array([momentum(z, h) for z in zs], dtype=np.complex128)
    g = grid if isinstance(grid, Grid) else build_grid(pot, zs, h, grid)
    n = g.x.size
    ws = [_wronskians(g.x, g.dxs, g.v1, g.v2, zs, ks, h * h, m) for m in (n // 4, n // 2, (3 * n) // 4)]
    ws = np.array(ws)
    return np.max(np.abs(ws - ws[1]), axis=0) / np.abs(ws[1])


def green_kernel(pot: Potential, ep: EnergyPoint, x, y, grid=None):
    """G(x, y) = f_-(min) f_+(max) / (-h^2 w); (-h^2 d^2 + V - z) G = delta_y."""
    g = grid if isinstance(grid, Grid) else build_grid(pot, [ep.z], ep.h, grid)
    fm = jost_left(pot, ep, g)
    fp = jost_right(pot, ep, g)
    return _green_from(fm, fp, x, y)


def _green_from(fm, fp, x, y):
    w = connection(fm, fp).wronskian
    if abs(w) <= 1e-14 * abs(fm.k):
        raise AtPole(fm.z)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    out = fm(lo.ravel()) * fp(hi.ravel()) / (-fm.h**2 * w)
    out = out.reshape(np.broadcast(lo, hi).shape)
    return out[()] if out.ndim == 0 else out


class SemiseparableKernel:
    """Discretised integral operator u -> sum_j wl_i G(x_i, x_j) wr_j u_j.

    G's rank-one-per-triangle structure gives O(n) products, so operator
    norms on long weighted grids never form the dense matrix.
    """

    def __init__(self, fm_vals, fp_vals, denom, wl, wr):
        self.a = np.asarray(fm_vals, dtype=complex)
        self.b = np.asarray(fp_vals, dtype=complex)
        self.denom = complex(denom)
        self.wl = np.asarray(wl, dtype=float)
        self.wr = np.asarray(wr, dtype=float)
        self.n = self.a.size

    def matvec(self, u):
        v = self.wr[:, None] * np.asarray(u, dtype=complex).reshape(self.n, -1)
        lower = np.cumsum(self.a[:, None] * v, axis=0)
        upper = np.cumsum((self.b[:, None] * v)[::-1], axis=0)[::-1]
        upper = np.vstack([upper[1:], np.zeros((1, v.shape[1]), dtype=complex)])
        out = self.b[:, None] * lower + self.a[:, None] * upper
        return (self.wl[:, None] * out / self.denom).reshape(np.shape(u))

    def rmatvec(self, u):
        # adjoint of wl G wr is wr conj(G)^T wl, and G is symmetric
        conj = SemiseparableKernel(np.conj(self.a), np.conj(self.b), np.conj(self.denom), self.wr, self.wl)
        return conj.matvec(u)

    def dense(self):
        return self.matvec(np.eye(self.n, dtype=complex))


def operator_norm(op, n: int, rtol: float = 1e-6, max_iter: int = 5000, block: int = 4, seed: int = 0) -> float:
    """Largest singular value by block power iteration on A^H A."""
    rng = np.random.default_rng(seed)
    p = min(block, n)
    q = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
    q, _ = np.linalg.qr(q)
    sigma_old = 0.0
    for _ in range(max_iter):
        z = op.rmatvec(op.matvec(q))
        q, r = np.linalg.qr(z)
        # Rayleigh-Ritz on the current block
        aq = op.matvec(q)
        s = np.linalg.svd(aq, compute_uv=False)
        sigma = float(s[0])
        if sigma == 0.0:
            return 0.0
        if abs(sigma - sigma_old) <= rtol * 1e-2 * sigma:
            return sigma
        sigma_old = sigma
    raise NumericalFailure("power iteration did not converge")


def resolvent_kernel(pot, ep: EnergyPoint, xq, wl, wr, grid=None) -> SemiseparableKernel:
    g = grid if isinstance(grid, Grid) else build_grid(pot, [ep.z], ep.h, grid)
    fm = jost_left(pot, ep, g)
    fp = jost_right(pot, ep, g)
    w = connection(fm, fp).wronskian
    if abs(w) <= 1e-14 * abs(fm.k):
        raise AtPole(ep.z)
    order = np.argsort(xq)
    if np.any(order != np.arange(len(xq))):
        raise ValueError("quadrature nodes must be sorted")
    return SemiseparableKernel(fm(xq), fp(xq), -ep.h**2 * w, wl, wr)


def cutoff_resolvent_opnorm(pot: Potential, ep: EnergyPoint, chi: CutoffSpec, grid=None, spacing=None) -> float:
    """||chi (P - z)^{-1} chi|| on L^2 by midpoint quadrature + power iteration."""
    if spacing is None:
        spacing = min(0.02, 0.3 / max(abs(ep.k), 1e-12))
    xq, dx = chi.nodes(spacing)
    c = chi(xq) * np.sqrt(dx)
    op = resolvent_kernel(pot, ep, xq, c, c, grid)
    return operator_norm(op, xq.size)
