"""
Resonances and bound states as zeros of the Jost determinant.

Zeros in a rectangle of the right half-plane are counted with the argument
principle, isolated by subdivision, located by the first contour moment and
polished by Newton's method.  Bound states sit on the negative axis, which
is the branch cut of sqrt(z); they are found on the physical side by a
sign scan of the (real) determinant w(-E + i0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .cutoff import CutoffSpec
from .errors import ContourFailure, InvalidParameter, UnsupportedMultiplicity
from .potentials import Potential
from .schrodinger1d import (
    EnergyPoint,
    Grid,
    GridSpec,
    Side,
    build_grid,
    connection,
    determinant_noise,
    jost_determinants,
    jost_left,
    jost_right,
    momentum,
)

RESIDUAL_TOL = 0.05
MAX_ZEROS = 64
NEWTON_MAX_ITER = 50
CLUSTER_TOL = 1e-7
GUARD = 1e-6
MAX_ARG_STEP = 0.3
# largest relative rounding noise in w tolerated on a contour
MAX_NOISE = 1e-3


class Kind(Enum):
    BOUND_STATE = "BoundState"
    RESONANCE = "Resonance"


@dataclass(frozen=True)
class SearchBox:
    re_min: float
    re_max: float
    im_min: float
    im_max: float = GUARD
    contour_points: int = 256

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise InvalidParameter("empty search box")

    @classmethod
    def around(cls, z, radius, contour_points=256):
        z = complex(z)
        return cls(z.real - radius, z.real + radius, z.imag - radius, z.imag + radius, contour_points)

    @property
    def center(self) -> complex:
        return complex((self.re_min + self.re_max) / 2, (self.im_min + self.im_max) / 2)

    def contains(self, z) -> bool:
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    def halves(self, offset=0.0):
        """Split across the longer side; ``offset`` moves the cut off-centre."""
        t = 0.5 + offset
        if self.re_max - self.re_min >= self.im_max - self.im_min:
            c = self.re_min + t * (self.re_max - self.re_min)
            return (
                SearchBox(self.re_min, c, self.im_min, self.im_max, self.contour_points),
                SearchBox(c, self.re_max, self.im_min, self.im_max, self.contour_points),
            )
        c = self.im_min + t * (self.im_max - self.im_min)
        return (
            SearchBox(self.re_min, self.re_max, self.im_min, c, self.contour_points),
            SearchBox(self.re_min, self.re_max, c, self.im_max, self.contour_points),
        )

    def conjugate(self) -> "SearchBox":
        return SearchBox(self.re_min, self.re_max, -self.im_max, -self.im_min, self.contour_points)


@dataclass
class Resonance:
    z: complex
    h: float
    multiplicity: int = 1
    newton_residual: float = np.nan
    kind: Kind = Kind.RESONANCE
    converged: bool = True

    @property
    def width(self) -> float:
        return -2.0 * self.z.imag

    def as_row(self):
        return {
            "h": self.h,
            "Re_z": self.z.real,
            "Im_z": self.z.imag,
            "width": self.width,
            "newton_residual": self.newton_residual,
            "kind": self.kind.value,
        }


@dataclass
class ContourCount:
    count: int
    value: complex
    residual: float
    points: int


class _Determinant:
    """w(z) on one grid shared by every evaluation, so the discrete w is a
    single analytic function of z."""

    def __init__(self, pot: Potential, h: float, grid: Grid):
        self.pot, self.h, self.grid = pot, h, grid

    def __call__(self, zs):
        return jost_determinants(self.pot, zs, self.h, grid=self.grid)

    def derivative(self, z, step=None):
        d = step if step is not None else 1e-6 * abs(z)
        w = self(np.array([z + d, z - d]))
        return (w[0] - w[1]) / (2 * d)


def _shared_grid(pot, h, box_or_z, grid):
    if isinstance(grid, Grid):
        return grid
    if isinstance(box_or_z, SearchBox):
        b = box_or_z
        probe = [complex(b.re_max, b.im_min), complex(b.re_max, b.im_max), complex(b.re_min, b.im_min)]
    else:
        probe = [complex(box_or_z)]
    return build_grid(pot, probe, h, grid)


def _perimeter(box: SearchBox, t):
    """Counter-clockwise parameterisation of the rectangle, t in [0, 1)."""
    w = box.re_max - box.re_min
    hgt = box.im_max - box.im_min
    per = 2 * (w + hgt)
    s = np.asarray(t) * per
    z = np.empty(s.shape, dtype=complex)
    legs = [
        (0.0, complex(box.re_min, box.im_min), 1.0),
        (w, complex(box.re_max, box.im_min), 1j),
        (w + hgt, complex(box.re_max, box.im_max), -1.0),
        (2 * w + hgt, complex(box.re_min, box.im_max), -1j),
    ]
    for i, (start, corner, direction) in enumerate(legs):
        end = legs[i + 1][0] if i < 3 else per
        m = (s >= start) & (s < end) if i < 3 else s >= start
        z[m] = corner + direction * (s[m] - start)
    return z


def _corner_params(box: SearchBox):
    w = box.re_max - box.re_min
    hgt = box.im_max - box.im_min
    per = 2 * (w + hgt)
    return np.array([0.0, w, w + hgt, 2 * w + hgt]) / per


def _winding(det, box: SearchBox, n: int, max_nodes: int = 1 << 16):
    """Sum of arg-increments of w around the box, refined adaptively.

    This is the contour integral of w'/w = d log w evaluated exactly on
    each segment once the phase step is below ``MAX_ARG_STEP``.  Returns
    (t, z, w) on the final node set.
    """
    t = np.union1d(np.linspace(0.0, 1.0, n, endpoint=False), _corner_params(box))
    z = _perimeter(box, t)
    w = det(z)
    while True:
        steps = np.abs(np.angle(np.roll(w, -1) / w))
        bad = np.nonzero(steps > MAX_ARG_STEP)[0]
        if bad.size == 0 or t.size + bad.size > max_nodes:
            return t, z, w, float(steps.max())
        t_next = np.append(t[1:], 1.0)
        tm = 0.5 * (t[bad] + t_next[bad])
        zm = _perimeter(box, tm)
        wm = det(zm)
        order = np.argsort(np.concatenate([t, tm]))
        t = np.concatenate([t, tm])[order]
        z = np.concatenate([z, zm])[order]
        w = np.concatenate([w, wm])[order]


def _contour_moments(det: _Determinant, box: SearchBox, n: int):
    """Zeroth and first moments (1/2 pi i) contour integral z^j w'/w dz."""
    _, z, w, max_step = _winding(det, box, n)
    dlog = np.log(np.abs(np.roll(w, -1) / w)) + 1j * np.angle(np.roll(w, -1) / w)
    zmid = 0.5 * (z + np.roll(z, -1))
    i0 = np.sum(dlog) / (2j * np.pi)
    i1 = np.sum(zmid * dlog) / (2j * np.pi)
    return i0, i1, max_step


def _check_box(box: SearchBox):
    if box.re_min <= 0:
        raise InvalidParameter("contour boxes must lie in Re z > 0 (the negative axis is the branch cut)")


def count_zeros(pot: Potential, box: SearchBox, h: float, grid=None) -> ContourCount:
    """(1/2 pi i) contour integral of w'/w around ``box``.

    The residual bounds how far the count could be from an integer: each
    arg-increment is resolved to ``MAX_ARG_STEP`` rad, and the residual is
    the largest step divided by 2 pi.
    """
    _check_box(box)
    det = _Determinant(pot, h, _shared_grid(pot, h, box, grid))
    return _count(det, box)


def _count(det, box):
    if box.im_min < 0:
        corners = np.array([complex(box.re_min, box.im_min), complex(box.re_max, box.im_min), box.center.real + 1j * box.im_min])
        noise = determinant_noise(det.pot, corners, det.h, det.grid).max()
        if noise > MAX_NOISE:
            raise ContourFailure(
                f"w carries relative rounding noise {noise:.2g} at Im z = {box.im_min:.3g}; "
                "shrink the box or the truncation radius"
            )
    val, _, max_step = _contour_moments(det, box, box.contour_points)
    k = int(np.rint(val.real))
    res = float(max(abs(val - k), max_step / (2 * np.pi)))
    if res >= RESIDUAL_TOL:
        raise ContourFailure(f"argument-principle residual {res:.3g}; a zero may lie on the contour")
    return ContourCount(k, complex(val), res, box.contour_points)


def _newton(det: _Determinant, z0: complex, tol=1e-11, floor=1e-8):
    """Newton on w.  Steps that stop shrinking below ``floor`` (relative)
    have hit the integrator's noise and count as converged."""
    z = complex(z0)
    last = np.inf
    for it in range(NEWTON_MAX_ITER):
        w = det(np.array([z]))[0]
        dw = det.derivative(z)
        if dw == 0:
            return z, False
        dz = -w / dw
        z += dz
        scale = max(abs(z), 1.0)
        if abs(dz) <= tol * scale:
            return z, True
        if abs(dz) >= 0.5 * last and abs(dz) <= floor * scale:
            return z, True
        last = abs(dz)
    return z, False


def _barrier_mu(pot) -> float:
    base = getattr(pot, "base", pot)
    mu = getattr(base, "mu", None)
    return float(mu) if mu else 1.0


def _residual(det, z, ref_offset):
    w = det(np.array([z, z + ref_offset]))
    return float(abs(w[0]) / abs(w[1]))


def _isolate(det, box, depth, out, max_zeros):
    try:
        cnt = _count(det, box)
    except ContourFailure:
        # a zero sits on or next to the contour: retry with shifted edges
        grown = SearchBox(
            box.re_min - 1e-3 * (box.re_max - box.re_min),
            box.re_max + 1e-3 * (box.re_max - box.re_min),
            box.im_min - 1e-3 * (box.im_max - box.im_min),
            box.im_max,
            box.contour_points,
        )
        cnt = _count(det, grown)
        box = grown
    if cnt.count <= 0:
        return
    if cnt.count > max_zeros:
        raise ContourFailure(f"box holds {cnt.count} zeros, more than the configured maximum {max_zeros}")
    if cnt.count == 1:
        _, moment, _ = _contour_moments(det, box, cnt.points)
        out.append((complex(moment), box))
        return
    size = max(box.re_max - box.re_min, box.im_max - box.im_min)
    if depth > 40 or size < CLUSTER_TOL * abs(box.center):
        out.append((box.center, box, cnt.count))
        return
    for offset in (0.0, 0.0713, -0.0917):
        try:
            parts = box.halves(offset)
            counts = [_count(det, p).count for p in parts]
        except ContourFailure:
            continue
        if sum(counts) == cnt.count:
            for p in parts:
                _isolate(det, p, depth + 1, out, max_zeros)
            return
    raise ContourFailure("could not split box without crossing a zero")


def find_resonances(
    pot: Potential,
    box: SearchBox,
    h: float,
    grid=None,
    ref_offset: Optional[float] = None,
    max_zeros: int = MAX_ZEROS,
) -> List[Resonance]:
    """Every zero of w in ``box``: bound states (negative axis) and resonances.

    ``ref_offset`` is the distance to the reference point in the Newton
    residual |w(z)|/|w(z + offset)|; it defaults to 0.1 h mu, with mu = 1
    when the potential has no barrier-top curvature.
    """
    ref = ref_offset if ref_offset is not None else 0.1 * h * _barrier_mu(pot)
    found: List[Resonance] = []
    if box.re_min < 0 and box.im_min <= 0 <= box.im_max:
        found.extend(bound_states(pot, h, e_max=-box.re_min, grid=grid))
    if box.re_max > 0:
        right = SearchBox(max(box.re_min, 1e-3 * box.re_max), box.re_max, box.im_min, box.im_max, box.contour_points)
        det = _Determinant(pot, h, _shared_grid(pot, h, right, grid))
        seeds = []
        _isolate(det, right, 0, seeds, max_zeros)
        for item in seeds:
            guess, sub = item[0], item[1]
            mult = item[2] if len(item) > 2 else 1
            z, ok = _newton(det, guess)
            if not sub.contains(z) and ok:
                # Newton left the isolating box; keep the contour estimate
                ok = False
                z = guess
            found.append(
                Resonance(complex(z), h, mult, _residual(det, z, ref), Kind.RESONANCE, ok)
            )
    found = _merge(found)
    found.sort(key=lambda r: (r.z.real, r.z.imag))
    return found


def _merge(items: List[Resonance]) -> List[Resonance]:
    out: List[Resonance] = []
    for r in items:
        for o in out:
            if o.kind is r.kind and abs(o.z - r.z) <= CLUSTER_TOL * abs(r.z):
                o.multiplicity += r.multiplicity
                break
        else:
            out.append(r)
    return out


def bound_states(pot: Potential, h: float, e_max: Optional[float] = None, grid=None, n_scan: int = 4000) -> List[Resonance]:
    """Zeros of w(-E + i0) for 0 < E <= e_max, by sign scan and Brent."""
    if pot.support is None:
        raise InvalidParameter("bound-state search needs a compactly supported potential")
    xs = np.linspace(-pot.support, pot.support, 4001) if pot.support > 0 else np.zeros(1)
    depth = -float(np.min(pot(xs)))
    if depth <= 0:
        return []
    top = depth if e_max is None else min(depth, e_max)
    g = grid if isinstance(grid, Grid) else build_grid(pot, [complex(-depth)], h, grid)

    def w_real(E):
        z = complex(-E)
        k = momentum(z, h, Side.UPPER)
        return float(jost_determinants(pot, [z], h, grid=g, ks=[k])[0].real)

    energies = np.linspace(top, 0, n_scan + 1)[:-1]
    zs = -energies + 0j
    ks = 1j * np.sqrt(energies) / h
    vals = jost_determinants(pot, zs, h, grid=g, ks=ks).real
    out = []
    for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
        E = brentq(w_real, energies[i + 1], energies[i], xtol=1e-15, rtol=1e-15, maxiter=200)
        ref = w_real(E * (1 - 1e-3))
        resid = abs(w_real(E)) / abs(ref) if ref != 0 else np.nan
        out.append(Resonance(complex(-E, 0.0), h, 1, float(resid), Kind.BOUND_STATE, True))
    return out


@dataclass
class ResidueProjector:
    z: complex
    x: np.ndarray
    kernel: np.ndarray
    rank_defect: float
    dw_dz: complex = 0j

    def symmetry_defect(self) -> float:
        return float(np.linalg.norm(self.kernel - self.kernel.T) / np.linalg.norm(self.kernel))

    def weighted(self, chi: CutoffSpec, dx: float) -> np.ndarray:
        """Matrix of chi Pi chi acting on L^2 (midpoint quadrature)."""
        c = chi(self.x) * np.sqrt(dx)
        return c[:, None] * self.kernel * c[None, :]


def _rank_defect(mat):
    s = np.linalg.svd(mat, compute_uv=False)
    return float(s[1] / s[0]) if s.size > 1 and s[0] > 0 else 0.0


def residue_projector(
    pot: Potential, res: Resonance, chi: CutoffSpec, grid=None, spacing: Optional[float] = None
) -> ResidueProjector:
    """Residue of G(z) = (Q - z)^{-1} at a simple zero of w.

    Pi(x, y) = f_-(x) f_+(y) / (-h^2 w'(z)).
    """
    h = res.h
    if spacing is None:
        spacing = min(0.02, 0.3 / abs(EnergyPoint(res.z, h, _side(res)).k))
    xq, _ = chi.nodes(spacing)
    kernel, dw = projector_kernel(pot, res, xq, grid)
    return ResidueProjector(res.z, xq, kernel, _rank_defect(kernel), dw)


def _side(res: Resonance) -> Side:
    return Side.UPPER if res.kind is Kind.BOUND_STATE else Side.INTERIOR


def projector_kernel(pot: Potential, res: Resonance, xq, grid=None):
    """(kernel at the nodes xq, w'(z)) for the residue of (Q - z)^{-1}."""
    left, right, dw = projector_factors(pot, res, xq, grid)
    return np.outer(left, right), dw


def projector_factors(pot: Potential, res: Resonance, xq, grid=None):
    """Rank-one factors (a, b, w'(z)) with residue kernel a(x) b(y)."""
    if res.multiplicity != 1:
        raise UnsupportedMultiplicity(f"zero at {res.z} has multiplicity {res.multiplicity}")
    h = res.h
    ep = EnergyPoint(res.z, h, _side(res))
    xq = np.asarray(xq, dtype=float)
    g = _shared_grid(pot, h, res.z, grid)
    fm = jost_left(pot, ep, g)
    fp = jost_right(pot, ep, g)
    if res.kind is Kind.BOUND_STATE:
        d = 1e-6 * abs(res.z)
        k1, k2 = momentum(res.z + d, h, Side.UPPER), momentum(res.z - d, h, Side.UPPER)
        w = jost_determinants(pot, [res.z + d, res.z - d], h, grid=g, ks=[k1, k2])
        dw = (w[0] - w[1]) / (2 * d)
    else:
        dw = _Determinant(pot, h, g).derivative(res.z)
    return fm(xq) / (-(h**2) * dw), fp(xq), complex(dw)


def residue_by_contour(pot: Potential, z0: complex, h: float, xq, radius: float, n: int = 64, grid=None) -> np.ndarray:
    """(1/2 pi i) contour integral of G(x, y; z) over a circle around z0.

    Independent of the derivative of w: only Green kernels on the circle.
    """
    xq = np.asarray(xq, dtype=float)
    zs = z0 + radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    g = _shared_grid(pot, h, z0, grid)
    lo = np.minimum.outer(xq, xq)
    hi = np.maximum.outer(xq, xq)
    acc = np.zeros((xq.size, xq.size), dtype=complex)
    for z in zs:
        ep = EnergyPoint(z, h)
        fm = jost_left(pot, ep, g)
        fp = jost_right(pot, ep, g)
        w = connection(fm, fp).wronskian
        a = fm(xq)
        b = fp(xq)
        # f_-(min(x, y)) f_+(max(x, y)) from the node values
        idx_lo = np.searchsorted(xq, lo)
        idx_hi = np.searchsorted(xq, hi)
        acc += a[idx_lo] * b[idx_hi] / (-(h**2) * w) * (z - z0)
    return acc / n


def barrier_top_predict(E0: float, mu: float, h: float, K: int) -> List[complex]:
    """Leading-order ladder E0 - i h mu (1/2 + k), k = 0..K-1."""
    return [complex(E0, -h * mu * (0.5 + k)) for k in range(max(K, 0))]


@dataclass
class WidthFit:
    slope: float
    intercept: float
    h: np.ndarray
    z: np.ndarray
    prefactor_exponent: float = np.nan
    first_order_correction: float = np.nan
    partial: bool = False


def lowest_resonance(pot: Potential, window, h: float, grid=None, n_scan: int = 4000) -> Optional[Resonance]:
    """Narrowest-structure search for a near-real resonance in [lo, hi].

    A long-lived resonance shows up as a sharp minimum of |w| on the real
    axis; the first such minimum seeds Newton, and a small argument-principle
    box around the result confirms a single simple zero.
    """
    lo, hi = window
    g = build_grid(pot, [complex(hi)], h, grid) if not isinstance(grid, Grid) else grid
    det = _Determinant(pot, h, g)
    lam = np.linspace(lo, hi, n_scan)
    w = np.abs(det(lam + 0j))
    minima = [j for j in range(1, lam.size - 1) if w[j] < w[j - 1] and w[j] < w[j + 1]]
    for j in minima:
        z, ok = _newton(det, complex(lam[j], -1e-9))
        if not ok or z.imag > 1e-12 or not lo <= z.real <= hi:
            continue
        r = max(10 * abs(z.imag), 1e-3 * (hi - lo))
        box = SearchBox(z.real - r, z.real + r, z.imag - r, r)
        if _count(det, box).count == 1:
            return Resonance(z, h, 1, _residual(det, z, 0.1 * h), Kind.RESONANCE, True)
    return None


def width_scaling_fit(pot: Potential, window, h_list: Sequence[float], action: Optional[float] = None, grid=None) -> WidthFit:
    """Slope of ln|Im z| against -1/h for the lowest resonance in ``window``.

    With ``action`` (the Agmon distance S0) the exponential is removed and
    ln|Im z| + 2 S0/h is fitted by c + p ln h + c1 h, which recovers the
    power p of the prefactor together with its first correction.
    """
    hs = np.asarray(sorted(h_list, reverse=True), dtype=float)
    if hs.size < 3:
        raise InvalidParameter("width fit needs at least three values of h")
    zs, keep = [], []
    for h in hs:
        r = lowest_resonance(pot, window, h, grid)
        if r is not None:
            zs.append(r.z)
            keep.append(h)
    keep = np.asarray(keep)
    zs = np.asarray(zs)
    partial = keep.size < hs.size
    if keep.size < 2:
        return WidthFit(np.nan, np.nan, keep, zs, partial=True)
    y = np.log(np.abs(zs.imag))
    slope, intercept = np.polyfit(-1.0 / keep, y, 1)
    p = c1 = np.nan
    if action is not None and keep.size >= 3:
        design = np.column_stack([np.ones_like(keep), np.log(keep), keep])
        coef, *_ = np.linalg.lstsq(design, y + 2 * action / keep, rcond=None)
        p, c1 = coef[1], coef[2]
    return WidthFit(float(slope), float(intercept), keep, zs, float(p), float(c1), partial)
