"""
Truncation-stability experiments: cutoff resolvents and propagators of a
decaying potential against its truncations, decay-exponent fits, and the
weighted resolvent inequalities.

The "full" operator is itself a truncation at R_outer = outer_factor * R,
since every kernel here is built from Jost solutions that need compact
support.  Comparing two truncation radii tests exactly the stability claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cutoff import CutoffSpec
from .errors import AtPole, ConfigurationError, DegenerateFit, InvalidParameter
from .potentials import Potential, japanese, truncate
from .schrodinger1d import (
    EnergyPoint,
    Side,
    build_grid,
    connection,
    jost_left,
    jost_right,
    operator_norm,
    resolvent_kernel,
)
from . import propagator as prop

@dataclass(frozen=True)
class ComparisonRun:
    base: Potential
    R_list: Tuple[float, ...]
    h_list: Tuple[float, ...]
    lam: float
    chi: CutoffSpec
    weight_s: float = 1.0
    outer_factor: float = 4.0
    weight_extent: float = 100.0
    window: Optional[prop.EnergyWindow] = None

    def __post_init__(self):
        if self.weight_s <= 0.5:
            raise InvalidParameter("weight exponent s must exceed 1/2")
        if self.lam <= 0:
            raise InvalidParameter("energy must be positive")
        if any(self.chi.radius >= R for R in self.R_list):
            raise InvalidParameter("supp chi must lie inside (-R, R) for every R")
        if self.outer_factor <= 1:
            raise InvalidParameter("outer_factor must exceed 1")

    def pair(self, R: float, outer_factor: Optional[float] = None):
        """(P proxy, Q) = truncations at outer_factor * R and at R."""
        f = self.outer_factor if outer_factor is None else outer_factor
        return truncate(self.base, f * R), truncate(self.base, R)


@dataclass
class ResolventDifference:
    R: float
    h: float
    lam: float
    diff_norm: float
    q_weighted_norm: float
    ratio: float
    outer_sensitivity: Optional[float] = None

    def as_row(self):
        return {
            "R": self.R,
            "h": self.h,
            "lambda": self.lam,
            "diff_norm": self.diff_norm,
            "q_weighted_norm": self.q_weighted_norm,
            "ratio": self.ratio,
        }


def _extended_cell_maps(q1, q2, dx):
    """Backward Magnus cell maps (sgn = -1) for real q, in long double."""
    c = np.sqrt(np.longdouble(3)) * dx * dx / 12
    a = -c * (q1 - q2)
    b = -dx
    d = -0.5 * dx * (q1 + q2)
    s2 = a * a + b * d
    root = np.sqrt(np.abs(s2))
    hyper = s2 > 0
    ch = np.where(hyper, np.cosh(root), np.cos(root))
    with np.errstate(invalid="ignore", divide="ignore"):
        sh = np.where(hyper, np.sinh(root), np.sin(root)) / root
    sh = np.where(root < 1e-9, 1 + s2 / 6, sh)
    return ch + sh * a, sh * b, sh * d, ch - sh * a


def tail_overlap(p, q, lam: float, h: float, inner: float, kdx: float = 0.1) -> complex:
    """I = int_{s > inner} f_+^p(s) (V_p - V_q)(s) f_+^q(s) ds.

    I is super-polynomially small in h and lies below double-precision
    rounding of the sweep already at moderate h, so the two real solution
    pairs making up f_+ = u + i v are swept inward from the common outer
    edge in long double, with the potentials also sampled in long double,
    and I is the trapezoid sum at the nodes (spectrally accurate: the
    integrand vanishes smoothly at both ends).  ``p``, ``q`` are callables
    with an ``extended`` method and a ``support``.
    """
    ld = np.longdouble
    outer = max(p.support, q.support)
    k = np.sqrt(ld(lam)) / ld(h)
    n = max(8, int(np.ceil((outer - inner) * float(k) / kdx)))
    x = ld(inner) + (ld(outer) - ld(inner)) * np.arange(n + 1, dtype=ld) / n
    dx = (ld(outer) - ld(inner)) / n
    lo = x[:-1] + dx * (0.5 - np.sqrt(ld(3)) / 6)
    hi = x[:-1] + dx * (0.5 + np.sqrt(ld(3)) / 6)
    h2 = ld(h) * ld(h)
    maps = [
        _extended_cell_maps((pot.extended(lo) - ld(lam)) / h2, (pot.extended(hi) - ld(lam)) / h2, dx) for pot in (p, q)
    ]
    m11, m12, m21, m22 = (np.stack(pair, axis=1) for pair in zip(*maps))
    # state [potential, solution]: solution 0 = cos(k s), 1 = sin(k s) at outer
    ko = k * x[-1]
    psi = np.array([[np.cos(ko), np.sin(ko)]] * 2, dtype=ld)
    dpsi = np.array([[-k * np.sin(ko), k * np.cos(ko)]] * 2, dtype=ld)
    vals = np.empty((n + 1, 2, 2), dtype=ld)
    vals[n] = psi
    for j in range(n - 1, -1, -1):
        a11, a12, a21, a22 = m11[j][:, None], m12[j][:, None], m21[j][:, None], m22[j][:, None]
        psi, dpsi = a11 * psi + a12 * dpsi, a21 * psi + a22 * dpsi
        vals[j] = psi
    up, vp = vals[:, 0, 0], vals[:, 0, 1]
    uq, vq = vals[:, 1, 0], vals[:, 1, 1]
    dv = p.extended(x) - q.extended(x)
    wt = np.full(n + 1, dx, dtype=ld)
    wt[0] = wt[-1] = dx / 2
    re = np.sum(wt * dv * (up * uq - vp * vq))
    im = np.sum(wt * dv * (up * vq + vp * uq))
    return complex(float(re), float(im))


class _Mirrored:
    """x -> V(-x); the mirror image turns f_- integrals into f_+ ones."""

    def __init__(self, pot):
        self.pot = pot
        self.support = pot.support

    def extended(self, x):
        return self.pot.extended(-np.asarray(x, dtype=np.longdouble))


def _difference_factors(p: Potential, q: Potential, lam: float, h: float, xq, inner: float):
    """Rank-two form of G_p - G_q on nodes xq with |xq| < inner.

    The resolvent identity G_p - G_q = -G_p (V_p - V_q) G_q with
    supp(V_p - V_q) outside (-inner, inner) gives
        -[f_-^p(x) f_-^q(y) I_+ + f_+^p(x) f_+^q(y) I_-] / (h^4 w_p w_q),
    with I_+ = int_{s > inner} f_+^p dV f_+^q and I_- the mirror integral of
    f_-^p dV f_-^q.  No large terms cancel, unlike subtracting two kernels.
    """
    ep = EnergyPoint(lam, h, Side.UPPER)
    # a Grid carries its potential's samples, so each operator gets its own
    gp, gq = build_grid(p, [lam], h), build_grid(q, [lam], h)
    fmp, fpp = jost_left(p, ep, gp), jost_right(p, ep, gp)
    fmq, fpq = jost_left(q, ep, gq), jost_right(q, ep, gq)
    wp = connection(fmp, fpp).wronskian
    wq = connection(fmq, fpq).wronskian
    for w in (wp, wq):
        if abs(w) <= 1e-14 * abs(ep.k):
            raise AtPole(lam)
    i_plus = tail_overlap(p, q, lam, h, inner)
    i_minus = tail_overlap(_Mirrored(p), _Mirrored(q), lam, h, inner)
    scale = -1.0 / (h**4 * wp * wq)
    left = np.column_stack([fmp(xq), fpp(xq)])
    right = np.column_stack([fmq(xq), fpq(xq)])
    return left, scale * np.array([i_plus, i_minus]), right


def cutoff_difference_norm(p: Potential, q: Potential, lam: float, h: float, chi: CutoffSpec, inner: float) -> float:
    """||chi (G_p - G_q)(lam + i0) chi|| on L^2, p = q on (-inner, inner)."""
    if chi.radius > inner:
        raise InvalidParameter("supp chi must lie where the two potentials agree")
    spacing = min(0.02, 0.3 * h / np.sqrt(lam))
    xq, dx = chi.nodes(spacing)
    left, d, right = _difference_factors(p, q, lam, h, xq, inner)
    c = chi(xq) * np.sqrt(dx)
    return prop.LowRank(c[:, None] * left, d, c[:, None] * right).norm()


def _weighted_nodes(lam: float, h: float, extent: float):
    spacing = min(0.02, 0.3 * h / np.sqrt(lam))
    n = int(np.ceil(2 * extent / spacing))
    dx = 2 * extent / n
    return -extent + dx * (np.arange(n) + 0.5), dx


def weighted_resolvent_norm(
    pot: Potential,
    lam: float,
    h: float,
    s: float = 1.0,
    extent: float = 100.0,
    left_mask=None,
    right_mask=None,
) -> float:
    """||<x>^-s 1_L (P - lam - i0)^-1 1_R <x>^-s|| on [-extent, extent].

    The masks are callables on node arrays (indicator functions); the tail
    beyond ``extent`` carries weight O(extent^(1-2s)) and is dropped.
    """
    xq, dx = _weighted_nodes(lam, h, extent)
    wt = japanese(xq) ** (-s) * np.sqrt(dx)
    wl = wt * (left_mask(xq) if left_mask else 1.0)
    wr = wt * (right_mask(xq) if right_mask else 1.0)
    op = resolvent_kernel(pot, EnergyPoint(lam, h, Side.UPPER), xq, wl, wr, build_grid(pot, [lam], h))
    return operator_norm(op, xq.size)


def cutoff_resolvent_norm(pot: Potential, lam: float, h: float, chi: CutoffSpec) -> float:
    spacing = min(0.02, 0.3 * h / np.sqrt(lam))
    xq, dx = chi.nodes(spacing)
    c = chi(xq) * np.sqrt(dx)
    op = resolvent_kernel(pot, EnergyPoint(lam, h, Side.UPPER), xq, c, c, build_grid(pot, [lam], h))
    return operator_norm(op, xq.size)


def resolvent_difference(
    run: ComparisonRun, R: float, h: float, lam: Optional[float] = None, sensitivity: bool = True
) -> ResolventDifference:
    lam = run.lam if lam is None else lam
    p, q = run.pair(R)
    diff = cutoff_difference_norm(p, q, lam, h, run.chi, R)
    qn = weighted_resolvent_norm(q, lam, h, run.weight_s, run.weight_extent)
    sens = None
    if sensitivity:
        p2, _ = run.pair(R, 2 * run.outer_factor)
        d2 = cutoff_difference_norm(p2, q, lam, h, run.chi, R)
        sens = abs(d2 - diff) / diff if diff > 0 else 0.0
    return ResolventDifference(R, h, lam, diff, qn, diff / qn, sens)


@dataclass
class DecayFit:
    h: np.ndarray
    diff: np.ndarray
    exponent: float
    log_constant: float
    residual: float
    window_exponents: List[float] = field(default_factory=list)
    window_h: List[Tuple[float, float]] = field(default_factory=list)


def superpoly_fit(pairs: Sequence[Tuple[float, float]]) -> DecayFit:
    """Least squares ln diff = ln C + p ln h, plus local exponents between
    successive h values (largest h first), which grow for O(h^inf) data."""
    pairs = sorted(((float(a), float(b)) for a, b in pairs), reverse=True)
    h = np.array([a for a, _ in pairs])
    d = np.array([b for _, b in pairs])
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise DegenerateFit("differences must be positive and finite")
    if h.size < 3 or h[0] / h[-1] < 4 or np.any(h <= 0):
        raise DegenerateFit("need at least 3 positive h values spanning a factor of 4")
    lh, ld = np.log(h), np.log(d)
    A = np.column_stack([np.ones_like(lh), lh])
    coef, *_ = np.linalg.lstsq(A, ld, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ld) ** 2)))
    win = list(np.diff(ld) / np.diff(lh))
    return DecayFit(h, d, float(coef[1]), float(coef[0]), resid, [float(v) for v in win], list(zip(h[:-1], h[1:])))


@dataclass
class WeightedReport:
    h: float
    lam: float
    interior_norm: float
    exterior_norm: float
    interpolation_lhs: float
    interpolation_rhs: float
    a17_ratio: float
    cutoff_norm: float
    equivalence_ratio: float

    @property
    def interpolation_ratio(self):
        return self.interpolation_lhs / self.interpolation_rhs


def weighted_inequalities(
    pot: Potential,
    lam: float,
    h: float,
    s: float = 1.0,
    R0: Optional[float] = None,
    chi: Optional[CutoffSpec] = None,
    extent: float = 100.0,
) -> WeightedReport:
    """Norms entering the a priori weighted resolvent bounds.

    interior: <x>^-s G <x>^-s on the whole line; exterior: both sides
    restricted to |x| > R0; interpolation_lhs: left side restricted only,
    compared with h^-1/2 interior^1/2.  chi defaults to 1 on the support of
    ``pot`` (plus a unit collar), for the cutoff/weighted equivalence.
    """
    if s <= 0.5:
        raise InvalidParameter("s must exceed 1/2")
    if pot.support is None:
        raise InvalidParameter("potential must be compactly supported")
    R0 = pot.support if R0 is None else R0
    chi = chi or CutoffSpec(pot.support + 2.0, pot.support + 1.0)

    def outside(x):
        return (np.abs(x) > R0).astype(float)

    interior = weighted_resolvent_norm(pot, lam, h, s, extent)
    exterior = weighted_resolvent_norm(pot, lam, h, s, extent, outside, outside)
    lhs = weighted_resolvent_norm(pot, lam, h, s, extent, outside, None)
    cut = cutoff_resolvent_norm(pot, lam, h, chi)
    return WeightedReport(h, lam, interior, exterior, lhs, h**-0.5 * np.sqrt(interior), exterior * h, cut, cut / interior)


@dataclass
class PropagatorDifference:
    R: float
    h: float
    t: np.ndarray
    values: np.ndarray
    n_points: int
    L_box: float

    @property
    def sup(self) -> float:
        return float(np.max(self.values))


def propagator_difference(
    run: ComparisonRun,
    R: float,
    h: float,
    t_list: Sequence[float],
    n_points: int = 4096,
    L_box: Optional[float] = None,
    max_kdx: float = prop.MAX_KDX,
) -> PropagatorDifference:
    """||chi (U_P(t) phi(P) - U_Q(t) phi(Q)) chi|| on a shared Dirichlet box."""
    if run.window is None:
        raise ConfigurationError("propagator comparison needs an energy window")
    phi = run.window
    lo, e_max = phi.support
    t_list = np.asarray(t_list, dtype=float)
    t_max = float(np.max(np.abs(t_list)))
    if L_box is None:
        L_box = prop.causality_half_length(run.chi.radius, e_max, t_max)
    p, q = run.pair(R)
    sds = []
    for pot in (p, q):
        ham = prop.build(pot, h, L_box, n_points, e_max=e_max, max_kdx=max_kdx)
        prop.check_causality(ham, run.chi, e_max, t_max)
        sds.append(prop.diagonalize(ham, phi.support))
    blocks = [prop._support_block(sd, run.chi)[1] for sd in sds]
    cols = np.hstack(blocks)
    _, r = np.linalg.qr(cols)
    fp, fq = phi(sds[0].eigenvalues), phi(sds[1].eigenvalues)
    out = []
    for t in t_list:
        d = np.concatenate([np.exp(-1j * t * sds[0].eigenvalues / h) * fp, -np.exp(-1j * t * sds[1].eigenvalues / h) * fq])
        out.append(float(np.linalg.norm((r * d) @ r.T, 2)))
    return PropagatorDifference(R, h, t_list, np.array(out), n_points, float(L_box))
