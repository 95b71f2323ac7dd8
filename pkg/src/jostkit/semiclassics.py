"""
Closed-form semiclassical quantities: complex log-gamma, the homoclinic
amplitudes and line shape of s', Breit-Wigner profiles and the barrier-top
projector constants.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import factorial

import numpy as np

from .classical import HomoclinicData
from .errors import DegeneratePeak, PoleError

log = logging.getLogger(__name__)

# Lanczos approximation, g = 7, nine coefficients
LANCZOS_G = 7.0
LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _lngamma_right(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1.0
    acc = LANCZOS_COEF[0]
    for i, c in enumerate(LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def lngamma(z) -> complex:
    """Principal log Gamma(z); Re z < 1/2 is shifted right by recurrence."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == np.floor(z.real):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    shift = max(0, int(np.ceil(0.5 - z.real)))
    acc = 0j
    for k in range(shift):
        acc += np.log(z + k)
    return complex(_lngamma_right(z + shift) - acc)


def gamma(z) -> complex:
    return complex(np.exp(lngamma(z)))


@dataclass(frozen=True)
class RescaledEnergy:
    """sigma = (lambda - E0)/h."""

    sigma: complex
    E0: float
    h: float

    @classmethod
    def from_energy(cls, lam, E0, h):
        return cls((lam - E0) / h, E0, h)

    @property
    def lam(self):
        return self.E0 + self.h * self.sigma


@dataclass(frozen=True)
class HomoclinicAmplitudes:
    Q0: complex
    A_amp: complex
    B_amp: complex


def _power(a: float, expo: complex) -> complex:
    # a^{i sigma/mu} with a > 0, as exp(i (sigma/mu) ln a)
    return np.exp(expo * np.log(a))


def homoclinic_amplitudes(hd: HomoclinicData, sigma, h: float, loop_phase: float = 0.0) -> HomoclinicAmplitudes:
    """Q0, A and B of the homoclinic line shape.

    ``loop_phase`` adds a constant to the loop phase A0/h in Q0 and A.  It
    defaults to 0, which is the formula as published; -pi/2 (a
    turning-point Maslov phase) is available as a diagnostic because it
    brings the poles much closer to computed resonances at moderate h.
    """
    mu = hd.mu
    s = complex(sigma) / mu
    lg = lngamma(0.5 - 1j * s)
    g1 = np.exp(lg)
    phase = np.exp(1j * (hd.A0 / h + loop_phase))
    q0 = phase * g1 / np.sqrt(2 * np.pi) * np.exp(-np.pi * s / 2) * _power(mu * abs(hd.g0_plus) * abs(hd.g0_minus), 1j * s)
    big = mu**2 * abs(hd.g_in) * abs(hd.g_out) * abs(hd.g0_minus) * abs(hd.g0_plus)
    a_amp = phase * np.exp(2 * lg) * (1j / (2 * np.pi)) * np.exp(np.pi * s) * _power(big, 1j * s)
    b_amp = g1 * (1j / np.sqrt(2 * np.pi)) * np.exp(-np.pi * s / 2) * _power(mu * abs(hd.g_out) * abs(hd.g_in), 1j * s)
    return HomoclinicAmplitudes(complex(q0), complex(a_amp), complex(b_amp))


def log_period_factor(sigma, mu: float, h: float) -> complex:
    """h^{-i sigma/mu} = exp(-i (sigma/mu) ln h); ln h < 0 for h < 1."""
    return np.exp(-1j * (complex(sigma) / mu) * np.log(h))


@dataclass
class LineShape:
    value: float
    imag_residual: float
    denominator: complex


def ssf_homoclinic_detail(hd: HomoclinicData, lam: float, h: float, loop_phase: float = 0.0) -> LineShape:
    sigma = (lam - hd.E0) / h
    amp = homoclinic_amplitudes(hd, sigma, h, loop_phase)
    x = log_period_factor(sigma, hd.mu, h)
    gap = 1.0 - x * amp.Q0
    if abs(gap) <= 1e-12:
        log.warning("1 - h^{-i sigma/mu} Q0 = %.3g: line shape near a pole", abs(gap))
    num = 2 * x**2 * amp.A_amp / gap + x**3 * amp.A_amp * amp.Q0 / gap**2 - x * amp.B_amp
    den = x**2 * amp.A_amp / gap - x * amp.B_amp
    ratio = num / den
    scale = abs(np.log(h)) / (2 * np.pi * hd.mu * h)
    return LineShape(float(scale * ratio.real), float(scale * ratio.imag), complex(den))


def ssf_homoclinic(hd: HomoclinicData, lam, h: float, loop_phase: float = 0.0):
    """Leading term of s'(lambda) near the barrier-top energy (real part).

    The imaginary part of the quotient is logged as a diagnostic.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    vals = np.empty(lam_arr.shape)
    worst = 0.0
    for i, l in enumerate(lam_arr):
        d = ssf_homoclinic_detail(hd, float(l), h, loop_phase)
        vals[i] = d.value
        worst = max(worst, abs(d.imag_residual) / max(abs(d.value), 1e-300))
    log.debug("largest relative imaginary residual of the line shape: %.3g", worst)
    return vals if np.ndim(lam) else float(vals[0])


def breit_wigner_peak(z: complex, lam):
    """Lorentzian |Im z| / (pi |lambda - z|^2)."""
    z = complex(z)
    if z.imag == 0:
        raise DegeneratePeak("Breit-Wigner profile needs Im z != 0")
    lam = np.asarray(lam, dtype=float)
    out = abs(z.imag) / (np.pi * np.abs(lam - z) ** 2)
    return out[()] if out.ndim == 0 else out


def projector_constant_ck(k: int, mu: float, h: float) -> complex:
    """c_k = h^{-k-1/2} exp(-i pi (k + 1/2)/2) mu^{k+1/2} / (sqrt(2 pi) k!)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    p = k + 0.5
    return complex(h ** (-p) * np.exp(-0.5j * np.pi * p) * mu**p / (np.sqrt(2 * np.pi) * factorial(k)))


def local_maxima(x, y):
    """(positions, heights) of strict interior local maxima, refined by a
    parabola through the three samples around each."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    pos, hgt = [], []
    for i in idx:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        step = x[i + 1] - x[i]
        pos.append(x[i] + shift * step)
        hgt.append(y1 - 0.25 * (y0 - y2) * shift)
    return np.array(pos), np.array(hgt)


def quantization_defect(hd: HomoclinicData, sigma, h: float, loop_phase: float = 0.0) -> complex:
    """1 - h^{-i sigma/mu} Q0(sigma); its zeros in complex sigma are the
    resonances predicted by the line shape."""
    amp = homoclinic_amplitudes(hd, sigma, h, loop_phase)
    return complex(1.0 - log_period_factor(sigma, hd.mu, h) * amp.Q0)


def homoclinic_peak_spacing(mu: float, h: float) -> float:
    """Period in lambda of h^{-i sigma/mu}: 2 pi mu h / |ln h|."""
    return 2 * np.pi * mu * h / abs(np.log(h))


def merge_close_peaks(pos, hgt, min_gap: float):
    """Collapse maxima closer than ``min_gap`` (sampling doublets of an
    unresolved narrow peak) into the higher one."""
    keep_p, keep_h = [], []
    for p, v in zip(pos, hgt):
        if keep_p and p - keep_p[-1] < min_gap:
            if v > keep_h[-1]:
                keep_p[-1], keep_h[-1] = p, v
            continue
        keep_p.append(p)
        keep_h.append(v)
    return np.array(keep_p), np.array(keep_h)


@dataclass
class PeakComparison:
    """Numerical s' maxima matched to the nearest line-shape maxima."""

    spacing: float
    height_scale: float
    numeric_positions: np.ndarray
    numeric_heights: np.ndarray
    formula_positions: np.ndarray
    matched_formula: np.ndarray
    offsets: np.ndarray  # |numeric - matched| / spacing
    height_ratios: np.ndarray  # numeric height / height_scale

    @property
    def successive(self) -> bool:
        """Matched formula maxima are distinct neighbours in order."""
        idx = np.searchsorted(self.formula_positions, self.matched_formula)
        return bool(np.all(np.diff(idx) == 1))


def compare_peaks(lams, numeric, formula, E0: float, mu: float, h: float, sigma_min: float = 0.0, count: int = 3, merge: float = 0.05):
    """Match the first ``count`` numerical maxima with sigma >= sigma_min.

    Offsets are in units of the nominal spacing 2 pi mu h / |ln h| and
    heights in units of |ln h| / (2 pi mu h).
    """
    lams = np.asarray(lams, dtype=float)
    pn, hn = merge_close_peaks(*local_maxima(lams, numeric), merge * h)
    pf, _ = merge_close_peaks(*local_maxima(lams, formula), merge * h)
    sel = (pn - E0) / h >= sigma_min
    pn, hn = pn[sel][:count], hn[sel][:count]
    if pn.size < count or pf.size == 0:
        raise DegeneratePeak(f"found {pn.size} numerical and {pf.size} formula maxima, need {count}")
    spacing = homoclinic_peak_spacing(mu, h)
    matched = pf[np.argmin(np.abs(pn[:, None] - pf[None, :]), axis=1)]
    scale = abs(np.log(h)) / (2 * np.pi * mu * h)
    return PeakComparison(spacing, scale, pn, hn, pf, matched, np.abs(pn - matched) / spacing, hn / scale)
