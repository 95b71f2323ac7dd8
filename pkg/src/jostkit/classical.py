"""
Classical dynamics of p(x, xi) = xi^2 + V(x).

Mass convention: Hamilton's equations read x' = 2 xi, xi' = -V'(x), so a
free particle of energy E moves at speed 2 sqrt(E).  Every factor of two
in mu, the g-constants and the actions below follows from this.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np
from numba import njit
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import GeometryError, InvalidBarrier
from .potentials import Free, GaussianBarrier, GaussianSum, Potential, PowerTail

# fourth-order Yoshida composition of the velocity-Verlet step
_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 / (2.0 - _CBRT2)
YOSHIDA = (_W1, _W0, _W1)

_GAUSS, _POWER = 0, 1


@dataclass(frozen=True)
class PhasePoint:
    x: float
    xi: float

    def energy(self, pot: Potential) -> float:
        return hamiltonian(pot, self)


def hamiltonian(pot: Potential, p: PhasePoint) -> float:
    return float(p.xi**2 + pot(p.x))


def _family(pot: Potential):
    """Parameter arrays for the compiled force kernel, or None."""
    if isinstance(pot, Free):
        return _GAUSS, np.zeros(0), np.zeros(0), np.ones(0), 0.0
    if isinstance(pot, GaussianBarrier):
        return _GAUSS, np.array([pot.E0]), np.zeros(1), np.array([pot.width]), 0.0
    if isinstance(pot, GaussianSum):
        a = np.asarray(pot.amplitudes, float)
        return _GAUSS, a, np.asarray(pot.centers, float), np.asarray(pot.widths, float), float(pot.shift)
    if isinstance(pot, PowerTail):
        return _POWER, np.array([pot.amplitude]), np.zeros(1), np.array([pot.rho]), 0.0
    return None


@njit(cache=True)
def _force(code, a, c, s, shift, x):
    if code == 0:
        y = x + shift
        f = 0.0
        for i in range(a.size):
            u = (y - c[i]) / s[i]
            f += 2.0 * u / s[i] * a[i] * np.exp(-u * u)
        return f
    rho = s[0]
    return a[0] * rho * x * (1.0 + x * x) ** (-rho / 2.0 - 1.0)


@njit(cache=True)
def _integrate(code, a, c, s, shift, x, xi, dt, nsteps, stride, w1, w0, out):
    k = 0
    if stride > 0:
        out[0, 0] = x
        out[0, 1] = xi
        k = 1
    for n in range(nsteps):
        for w in (w1, w0, w1):
            tau = w * dt
            xi += 0.5 * tau * _force(code, a, c, s, shift, x)
            x += 2.0 * tau * xi
            xi += 0.5 * tau * _force(code, a, c, s, shift, x)
        if stride > 0 and (n + 1) % stride == 0:
            out[k, 0] = x
            out[k, 1] = xi
            k += 1
    return x, xi


def _python_integrate(pot, x, xi, dt, nsteps, stride, out):
    k = 0
    if stride > 0:
        out[0] = x, xi
        k = 1
    for n in range(nsteps):
        for w in YOSHIDA:
            tau = w * dt
            xi -= 0.5 * tau * float(pot.derivative(x))
            x += 2.0 * tau * xi
            xi -= 0.5 * tau * float(pot.derivative(x))
        if stride > 0 and (n + 1) % stride == 0:
            out[k] = x, xi
            k += 1
    return x, xi


def _run(pot, p0: PhasePoint, t: float, dt: float, stride: int):
    nsteps = int(round(abs(t) / dt))
    step = float(np.sign(t)) * dt if nsteps else 0.0
    if nsteps and abs(nsteps * dt - abs(t)) > 1e-12 * max(abs(t), 1.0):
        step = t / nsteps
    rows = nsteps // stride + 1 if stride > 0 else 1
    out = np.empty((rows, 2))
    fam = _family(pot)
    if fam is not None:
        x, xi = _integrate(*fam, float(p0.x), float(p0.xi), step, nsteps, stride, _W1, _W0, out)
    else:
        x, xi = _python_integrate(pot, float(p0.x), float(p0.xi), step, nsteps, stride, out)
    return PhasePoint(float(x), float(xi)), out, step


def flow(pot: Potential, p0: PhasePoint, t: float, dt: float = 1e-3) -> PhasePoint:
    """exp(t H_p)(p0) by the symplectic fourth-order composition scheme."""
    return _run(pot, p0, t, dt, 0)[0]


def trajectory(pot: Potential, p0: PhasePoint, t: float, dt: float = 1e-3, stride: int = 10):
    """Samples (t, x, xi) every ``stride`` steps."""
    _, out, step = _run(pot, p0, t, dt, stride)
    ts = step * stride * np.arange(out.shape[0])
    return ts, out[:, 0], out[:, 1]


def is_trapped(pot: Potential, p0: PhasePoint, E: float, t_max: float, escape_radius: float, dt: float = 1e-3) -> bool:
    """Finite-time surrogate for a bounded trajectory, both time directions."""
    if abs(hamiltonian(pot, p0) - E) > 1e-6 * max(1.0, abs(E)):
        raise GeometryError(f"initial point has energy {hamiltonian(pot, p0):.6g}, not {E:.6g}")
    stride = max(1, int(0.05 / dt))
    for sign in (1.0, -1.0):
        _, xs, _ = trajectory(pot, p0, sign * t_max, dt, stride)
        if np.any(np.abs(xs) > escape_radius):
            return False
    return True


def _sqrt_endpoint_quad(func, a, b):
    """int_a^b func with x = a + (b - a)(1 - cos th)/2, smoothing sqrt ends."""
    half = 0.5 * (b - a)

    def g(th):
        return func(a + half * (1.0 - np.cos(th))) * half * np.sin(th)

    with warnings.catch_warnings():
        # tolerance is set at rounding level on purpose
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(g, 0.0, np.pi, limit=400, epsabs=1e-13, epsrel=1e-13)
    return val, err


def agmon_distance(pot: Potential, E: float, a: float, b: float) -> float:
    """int_a^b sqrt(V - E)_+ dx across a classically forbidden interval."""
    if b < a:
        a, b = b, a
    if b == a:
        return 0.0
    interior = np.linspace(a, b, 2003)[1:-1]
    vals = np.asarray(pot(interior)) - E
    if np.any(vals < -1e-12 * max(1.0, abs(E))):
        raise InvalidBarrier(f"V < E inside ({a}, {b}): not a classically forbidden interval")
    val, _ = _sqrt_endpoint_quad(lambda x: np.sqrt(max(float(pot(x)) - E, 0.0)), a, b)
    return float(val)


def island_agmon_distance(pot: Potential, x_min: float = 0.0) -> Tuple[float, float]:
    """Agmon distance at the well bottom from ``x_min`` to the sea on the right.

    Returns (S0, x_sea) with x_sea the point where V falls back to V(x_min).
    """
    E = float(pot(x_min))
    xs = x_min + np.linspace(1e-6, 50.0, 200001)
    v = np.asarray(pot(xs))
    peak = int(np.argmax(v))
    if v[peak] <= E:
        raise GeometryError("no barrier separates the well from the sea")
    tail = np.nonzero(v[peak:] < E)[0]
    if tail.size == 0:
        raise GeometryError("potential never falls back below the well bottom")
    j = peak + int(tail[0])
    x_sea = float(brentq(lambda y: float(pot(y)) - E, xs[j - 1], xs[j], xtol=1e-15))
    return agmon_distance(pot, E, x_min, x_sea), x_sea


@dataclass
class HomoclinicData:
    E0: float
    mu: float
    A0: float
    g0_minus: float
    g0_plus: float
    g_in: float
    g_out: float
    A_in: float
    A_out: float
    A_ell: float
    T_ell: float
    loop_turning_point: float = np.nan
    sea_turning_point: float = np.nan
    fit_residuals: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def curvature_exponent(pot: Potential, x0: float = 0.0) -> float:
    """mu with V = E0 - (mu^2/4) x^2 + ..., i.e. mu = sqrt(-2 V''(0))."""
    v2 = float(pot.second_derivative(x0, step=1e-4))
    if v2 >= 0:
        raise GeometryError(f"V''({x0}) = {v2:.4g} >= 0: not a nondegenerate maximum")
    return float(np.sqrt(-2.0 * v2))


def _log_g_loop(pot, E0, mu, x_turn):
    """ln|g0| for the loop parameterised with x(0) = x_turn (turning point)."""

    def f(y):
        d = E0 - float(pot(y))
        return mu / (2.0 * np.sqrt(max(d, 1e-300))) - 1.0 / abs(y)

    # the integrand is bounded at 0 but E0 - V loses digits there; stop
    # short and add the last piece by the midpoint rule
    cut = -1e-3
    val, _ = _sqrt_endpoint_quad(f, x_turn, cut)
    return np.log(abs(x_turn)) + val + abs(cut) * f(cut / 2)


def _free_time_offset(pot, E0, a, b):
    """int_a^b [1/(2 sqrt(E0 - V)) - 1/(2 sqrt(E0))] dx over a free tail."""
    se = np.sqrt(E0)

    def f(y):
        return 0.5 / np.sqrt(E0 - float(pot(y))) - 0.5 / se

    val, _ = quad(f, a, b, limit=400, epsabs=1e-13)
    return val


def _log_g_in(pot, E0, mu, x_far=None):
    """ln g_in with x_in(t) = -2 sqrt(E0) t in the far field."""
    se = np.sqrt(E0)
    x1 = 1.0
    while float(pot(x1)) > E0 - 1e-3 or x1 < 0.5:
        x1 *= 0.5

    def f(y):
        d = E0 - float(pot(y))
        return mu / (2.0 * np.sqrt(max(d, 1e-300))) - 1.0 / y

    cut = 1e-3
    near, _ = quad(f, cut, x1, limit=400, epsabs=1e-13)
    near += cut * f(cut / 2)
    tail = _free_time_offset(pot, E0, x1, np.inf)
    return np.log(x1) + near + mu * tail - mu * x1 / (2 * se)


def _fit_log_g(ts, xs, mu, sign, lo=1e-5, hi=1e-2):
    """Intercept of ln|x| - sign*mu*t over the window lo <= |x| <= hi."""
    ax = np.abs(xs)
    # only the first approach to the fixed point; rounding eventually
    # pushes the orbit back out along the unstable direction
    first = np.arange(ax.size) <= int(np.argmin(ax))
    m = first & (ax >= lo) & (ax <= hi)
    if m.sum() < 5:
        raise GeometryError("trajectory never enters the linear fit window")
    y = np.log(ax[m]) - sign * mu * ts[m]
    slope, icpt = np.polyfit(ts[m], np.log(ax[m]), 1)
    return float(np.mean(y)), float(np.std(y)), float(slope)


def homoclinic_data(pot: Potential, E0: Optional[float] = None, dt: float = 1e-3) -> HomoclinicData:
    """Classical constants of the barrier-top + homoclinic-loop geometry.

    The barrier top must sit at x = 0, the loop on the left.  Constants are
    extracted from computed trajectories (fits of ln|x(t)| against -+mu t);
    turning-point quadratures provide independent values in ``oracle``.
    Time origins: the loop is parameterised with its turning point at t = 0
    (only the product g0_minus * g0_plus enters the line-shape formula);
    the in/out trajectories follow x = -+2 sqrt(E0) t in the far field.
    """
    if E0 is None:
        E0 = float(pot(0.0))
    if abs(float(pot.derivative(0.0))) > 1e-6:
        raise GeometryError("V'(0) != 0: the barrier top must sit at x = 0")
    mu = curvature_exponent(pot)
    se = np.sqrt(E0)
    # loop: leaves 0 to the left, dips below E0, turns where V climbs back
    xs = -np.linspace(1e-3, 60.0, 120001)
    v = np.asarray(pot(xs))
    above = np.nonzero(v > E0)[0]
    if above.size == 0:
        raise GeometryError("no turning point on the left: no homoclinic loop")
    i = int(above[0])
    x_loop = float(brentq(lambda y: float(pot(y)) - E0, xs[i], xs[i - 1], xtol=1e-15, rtol=1e-15))
    below = np.nonzero(v[i:] < E0)[0]
    if below.size == 0:
        raise GeometryError("the left wall never drops below E0: no sea on the left")
    j = i + int(below[0])
    x_sea = float(brentq(lambda y: float(pot(y)) - E0, xs[j], xs[j - 1], xtol=1e-15, rtol=1e-15))

    # actions
    loop_integrand = lambda y: np.sqrt(max(E0 - float(pot(y)), 0.0))
    half_loop, _ = _sqrt_endpoint_quad(loop_integrand, x_loop, 0.0)
    A0 = 2.0 * half_loop
    A_in, _ = quad(lambda y: np.sqrt(max(E0 - float(pot(y)), 0.0)) - se, 0.0, np.inf, limit=400, epsabs=1e-13)
    A_out = A_in
    left, _ = quad(lambda y: np.sqrt(max(E0 - float(pot(y)), 0.0)) - se, -np.inf, x_sea, limit=400, epsabs=1e-13)
    A_ell = 2.0 * left + 2.0 * se * x_sea
    # gamma_ell^+ reaches x_sea at tau = x_sea/(2 sqrt E0) + tail correction
    tau_plus = x_sea / (2 * se) + _free_time_offset(pot, E0, -np.inf, x_sea)
    T_ell = -2.0 * tau_plus

    # flows: loop from its turning point, forward (g0-) and backward (g0+)
    t_loop = (np.log(abs(x_loop)) - np.log(1e-6)) / mu + 5.0
    stride = 5
    tf, xf, xif = trajectory(pot, PhasePoint(x_loop, 0.0), t_loop, dt, stride)
    tb, xb, xib = trajectory(pot, PhasePoint(x_loop, 0.0), -t_loop, dt, stride)
    lg_minus, sd_minus, slope_minus = _fit_log_g(tf, xf, mu, -1.0)
    lg_plus, sd_plus, slope_plus = _fit_log_g(tb, xb, mu, +1.0)
    # loop integral of xi dx = 2 int xi^2 dt along the forward half, doubled
    m = np.abs(xf) >= 1e-7
    loop_flow = 2.0 * np.trapezoid(2.0 * xif[m] ** 2, tf[m])

    # incoming trajectory from the far right, time origin from the free law
    x_far = 1.0
    while abs(float(pot(x_far))) > 1e-14 and x_far < 200:
        x_far += 1.0
    t0 = -x_far / (2 * se) - _free_time_offset(pot, E0, x_far, np.inf)
    p_far = PhasePoint(x_far, -np.sqrt(E0 - float(pot(x_far))))
    t_run = x_far / (2 * se) + (np.log(10.0) - np.log(1e-6)) / mu + 5.0
    ti, xi_, _ = trajectory(pot, p_far, t_run, dt, stride)
    lg_in, sd_in, _ = _fit_log_g(t0 + ti, xi_, mu, -1.0)
    to, xo, _ = trajectory(pot, PhasePoint(x_far, np.sqrt(E0 - float(pot(x_far)))), -t_run, dt, stride)
    lg_out, sd_out, _ = _fit_log_g(-t0 + to, xo, mu, +1.0)

    oracle = {
        "log_g0": float(_log_g_loop(pot, E0, mu, x_loop)),
        "log_g_in": float(_log_g_in(pot, E0, mu)),
        "A0_flow": float(loop_flow),
        "mu_from_fit": float(-slope_minus),
    }
    return HomoclinicData(
        E0=float(E0),
        mu=mu,
        A0=float(A0),
        g0_minus=-float(np.exp(lg_minus)),
        g0_plus=-float(np.exp(lg_plus)),
        g_in=float(np.exp(lg_in)),
        g_out=float(np.exp(lg_out)),
        A_in=float(A_in),
        A_out=float(A_out),
        A_ell=float(A_ell),
        T_ell=float(T_ell),
        loop_turning_point=x_loop,
        sea_turning_point=x_sea,
        fit_residuals={"g0_minus": sd_minus, "g0_plus": sd_plus, "g_in": sd_in, "g_out": sd_out},
        oracle=oracle,
    )
