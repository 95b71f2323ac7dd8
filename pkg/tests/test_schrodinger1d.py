import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from jostkit.cutoff import CutoffSpec
from jostkit.errors import AtPole, BranchAmbiguity, ResolutionError, UnsupportedPotential
from jostkit.potentials import Free, GaussianBarrier, PowerTail, SquareBarrier, truncate
from jostkit.schrodinger1d import (
    EnergyPoint,
    GridSpec,
    Side,
    build_grid,
    connection,
    cutoff_resolvent_opnorm,
    green_kernel,
    jost_determinant,
    jost_left,
    jost_right,
    wronskian_profile,
)

BUMP = truncate(GaussianBarrier(1.0, 1.0), 2.0)


def square_barrier_jost_right(V0, a, lam, h, x):
    """Closed-form f_+ inside |x| <= a for lam < V0."""
    k = np.sqrt(lam) / h
    q = np.sqrt(V0 - lam) / h
    p0, d0 = np.exp(1j * k * a), 1j * k * np.exp(1j * k * a)
    s = x - a
    return p0 * np.cosh(q * s) + d0 / q * np.sinh(q * s), p0 * q * np.sinh(q * s) + d0 * np.cosh(q * s)


def square_well_levels(V0, a, h):
    """Bound-state energies -E of -V0 on [-a, a] from the even/odd matching conditions."""
    out = []

    def even(E):
        kin, kap = np.sqrt(V0 - E) / h, np.sqrt(E) / h
        return kin * np.sin(kin * a) - kap * np.cos(kin * a)

    def odd(E):
        kin, kap = np.sqrt(V0 - E) / h, np.sqrt(E) / h
        return kin * np.cos(kin * a) + kap * np.sin(kin * a)

    grid = np.linspace(1e-9, V0 - 1e-9, 20001)
    for f in (even, odd):
        vals = f(grid)
        for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
            out.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    return sorted(out, reverse=True)


def test_free_jost_solutions_are_plane_waves():
    ep = EnergyPoint(1.0, 1.0)
    fp = jost_right(Free(), ep, GridSpec(L=5.0))
    fm = jost_left(Free(), ep, GridSpec(L=5.0))
    assert np.allclose(fp.values, np.exp(1j * fp.x), atol=1e-12)
    assert np.allclose(fm.values, np.exp(-1j * fm.x), atol=1e-12)


def test_free_complex_energy_modulus():
    z = 1 - 0.1j
    L = 5.0
    fp = jost_right(Free(), EnergyPoint(z, 1.0), GridSpec(L=L))
    expected = np.exp(np.sqrt(z).imag * L)
    assert abs(fp.values[0]) == pytest.approx(expected, rel=1e-6)


def test_square_barrier_interior_matches_closed_form():
    V0, a, lam, h = 2.0, 1.0, 1.0, 0.2
    fp = jost_right(SquareBarrier(V0, a), EnergyPoint.upper(lam, h))
    inside = np.abs(fp.x) <= a
    psi, dpsi = square_barrier_jost_right(V0, a, lam, h, fp.x[inside])
    assert np.max(np.abs(fp.values[inside] - psi) / np.abs(psi)) < 1e-8
    assert np.max(np.abs(fp.derivs[inside] - dpsi) / np.abs(dpsi)) < 1e-8
    # growth rate exp(sqrt(V0 - lam) |x| / h) towards the left edge
    ratio = abs(fp(-0.5)) / abs(fp(0.5))
    assert np.log(ratio) == pytest.approx(np.sqrt(V0 - lam) / h, rel=1e-3)


def test_square_barrier_wronskian_matches_transfer_matrix():
    V0, a, lam, h = 2.0, 1.0, 0.5, 0.2
    k = np.sqrt(lam) / h
    p, dp = square_barrier_jost_right(V0, a, lam, h, -a)
    fm, dfm = np.exp(1j * k * a), -1j * k * np.exp(1j * k * a)
    oracle = fm * dp - dfm * p
    w = jost_determinant(SquareBarrier(V0, a), lam, h, side=Side.UPPER)
    assert abs(w - oracle) / abs(oracle) < 1e-8


def test_even_potential_parity():
    ep = EnergyPoint(0.8 - 0.05j, 0.1)
    g = build_grid(BUMP, [ep.z], ep.h)
    fp = jost_right(BUMP, ep, g)
    fm = jost_left(BUMP, ep, g)
    x = np.linspace(-3.5, 3.5, 71)
    assert np.allclose(fm(x), fp(-x), rtol=1e-8, atol=1e-8 * np.max(np.abs(fp(x))))


@given(re=st.floats(0.1, 4.0), im=st.floats(-1.0, 1.0), h=st.floats(0.05, 1.0))
def test_free_determinant(re, im, h):
    z = complex(re, im)
    w = jost_determinant(Free(), z, h)
    assert abs(w - 2j * np.sqrt(z) / h) <= 1e-10 * abs(w)


def test_square_well_bound_states_are_zeros():
    V0, a, h = 2.0, 1.0, 0.5
    well = SquareBarrier(-V0, a)
    for E in square_well_levels(V0, a, h):
        z = complex(-E)
        w = jost_determinant(well, z, h, side=Side.UPPER)
        ref = jost_determinant(well, z * (1 - 1e-3), h, side=Side.UPPER)
        assert abs(w) < 1e-8 * abs(ref)


@given(lam=st.floats(0.2, 3.0))
def test_boundary_values_are_conjugate(lam):
    h = 0.1
    up = jost_determinant(BUMP, lam, h, side=Side.UPPER)
    lo = jost_determinant(BUMP, lam, h, side=Side.LOWER)
    assert abs(lo - np.conj(up)) <= 1e-9 * abs(up)


def test_continuity_across_positive_axis():
    h, lam = 0.1, 1.3
    up = jost_determinant(BUMP, lam, h, side=Side.UPPER)
    above = jost_determinant(BUMP, lam + 1e-8j, h)
    below = jost_determinant(BUMP, lam - 1e-8j, h)
    assert abs(above - up) < 1e-5 * abs(up)
    # the principal branch continues analytically: no jump of sqrt across (0, inf)
    assert abs(below - up) < 1e-5 * abs(up)


def test_determinant_is_analytic():
    h, z, d = 0.1, 0.9 - 0.07j, 1e-5
    f = lambda s: jost_determinant(BUMP, s, h)
    dx = (f(z + d) - f(z - d)) / (2 * d)
    dy = (f(z + 1j * d) - f(z - 1j * d)) / (2 * d)
    # Cauchy-Riemann: df/dy = i df/dx
    assert abs(dy - 1j * dx) < 1e-6 * abs(dx)


def test_branch_cut_requires_side():
    with pytest.raises(BranchAmbiguity):
        jost_determinant(BUMP, -0.5, 0.1)
    jost_determinant(BUMP, -0.5, 0.1, side=Side.UPPER)


def test_errors():
    with pytest.raises(UnsupportedPotential):
        jost_right(PowerTail(), EnergyPoint(1.0, 0.1))
    with pytest.raises(ResolutionError):
        jost_right(BUMP, EnergyPoint(1.0, 0.01), GridSpec(dx=0.1))
    with pytest.raises(ValueError):
        EnergyPoint(1.0 + 0.1j, 0.1, Side.UPPER)
    with pytest.raises(ValueError):
        EnergyPoint(1.0, 0.0)


@given(re=st.floats(0.3, 2.0), im=st.floats(-0.3, 0.3), h=st.floats(0.05, 0.5))
def test_wronskian_is_constant(re, im, h):
    ep = EnergyPoint(complex(re, im), h)
    g = build_grid(BUMP, [ep.z], h)
    fm, fp = jost_left(BUMP, ep, g), jost_right(BUMP, ep, g)
    prof = wronskian_profile(fm, fp)
    w = connection(fm, fp).wronskian
    assert np.max(np.abs(prof - w)) <= 1e-6 * abs(w)


def test_ode_residual_is_second_order():
    h, z = 0.1, 0.9 - 0.05j
    ep = EnergyPoint(z, h)
    res = []
    for dx in (4e-3, 2e-3):
        fp = jost_right(BUMP, ep, GridSpec(dx=dx))
        x, psi = fp.x, fp.values
        # interior nodes of the uniform grid
        step = np.diff(x)
        assert np.allclose(step, step[0], rtol=1e-9)
        d2 = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / step[0] ** 2
        r = -(h**2) * d2 + (BUMP(x[1:-1]) - z) * psi[1:-1]
        res.append(np.max(np.abs(r)) / np.max(np.abs(psi)))
    assert res[0] < 1e-3
    assert 3.0 < res[0] / res[1] < 5.0


def test_free_green_kernel_closed_form():
    lam, h = 1.0, 0.5
    ep = EnergyPoint.upper(lam, h)
    x = np.linspace(-3, 3, 13)
    X, Y = np.meshgrid(x, x, indexing="ij")
    G = green_kernel(Free(), ep, X, Y, GridSpec(L=4.0))
    oracle = 1j / (2 * h * np.sqrt(lam)) * np.exp(1j * np.sqrt(lam) * np.abs(X - Y) / h)
    assert np.max(np.abs(G - oracle)) < 1e-10 * np.max(np.abs(oracle))


@given(x=st.floats(-3, 3), y=st.floats(-3, 3), lam=st.floats(0.3, 2.0))
def test_green_reciprocity(x, y, lam):
    ep = EnergyPoint.upper(lam, 0.1)
    a = green_kernel(BUMP, ep, x, y)
    b = green_kernel(BUMP, ep, y, x)
    assert abs(a - b) <= 1e-9 * max(abs(a), 1e-300)


def test_limiting_absorption():
    lam, h, x, y = 1.2, 0.1, -0.7, 0.4
    limit = green_kernel(BUMP, EnergyPoint.upper(lam, h), x, y)
    gaps = [abs(green_kernel(BUMP, EnergyPoint(lam + 1j * eps, h), x, y) - limit) for eps in (1e-2, 1e-3, 1e-4)]
    assert gaps[1] < gaps[0] and gaps[2] < gaps[1]
    assert gaps[2] < 1e-2 * abs(limit)


def test_green_simple_pole_at_bound_state():
    V0, a, h = 2.0, 1.0, 0.5
    well = SquareBarrier(-V0, a)
    zb = -square_well_levels(V0, a, h)[0]
    scaled = []
    for d in (1e-3, 1e-4, 1e-5):
        G = green_kernel(well, EnergyPoint(zb + 1j * d, h), 0.1, 0.3)
        scaled.append(abs(G) * d)
    assert scaled[2] == pytest.approx(scaled[1], rel=1e-3)
    assert scaled[1] == pytest.approx(scaled[0], rel=1e-2)
    with pytest.raises(AtPole):
        green_kernel(well, EnergyPoint(zb, h, Side.UPPER), 0.1, 0.3)


def _dense_free_norm(chi, lam, h, spacing):
    xq, dx = chi.nodes(spacing)
    c = chi(xq) * np.sqrt(dx)
    G = 1j / (2 * h * np.sqrt(lam)) * np.exp(1j * np.sqrt(lam) * np.abs(xq[:, None] - xq[None, :]) / h)
    return np.linalg.norm(c[:, None] * G * c[None, :], 2)


def test_cutoff_resolvent_norm_free():
    chi = CutoffSpec(1.0)
    ep = EnergyPoint.upper(1.0, 1.0)
    value = cutoff_resolvent_opnorm(Free(), ep, chi, spacing=0.01)
    assert value == pytest.approx(_dense_free_norm(chi, 1.0, 1.0, 0.01), rel=1e-6)
    # quadrature convergence to the continuum norm
    assert value == pytest.approx(_dense_free_norm(chi, 1.0, 1.0, 0.0025), rel=1e-3)
    # golden value frozen from the dense oracle at spacing 0.00125
    assert value == pytest.approx(0.3990877380, rel=1e-5)


def test_cutoff_resolvent_norm_is_bilinear():
    chi = CutoffSpec(1.5, 0.5)
    ep = EnergyPoint.upper(1.0, 0.2)
    one = cutoff_resolvent_opnorm(BUMP, ep, chi)
    two = cutoff_resolvent_opnorm(BUMP, ep, chi.scaled(2.0))
    assert two == pytest.approx(4 * one, rel=1e-6)


@given(seed=st.integers(0, 10_000))
def test_cutoff_norm_variational_lower_bound(seed):
    chi = CutoffSpec(1.5, 0.5)
    lam, h = 1.0, 0.2
    ep = EnergyPoint.upper(lam, h)
    spacing = 0.01
    norm = cutoff_resolvent_opnorm(BUMP, ep, chi, spacing=spacing)
    xq, dx = chi.nodes(spacing)
    u = np.random.default_rng(seed).standard_normal(xq.size)
    cu = chi(xq) * u
    G = green_kernel(BUMP, ep, xq[:, None], xq[None, :])
    quad_form = abs(np.conj(cu) @ (G @ cu) * dx) * dx
    assert quad_form / (np.sum(np.abs(cu) ** 2) * dx) <= norm * (1 + 1e-6)
