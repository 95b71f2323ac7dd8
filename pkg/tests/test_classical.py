from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jostkit.classical import (
    PhasePoint,
    agmon_distance,
    curvature_exponent,
    flow,
    hamiltonian,
    homoclinic_data,
    is_trapped,
    island_agmon_distance,
    trajectory,
)
from jostkit.errors import GeometryError, InvalidBarrier
from jostkit.potentials import DoubleStructure, Free, GaussianBarrier, Potential, SquareBarrier, WellInIsland

DOUBLE = DoubleStructure.default()


@dataclass(frozen=True, eq=False)
class QuadraticCap(Potential):
    """V = 1 - (mu^2/4) x^2, the linearisation at a barrier top."""

    mu: float = 2.0
    kind = "QuadraticCap"

    def _value(self, x):
        return 1.0 - 0.25 * self.mu**2 * x**2

    def _deriv(self, x):
        return -0.5 * self.mu**2 * x


@pytest.fixture(scope="module")
def homoclinic():
    return homoclinic_data(DOUBLE)


def test_free_flow():
    p = flow(Free(), PhasePoint(0.0, 1.0), 3.0)
    assert p.x == pytest.approx(6.0, abs=1e-12)
    assert p.xi == 1.0


def test_stable_manifold_of_quadratic_cap():
    cap = QuadraticCap(1.5)
    # the unstable direction amplifies step errors, so the tolerance loosens with t
    for t, rel in ((0.5, 1e-9), (2.0, 1e-8), (5.0, 1e-6)):
        p = flow(cap, PhasePoint(1.0, -cap.mu / 2), t)
        assert p.x == pytest.approx(np.exp(-cap.mu * t), rel=rel)
        assert p.xi == pytest.approx(-cap.mu / 2 * np.exp(-cap.mu * t), rel=rel)


def test_energy_conserved_along_long_orbits():
    for p0 in (PhasePoint(-1.5, 0.0), PhasePoint(3.0, -1.1), PhasePoint(-0.3, 0.6)):
        E = hamiltonian(DOUBLE, p0)
        for t in (50.0, -50.0):
            _, xs, xis = trajectory(DOUBLE, p0, t)
            drift = np.max(np.abs(xis**2 + DOUBLE(xs) - E))
            assert drift <= 1e-8


@given(x=st.floats(-4, 4), xi=st.floats(-2, 2), t=st.floats(0.1, 5.0))
def test_flow_is_reversible(x, xi, t):
    p0 = PhasePoint(x, xi)
    back = flow(DOUBLE, flow(DOUBLE, p0, t), -t)
    assert back.x == pytest.approx(x, abs=1e-8)
    assert back.xi == pytest.approx(xi, abs=1e-8)


@given(x=st.floats(-4, 4), xi=st.floats(-2, 2), t=st.floats(0.1, 5.0))
def test_time_reversal_symmetry(x, xi, t):
    # flipping the momentum and running forward retraces the orbit
    p1 = flow(DOUBLE, PhasePoint(x, xi), t)
    p2 = flow(DOUBLE, PhasePoint(p1.x, -p1.xi), t)
    assert p2.x == pytest.approx(x, abs=1e-8)
    assert p2.xi == pytest.approx(-xi, abs=1e-8)


@dataclass(frozen=True, eq=False)
class Wrapped(Potential):
    """Hides the family so the flow falls back to the generic integrator."""

    inner: Potential = None
    kind = "Wrapped"

    def _value(self, x):
        return self.inner(x)

    def _deriv(self, x):
        return self.inner.derivative(x)


def test_generic_and_compiled_paths_agree():
    p0 = PhasePoint(-1.0, 0.4)
    a = flow(DOUBLE, p0, 3.0, dt=1e-2)
    b = flow(Wrapped(DOUBLE), p0, 3.0, dt=1e-2)
    assert a.x == pytest.approx(b.x, abs=1e-10)
    assert a.xi == pytest.approx(b.xi, abs=1e-10)


def test_trapping():
    well = GaussianBarrier(-1.0, 1.0)
    assert is_trapped(well, PhasePoint(0.0, np.sqrt(0.5)), -0.5, 30.0, 5.0)
    bump = GaussianBarrier(1.0, 1.0)
    assert not is_trapped(bump, PhasePoint(-2.0, 1.2), hamiltonian(bump, PhasePoint(-2.0, 1.2)), 30.0, 5.0)
    with pytest.raises(GeometryError):
        is_trapped(bump, PhasePoint(0.0, 0.0), 0.5, 1.0, 5.0)


def test_curvature_exponent():
    assert curvature_exponent(GaussianBarrier(1.0, 1.0)) == pytest.approx(2.0, rel=1e-6)
    assert curvature_exponent(QuadraticCap(0.7)) == pytest.approx(0.7, rel=1e-6)
    with pytest.raises(GeometryError):
        curvature_exponent(GaussianBarrier(-1.0, 1.0))


def test_agmon_distance():
    assert agmon_distance(Free(), -1.0, 0.3, 0.3) == 0.0
    V0, a, E = 2.0, 1.0, 0.5
    assert agmon_distance(SquareBarrier(V0, a), E, -a, a) == pytest.approx(2 * a * np.sqrt(V0 - E), rel=1e-9)
    with pytest.raises(InvalidBarrier):
        agmon_distance(GaussianBarrier(1.0, 1.0), 1.5, -1.0, 1.0)


def test_island_agmon_distance():
    isl = WellInIsland.default()
    S0, x_sea = island_agmon_distance(isl)
    assert isl(x_sea) == pytest.approx(isl.well_bottom, abs=1e-12)
    assert S0 > 0
    assert S0 == pytest.approx(agmon_distance(isl, isl.well_bottom, 0.0, x_sea), rel=1e-12)


class TestHomoclinic:
    def test_signs(self, homoclinic):
        hd = homoclinic
        assert hd.g0_minus < 0 and hd.g0_plus < 0
        assert hd.g_in > 0 and hd.g_out > 0
        assert hd.A0 > 0

    def test_mu_matches_curvature(self, homoclinic):
        hd = homoclinic
        assert hd.mu == pytest.approx(np.sqrt(-2 * float(DOUBLE.second_derivative(0.0, 1e-4))), rel=1e-9)
        assert hd.oracle["mu_from_fit"] == pytest.approx(hd.mu, rel=1e-3)

    def test_action_matches_flow_integral(self, homoclinic):
        assert homoclinic.oracle["A0_flow"] == pytest.approx(homoclinic.A0, rel=1e-4)

    def test_symmetric_constants(self, homoclinic):
        hd = homoclinic
        assert hd.g_in == pytest.approx(hd.g_out, rel=1e-4)
        # the loop is time-symmetric about its turning point
        assert hd.g0_minus == pytest.approx(hd.g0_plus, rel=1e-4)

    def test_fits_agree_with_quadrature(self, homoclinic):
        hd = homoclinic
        assert np.log(abs(hd.g0_minus)) == pytest.approx(hd.oracle["log_g0"], abs=1e-3)
        assert np.log(hd.g_in) == pytest.approx(hd.oracle["log_g_in"], abs=1e-3)

    def test_turning_points(self, homoclinic):
        hd = homoclinic
        assert hd.sea_turning_point < hd.loop_turning_point < 0
        assert DOUBLE(hd.loop_turning_point) == pytest.approx(hd.E0, abs=1e-12)

    def test_no_loop_is_rejected(self):
        with pytest.raises(GeometryError):
            homoclinic_data(GaussianBarrier(1.0, 1.0))
