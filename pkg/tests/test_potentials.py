import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jostkit.errors import InvalidParameter
from jostkit.potentials import (
    DoubleStructure,
    Free,
    GaussianBarrier,
    PlateauFunction,
    PowerTail,
    SquareBarrier,
    WellInIsland,
    decay_certificate,
    evaluate,
    from_config,
    plateau,
    truncate,
)

BASES = [
    Free(),
    SquareBarrier(2.0, 1.0),
    GaussianBarrier(1.0, 1.0),
    PowerTail(1.0, 2.0),
    WellInIsland.default(),
    DoubleStructure.default(),
]


def test_evaluate_examples():
    assert evaluate(Free(), 3.7) == 0.0
    assert evaluate(SquareBarrier(2.0, 1.0), 0.5) == 2.0
    assert evaluate(GaussianBarrier(1.0, 1.0), 0.0) == 1.0


def test_truncate_examples():
    base = PowerTail(1.0, 2.0)
    w = truncate(base, 5.0)
    assert w(3.0) == base(3.0)
    assert w(12.0) == 0.0
    # at x = 7.5 both bump arguments equal 1/2, so g0(1.5) = 1/2 exactly
    assert w(7.5) == pytest.approx(0.5 / 57.25, rel=1e-14)


def test_truncate_rejects_nonpositive_radius():
    with pytest.raises(InvalidParameter):
        truncate(PowerTail(), 0.0)
    with pytest.raises(InvalidParameter):
        truncate(PowerTail(), -1.0)


def test_plateau_examples():
    g = PlateauFunction()
    assert plateau(g, 0.5) == 1.0
    assert plateau(g, 3.0) == 0.0
    v = plateau(g, 1.5)
    assert 0 < v < 1
    assert v == plateau(g, -1.5)


@given(st.floats(-5, 5))
def test_plateau_is_even_and_bounded(r):
    g = PlateauFunction()
    assert g(r) == g(-r)
    assert 0.0 <= g(r) <= 1.0


def test_plateau_monotone_with_bounded_derivative():
    g = PlateauFunction()
    r = np.linspace(1.0, 2.0, 5001)
    v = g(r)
    assert np.all(np.diff(v) <= 0)
    d = g.derivative(r)
    assert np.all(np.isfinite(d))
    # derivative matches a centred difference of the values
    fd = np.gradient(v, r)
    assert np.max(np.abs(d[5:-5] - fd[5:-5])) < 1e-4


@pytest.mark.parametrize("base", BASES, ids=lambda p: p.kind)
@given(R=st.floats(0.5, 20.0), u=st.floats(-1.0, 1.0))
def test_truncation_agrees_on_plateau(base, R, u):
    x = u * R
    assert truncate(base, R)(x) == base(x)


@pytest.mark.parametrize("base", BASES, ids=lambda p: p.kind)
@given(R=st.floats(0.5, 20.0), u=st.floats(2.0, 10.0), sign=st.sampled_from([-1.0, 1.0]))
def test_truncation_vanishes_outside(base, R, u, sign):
    assert truncate(base, R)(sign * u * R) == 0.0


def test_truncation_of_compact_base_is_identity():
    base = SquareBarrier(2.0, 1.0)
    w = truncate(base, 1.5)
    x = np.linspace(-10, 10, 20001)
    assert np.array_equal(w(x), base(x))


def test_truncation_of_truncated_base_is_identity():
    base = truncate(GaussianBarrier(), 1.0)
    x = np.linspace(-10, 10, 20001)
    assert np.array_equal(truncate(base, 2.5)(x), base(x))


@pytest.mark.parametrize("base", BASES, ids=lambda p: p.kind)
def test_values_finite_and_real(base):
    x = np.linspace(-1e3, 1e3, 10001)
    v = base(x)
    assert v.dtype == float and np.all(np.isfinite(v))


def test_decay_certificate():
    xs = np.linspace(-50, 50, 2001)
    free = decay_certificate(Free(), 2.0, xs)
    assert free.value_ratio == 0.0 and free.derivative_ratio == 0.0
    tail = decay_certificate(PowerTail(1.0, 2.0), 2.0, xs, bound=2.0)
    c0, c1 = PowerTail(1.0, 2.0).bound
    assert tail.value_ratio <= c0 * (1 + 1e-12)
    assert tail.derivative_ratio <= c1 * (1 + 1e-6)
    assert not tail.violated
    assert decay_certificate(PowerTail(1.0, 2.0), 3.0, xs, bound=2.0).violated


def test_gaussian_decay_ratios_vanish_far_out():
    far = decay_certificate(GaussianBarrier(), 2.0, np.linspace(20, 50, 301))
    assert far.value_ratio < 1e-100 and far.derivative_ratio < 1e-100


@pytest.mark.parametrize("pot", BASES + [truncate(PowerTail(), 4.0)], ids=lambda p: p.kind)
def test_config_round_trip(pot):
    back = from_config(pot.to_config())
    x = np.linspace(-20, 20, 401)
    assert np.array_equal(back(x), pot(x))


def test_extended_precision_matches_double():
    pot = truncate(PowerTail(1.0, 2.0), 3.0)
    x = np.linspace(-7, 7, 301)
    ext = pot.extended(x)
    assert ext.dtype == np.longdouble
    # exp(-1/t) near the support edge amplifies the rounding of t
    assert np.allclose(ext.astype(float), pot(x), rtol=1e-11, atol=1e-15)


def test_default_shapes():
    isl = WellInIsland.default()
    assert isl.well_bottom == pytest.approx(0.1)
    assert isl.harmonic_frequency > 0
    ds = DoubleStructure.default()
    assert abs(ds.derivative(0.0)) < 1e-9
    assert ds(-1.5) < ds.E0 < ds(-3.0)
