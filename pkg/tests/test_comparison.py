import numpy as np
import pytest

from jostkit.comparison import (
    ComparisonRun,
    cutoff_difference_norm,
    propagator_difference,
    resolvent_difference,
    superpoly_fit,
    weighted_inequalities,
)
from jostkit.cutoff import CutoffSpec
from jostkit.errors import ConfigurationError, DegenerateFit, InvalidParameter
from jostkit.potentials import Free, GaussianBarrier, PowerTail, truncate
from jostkit.propagator import EnergyWindow
from jostkit.schrodinger1d import EnergyPoint, Side, build_grid, resolvent_kernel

TAIL = PowerTail(1.0, 2.0)
CHI = CutoffSpec(2.0, 1.0)


def dense_cutoff_resolvent(pot, lam, h, xq, dx, chi):
    c = chi(xq) * np.sqrt(dx)
    op = resolvent_kernel(pot, EnergyPoint(lam, h, Side.UPPER), xq, c, c, build_grid(pot, [lam], h))
    return op.dense()


def test_no_difference_beyond_the_support():
    base = truncate(GaussianBarrier(1.0, 1.0), 1.0)
    run = ComparisonRun(base, (3.0,), (0.1,), 1.0, CHI, window=EnergyWindow(1.0, 0.4))
    assert resolvent_difference(run, 3.0, 0.1, sensitivity=False).diff_norm == 0.0
    pd = propagator_difference(run, 3.0, 0.1, [0.0, 1.0], n_points=1500, max_kdx=0.6)
    assert np.all(pd.values <= 1e-12)


def test_swap_and_scaling():
    p, q = truncate(TAIL, 12.0), truncate(TAIL, 3.0)
    a = cutoff_difference_norm(p, q, 1.0, 0.1, CHI, 3.0)
    assert cutoff_difference_norm(q, p, 1.0, 0.1, CHI, 3.0) == pytest.approx(a, rel=1e-10)
    assert cutoff_difference_norm(p, q, 1.0, 0.1, CHI.scaled(2.0), 3.0) == pytest.approx(4 * a, rel=1e-10)
    with pytest.raises(InvalidParameter):
        cutoff_difference_norm(p, q, 1.0, 0.1, CutoffSpec(4.0), 3.0)


def test_rank_two_identity_matches_direct_subtraction():
    # at large h the two resolvents differ at O(1) and plain subtraction is accurate
    lam, h, R = 1.0, 0.3, 2.5
    p, q = truncate(TAIL, 4 * R), truncate(TAIL, R)
    spacing = min(0.02, 0.3 * h / np.sqrt(lam))
    xq, dx = CHI.nodes(spacing)
    direct = dense_cutoff_resolvent(p, lam, h, xq, dx, CHI) - dense_cutoff_resolvent(q, lam, h, xq, dx, CHI)
    ref = np.linalg.norm(direct, 2)
    assert cutoff_difference_norm(p, q, lam, h, CHI, R) == pytest.approx(ref, rel=1e-6)


def test_difference_shrinks_with_radius():
    run = ComparisonRun(TAIL, (4.0, 8.0), (0.1,), 1.0, CHI)
    d4 = resolvent_difference(run, 4.0, 0.1)
    d8 = resolvent_difference(run, 8.0, 0.1)
    assert d8.diff_norm < 1e-2 * d4.diff_norm
    assert d4.outer_sensitivity < 0.5
    assert set(d4.as_row()) == {"R", "h", "lambda", "diff_norm", "q_weighted_norm", "ratio"}


def test_superpoly_fit_on_synthetic_data():
    hs = [0.2, 0.1, 0.05, 0.025]
    fit = superpoly_fit([(h, 7 * h**3) for h in hs])
    assert fit.exponent == pytest.approx(3.0, abs=0.01)
    assert fit.residual < 1e-10
    expo = superpoly_fit([(h, np.exp(-1 / h)) for h in hs])
    assert np.all(np.diff(expo.window_exponents) > 0)
    assert expo.window_h[0] == (0.2, 0.1)
    flat = superpoly_fit([(h, 0.4) for h in hs])
    assert flat.exponent == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "pairs",
    [
        [(0.2, 1.0), (0.1, 0.5)],
        [(0.2, 1.0), (0.15, 0.5), (0.1, 0.1)],
        [(0.2, 1.0), (0.1, 0.0), (0.05, 0.1)],
        [(0.2, 1.0), (0.1, np.nan), (0.05, 0.1)],
    ],
    ids=["too-few", "narrow", "zero", "nan"],
)
def test_superpoly_fit_rejects(pairs):
    with pytest.raises(DegenerateFit):
        superpoly_fit(pairs)


def test_free_weighted_bounds():
    for h in (0.1, 0.05):
        r = weighted_inequalities(Free(), 1.0, h)
        assert r.a17_ratio < 2.0
        assert r.interpolation_ratio < 2.0
        assert 0.5 < r.equivalence_ratio < 2.0
    with pytest.raises(InvalidParameter):
        weighted_inequalities(TAIL, 1.0, 0.1)
    with pytest.raises(InvalidParameter):
        weighted_inequalities(Free(), 1.0, 0.1, s=0.5)


def test_propagator_needs_window_and_room():
    run = ComparisonRun(TAIL, (8.0,), (0.1,), 1.0, CHI)
    with pytest.raises(ConfigurationError):
        propagator_difference(run, 8.0, 0.1, [0.0, 1.0])
    windowed = ComparisonRun(TAIL, (8.0,), (0.1,), 1.0, CHI, window=EnergyWindow(1.0, 0.4))
    with pytest.raises(ConfigurationError):
        propagator_difference(windowed, 8.0, 0.1, [0.0, 10.0], n_points=2000, L_box=5.0, max_kdx=10.0)


def test_propagator_difference_at_time_zero_is_filter_difference():
    run = ComparisonRun(TAIL, (3.0,), (0.2,), 1.0, CHI, window=EnergyWindow(1.0, 0.4))
    pd = propagator_difference(run, 3.0, 0.2, [0.0, 2.0], n_points=1200, max_kdx=0.6)
    assert pd.values[0] > 0
    assert pd.sup == max(pd.values)
    assert pd.L_box >= 2 * CHI.radius + 2 * np.sqrt(1.4) * 2.0


@pytest.mark.parametrize(
    "kwargs",
    [dict(weight_s=0.5), dict(lam=0.0), dict(R_list=(1.5,)), dict(outer_factor=1.0)],
    ids=["s", "lam", "R", "outer"],
)
def test_run_validation(kwargs):
    args = dict(base=TAIL, R_list=(4.0,), h_list=(0.1,), lam=1.0, chi=CHI)
    args.update(kwargs)
    with pytest.raises(InvalidParameter):
        ComparisonRun(**args)
