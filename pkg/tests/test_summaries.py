import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtr, ndtri

from rocinfer.errors import BadGridError
from rocinfer.summaries import (
    band,
    ecdf_eval,
    ecdf_quantile,
    interval_from,
    invert_cdf,
    mixture_auc_closed,
    mw_auc,
    odd_grid,
    pauc_from_placements,
    pauc_normalise,
    placements_half,
    roc_curve,
    simpson,
    tnf_curve,
    weighted_ecdf_eval,
    weighted_ecdf_quantile,
    youden,
    youden_grid,
)


def test_simpson_is_exact_for_cubics():
    grid = odd_grid(0.0, 1.0, 201)
    vals = grid**3
    assert abs(simpson(vals, grid[1] - grid[0]) - 0.25) < 1e-14


def test_mw_auc_halves_ties():
    # pairs: (0,1) win, (0,2) win, (1,1) tie, (1,2) win
    assert mw_auc([0.0, 1.0], [1.0, 2.0]) == pytest.approx(0.875, abs=1e-15)


def test_mw_auc_complement_under_group_swap():
    g = np.random.default_rng(1)
    a, b = g.normal(size=30), g.normal(1.0, 1.0, size=40)
    assert mw_auc(a, b) + mw_auc(b, a) == pytest.approx(1.0, abs=1e-12)


def test_weighted_auc_with_flat_weights_matches_plain():
    g = np.random.default_rng(2)
    a, b = g.normal(size=25), g.normal(size=25)
    w = np.full(25, 1.0 / 25)
    assert mw_auc(a, b, w, w) == pytest.approx(mw_auc(a, b), abs=1e-12)


@settings(max_examples=50)
@given(
    st.lists(st.integers(-500, 500), min_size=2, max_size=20),
    st.lists(st.integers(-500, 500), min_size=2, max_size=20),
)
def test_mw_auc_is_rank_based(h, d):
    """Strictly increasing transforms leave the statistic unchanged."""
    # tenths keep distinct values distinct through exp(x/25)
    h, d = np.array(h) / 10.0, np.array(d) / 10.0
    base = mw_auc(h, d)
    assert 0.0 <= base <= 1.0
    assert mw_auc(np.exp(h / 25), np.exp(d / 25)) == pytest.approx(base, abs=1e-12)


def test_single_normal_auc_closed_form():
    got = mixture_auc_closed([1.0], [0.0], [1.0], [1.0], [1.0], [1.0])
    assert got == pytest.approx(0.7602499389065233, abs=1e-12)


def test_invert_cdf_matches_normal_quantiles():
    q = np.array([0.1, 0.5, 0.9])
    got = invert_cdf(lambda t: ndtr(t), q, -10.0, 10.0)
    np.testing.assert_allclose(got, ndtri(q), atol=1e-7)


def test_binormal_roc_curve_closed_form():
    p = np.linspace(0.0, 1.0, 11)
    got = roc_curve(lambda t: ndtr(t), lambda t: ndtr(t - 2.0), p, -12.0, 12.0)
    expect = np.where((p > 0) & (p < 1), ndtr(2.0 + ndtri(np.clip(p, 1e-12, 1 - 1e-12))), p)
    expect[p == 0.0] = 0.0
    expect[p == 1.0] = 1.0
    np.testing.assert_allclose(got, expect, atol=1e-6)


def test_tnf_curve_integrates_to_auc():
    p = odd_grid(0.0, 1.0, 401)
    vals = tnf_curve(lambda t: ndtr(t), lambda t: ndtr(t - 2.0), p, -12.0, 12.0)
    area = simpson(vals, p[1] - p[0])
    assert area == pytest.approx(0.9213503964748574, abs=1e-4)


def test_youden_binormal_shift_two():
    grid = np.linspace(-6.0, 8.0, 20001)
    pt = youden(lambda t: ndtr(t), lambda t: ndtr(t - 2.0), grid)
    assert pt.yi == pytest.approx(0.6826894921370859, abs=1e-6)
    assert pt.threshold == pytest.approx(1.0, abs=grid[1] - grid[0] + 1e-12)
    assert pt.sign == 1


def test_youden_grid_spans_the_data():
    g = youden_grid([0.0, 5.0])
    assert g[0] <= 0.0 and g[-1] >= 5.0
    assert len(g) == 500


def test_pauc_normalisation_conventions():
    assert pauc_normalise(0.05, "fpf", 0.1) == pytest.approx(0.5)
    assert pauc_normalise(0.1, "tpf", 0.8) == pytest.approx(0.5)
    assert pauc_normalise(0.3, "tpf", 1.0) == pytest.approx(0.3)
    with pytest.raises(BadGridError):
        pauc_normalise(0.1, "sideways", 0.5)


def test_odd_grid_bumps_even_counts():
    g = odd_grid(0.0, 1.0, 200)
    assert len(g) == 201
    assert g[0] == 0.0 and g[-1] == 1.0


def test_band_takes_central_95():
    draws = np.arange(1, 1002, dtype=float)
    lo, hi = band(draws)
    assert lo == pytest.approx(26.0, abs=1.0)
    assert hi == pytest.approx(976.0, abs=1.0)


def test_interval_degenerates_without_draws():
    iv = interval_from(0.4, None)
    assert (iv.est, iv.lo, iv.hi) == (0.4, 0.4, 0.4)


def test_ecdf_conventions():
    y = np.array([1.0, 2.0, 3.0])
    assert ecdf_eval(y, 2.0) == pytest.approx(2.0 / 3.0)  # right continuous
    assert ecdf_eval(y, 0.5) == 0.0
    assert ecdf_quantile(y, 0.5) == 2.0  # smallest y with F(y) >= q
    assert ecdf_quantile(y, 1.0) == 3.0


def test_weighted_ecdf_with_flat_weights_matches_plain():
    y = np.array([1.0, 2.0, 5.0])
    cumw = np.array([1 / 3, 2 / 3, 1.0])
    x = np.array([0.0, 1.5, 5.0])
    np.testing.assert_allclose(weighted_ecdf_eval(y, cumw, x), ecdf_eval(y, x))
    q = np.array([0.2, 0.7, 1.0])
    np.testing.assert_allclose(weighted_ecdf_quantile(y, cumw, q), ecdf_quantile(y, q))


def test_placements_half_tie_convention():
    # P(Y > 2) + 0.5 P(Y = 2) over ref {1, 2}
    assert placements_half(np.array([1.0, 2.0]), 2.0) == pytest.approx(0.25)
    assert placements_half(np.array([1.0, 2.0]), 0.0) == pytest.approx(1.0)


def test_full_range_placement_pauc_reduces_to_auc():
    g = np.random.default_rng(3)
    h = np.sort(g.normal(size=50))
    d = g.normal(1.0, 1.0, size=40)
    U = placements_half(h, d)
    w = np.full(40, 1.0 / 40)
    full = pauc_from_placements(U, w, "fpf", 1.0)
    assert full == pytest.approx(mw_auc(h, d), abs=1e-12)
    assert full == pytest.approx(1.0 - U.mean(), abs=1e-12)
