import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from rocinfer.conditional import (
    croc_bnp,
    croc_kernel,
    croc_sp,
    croc_threshold,
    croc_tnf,
)
from rocinfer.errors import (
    MissingColumnError,
    NoLocalDataError,
    RankDeficientError,
)
from rocinfer.mixtures import DdpPrior, McmcControl
from rocinfer.pooled import PaucControl
from rocinfer.sample import Column, DiagnosticSample
from rocinfer.summaries import odd_grid, simpson

from conftest import covariate_sample

AUC_SHIFT15 = float(ndtr(1.5 / np.sqrt(2.0)))
NEW = {"x": np.array([0.25, 0.5, 0.75])}


def test_sp_normal_recovers_conditional_auc():
    s = covariate_sample(n_h=400, n_d=400, seed=30)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, B=40, rng=31)
    assert res.roc_est.shape == (3, 101)
    for iv in res.auc:
        assert iv.est == pytest.approx(AUC_SHIFT15, abs=0.05)
        assert iv.lo < iv.est < iv.hi
    assert res.sample_sizes == (400, 400)


def test_sp_curve_rebuilds_from_reported_coefficients():
    s = covariate_sample(n_h=150, n_d=150, seed=32)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, B=0)
    ind = res.coefficients["induced"]
    assert ind["labels"] == ["(Intercept)", "x"]
    a_coef = np.array([v.est for v in ind["values"]])
    b = ind["b"].est
    p = res.p
    for r, x in enumerate(NEW["x"]):
        z = np.array([1.0, x])
        rebuilt = 1.0 - ndtr(float(z @ a_coef) + b * ndtri(1.0 - p[1:-1]))
        assert np.allclose(res.roc_est[r, 1:-1], rebuilt, atol=1e-10)
    # reverse-orientation coefficients are the stated transform of the forward ones
    tnf = res.coefficients["induced_tnf"]
    assert np.allclose(
        [v.est for v in tnf["values"]], -a_coef / b, atol=1e-10)
    assert tnf["b"].est == pytest.approx(1.0 / b, abs=1e-10)


def _affine(s, a, b):
    return DiagnosticSample(
        marker=a * s.marker + b, disease=s.disease, nondiseased_tag=0,
        covariates=s.covariates,
    )


@pytest.mark.parametrize("est_cdf", ["normal", "empirical"])
def test_sp_location_scale_invariance(est_cdf):
    s = covariate_sample(n_h=120, n_d=120, seed=33)
    t = _affine(s, 3.0, 7.0)
    r1 = croc_sp("y ~ x", "y ~ x", s, NEW, est_cdf=est_cdf, B=30, rng=34)
    r2 = croc_sp("y ~ x", "y ~ x", t, NEW, est_cdf=est_cdf, B=30, rng=34)
    assert np.allclose(r1.roc_est, r2.roc_est, atol=1e-8)
    assert np.allclose(r1.roc_lo, r2.roc_lo, atol=1e-8)
    for i1, i2 in zip(r1.auc, r2.auc):
        assert i1.est == pytest.approx(i2.est, abs=1e-8)
    t1 = croc_threshold(r1)
    t2 = croc_threshold(r2)
    for a, b in zip(t1.threshold, t2.threshold):
        assert b.est == pytest.approx(3.0 * a.est + 7.0, abs=1e-8)
    for a, b in zip(t1.yi, t2.yi):
        assert b.est == pytest.approx(a.est, abs=1e-8)


@pytest.mark.parametrize("est_cdf", ["normal", "empirical"])
def test_sp_reverse_curve_integrates_to_auc(est_cdf):
    # step-CDF quadrature needs the sample size of the stated identity;
    # both sides use the same 201-point Simpson rule as the area code
    s = covariate_sample(n_h=500, n_d=500, seed=35)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, est_cdf=est_cdf, B=0)
    grid = odd_grid(0.0, 1.0, 201)
    tnf = croc_tnf(res, grid)
    for r in range(3):
        integral = float(simpson(tnf[r], grid[1] - grid[0]))
        assert integral == pytest.approx(res.auc[r].est, abs=1e-3)


def test_sp_empirical_curves_are_proper():
    s = covariate_sample(n_h=150, n_d=150, seed=36)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, est_cdf="empirical", B=0)
    for r in range(3):
        row = res.roc_est[r]
        assert row[0] == 0.0 and row[-1] == 1.0
        assert np.all(np.diff(row) >= -1e-9)
        assert np.all((row >= 0.0) & (row <= 1.0))


def test_sp_rejects_collinear_spline_design():
    s = covariate_sample(n_h=80, n_d=80, seed=37)
    with pytest.warns(Warning):
        with pytest.raises(RankDeficientError):
            croc_sp("y ~ f(x, K=3)", "y ~ x", s, NEW, B=0)


def test_sp_b_zero_degenerates_bands():
    s = covariate_sample(n_h=100, n_d=100, seed=38)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, B=0)
    assert np.array_equal(res.roc_lo, res.roc_est)
    for iv in res.auc:
        assert iv.lo == iv.est == iv.hi


def test_kernel_recovers_conditional_auc():
    s = covariate_sample(n_h=350, n_d=350, seed=39)
    res = croc_kernel(s, "x", NEW, bw="srt", B=25, rng=40)
    for iv in res.auc:
        assert iv.est == pytest.approx(AUC_SHIFT15, abs=0.07)
    assert res.coefficients is None
    for r in range(3):
        assert np.all(np.diff(res.roc_est[r]) >= -1e-9)
    grid = odd_grid(0.0, 1.0, 2001)
    tnf = croc_tnf(res, grid)
    for r in range(3):
        integral = float(simpson(tnf[r], grid[1] - grid[0]))
        assert integral == pytest.approx(res.auc[r].est, abs=1e-3)


def test_kernel_validation():
    s = covariate_sample(n_h=80, n_d=80, seed=41)
    with pytest.raises(NoLocalDataError):
        croc_kernel(s, "x", {"x": [5.0]}, bw="srt", B=0)
    with pytest.raises(MissingColumnError):
        croc_kernel(s, "age", NEW, bw="srt", B=0)
    with pytest.raises(MissingColumnError):
        croc_kernel(s, "x", {"z": [0.5]}, bw="srt", B=0)
    cat = DiagnosticSample(
        marker=s.marker, disease=s.disease, nondiseased_tag=0,
        covariates={"g": Column(np.array(["a", "b"] * 80), levels=("a", "b"))},
    )
    with pytest.raises(Exception):
        croc_kernel(cat, "g", {"g": ["a"]}, B=0)


def _ols(Z, y):
    return np.linalg.lstsq(Z, y, rcond=None)[0]


def test_bnp_single_component_matches_least_squares():
    s = covariate_sample(n_h=200, n_d=200, seed=42)
    res = croc_bnp(
        "y ~ x", "y ~ x", s, NEW,
        prior_h=DdpPrior(L=1), prior_d=DdpPrior(L=1),
        mcmc=McmcControl(nsave=200, nburn=150), rng=43,
    )
    assert res.roc_est.shape == (3, 101)
    for iv in res.auc:
        assert iv.est == pytest.approx(AUC_SHIFT15, abs=0.06)
    coef = res.coefficients
    assert coef is not None
    h_mask = s.disease == 0
    x = s.covariates["x"].values
    for group, mask in (("healthy", h_mask), ("diseased", ~h_mask)):
        Z = np.column_stack([np.ones(mask.sum()), x[mask]])
        beta = _ols(Z, s.marker[mask])
        got = np.array([v.est for v in coef[group]["values"]])
        assert np.allclose(got, beta, atol=0.15)
    crit = res.fit.as_dict()
    for group in ("healthy", "diseased"):
        assert all(np.isfinite(v) for v in crit[group].values())


def test_bnp_reverse_curve_integrates_to_auc():
    s = covariate_sample(n_h=120, n_d=120, seed=44)
    res = croc_bnp(
        "y ~ x", "y ~ x", s, {"x": [0.5]},
        prior_h=DdpPrior(L=1), prior_d=DdpPrior(L=1),
        mcmc=McmcControl(nsave=80, nburn=80), rng=45,
    )
    grid = odd_grid(0.0, 1.0, 1001)
    tnf = croc_tnf(res, grid)
    integral = float(simpson(tnf[0], grid[1] - grid[0]))
    assert integral == pytest.approx(res.auc[0].est, abs=1e-3)


def test_threshold_youden_tracks_the_covariate():
    s = covariate_sample(n_h=500, n_d=500, seed=46)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, B=30, rng=47)
    thr = croc_threshold(res)
    # optimal cut sits halfway between the group means x and x + 1.5
    for x, iv in zip(NEW["x"], thr.threshold):
        assert iv.est == pytest.approx(x + 0.75, abs=0.12)
    assert all(sgn == 1 for sgn in thr.sign)
    fpf = croc_threshold(res, criterion="fpf", target_fpf=0.3)
    for x, iv in zip(NEW["x"], fpf.threshold):
        assert iv.est == pytest.approx(x + ndtri(0.7), abs=0.12)
    for iv in fpf.fpf:
        assert iv.est == pytest.approx(0.3, abs=0.03)


def test_threshold_accepts_fresh_newdata():
    s = covariate_sample(n_h=200, n_d=200, seed=48)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, B=0)
    thr = croc_threshold(res, newdata={"x": [0.1, 0.9]})
    assert len(thr.threshold) == 2
    assert thr.threshold[1].est > thr.threshold[0].est


def test_workers_do_not_change_sp_results():
    s = covariate_sample(n_h=120, n_d=120, seed=49)
    a = croc_sp("y ~ x", "y ~ x", s, NEW, B=40, rng=50, workers=1)
    b = croc_sp("y ~ x", "y ~ x", s, NEW, B=40, rng=50, workers=4)
    assert np.array_equal(a.roc_lo, b.roc_lo)
    for i1, i2 in zip(a.auc, b.auc):
        assert i1 == i2


def test_partial_area_rows_have_bounds():
    s = covariate_sample(n_h=150, n_d=150, seed=51)
    res = croc_sp("y ~ x", "y ~ x", s, NEW, B=20, rng=52,
                  pauc=PaucControl(compute=True, focus="fpf", value=0.3))
    assert len(res.pauc) == 3
    for pa in res.pauc:
        assert 0.0 <= pa.est <= 1.0
        assert pa.focus == "fpf" and pa.bound == 0.3
        assert pa.lo <= pa.est <= pa.hi
