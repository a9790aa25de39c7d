"""Covariate-specific ROC curves.

The induced estimators share one transport pattern: model each group's
marker as mean(x) + scale(x) * error, then push healthy error quantiles
through the diseased error distribution,

    ROC(p | x) = 1 - F_D{ a(x) + b(x) Q_H(1 - p) }.

The linear engine fits ordinary least squares per group with normal or
empirical residual CDFs, the kernel engine fits local mean/variance
functions of one continuous covariate, and the Bayesian engine puts a
shared-weights normal-mixture posterior over regression surfaces. All
three report curves, AUC and optional partial areas per prediction row.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .design import build_design, parse_formula, spec_is_linear
from .diagnostics import FitCriteria, criteria_from_draws
from .errors import (
    ConfigError,
    MissingColumnError,
    MissingDrawsError,
    NoLocalDataError,
    RankDeficientError,
    RocinferWarning,
    TooFewPointsError,
    ZeroVarianceError,
)
from .mixtures import McmcControl, fit_ddp, loglik_at_posterior_mean, mixture_cdf, mixture_pdf
from .pooled import (
    _BOOT_STREAM_BASE,
    _CHAIN_D,
    _CHAIN_H,
    DensityControl,
    PaucControl,
    _grid_of,
    _mixture_roc_draws,
    _mixture_tnf_draws,
    _pauc_summary,
    _stream_of,
    _threshold_from_cdf_rows,
)
from .sample import Column, DiagnosticSample, PredictionFrame, column_from_values, split_groups, standardise
from .smoothing import fit_location_scale, silverman_bandwidth
from .streams import parallel_map
from .summaries import (
    ThresholdResult,
    band,
    ecdf_eval,
    ecdf_quantile,
    interval_from,
    odd_grid,
    pauc_normalise,
    simpson,
    youden_grid,
)

_AREA_GRID = odd_grid(0.0, 1.0, 201)


@dataclass
class CRocResult:
    """Conditional curve estimates, one block of summaries per prediction row."""

    method: str
    p: np.ndarray
    newdata: PredictionFrame
    roc_est: np.ndarray  # (rows, len(p))
    roc_lo: np.ndarray
    roc_hi: np.ndarray
    auc: list  # Interval per prediction row
    pauc: list | None
    coefficients: dict | None
    sample_sizes: tuple
    fit: FitCriteria | None = None
    densities: dict | None = None
    internals: dict = field(default_factory=dict, repr=False, compare=False)


def _frame_of(newdata) -> PredictionFrame:
    if isinstance(newdata, PredictionFrame):
        return newdata
    if isinstance(newdata, dict):
        cols = {
            k: (v if isinstance(v, Column) else column_from_values(v))
            for k, v in newdata.items()
        }
        return PredictionFrame(cols)
    raise ConfigError("newdata must be a PredictionFrame or a dict of columns")


def _spec_of(formula):
    return parse_formula(formula) if isinstance(formula, str) else formula


# -- induced location-scale transport -----------------------------------------

def _ols_fit(Z, y):
    """(coefficients, residual scale, ascending standardised residuals)."""
    n, k = Z.shape
    if n <= k:
        raise TooFewPointsError("need more observations than coefficients")
    beta, _, rank, _ = np.linalg.lstsq(Z, y, rcond=None)
    if rank < k:
        raise RankDeficientError("design matrix is rank deficient")
    resid = y - Z @ beta
    sigma = math.sqrt(float(resid @ resid) / (n - k))
    if sigma <= 0.0:
        raise ZeroVarianceError("regression residuals have zero scale")
    return beta, sigma, np.sort(resid / sigma)


def _induced_roc(a, b, eps_h, eps_d, p, est_cdf: str) -> np.ndarray:
    """Rowwise 1 - F_D{a + b Q_H(1-p)}; a, b broadcast over rows."""
    p = np.asarray(p, dtype=float)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    out = np.empty((a.size, p.size))
    interior = (p > 0.0) & (p < 1.0)
    if np.any(interior):
        if est_cdf == "normal":
            qh = ndtri(1.0 - p[interior])
            out[:, interior] = 1.0 - ndtr(a[:, None] + b[:, None] * qh[None, :])
        else:
            qh = ecdf_quantile(eps_h, 1.0 - p[interior])
            out[:, interior] = 1.0 - ecdf_eval(eps_d, a[:, None] + b[:, None] * qh[None, :])
    out[:, p == 0.0] = 0.0
    out[:, p == 1.0] = 1.0
    return out


def _induced_tnf(a, b, eps_h, eps_d, p, est_cdf: str) -> np.ndarray:
    """Reverse orientation: F_H{a* + b* Q_D(1-p)} with a*=-a/b, b*=1/b."""
    p = np.asarray(p, dtype=float)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    a_star, b_star = -a / b, 1.0 / b
    out = np.empty((a.size, p.size))
    interior = (p > 0.0) & (p < 1.0)
    if np.any(interior):
        if est_cdf == "normal":
            qd = ndtri(1.0 - p[interior])
            out[:, interior] = ndtr(a_star[:, None] + b_star[:, None] * qd[None, :])
        else:
            qd = ecdf_quantile(eps_d, 1.0 - p[interior])
            out[:, interior] = ecdf_eval(eps_h, a_star[:, None] + b_star[:, None] * qd[None, :])
    out[:, p == 0.0] = 1.0
    out[:, p == 1.0] = 0.0
    return out


def _area_rows(a, b, eps_h, eps_d, est_cdf) -> np.ndarray:
    vals = _induced_roc(a, b, eps_h, eps_d, _AREA_GRID, est_cdf)
    return np.atleast_1d(simpson(vals, _AREA_GRID[1] - _AREA_GRID[0]))


def _pauc_rows(a, b, eps_h, eps_d, est_cdf, ctrl: PaucControl) -> np.ndarray:
    if ctrl.focus == "fpf":
        g = odd_grid(0.0, ctrl.value, 201)
        vals = _induced_roc(a, b, eps_h, eps_d, g, est_cdf)
    else:
        g = odd_grid(ctrl.value, 1.0, 201)
        vals = _induced_tnf(a, b, eps_h, eps_d, g, est_cdf)
    raw = np.atleast_1d(simpson(vals, g[1] - g[0]))
    return np.array([pauc_normalise(float(r), ctrl.focus, ctrl.value) for r in raw])


def _coef_table(labels, point, draws) -> dict:
    values = [
        interval_from(float(point[j]), draws[:, j] if draws is not None else None)
        for j in range(len(labels))
    ]
    return {"labels": list(labels), "values": values}


def _row_intervals(point_rows, stack, ctrl: PaucControl | None = None) -> list:
    out = []
    for r in range(point_rows.size):
        draws = stack[:, r] if stack is not None else None
        if ctrl is None:
            out.append(interval_from(float(point_rows[r]), draws))
        else:
            out.append(_pauc_summary(float(point_rows[r]), draws, ctrl))
    return out


# -- linear induced model ------------------------------------------------------

def croc_sp(formula_h, formula_d, sample: DiagnosticSample, newdata,
            est_cdf: str = "normal", p=None, pauc: PaucControl | None = None,
            B: int = 500, rng=None, workers: int = 1) -> CRocResult:
    """Least-squares induced model, one fit per group.

    The error CDF is either the standard normal or the empirical CDF of
    the standardised residuals, used in both the quantile and the
    distribution role. Uncertainty comes from B residual-bootstrap
    replicates: standardised residuals are resampled within group, the
    responses rebuilt at the fitted means, and both fits repeated.
    """
    est_cdf = est_cdf.lower()
    if est_cdf not in ("normal", "empirical"):
        raise ConfigError("est_cdf must be 'normal' or 'empirical'")
    if B < 0:
        raise ConfigError("bootstrap count B must be >= 0")
    stream = _stream_of(rng)
    grid = _grid_of(p)
    ctrl = pauc or PaucControl()
    newdata = _frame_of(newdata)
    spec_h, spec_d = _spec_of(formula_h), _spec_of(formula_d)

    split = split_groups(sample)
    Zh, labels_h, fitted_h = build_design(split.healthy_cov, spec_h)
    Zd, labels_d, fitted_d = build_design(split.diseased_cov, spec_d)
    zh_rows, _, _ = build_design(newdata, spec_h, fitted_h)
    zd_rows, _, _ = build_design(newdata, spec_d, fitted_d)

    fit0 = _ols_fit(Zh, split.healthy) + _ols_fit(Zd, split.diseased)
    bh, sh, eh, bd, sd_, ed = fit0

    def eval_fit(f):
        bh_, sh_, eh_, bd_, sd2_, ed_ = f
        a = (zh_rows @ bh_ - zd_rows @ bd_) / sd2_
        b = sh_ / sd2_
        curves = _induced_roc(a, b, eh_, ed_, grid, est_cdf)
        aucs = _area_rows(a, b, eh_, ed_, est_cdf)
        paucs = _pauc_rows(a, b, eh_, ed_, est_cdf, ctrl) if ctrl.compute else None
        return a, b, curves, aucs, paucs

    a0, b0, curves0, auc0, pauc0 = eval_fit(fit0)

    mu_h_hat, mu_d_hat = Zh @ bh, Zd @ bd

    def one_rep(k):
        gen = stream.stream(_BOOT_STREAM_BASE + k).generator
        yh = mu_h_hat + sh * eh[gen.integers(0, eh.size, eh.size)]
        yd = mu_d_hat + sd_ * ed[gen.integers(0, ed.size, ed.size)]
        return _ols_fit(Zh, yh) + _ols_fit(Zd, yd)

    boot = parallel_map(one_rep, range(B), workers=workers) if B > 0 else []
    if boot:
        reps = [eval_fit(f) for f in boot]
        curve_stack = np.stack([r[2] for r in reps])
        auc_stack = np.stack([r[3] for r in reps])
        pauc_stack = np.stack([r[4] for r in reps]) if ctrl.compute else None
        lo, hi = band(curve_stack)
    else:
        lo, hi = curves0.copy(), curves0.copy()
        auc_stack = pauc_stack = None

    auc_ivs = _row_intervals(auc0, auc_stack)
    pauc_ivs = _row_intervals(pauc0, pauc_stack, ctrl) if ctrl.compute else None

    bh_st = np.stack([f[0] for f in boot]) if boot else None
    sh_st = np.array([f[1] for f in boot]) if boot else None
    bd_st = np.stack([f[3] for f in boot]) if boot else None
    sd_st = np.array([f[4] for f in boot]) if boot else None
    coefficients = {
        "healthy": {**_coef_table(labels_h, bh, bh_st), "sigma": interval_from(sh, sh_st)},
        "diseased": {**_coef_table(labels_d, bd, bd_st), "sigma": interval_from(sd_, sd_st)},
        "scale_basis": "original",
    }
    if (spec_is_linear(spec_h) and spec_is_linear(spec_d)
            and list(labels_h) == list(labels_d)
            and fitted_h.levels == fitted_d.levels):
        ind0 = (bh - bd) / sd_
        brat = sh / sd_
        if boot:
            ind_st = (bh_st - bd_st) / sd_st[:, None]
            brat_st = sh_st / sd_st
        else:
            ind_st = brat_st = None
        coefficients["induced"] = {
            **_coef_table(labels_h, ind0, ind_st),
            "b": interval_from(brat, brat_st),
        }
        coefficients["induced_tnf"] = {
            **_coef_table(labels_h, -ind0 / brat,
                          -ind_st / brat_st[:, None] if boot else None),
            "b": interval_from(1.0 / brat, 1.0 / brat_st if boot else None),
        }

    return CRocResult(
        method="sp-" + est_cdf,
        p=grid, newdata=newdata,
        roc_est=curves0, roc_lo=lo, roc_hi=hi,
        auc=auc_ivs, pauc=pauc_ivs,
        coefficients=coefficients,
        sample_sizes=(split.n_h, split.n_d),
        internals={
            "kind": "sp", "est_cdf": est_cdf,
            "zh_rows": zh_rows, "zd_rows": zd_rows,
            "fit0": fit0, "boot": boot,
            "spec_h": spec_h, "spec_d": spec_d,
            "fitted_h": fitted_h, "fitted_d": fitted_d,
            "y_h": split.healthy, "y_d": split.diseased,
        },
    )


# -- kernel induced model ------------------------------------------------------

def croc_kernel(sample: DiagnosticSample, covariate: str, newdata,
                bw: str = "lscv", p=None, pauc: PaucControl | None = None,
                B: int = 500, rng=None, workers: int = 1) -> CRocResult:
    """Local-smoother induced model for a single continuous covariate.

    Sequential mean and variance fits per group give a(x) and b(x);
    the error CDFs are always the empirical CDFs of the standardised
    residuals. Bootstrap replicates keep the original bandwidths.
    Prediction points must sit inside both groups' covariate ranges.
    """
    bw = bw.lower()
    if bw not in ("lscv", "srt"):
        raise ConfigError("bw must be 'lscv' or 'srt'")
    if B < 0:
        raise ConfigError("bootstrap count B must be >= 0")
    stream = _stream_of(rng)
    grid = _grid_of(p)
    ctrl = pauc or PaucControl()
    newdata = _frame_of(newdata)

    if covariate not in sample.covariates:
        raise MissingColumnError("covariate %r not in the sample" % covariate)
    if sample.covariates[covariate].is_categorical:
        raise ConfigError("the kernel estimator needs one continuous covariate")
    if covariate not in newdata.columns:
        raise MissingColumnError("newdata lacks column %r" % covariate)

    split = split_groups(sample)
    x_h = np.asarray(split.healthy_cov[covariate].values, dtype=float)
    x_d = np.asarray(split.diseased_cov[covariate].values, dtype=float)
    x0 = np.asarray(newdata.columns[covariate].values, dtype=float)
    for xg, name in ((x_h, "healthy"), (x_d, "diseased")):
        if x0.size and (x0.min() < xg.min() or x0.max() > xg.max()):
            raise NoLocalDataError(
                "prediction points leave the %s covariate range [%g, %g]"
                % (name, xg.min(), xg.max())
            )

    if bw == "srt":
        h_h, h_d = silverman_bandwidth(x_h), silverman_bandwidth(x_d)
        fit_h = fit_location_scale(x_h, split.healthy, bw_mean=h_h, bw_var=h_h)
        fit_d = fit_location_scale(x_d, split.diseased, bw_mean=h_d, bw_var=h_d)
    else:
        fit_h = fit_location_scale(x_h, split.healthy)
        fit_d = fit_location_scale(x_d, split.diseased)

    def eval_fits(fh, fd):
        mu_h = np.atleast_1d(np.asarray(fh.mu(x0), dtype=float))
        mu_d = np.atleast_1d(np.asarray(fd.mu(x0), dtype=float))
        s2_h = np.atleast_1d(np.asarray(fh.sigma2(x0), dtype=float))
        s2_d = np.atleast_1d(np.asarray(fd.sigma2(x0), dtype=float))
        a = (mu_h - mu_d) / np.sqrt(s2_d)
        b = np.sqrt(s2_h / s2_d)
        curves = _induced_roc(a, b, fh.residuals, fd.residuals, grid, "empirical")
        aucs = _area_rows(a, b, fh.residuals, fd.residuals, "empirical")
        paucs = (_pauc_rows(a, b, fh.residuals, fd.residuals, "empirical", ctrl)
                 if ctrl.compute else None)
        return a, b, curves, aucs, paucs

    a0, b0, curves0, auc0, pauc0 = eval_fits(fit_h, fit_d)

    mu_h_hat = np.asarray(fit_h.mu(x_h), dtype=float)
    mu_d_hat = np.asarray(fit_d.mu(x_d), dtype=float)
    sd_h_hat = np.sqrt(np.asarray(fit_h.sigma2(x_h), dtype=float))
    sd_d_hat = np.sqrt(np.asarray(fit_d.sigma2(x_d), dtype=float))
    eh, ed = fit_h.residuals, fit_d.residuals

    def one_rep(k):
        gen = stream.stream(_BOOT_STREAM_BASE + k).generator
        yh = mu_h_hat + sd_h_hat * eh[gen.integers(0, eh.size, eh.size)]
        yd = mu_d_hat + sd_d_hat * ed[gen.integers(0, ed.size, ed.size)]
        fh = fit_location_scale(x_h, yh, bw_mean=fit_h.bw_mean, bw_var=fit_h.bw_var)
        fd = fit_location_scale(x_d, yd, bw_mean=fit_d.bw_mean, bw_var=fit_d.bw_var)
        return fh, fd

    boot = parallel_map(one_rep, range(B), workers=workers) if B > 0 else []
    if boot:
        reps = [eval_fits(fh, fd) for fh, fd in boot]
        curve_stack = np.stack([r[2] for r in reps])
        auc_stack = np.stack([r[3] for r in reps])
        pauc_stack = np.stack([r[4] for r in reps]) if ctrl.compute else None
        lo, hi = band(curve_stack)
    else:
        lo, hi = curves0.copy(), curves0.copy()
        auc_stack = pauc_stack = None

    return CRocResult(
        method="kernel",
        p=grid, newdata=newdata,
        roc_est=curves0, roc_lo=lo, roc_hi=hi,
        auc=_row_intervals(auc0, auc_stack),
        pauc=_row_intervals(pauc0, pauc_stack, ctrl) if ctrl.compute else None,
        coefficients=None,
        sample_sizes=(split.n_h, split.n_d),
        internals={
            "kind": "kernel", "covariate": covariate, "x0": x0,
            "fit_h": fit_h, "fit_d": fit_d, "boot": boot,
            "y_h": split.healthy, "y_d": split.diseased,
        },
    )


# -- Bayesian dependent-mixture model -------------------------------------------

def _standardised_frame(frame: PredictionFrame, std) -> dict:
    cols = {}
    for name, col in frame.columns.items():
        if col.is_categorical or not std.enabled:
            cols[name] = col
        else:
            cols[name] = Column(std.cov_to_std(name, col.values))
    return cols


def _destandardise_map(Z_raw, Z_std):
    """Matrix A with Z_std ~= Z_raw @ A, plus the worst reconstruction error."""
    A, _, _, _ = np.linalg.lstsq(Z_raw, Z_std, rcond=None)
    err = float(np.max(np.abs(Z_raw @ A - Z_std)))
    return A, err


def _bnp_coefficients(sample, std, spec_h, spec_d, fitted_h, fitted_d,
                      labels_h, labels_d, Zh, Zd, draws_h, draws_d) -> dict:
    beta_h, beta_d = draws_h.beta[:, 0, :], draws_d.beta[:, 0, :]
    sig_h, sig_d = np.sqrt(draws_h.sigma2[:, 0]), np.sqrt(draws_d.sigma2[:, 0])
    basis = "original"
    if std.enabled:
        split_raw = split_groups(sample)
        Zraw_h, _, _ = build_design(split_raw.healthy_cov, spec_h, fitted_h)
        Zraw_d, _, _ = build_design(split_raw.diseased_cov, spec_d, fitted_d)
        A_h, err_h = _destandardise_map(Zraw_h, Zh)
        A_d, err_d = _destandardise_map(Zraw_d, Zd)
        if max(err_h, err_d) <= 1e-8:
            s_y, m_y = std.marker_sd, std.marker_mean
            gam_h = s_y * (beta_h @ A_h.T)
            gam_h[:, 0] += m_y
            gam_d = s_y * (beta_d @ A_d.T)
            gam_d[:, 0] += m_y
            sraw_h, sraw_d = s_y * sig_h, s_y * sig_d
            ind_map = A_h
        else:
            warnings.warn(
                "standardised design is not an affine image of the raw design; "
                "coefficient summaries stay on the standardised scale",
                RocinferWarning,
            )
            basis = "standardised"
            gam_h, gam_d, sraw_h, sraw_d = beta_h, beta_d, sig_h, sig_d
            ind_map = None
    else:
        gam_h, gam_d, sraw_h, sraw_d = beta_h, beta_d, sig_h, sig_d
        ind_map = None

    out = {
        "healthy": {**_coef_table(labels_h, gam_h.mean(axis=0), gam_h),
                    "sigma": interval_from(float(sraw_h.mean()), sraw_h)},
        "diseased": {**_coef_table(labels_d, gam_d.mean(axis=0), gam_d),
                     "sigma": interval_from(float(sraw_d.mean()), sraw_d)},
        "scale_basis": basis,
    }
    if list(labels_h) == list(labels_d) and fitted_h.levels == fitted_d.levels:
        ind = (beta_h - beta_d) / sig_d[:, None]
        if ind_map is not None:
            ind = ind @ ind_map.T
        brat = sig_h / sig_d
        out["induced"] = {
            **_coef_table(labels_h, ind.mean(axis=0), ind),
            "b": interval_from(float(brat.mean()), brat),
        }
        ind_t = -ind / brat[:, None]
        out["induced_tnf"] = {
            **_coef_table(labels_h, ind_t.mean(axis=0), ind_t),
            "b": interval_from(float((1.0 / brat).mean()), 1.0 / brat),
        }
    return out


def croc_bnp(formula_h, formula_d, sample: DiagnosticSample, newdata,
             prior_h=None, prior_d=None, mcmc: McmcControl | None = None,
             p=None, pauc: PaucControl | None = None,
             density: DensityControl | None = None, rng=None,
             standardise_marker: bool = True, workers: int = 1) -> CRocResult:
    """Shared-weights normal-mixture posterior per group.

    Marker and continuous covariates are standardised over the combined
    sample before fitting; curve inversion runs per draw and prediction
    row, areas by Simpson on each draw's curve. Fit criteria are
    reported on the original marker scale, and with one component and a
    purely linear design the coefficient summaries are mapped back to
    the original scales as well.
    """
    stream = _stream_of(rng)
    grid = _grid_of(p)
    ctrl = pauc or PaucControl()
    density = density or DensityControl()
    mcmc = mcmc or McmcControl()
    newdata = _frame_of(newdata)
    spec_h, spec_d = _spec_of(formula_h), _spec_of(formula_d)

    std_sample, std = standardise(sample, enable=standardise_marker)
    split_std = split_groups(std_sample)
    split_raw = split_groups(sample)
    Zh, labels_h, fitted_h = build_design(split_std.healthy_cov, spec_h)
    Zd, labels_d, fitted_d = build_design(split_std.diseased_cov, spec_d)
    nd_std = _standardised_frame(newdata, std)
    zh_rows, _, _ = build_design(nd_std, spec_h, fitted_h)
    zd_rows, _, _ = build_design(nd_std, spec_d, fitted_d)

    def fit_group(args):
        y, Z, prior, sid = args
        return fit_ddp(y, Z, prior=prior, mcmc=mcmc, rng=stream.stream(sid))

    draws_h, draws_d = parallel_map(
        fit_group,
        [(split_std.healthy, Zh, prior_h, _CHAIN_H),
         (split_std.diseased, Zd, prior_d, _CHAIN_D)],
        workers=min(workers, 2),
    )

    if density.compute:
        dens_grid_raw = np.linspace(
            float(sample.marker.min()), float(sample.marker.max()), density.grid_length
        )
        dens_grid = std.marker_to_std(dens_grid_raw) if std.enabled else dens_grid_raw
    else:
        dens_grid_raw = dens_grid = None

    spacing = _AREA_GRID[1] - _AREA_GRID[0]
    if ctrl.compute and ctrl.focus == "fpf":
        sub = odd_grid(0.0, ctrl.value, 201)
    elif ctrl.compute:
        sub = odd_grid(ctrl.value, 1.0, 201)
    else:
        sub = None

    def one_row(r):
        mu_h = draws_h.conditional_means(zh_rows[r])
        mu_d = draws_d.conditional_means(zd_rows[r])
        wh, wd = draws_h.weights, draws_d.weights
        s2h, s2d = draws_h.sigma2, draws_d.sigma2
        curves = _mixture_roc_draws(wh, mu_h, s2h, wd, mu_d, s2d, grid)
        areas = np.atleast_1d(
            simpson(_mixture_roc_draws(wh, mu_h, s2h, wd, mu_d, s2d, _AREA_GRID), spacing)
        )
        paucs = None
        if ctrl.compute:
            if ctrl.focus == "fpf":
                vals = _mixture_roc_draws(wh, mu_h, s2h, wd, mu_d, s2d, sub)
            else:
                vals = _mixture_tnf_draws(wh, mu_h, s2h, wd, mu_d, s2d, sub)
            raw = np.atleast_1d(simpson(vals, sub[1] - sub[0]))
            paucs = np.array(
                [pauc_normalise(float(v), ctrl.focus, ctrl.value) for v in raw]
            )
        dens = None
        if density.compute:
            fh = mixture_pdf(wh, mu_h, s2h, dens_grid)
            fd = mixture_pdf(wd, mu_d, s2d, dens_grid)
            if std.enabled:
                fh, fd = std.density_to_raw(fh), std.density_to_raw(fd)
            dens = (fh.mean(axis=0), *band(fh), fd.mean(axis=0), *band(fd))
        lo, hi = band(curves)
        return curves.mean(axis=0), lo, hi, areas, paucs, dens

    rows = parallel_map(one_row, range(newdata.n), workers=workers)

    roc_est = np.stack([r[0] for r in rows])
    roc_lo = np.stack([r[1] for r in rows])
    roc_hi = np.stack([r[2] for r in rows])
    auc_ivs = [interval_from(float(r[3].mean()), r[3]) for r in rows]
    pauc_ivs = (
        [_pauc_summary(float(r[4].mean()), r[4], ctrl) for r in rows]
        if ctrl.compute else None
    )

    densities = None
    if density.compute:
        densities = {
            "grid": dens_grid_raw,
            "healthy": {
                "est": np.stack([r[5][0] for r in rows]),
                "lo": np.stack([r[5][1] for r in rows]),
                "hi": np.stack([r[5][2] for r in rows]),
            },
            "diseased": {
                "est": np.stack([r[5][3] for r in rows]),
                "lo": np.stack([r[5][4] for r in rows]),
                "hi": np.stack([r[5][5] for r in rows]),
            },
        }

    log_s = math.log(std.marker_sd) if std.enabled else 0.0
    crit = FitCriteria(
        healthy=criteria_from_draws(
            draws_h, loglik=draws_h.loglik - log_s,
            ll_hat=loglik_at_posterior_mean(draws_h) - log_s,
        ),
        diseased=criteria_from_draws(
            draws_d, loglik=draws_d.loglik - log_s,
            ll_hat=loglik_at_posterior_mean(draws_d) - log_s,
        ),
    )

    coefficients = None
    if (draws_h.prior.L == 1 and draws_d.prior.L == 1
            and spec_is_linear(spec_h) and spec_is_linear(spec_d)):
        coefficients = _bnp_coefficients(
            sample, std, spec_h, spec_d, fitted_h, fitted_d,
            labels_h, labels_d, Zh, Zd, draws_h, draws_d,
        )

    return CRocResult(
        method="bnp",
        p=grid, newdata=newdata,
        roc_est=roc_est, roc_lo=roc_lo, roc_hi=roc_hi,
        auc=auc_ivs, pauc=pauc_ivs,
        coefficients=coefficients,
        sample_sizes=(split_std.n_h, split_std.n_d),
        fit=crit,
        densities=densities,
        internals={
            "kind": "bnp", "draws_h": draws_h, "draws_d": draws_d, "std": std,
            "zh_rows": zh_rows, "zd_rows": zd_rows,
            "spec_h": spec_h, "spec_d": spec_d,
            "fitted_h": fitted_h, "fitted_d": fitted_d,
            "y_h": split_raw.healthy, "y_d": split_raw.diseased,
        },
    )


# -- reverse-orientation curves and thresholds ----------------------------------

def croc_tnf(result: CRocResult, p=None) -> np.ndarray:
    """Point estimate of the reverse-orientation curve per prediction row."""
    grid = _grid_of(p) if p is not None else result.p
    ints = result.internals
    kind = ints.get("kind")
    if kind == "sp":
        bh, sh, eh, bd, sd_, ed = ints["fit0"]
        a = (ints["zh_rows"] @ bh - ints["zd_rows"] @ bd) / sd_
        return _induced_tnf(a, sh / sd_, eh, ed, grid, ints["est_cdf"])
    if kind == "kernel":
        fh, fd = ints["fit_h"], ints["fit_d"]
        x0 = ints["x0"]
        mu_h = np.atleast_1d(np.asarray(fh.mu(x0), dtype=float))
        mu_d = np.atleast_1d(np.asarray(fd.mu(x0), dtype=float))
        s2_h = np.atleast_1d(np.asarray(fh.sigma2(x0), dtype=float))
        s2_d = np.atleast_1d(np.asarray(fd.sigma2(x0), dtype=float))
        a = (mu_h - mu_d) / np.sqrt(s2_d)
        return _induced_tnf(a, np.sqrt(s2_h / s2_d), fh.residuals, fd.residuals,
                            grid, "empirical")
    if kind == "bnp":
        dh, dd = ints["draws_h"], ints["draws_d"]
        out = np.empty((len(ints["zh_rows"]), grid.size))
        for r in range(out.shape[0]):
            mu_h = dh.conditional_means(ints["zh_rows"][r])
            mu_d = dd.conditional_means(ints["zd_rows"][r])
            out[r] = _mixture_tnf_draws(
                dh.weights, mu_h, dh.sigma2, dd.weights, mu_d, dd.sigma2, grid
            ).mean(axis=0)
        return out
    raise MissingDrawsError("result carries no fitted internals")


def _sp_cdf_pair(z_h, z_d, f, grid, est_cdf):
    bh_, sh_, eh_, bd_, sd2_, ed_ = f
    th = (grid - float(z_h @ bh_)) / sh_
    td = (grid - float(z_d @ bd_)) / sd2_
    if est_cdf == "normal":
        return ndtr(th), ndtr(td)
    return ecdf_eval(eh_, th), ecdf_eval(ed_, td)


def croc_threshold(result: CRocResult, criterion: str = "yi",
                   target_fpf: float | None = None, newdata=None) -> ThresholdResult:
    """Optimal covariate-specific thresholds on the original marker scale.

    'yi' maximises |F_H(c|x) - F_D(c|x)| over a shared 500-point
    threshold grid per prediction row; 'fpf' returns the healthy
    conditional quantile at 1 - target_fpf with its attached TPF.
    Intervals reuse whatever ensemble the fit carries (bootstrap
    replicates or posterior draws).
    """
    criterion = criterion.lower()
    if criterion not in ("yi", "fpf"):
        raise ConfigError("criterion must be 'yi' or 'fpf'")
    if criterion == "fpf" and (target_fpf is None or not 0.0 < target_fpf < 1.0):
        raise ConfigError("target_fpf in (0,1) required for the fpf criterion")
    ints = result.internals
    if not ints:
        raise MissingDrawsError("result carries no fitted internals")
    kind = ints["kind"]
    grid = youden_grid(np.concatenate([ints["y_h"], ints["y_d"]]))

    if kind in ("sp", "bnp"):
        if newdata is None:
            zh_rows, zd_rows = ints["zh_rows"], ints["zd_rows"]
        else:
            frame = _frame_of(newdata)
            if kind == "bnp":
                frame = _standardised_frame(frame, ints["std"])
            zh_rows, _, _ = build_design(frame, ints["spec_h"], ints["fitted_h"])
            zd_rows, _, _ = build_design(frame, ints["spec_d"], ints["fitted_d"])
        n_rows = len(zh_rows)
    else:
        if newdata is None:
            x0 = ints["x0"]
        else:
            frame = _frame_of(newdata)
            name = ints["covariate"]
            if name not in frame.columns:
                raise MissingColumnError("newdata lacks column %r" % name)
            x0 = np.asarray(frame.columns[name].values, dtype=float)
            for fit, gname in ((ints["fit_h"], "healthy"), (ints["fit_d"], "diseased")):
                if x0.size and (x0.min() < fit.x.min() or x0.max() > fit.x.max()):
                    raise NoLocalDataError(
                        "prediction points leave the %s covariate range" % gname
                    )
        n_rows = x0.size

    parts = []
    for r in range(n_rows):
        if kind == "sp":
            fh0, fd0 = _sp_cdf_pair(
                zh_rows[r], zd_rows[r], ints["fit0"], grid, ints["est_cdf"]
            )
            rows = [
                _sp_cdf_pair(zh_rows[r], zd_rows[r], f, grid, ints["est_cdf"])
                for f in ints["boot"]
            ]
        elif kind == "kernel":
            fit_h, fit_d = ints["fit_h"], ints["fit_d"]

            def pair(fh, fd, xr=float(x0[r])):
                th = (grid - float(fh.mu(xr))) / math.sqrt(float(fh.sigma2(xr)))
                td = (grid - float(fd.mu(xr))) / math.sqrt(float(fd.sigma2(xr)))
                return ecdf_eval(fh.residuals, th), ecdf_eval(fd.residuals, td)

            fh0, fd0 = pair(fit_h, fit_d)
            rows = [pair(fh, fd) for fh, fd in ints["boot"]]
        else:
            dh, dd, std = ints["draws_h"], ints["draws_d"], ints["std"]
            g_std = std.marker_to_std(grid) if std.enabled else grid
            fh_rows = mixture_cdf(dh.weights, dh.conditional_means(zh_rows[r]),
                                  dh.sigma2, g_std)
            fd_rows = mixture_cdf(dd.weights, dd.conditional_means(zd_rows[r]),
                                  dd.sigma2, g_std)
            parts.append(_threshold_from_cdf_rows(
                np.atleast_2d(fh_rows), np.atleast_2d(fd_rows), grid,
                criterion, target_fpf, None,
            ))
            continue

        if criterion == "yi":
            diff = fh0 - fd0
            k = int(np.argmax(np.abs(diff)))
            point_row = (
                float(abs(diff[k])), float(grid[k]),
                float(1.0 - fh0[k]), float(1.0 - fd0[k]),
                int(np.sign(diff[k])) if diff[k] != 0 else 0,
            )
        else:
            q = 1.0 - target_fpf
            k = min(int(np.searchsorted(fh0, q, side="left")), grid.size - 1)
            point_row = (float(grid[k]), float(1.0 - fh0[k]), float(1.0 - fd0[k]))
        if rows:
            fh_rows = np.array([rr[0] for rr in rows])
            fd_rows = np.array([rr[1] for rr in rows])
        else:
            fh_rows, fd_rows = fh0[None, :], fd0[None, :]
        parts.append(_threshold_from_cdf_rows(
            fh_rows, fd_rows, grid, criterion, target_fpf, point_row
        ))

    merged = ThresholdResult(
        criterion=criterion,
        threshold=[pt.threshold[0] for pt in parts],
        fpf=[pt.fpf[0] for pt in parts],
        tpf=[pt.tpf[0] for pt in parts],
        yi=[pt.yi[0] for pt in parts] if criterion == "yi" else None,
        sign=[pt.sign[0] for pt in parts] if criterion == "yi" else None,
        target_fpf=target_fpf,
    )
    return merged
