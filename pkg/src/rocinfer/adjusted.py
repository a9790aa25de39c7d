"""Covariate-adjusted ROC curves.

Three-step construction: model the marker in the healthy group as a
function of covariates, compute each diseased subject's placement value
(the healthy conditional survival at their marker),

    U_Dj = 1 - F_H(y_Dj | x_Dj),

then read the curve off the placement-value distribution,
AROC(p) = P{U_D <= p}. Frequentist variants plug in the linear or
kernel healthy fit with an empirical placement distribution; the
Bayesian variant pairs a healthy-group mixture posterior with
exchangeable Dirichlet weights over the diseased placements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .conditional import _frame_of, _ols_fit, _spec_of, _standardised_frame
from .design import build_design
from .diagnostics import FitCriteria, criteria_from_draws
from .errors import ConfigError, MissingColumnError, MissingDrawsError
from .mixtures import McmcControl, fit_ddp, loglik_at_posterior_mean, mixture_quantile
from .pooled import (
    _BOOT_STREAM_BASE,
    _CHAIN_H,
    _WEIGHTS_STREAM,
    PaucControl,
    PaucSummary,
    _grid_of,
    _pauc_summary,
    _stream_of,
)
from .sample import DiagnosticSample, split_groups, standardise
from .smoothing import fit_location_scale
from .streams import dirichlet, parallel_map
from .summaries import (
    Interval,
    ThresholdResult,
    band,
    ecdf_eval,
    interval_from,
    pauc_normalise,
)

_VARIANTS = ("sp_normal", "sp_empirical", "kernel")


@dataclass
class ArocResult:
    """Adjusted-curve estimates: one pooled-looking curve, placement-based."""

    method: str
    p: np.ndarray
    aroc_est: np.ndarray
    aroc_lo: np.ndarray
    aroc_hi: np.ndarray
    aauc: Interval
    pauc: PaucSummary | None
    yi: Interval
    p_star: Interval
    placements: np.ndarray  # one per diseased subject (posterior mean for bnp)
    sample_sizes: tuple
    fit: FitCriteria | None = None
    internals: dict = field(default_factory=dict, repr=False, compare=False)


def _step_curve(u_sorted, p) -> np.ndarray:
    out = ecdf_eval(u_sorted, p)
    out = np.asarray(out, dtype=float)
    out[p == 0.0] = 0.0
    out[p == 1.0] = 1.0
    return out


def _youden_from_placements(u_sorted, cum_mass) -> tuple:
    """max_p {AROC(p) - p} on a weighted step curve; the max sits at a jump."""
    gaps = cum_mass - u_sorted
    k = int(np.argmax(gaps))
    if gaps[k] <= 0.0:
        return 0.0, 0.0
    return float(gaps[k]), float(u_sorted[k])


def _tpf_partial_area(u_sorted, cum_mass, v1: float) -> float:
    """Upper-TPF partial area by trapezoid quadrature on the step curve.

    The lower limit is inf{p: AROC(p) >= v1}; the first cell of the
    101-point grid is subdivided tenfold because the curve jumps there.
    """
    idx = int(np.searchsorted(cum_mass, v1 - 1e-12, side="left"))
    c = float(u_sorted[min(idx, u_sorted.size - 1)])
    base = np.linspace(c, 1.0, 101)
    g = np.unique(np.concatenate([np.linspace(base[0], base[1], 11), base]))
    vals = np.concatenate([[0.0], cum_mass])[
        np.searchsorted(u_sorted, g, side="right")
    ]
    return float(np.trapezoid(vals, g) - (1.0 - c) * v1)


def _placement_summaries(U, ctrl: PaucControl):
    """(aauc, pauc_or_None, yi, p_star) from equal-weight placements."""
    u_sorted = np.sort(U)
    n = u_sorted.size
    cum = np.arange(1, n + 1) / n
    aauc = 1.0 - float(np.mean(U))
    pauc_val = None
    if ctrl.compute:
        if ctrl.focus == "fpf":
            raw = ctrl.value - float(np.mean(np.minimum(ctrl.value, U)))
        else:
            raw = _tpf_partial_area(u_sorted, cum, ctrl.value)
        pauc_val = pauc_normalise(raw, ctrl.focus, ctrl.value)
    yi, p_star = _youden_from_placements(u_sorted, cum)
    return aauc, pauc_val, yi, p_star


# -- frequentist, three healthy-model variants ---------------------------------

def aroc_frequentist(sample: DiagnosticSample, formula=None, covariate: str | None = None,
                     variant: str = "sp_normal", p=None, pauc: PaucControl | None = None,
                     B: int = 500, rng=None, workers: int = 1) -> ArocResult:
    """Placement-value curve with a frequentist healthy-group model.

    variant picks the healthy conditional CDF: 'sp_normal' (least
    squares, normal errors), 'sp_empirical' (least squares, empirical
    residual CDF), or 'kernel' (local mean/variance fits with empirical
    residuals; needs `covariate`). Intervals come from B case-bootstrap
    replicates that resample both groups and refit the healthy model.
    """
    variant = variant.lower()
    if variant not in _VARIANTS:
        raise ConfigError("variant must be one of %s" % (_VARIANTS,))
    if B < 0:
        raise ConfigError("bootstrap count B must be >= 0")
    stream = _stream_of(rng)
    grid = _grid_of(p)
    ctrl = pauc or PaucControl()
    split = split_groups(sample)
    y_h, y_d = split.healthy, split.diseased

    if variant in ("sp_normal", "sp_empirical"):
        if formula is None:
            raise ConfigError("the sp variants need a healthy-model formula")
        spec = _spec_of(formula)
        Zh, _, fitted = build_design(split.healthy_cov, spec)
        Zd, _, _ = build_design(split.diseased_cov, spec, fitted)

        def placements(h_idx, d_idx):
            bh, sh, eh = _ols_fit(Zh[h_idx], y_h[h_idx])
            t = (y_d[d_idx] - Zd[d_idx] @ bh) / sh
            if variant == "sp_normal":
                return 1.0 - ndtr(t)
            return 1.0 - ecdf_eval(eh, t)

    else:
        if covariate is None:
            raise ConfigError("the kernel variant needs a covariate name")
        if covariate not in sample.covariates:
            raise MissingColumnError("covariate %r not in the sample" % covariate)
        if sample.covariates[covariate].is_categorical:
            raise ConfigError("the kernel variant needs one continuous covariate")
        x_h = np.asarray(split.healthy_cov[covariate].values, dtype=float)
        x_d = np.asarray(split.diseased_cov[covariate].values, dtype=float)
        fit0 = fit_location_scale(x_h, y_h)

        def placements(h_idx, d_idx):
            fh = fit_location_scale(
                x_h[h_idx], y_h[h_idx], bw_mean=fit0.bw_mean, bw_var=fit0.bw_var
            )
            xs, ys = x_d[d_idx], y_d[d_idx]
            t = (ys - np.asarray(fh.mu(xs), dtype=float)) / np.sqrt(
                np.asarray(fh.sigma2(xs), dtype=float)
            )
            return 1.0 - ecdf_eval(fh.residuals, t)

    all_h = np.arange(y_h.size)
    all_d = np.arange(y_d.size)
    U0 = np.asarray(placements(all_h, all_d), dtype=float)
    curve0 = _step_curve(np.sort(U0), grid)
    aauc0, pauc0, yi0, ps0 = _placement_summaries(U0, ctrl)

    def one_rep(k):
        gen = stream.stream(_BOOT_STREAM_BASE + k).generator
        hi = gen.integers(0, y_h.size, y_h.size)
        di = gen.integers(0, y_d.size, y_d.size)
        u = np.asarray(placements(hi, di), dtype=float)
        c = _step_curve(np.sort(u), grid)
        return (c,) + _placement_summaries(u, ctrl)

    reps = parallel_map(one_rep, range(B), workers=workers) if B > 0 else []
    if reps:
        curve_stack = np.stack([r[0] for r in reps])
        lo, hi = band(curve_stack)
        aauc_d = np.array([r[1] for r in reps])
        pauc_d = np.array([r[2] for r in reps]) if ctrl.compute else None
        yi_d = np.array([r[3] for r in reps])
        ps_d = np.array([r[4] for r in reps])
    else:
        lo, hi = curve0.copy(), curve0.copy()
        aauc_d = pauc_d = yi_d = ps_d = None

    return ArocResult(
        method="aroc-" + variant.replace("_", "-"),
        p=grid,
        aroc_est=curve0, aroc_lo=lo, aroc_hi=hi,
        aauc=interval_from(aauc0, aauc_d),
        pauc=_pauc_summary(pauc0, pauc_d, ctrl) if ctrl.compute else None,
        yi=interval_from(yi0, yi_d),
        p_star=interval_from(ps0, ps_d),
        placements=U0,
        sample_sizes=(split.n_h, split.n_d),
        internals={"kind": "aroc_freq", "variant": variant, "U": U0},
    )


# -- Bayesian: healthy mixture posterior + exchangeable diseased weights --------

def _ddp_placements(draws, zd_rows, y_d) -> np.ndarray:
    """(S, n_d) healthy conditional survival at the diseased points."""
    beta, s2, w = draws.beta, draws.sigma2, draws.weights
    S, L, _ = beta.shape
    n = y_d.size
    out = np.empty((S, n))
    chunk = max(1, int(4_000_000 / max(1, n * L)))
    for start in range(0, S, chunk):
        stop = min(S, start + chunk)
        mu = np.einsum("slq,nq->snl", beta[start:stop], zd_rows)
        sd = np.sqrt(s2[start:stop])[:, None, :]
        f = np.einsum(
            "snl,sl->sn", ndtr((y_d[None, :, None] - mu) / sd), w[start:stop]
        )
        out[start:stop] = 1.0 - f
    return out


def aroc_bnp(sample: DiagnosticSample, formula, prior=None,
             mcmc: McmcControl | None = None, p=None,
             pauc: PaucControl | None = None, rng=None,
             standardise_marker: bool = True, workers: int = 1) -> ArocResult:
    """Mixture-posterior placement curve.

    Only the healthy group is modelled; each posterior draw yields
    placement values for the diseased subjects plus a flat Dirichlet
    weight vector over them, giving one weighted step curve per draw.
    Summaries are ensemble means with 2.5/97.5 percentile bands.
    """
    stream = _stream_of(rng)
    grid = _grid_of(p)
    ctrl = pauc or PaucControl()
    mcmc = mcmc or McmcControl()
    spec = _spec_of(formula)

    std_sample, std = standardise(sample, enable=standardise_marker)
    split_std = split_groups(std_sample)
    Zh, _, fitted = build_design(split_std.healthy_cov, spec)
    zd_rows, _, _ = build_design(split_std.diseased_cov, spec, fitted)

    draws = fit_ddp(split_std.healthy, Zh, prior=prior, mcmc=mcmc,
                    rng=stream.stream(_CHAIN_H))
    U = _ddp_placements(draws, zd_rows, split_std.diseased)
    S, n_d = U.shape
    q = dirichlet(np.ones(n_d), stream.stream(_WEIGHTS_STREAM).generator, size=S)

    order = np.argsort(U, axis=1, kind="stable")
    u_sorted = np.take_along_axis(U, order, axis=1)
    cum = np.cumsum(np.take_along_axis(q, order, axis=1), axis=1)

    curves = np.empty((S, grid.size))
    yi_d = np.empty(S)
    ps_d = np.empty(S)
    pauc_d = np.empty(S) if ctrl.compute else None
    padded = np.concatenate([np.zeros((S, 1)), cum], axis=1)
    for s in range(S):
        curves[s] = padded[s][np.searchsorted(u_sorted[s], grid, side="right")]
        gaps = cum[s] - u_sorted[s]
        k = int(np.argmax(gaps))
        if gaps[k] > 0.0:
            yi_d[s], ps_d[s] = gaps[k], u_sorted[s, k]
        else:
            yi_d[s], ps_d[s] = 0.0, 0.0
        if ctrl.compute:
            if ctrl.focus == "fpf":
                raw = ctrl.value - float(q[s] @ np.minimum(ctrl.value, U[s]))
            else:
                j = int(np.searchsorted(cum[s], ctrl.value - 1e-12, side="left"))
                c = float(u_sorted[s, min(j, n_d - 1)])
                raw = float(q[s] @ (1.0 - np.maximum(c, U[s])) - (1.0 - c) * ctrl.value)
            pauc_d[s] = pauc_normalise(raw, ctrl.focus, ctrl.value)
    curves[:, grid == 0.0] = 0.0
    curves[:, grid == 1.0] = 1.0

    aauc_d = 1.0 - np.einsum("sn,sn->s", q, U)
    lo, hi = band(curves)

    log_s = math.log(std.marker_sd) if std.enabled else 0.0
    crit = FitCriteria(
        healthy=criteria_from_draws(
            draws, loglik=draws.loglik - log_s,
            ll_hat=loglik_at_posterior_mean(draws) - log_s,
        ),
        diseased=None,
    )

    split_raw = split_groups(sample)
    return ArocResult(
        method="aroc-bnp",
        p=grid,
        aroc_est=curves.mean(axis=0), aroc_lo=lo, aroc_hi=hi,
        aauc=interval_from(float(aauc_d.mean()), aauc_d),
        pauc=_pauc_summary(float(pauc_d.mean()), pauc_d, ctrl) if ctrl.compute else None,
        yi=interval_from(float(yi_d.mean()), yi_d),
        p_star=interval_from(float(ps_d.mean()), ps_d),
        placements=U.mean(axis=0),
        sample_sizes=(split_std.n_h, split_std.n_d),
        fit=crit,
        internals={
            "kind": "aroc_bnp", "draws_h": draws, "std": std,
            "spec": spec, "fitted": fitted,
            "U": U, "q": q, "p_star_draws": ps_d, "yi_draws": yi_d,
            "y_h": split_raw.healthy, "y_d": split_raw.diseased,
        },
    )


def aroc_threshold(result: ArocResult, newdata) -> ThresholdResult:
    """Covariate-specific thresholds attaining the adjusted-curve optimum.

    Per posterior draw the healthy conditional quantile at 1 - p* is
    inverted for each prediction row and mapped back to the original
    marker scale. Needs a Bayesian fit (the draws carry the healthy
    conditional model).
    """
    ints = result.internals
    if ints.get("kind") != "aroc_bnp":
        raise MissingDrawsError("covariate-specific thresholds need a Bayesian fit")
    draws, std = ints["draws_h"], ints["std"]
    frame = _frame_of(newdata)
    z_rows, _, _ = build_design(
        _standardised_frame(frame, std), ints["spec"], ints["fitted"]
    )
    ps = ints["p_star_draws"]
    yi = ints["yi_draws"]
    q_levels = np.clip(1.0 - ps, 0.0, 1.0)[:, None]  # (S, 1)

    thresholds = []
    for r in range(len(z_rows)):
        mu = draws.conditional_means(z_rows[r])
        c_std = mixture_quantile(draws.weights, mu, draws.sigma2, q_levels)[:, 0]
        c_raw = std.marker_to_raw(c_std) if std.enabled else c_std
        thresholds.append(interval_from(float(c_raw.mean()), c_raw))

    fpf_iv = interval_from(float(ps.mean()), ps)
    tpf_iv = interval_from(float((ps + yi).mean()), ps + yi)
    yi_iv = interval_from(float(yi.mean()), yi)
    n_rows = len(z_rows)
    return ThresholdResult(
        criterion="yi",
        threshold=thresholds,
        fpf=[fpf_iv] * n_rows,
        tpf=[tpf_iv] * n_rows,
        yi=[yi_iv] * n_rows,
        sign=[1] * n_rows,
    )
