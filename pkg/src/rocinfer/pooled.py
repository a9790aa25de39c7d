"""Pooled (no-covariate) ROC estimation.

Four estimators share one result shape: empirical step curves with a
within-group bootstrap, kernel-smoothed CDF plug-ins, the Dirichlet-weight
resampling scheme with closed-form areas, and normal-mixture posteriors.
Point estimates are plug-ins for the frequentist methods and ensemble
means for the Bayesian ones; bands are 2.5/97.5 percentiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .diagnostics import FitCriteria, criteria_from_draws
from .errors import ConfigError, MissingDrawsError
from .mixtures import (
    DpmDraws,
    DpmPrior,
    McmcControl,
    fit_dpm,
    loglik_at_posterior_mean,
    mixture_quantile,
)
from .sample import DiagnosticSample, FpfGrid, split_groups, standardise
from .smoothing import kernel_cdf, lscv_bandwidth, silverman_bandwidth
from .streams import RngStream, dirichlet, parallel_map
from .summaries import (
    Interval,
    ThresholdResult,
    band,
    ecdf_eval,
    ecdf_quantile,
    interval_from,
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
    youden_grid,
    youden_rows,
)

_BOOT_STREAM_BASE = 100
_CHAIN_H, _CHAIN_D, _WEIGHTS_STREAM = 1, 2, 3


@dataclass(frozen=True)
class PaucControl:
    """Partial-area request: focus fpf restricts FPF <= value, tpf
    restricts TPF >= value. Emitted areas are normalised."""

    compute: bool = False
    focus: str = "fpf"
    value: float = 1.0

    def __post_init__(self):
        if self.focus.lower() not in ("fpf", "tpf"):
            raise ConfigError("pauc focus must be 'fpf' or 'tpf'")
        object.__setattr__(self, "focus", self.focus.lower())
        if not 0.0 < self.value <= 1.0:
            raise ConfigError("pauc value must be in (0, 1]")


@dataclass(frozen=True)
class DensityControl:
    compute: bool = False
    grid_length: int = 200


@dataclass(frozen=True)
class PaucSummary:
    est: float
    lo: float
    hi: float
    focus: str
    bound: float

    def as_dict(self) -> dict:
        return {
            "est": self.est, "lo": self.lo, "hi": self.hi,
            "focus": self.focus, "bound": self.bound, "normalised": True,
        }


@dataclass
class RocResult:
    method: str
    p: np.ndarray
    roc_est: np.ndarray
    roc_lo: np.ndarray
    roc_hi: np.ndarray
    auc: Interval
    pauc: PaucSummary | None
    sample_sizes: tuple
    ensemble: np.ndarray | None = None
    densities: dict | None = None
    fit: FitCriteria | None = None
    internals: dict = field(default_factory=dict, repr=False, compare=False)


def _stream_of(rng) -> RngStream:
    if rng is None:
        return RngStream(0)
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise ConfigError("rng must be an RngStream, an integer seed, or None")


def _grid_of(p) -> np.ndarray:
    if p is None:
        return FpfGrid.default().p
    if isinstance(p, FpfGrid):
        return p.p
    return FpfGrid(np.asarray(p, dtype=float)).p


def _pauc_summary(point, draws, ctrl: PaucControl) -> PaucSummary:
    iv = interval_from(point, draws)
    return PaucSummary(iv.est, iv.lo, iv.hi, ctrl.focus, ctrl.value)


# -- empirical ---------------------------------------------------------------

def _empirical_roc(h_sorted, d_sorted, p) -> np.ndarray:
    out = np.empty_like(p)
    interior = (p > 0.0) & (p < 1.0)
    if np.any(interior):
        c = ecdf_quantile(h_sorted, 1.0 - p[interior])
        out[interior] = 1.0 - ecdf_eval(d_sorted, c)
    out[p == 0.0] = 0.0
    out[p == 1.0] = 1.0
    return out


def _empirical_pauc(h_sorted, d_sorted, ctrl: PaucControl) -> float:
    if ctrl.focus == "fpf":
        U = placements_half(h_sorted, d_sorted)
        raw = pauc_from_placements(U, None, "fpf", ctrl.value)
    else:
        U = placements_half(d_sorted, h_sorted)
        # reversed placement: U_H = P_D(Y > y_H) + half ties
        raw = pauc_from_placements(U, None, "tpf", ctrl.value)
    return pauc_normalise(raw, ctrl.focus, ctrl.value)


def pooled_empirical(sample: DiagnosticSample, p=None, pauc: PaucControl | None = None,
                     B: int = 500, rng=None, workers: int = 1) -> RocResult:
    """Step-function plug-in with a within-group case bootstrap.

    The curve uses right-continuous empirical CDFs and the inf-inverse;
    AUC is the tie-halved Mann-Whitney statistic and partial areas come
    from the matching placement-value closed forms.
    """
    stream = _stream_of(rng)
    grid = _grid_of(p)
    pauc = pauc or PaucControl()
    split = split_groups(sample)
    h_sorted = np.sort(split.healthy)
    d_sorted = np.sort(split.diseased)

    est = _empirical_roc(h_sorted, d_sorted, grid)
    auc_point = mw_auc(split.healthy, split.diseased)
    pauc_point = _empirical_pauc(h_sorted, d_sorted, pauc) if pauc.compute else None

    boot_pairs = []

    def one_rep(k: int):
        gen = stream.stream(_BOOT_STREAM_BASE + k).generator
        h = np.sort(split.healthy[gen.integers(0, split.n_h, split.n_h)])
        d = np.sort(split.diseased[gen.integers(0, split.n_d, split.n_d)])
        curve = _empirical_roc(h, d, grid)
        a = mw_auc(h, d)
        pa = _empirical_pauc(h, d, pauc) if pauc.compute else None
        return h, d, curve, a, pa

    reps = parallel_map(one_rep, range(B), workers) if B > 0 else []
    boot_pairs = [(r[0], r[1]) for r in reps]
    curves = np.array([r[2] for r in reps]) if reps else None
    aucs = [r[3] for r in reps]
    paucs = [r[4] for r in reps]

    lo, hi = band(curves) if curves is not None else (est.copy(), est.copy())
    return RocResult(
        method="empirical",
        p=grid, roc_est=est, roc_lo=lo, roc_hi=hi,
        auc=interval_from(auc_point, aucs if reps else None),
        pauc=_pauc_summary(pauc_point, paucs if reps else None, pauc) if pauc.compute else None,
        sample_sizes=(split.n_h, split.n_d),
        ensemble=curves,
        internals={
            "kind": "emp", "h": h_sorted, "d": d_sorted, "boot": boot_pairs,
        },
    )


# -- kernel ------------------------------------------------------------------

def _kernel_curve_and_areas(y_h, y_d, h_h, h_d, grid, pauc: PaucControl):
    lo_b = min(y_h.min() - 10 * h_h, y_d.min() - 10 * h_d)
    hi_b = max(y_h.max() + 10 * h_h, y_d.max() + 10 * h_d)
    fh = lambda c: kernel_cdf(c, y_h, h_h)
    fd = lambda c: kernel_cdf(c, y_d, h_d)
    curve = roc_curve(fh, fd, grid, lo_b, hi_b)
    auc_grid = odd_grid(0.0, 1.0, 201)
    auc = float(simpson(roc_curve(fh, fd, auc_grid, lo_b, hi_b), auc_grid[1] - auc_grid[0]))
    pa = None
    if pauc.compute:
        if pauc.focus == "fpf":
            g = odd_grid(0.0, pauc.value, 201)
            raw = float(simpson(roc_curve(fh, fd, g, lo_b, hi_b), g[1] - g[0]))
        else:
            g = odd_grid(pauc.value, 1.0, 201)
            raw = float(simpson(tnf_curve(fh, fd, g, lo_b, hi_b), g[1] - g[0]))
        pa = pauc_normalise(raw, pauc.focus, pauc.value)
    return curve, auc, pa


def pooled_kernel(sample: DiagnosticSample, p=None, bw: str = "srt",
                  pauc: PaucControl | None = None, B: int = 500, rng=None,
                  workers: int = 1) -> RocResult:
    """Normal-kernel CDF plug-ins, quantiles by bisection, areas by Simpson.

    bw picks the bandwidth rule per group: 'srt' (normal-reference) or
    'lscv' (leave-one-out CV on the integrated squared CDF error).
    Bootstrap replicates keep the original bandwidths.
    """
    if bw not in ("srt", "lscv"):
        raise ConfigError("bw must be 'srt' or 'lscv'")
    stream = _stream_of(rng)
    grid = _grid_of(p)
    pauc = pauc or PaucControl()
    split = split_groups(sample)
    y_h, y_d = split.healthy, split.diseased

    if bw == "srt":
        h_h = silverman_bandwidth(y_h).value
        h_d = silverman_bandwidth(y_d).value
    else:
        h_h = lscv_bandwidth(y_h, y_h, target="cdf").value
        h_d = lscv_bandwidth(y_d, y_d, target="cdf").value

    est, auc_point, pauc_point = _kernel_curve_and_areas(y_h, y_d, h_h, h_d, grid, pauc)

    def one_rep(k: int):
        gen = stream.stream(_BOOT_STREAM_BASE + k).generator
        h = y_h[gen.integers(0, split.n_h, split.n_h)]
        d = y_d[gen.integers(0, split.n_d, split.n_d)]
        curve, a, pa = _kernel_curve_and_areas(h, d, h_h, h_d, grid, pauc)
        return h, d, curve, a, pa

    reps = parallel_map(one_rep, range(B), workers) if B > 0 else []
    curves = np.array([r[2] for r in reps]) if reps else None
    lo, hi = band(curves) if curves is not None else (est.copy(), est.copy())
    return RocResult(
        method="kernel",
        p=grid, roc_est=est, roc_lo=lo, roc_hi=hi,
        auc=interval_from(auc_point, [r[3] for r in reps] if reps else None),
        pauc=(
            _pauc_summary(pauc_point, [r[4] for r in reps] if reps else None, pauc)
            if pauc.compute else None
        ),
        sample_sizes=(split.n_h, split.n_d),
        ensemble=curves,
        internals={
            "kind": "kernel", "h": y_h, "d": y_d, "h_h": h_h, "h_d": h_d,
            "boot": [(r[0], r[1]) for r in reps],
        },
    )


# -- Dirichlet-weight resampling ---------------------------------------------

def _bb_placements(values_sorted, cumw_rows, query) -> np.ndarray:
    """U_j = sum_i w_i 1[ref_i >= query_j] per weight row; (S, m)."""
    left = np.searchsorted(values_sorted, query, side="left")
    padded = np.concatenate([np.zeros((cumw_rows.shape[0], 1)), cumw_rows], axis=1)
    return 1.0 - padded[:, left]


def pooled_bb(sample: DiagnosticSample, p=None, S: int = 1000,
              pauc: PaucControl | None = None, rng=None) -> RocResult:
    """Dirichlet-weight resampling with closed-form areas.

    Per iteration, both groups get flat Dirichlet weights; diseased
    placements against the weighted healthy CDF give the step curve
    ROC(p) = sum_j q_j 1[U_j <= p] and the areas in closed form.
    """
    stream = _stream_of(rng)
    grid = _grid_of(p)
    pauc = pauc or PaucControl()
    split = split_groups(sample)
    gen = stream.stream(_WEIGHTS_STREAM).generator

    order_h = np.argsort(split.healthy, kind="stable")
    order_d = np.argsort(split.diseased, kind="stable")
    h_sorted = split.healthy[order_h]
    d_sorted = split.diseased[order_d]

    q1 = dirichlet(np.ones(split.n_h), gen, size=S)[:, order_h]
    q2 = dirichlet(np.ones(split.n_d), gen, size=S)[:, order_d]
    cum1 = np.cumsum(q1, axis=1)
    cum2 = np.cumsum(q2, axis=1)

    U = _bb_placements(h_sorted, cum1, d_sorted)  # (S, n_d)
    aucs = 1.0 - np.einsum("sj,sj->s", q2, U)

    curves = np.empty((S, grid.size))
    for s in range(S):
        order = np.argsort(U[s], kind="stable")
        u_sorted = U[s][order]
        cq = np.cumsum(q2[s][order])
        idx = np.searchsorted(u_sorted, grid, side="right")
        padded = np.concatenate([[0.0], cq])
        curves[s] = padded[idx]
    curves[:, 0] = 0.0
    curves[:, -1] = 1.0

    paucs = None
    if pauc.compute:
        if pauc.focus == "fpf":
            raw = pauc.value - np.einsum("sj,sj->s", q2, np.minimum(pauc.value, U))
        else:
            U_rev = _bb_placements(d_sorted, cum2, h_sorted)  # (S, n_h)
            raw = np.einsum("si,si->s", q1, np.maximum(pauc.value, U_rev)) - pauc.value
        paucs = raw / pauc.value if pauc.focus == "fpf" else (
            raw / (1.0 - pauc.value) if pauc.value < 1.0 else raw
        )

    est = curves.mean(axis=0)
    lo, hi = band(curves)
    return RocResult(
        method="bb",
        p=grid, roc_est=est, roc_lo=lo, roc_hi=hi,
        auc=interval_from(float(aucs.mean()), aucs),
        pauc=(
            _pauc_summary(float(np.mean(paucs)), paucs, pauc) if pauc.compute else None
        ),
        sample_sizes=(split.n_h, split.n_d),
        ensemble=curves,
        internals={
            "kind": "bb", "h_sorted": h_sorted, "d_sorted": d_sorted,
            "cum1": cum1, "cum2": cum2, "q1": q1, "q2": q2, "U": U,
        },
    )


# -- normal-mixture posterior --------------------------------------------------

def _mixture_roc_draws(w_h, mu_h, s2_h, w_d, mu_d, s2_d, p) -> np.ndarray:
    """Per-draw ROC(p) for mixture CDFs; p (m,) -> (S, m)."""
    p = np.asarray(p, dtype=float)
    interior = (p > 0.0) & (p < 1.0)
    S = w_h.shape[0]
    out = np.empty((S, p.size))
    if np.any(interior):
        c = mixture_quantile(w_h, mu_h, s2_h, 1.0 - p[interior])  # (S, mi)
        sd_d = np.sqrt(s2_d)
        from scipy.special import ndtr

        f_d = np.einsum(
            "sml,sl->sm",
            ndtr((c[:, :, None] - mu_d[:, None, :]) / sd_d[:, None, :]),
            w_d,
        )
        out[:, interior] = 1.0 - f_d
    out[:, p == 0.0] = 0.0
    out[:, p == 1.0] = 1.0
    return out


def _mixture_tnf_draws(w_h, mu_h, s2_h, w_d, mu_d, s2_d, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    interior = (p > 0.0) & (p < 1.0)
    S = w_h.shape[0]
    out = np.empty((S, p.size))
    if np.any(interior):
        c = mixture_quantile(w_d, mu_d, s2_d, 1.0 - p[interior])
        sd_h = np.sqrt(s2_h)
        from scipy.special import ndtr

        f_h = np.einsum(
            "sml,sl->sm",
            ndtr((c[:, :, None] - mu_h[:, None, :]) / sd_h[:, None, :]),
            w_h,
        )
        out[:, interior] = f_h
    out[:, p == 0.0] = 1.0
    out[:, p == 1.0] = 0.0
    return out


def _dpm_pauc_draws(draws_h: DpmDraws, draws_d: DpmDraws, pauc: PaucControl) -> np.ndarray:
    wh, muh, s2h = draws_h.weights, draws_h.means, draws_h.sigma2
    wd, mud, s2d = draws_d.weights, draws_d.means, draws_d.sigma2
    if pauc.focus == "fpf":
        g = odd_grid(0.0, pauc.value, 201)
        vals = _mixture_roc_draws(wh, muh, s2h, wd, mud, s2d, g)
    else:
        g = odd_grid(pauc.value, 1.0, 201)
        vals = _mixture_tnf_draws(wh, muh, s2h, wd, mud, s2d, g)
    raw = simpson(vals, g[1] - g[0])
    return np.array([pauc_normalise(float(r), pauc.focus, pauc.value) for r in np.atleast_1d(raw)])


def _density_block(draws: DpmDraws, y_raw: np.ndarray, std, grid_length: int) -> dict:
    grid_raw = np.linspace(float(y_raw.min()), float(y_raw.max()), int(grid_length))
    grid_std = std.marker_to_std(grid_raw) if std.enabled else grid_raw
    dens = draws.pdf(grid_std)
    if std.enabled:
        dens = std.density_to_raw(dens)
    lo, hi = band(dens)
    return {
        "grid": grid_raw, "est": dens.mean(axis=0), "lo": lo, "hi": hi, "draws": dens,
    }


def pooled_dpm(sample: DiagnosticSample, p=None, prior_h: DpmPrior | None = None,
               prior_d: DpmPrior | None = None, mcmc: McmcControl | None = None,
               pauc: PaucControl | None = None, density: DensityControl | None = None,
               rng=None, standardise_marker: bool = True, workers: int = 1) -> RocResult:
    """Normal-mixture posteriors per group; curves by numeric inversion.

    The marker is standardised over the combined sample before fitting
    (auto priors then sit on a unit scale) and everything reported is
    mapped back. AUC uses the closed-form double sum per draw; partial
    areas use Simpson on each draw's curve. Fit criteria are computed on
    the raw marker scale.
    """
    stream = _stream_of(rng)
    grid = _grid_of(p)
    pauc = pauc or PaucControl()
    density = density or DensityControl()
    mcmc = mcmc or McmcControl()

    std_sample, std = standardise(sample, enable=standardise_marker)
    split_raw = split_groups(sample)
    split = split_groups(std_sample)

    def fit_group(args):
        y, prior, sid = args
        return fit_dpm(y, prior=prior, mcmc=mcmc, rng=stream.stream(sid))

    draws_h, draws_d = parallel_map(
        fit_group,
        [(split.healthy, prior_h, _CHAIN_H), (split.diseased, prior_d, _CHAIN_D)],
        workers=min(workers, 2),
    )

    curves = _mixture_roc_draws(
        draws_h.weights, draws_h.means, draws_h.sigma2,
        draws_d.weights, draws_d.means, draws_d.sigma2, grid,
    )
    aucs = mixture_auc_closed(
        draws_h.weights, draws_h.means, np.sqrt(draws_h.sigma2),
        draws_d.weights, draws_d.means, np.sqrt(draws_d.sigma2),
    )
    aucs = np.atleast_1d(aucs)

    paucs = _dpm_pauc_draws(draws_h, draws_d, pauc) if pauc.compute else None

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

    densities = None
    if density.compute:
        densities = {
            "healthy": _density_block(draws_h, split_raw.healthy, std, density.grid_length),
            "diseased": _density_block(draws_d, split_raw.diseased, std, density.grid_length),
        }

    est = curves.mean(axis=0)
    lo, hi = band(curves)
    return RocResult(
        method="dpm",
        p=grid, roc_est=est, roc_lo=lo, roc_hi=hi,
        auc=interval_from(float(aucs.mean()), aucs),
        pauc=_pauc_summary(float(paucs.mean()), paucs, pauc) if pauc.compute else None,
        sample_sizes=(split.n_h, split.n_d),
        ensemble=curves,
        densities=densities,
        fit=crit,
        internals={"kind": "dpm", "draws_h": draws_h, "draws_d": draws_d, "std": std},
    )


# -- reverse-orientation curve and thresholds ---------------------------------

def pooled_tnf(result: RocResult, p=None) -> np.ndarray:
    """Reverse-orientation curve F_H(F_D^{-1}(1-p)) from the fitted CDFs.

    Evaluates 1 at p=0 and 0 at p=1; its integral over p equals the AUC.
    Uses the same internals the original fit produced (plug-in for the
    frequentist methods, ensemble mean for the Bayesian ones).
    """
    grid = _grid_of(p) if p is not None else result.p
    ints = result.internals
    kind = ints.get("kind")
    if kind == "emp":
        h, d = ints["h"], ints["d"]
        out = np.empty_like(grid)
        interior = (grid > 0) & (grid < 1)
        c = ecdf_quantile(d, 1.0 - grid[interior])
        out[interior] = ecdf_eval(h, c)
        out[grid == 0.0] = 1.0
        out[grid == 1.0] = 0.0
        return out
    if kind == "kernel":
        y_h, y_d, h_h, h_d = ints["h"], ints["d"], ints["h_h"], ints["h_d"]
        lo_b = min(y_h.min() - 10 * h_h, y_d.min() - 10 * h_d)
        hi_b = max(y_h.max() + 10 * h_h, y_d.max() + 10 * h_d)
        return tnf_curve(
            lambda c: kernel_cdf(c, y_h, h_h), lambda c: kernel_cdf(c, y_d, h_d),
            grid, lo_b, hi_b,
        )
    if kind == "bb":
        h_sorted, d_sorted = ints["h_sorted"], ints["d_sorted"]
        cum1, cum2 = ints["cum1"], ints["cum2"]
        U_rev = _bb_placements(d_sorted, cum2, h_sorted)  # (S, n_h)
        q1 = ints["q1"]
        S = cum1.shape[0]
        out = np.empty((S, grid.size))
        for s in range(S):
            order = np.argsort(U_rev[s], kind="stable")
            u_sorted = U_rev[s][order]
            cq = np.cumsum(q1[s][order])
            # curve value = healthy weight with placement >= p
            idx = np.searchsorted(u_sorted, grid, side="left")
            padded = np.concatenate([[0.0], cq])
            out[s] = 1.0 - padded[idx]
        mean = out.mean(axis=0)
        mean[grid == 0.0] = 1.0
        mean[grid == 1.0] = 0.0
        return mean
    if kind == "dpm":
        dh, dd = ints["draws_h"], ints["draws_d"]
        vals = _mixture_tnf_draws(
            dh.weights, dh.means, dh.sigma2, dd.weights, dd.means, dd.sigma2, grid
        )
        return vals.mean(axis=0)
    raise MissingDrawsError("result carries no fitted internals")


def _threshold_from_cdf_rows(fh_rows, fd_rows, grid, criterion, target_fpf,
                             point_row=None):
    """Interval summaries for an ensemble of CDF evaluations on a grid.

    point_row: index pair (fh, fd) evaluated at the plug-in fit; when
    None the ensemble mean supplies the point estimates.
    """
    if criterion == "yi":
        yi, thr, fpf, tpf, sign = youden_rows(fh_rows, fd_rows, grid)
        if point_row is not None:
            yi0, thr0, fpf0, tpf0, sign0 = point_row
        else:
            yi0, thr0 = float(yi.mean()), float(thr.mean())
            fpf0, tpf0 = float(fpf.mean()), float(tpf.mean())
            sign0 = int(np.sign(sign.sum())) if sign.sum() != 0 else 0
        if fh_rows.shape[0] > 1:
            return ThresholdResult(
                criterion="yi",
                threshold=[interval_from(thr0, thr)],
                fpf=[interval_from(fpf0, fpf)],
                tpf=[interval_from(tpf0, tpf)],
                yi=[interval_from(yi0, yi)],
                sign=[sign0],
            )
        return ThresholdResult(
            criterion="yi",
            threshold=[interval_from(thr0)], fpf=[interval_from(fpf0)],
            tpf=[interval_from(tpf0)], yi=[interval_from(yi0)], sign=[sign0],
        )
    # FPF criterion: c = F_H^{-1}(1 - target) per ensemble member
    q = 1.0 - target_fpf
    n_rows = fh_rows.shape[0]
    thr = np.empty(n_rows)
    fpf = np.empty(n_rows)
    tpf = np.empty(n_rows)
    for s in range(n_rows):
        k = int(np.searchsorted(fh_rows[s], q, side="left"))
        k = min(k, grid.size - 1)
        thr[s] = grid[k]
        fpf[s] = 1.0 - fh_rows[s, k]
        tpf[s] = 1.0 - fd_rows[s, k]
    if point_row is not None:
        thr0, fpf0, tpf0 = point_row
    else:
        thr0, fpf0, tpf0 = float(thr.mean()), float(fpf.mean()), float(tpf.mean())
    draws = n_rows > 1
    return ThresholdResult(
        criterion="fpf",
        threshold=[interval_from(thr0, thr if draws else None)],
        fpf=[interval_from(fpf0, fpf if draws else None)],
        tpf=[interval_from(tpf0, tpf if draws else None)],
        target_fpf=target_fpf,
    )


def _cdf_rows_for_threshold(result: RocResult, grid: np.ndarray):
    """(fh_rows, fd_rows, point_pair) on the threshold grid per method."""
    ints = result.internals
    kind = ints.get("kind")
    if kind == "emp":
        fh0 = ecdf_eval(ints["h"], grid)
        fd0 = ecdf_eval(ints["d"], grid)
        rows = [
            (ecdf_eval(h, grid), ecdf_eval(d, grid)) for h, d in ints["boot"]
        ]
        if rows:
            return (
                np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                (fh0, fd0),
            )
        return fh0[None, :], fd0[None, :], (fh0, fd0)
    if kind == "kernel":
        fh0 = np.asarray(kernel_cdf(grid, ints["h"], ints["h_h"]))
        fd0 = np.asarray(kernel_cdf(grid, ints["d"], ints["h_d"]))
        rows = [
            (kernel_cdf(grid, h, ints["h_h"]), kernel_cdf(grid, d, ints["h_d"]))
            for h, d in ints["boot"]
        ]
        if rows:
            return (
                np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                (fh0, fd0),
            )
        return fh0[None, :], fd0[None, :], (fh0, fd0)
    if kind == "bb":
        fh_rows = np.array(
            [weighted_ecdf_eval(ints["h_sorted"], ints["cum1"][s], grid)
             for s in range(ints["cum1"].shape[0])]
        )
        fd_rows = np.array(
            [weighted_ecdf_eval(ints["d_sorted"], ints["cum2"][s], grid)
             for s in range(ints["cum2"].shape[0])]
        )
        return fh_rows, fd_rows, None
    if kind == "dpm":
        dh, dd = ints["draws_h"], ints["draws_d"]
        std = ints["std"]
        g = std.marker_to_std(grid) if std.enabled else grid
        return dh.cdf(g), dd.cdf(g), None
    raise MissingDrawsError("result carries no fitted internals for thresholds")


def pooled_threshold(result: RocResult, criterion: str = "yi",
                     target_fpf: float | None = None) -> ThresholdResult:
    """Optimal threshold for a pooled fit.

    criterion 'yi' maximises |F_H - F_D| over the shared 500-point grid
    (smallest threshold on ties, sign reported); 'fpf' returns
    F_H^{-1}(1 - target_fpf) with its attached TPF. Interval sources:
    bootstrap replicates or posterior draws, whichever the fit carries.
    """
    criterion = criterion.lower()
    if criterion not in ("yi", "fpf"):
        raise ConfigError("criterion must be 'yi' or 'fpf'")
    if criterion == "fpf":
        if target_fpf is None or not 0.0 < target_fpf < 1.0:
            raise ConfigError("target_fpf in (0,1) required for the fpf criterion")
    ints = result.internals
    if not ints:
        raise MissingDrawsError("result carries no fitted internals")
    if ints["kind"] in ("emp", "kernel"):
        y_all = np.concatenate([ints["h"], ints["d"]])
    elif ints["kind"] == "bb":
        y_all = np.concatenate([ints["h_sorted"], ints["d_sorted"]])
    else:
        std = ints["std"]
        raw_h = std.marker_to_raw(ints["draws_h"].y) if std.enabled else ints["draws_h"].y
        raw_d = std.marker_to_raw(ints["draws_d"].y) if std.enabled else ints["draws_d"].y
        y_all = np.concatenate([raw_h, raw_d])
    grid = youden_grid(y_all)
    fh_rows, fd_rows, point = _cdf_rows_for_threshold(result, grid)
    if point is not None and criterion == "yi":
        diff = point[0] - point[1]
        k = int(np.argmax(np.abs(diff)))
        point_row = (
            float(abs(diff[k])), float(grid[k]),
            float(1.0 - point[0][k]), float(1.0 - point[1][k]),
            int(np.sign(diff[k])) if diff[k] != 0 else 0,
        )
    elif point is not None:
        q = 1.0 - target_fpf
        k = min(int(np.searchsorted(point[0], q, side="left")), grid.size - 1)
        point_row = (float(grid[k]), float(1.0 - point[0][k]), float(1.0 - point[1][k]))
    else:
        point_row = None
    return _threshold_from_cdf_rows(
        fh_rows, fd_rows, grid, criterion, target_fpf, point_row
    )
