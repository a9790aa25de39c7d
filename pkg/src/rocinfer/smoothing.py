"""Gaussian-kernel CDF smoothing, local polynomial regression, bandwidths.

The location-scale machinery follows a sequential scheme: fit the
regression function first, then fit the variance function on squared
residuals with its own bandwidth. Mean and variance bandwidths are
selected independently by leave-one-out least squares cross-validation
over a fixed candidate grid, which keeps selection deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (
    ClampWarning,
    DegenerateGridWarning,
    NoLocalDataError,
    TooFewPointsError,
    ZeroVarianceError,
)

_VAR_FLOOR = 1e-10


@dataclass(frozen=True)
class Bandwidth:
    value: float
    method: str  # "srt" or "lscv"

    def __post_init__(self):
        if not (self.value > 0):
            raise ZeroVarianceError("bandwidth must be positive")


def _bw_value(h) -> float:
    return float(h.value) if isinstance(h, Bandwidth) else float(h)


def silverman_bandwidth(y) -> Bandwidth:
    """Rule-of-thumb bandwidth 0.9 * min(SD, IQR/1.34) * n^{-0.2}.

    SD is the n-1 sample standard deviation and the IQR comes from
    type-7 quantiles. A zero IQR (heavy ties) falls back to the SD so
    the bandwidth stays positive.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise TooFewPointsError("need at least two points for a bandwidth")
    sd = float(np.std(y, ddof=1))
    if sd == 0.0:
        raise ZeroVarianceError("sample has zero variance")
    q75, q25 = np.quantile(y, [0.75, 0.25])
    iqr_scale = (q75 - q25) / 1.34
    scale = min(sd, iqr_scale) if iqr_scale > 0 else sd
    return Bandwidth(0.9 * scale * y.size ** (-0.2), "srt")


def kernel_cdf(y0, data, h) -> np.ndarray | float:
    """Gaussian-smoothed CDF: mean of Phi((y0 - y_i)/h)."""
    hv = _bw_value(h)
    data = np.asarray(data, dtype=float)
    y0_arr = np.asarray(y0, dtype=float)
    out = ndtr((y0_arr[..., None] - data) / hv).mean(axis=-1)
    return float(out) if np.ndim(y0) == 0 else out


def _weights(x, x0, h):
    d = np.asarray(x0, dtype=float)[..., None] - np.asarray(x, dtype=float)
    return np.exp(-0.5 * (d / h) ** 2), d


def local_poly_regression(x, y, h, x0, order: int = 1) -> np.ndarray | float:
    """Local constant (order 0) or local linear (order 1) fit at x0."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    hv = _bw_value(h)
    y = np.asarray(y, dtype=float)
    w, d = _weights(x, x0, hv)
    s0 = w.sum(axis=-1)
    if np.any(s0 <= 1e-300):
        raise NoLocalDataError("no kernel mass at some evaluation points")
    t0 = w @ y
    if order == 0:
        out = t0 / s0
    else:
        s1 = (w * d).sum(axis=-1)
        s2 = (w * d * d).sum(axis=-1)
        t1 = (w * d) @ y
        denom = s0 * s2 - s1 * s1
        # a degenerate local design (single support point) reduces to the
        # local constant estimate
        safe = denom > 1e-300 * np.maximum(1.0, s2)
        out = np.where(safe, (s2 * t0 - s1 * t1) / np.where(safe, denom, 1.0), t0 / s0)
    return float(out) if np.ndim(x0) == 0 else out


def local_constant_variance(x, squared_residuals, h, x0) -> np.ndarray | float:
    """Nadaraya-Watson estimate of the variance function, clamped below."""
    est = local_poly_regression(x, squared_residuals, h, x0, order=0)
    arr = np.asarray(est, dtype=float)
    if np.any(arr < _VAR_FLOOR):
        warnings.warn("variance estimate clamped at %g" % _VAR_FLOOR, ClampWarning)
        arr = np.maximum(arr, _VAR_FLOOR)
    return float(arr) if np.ndim(x0) == 0 else arr


def _candidate_grid(scale_sample) -> np.ndarray:
    h0 = silverman_bandwidth(scale_sample).value
    return np.geomspace(h0 / 20.0, 20.0 * h0, 50)


def _loo_cv_regression(x, y, h, order):
    w, d = _weights(x, x, h)
    diag = np.arange(x.size)
    s0 = w.sum(axis=1)
    t0 = w @ y
    wii = w[diag, diag]
    if order == 0:
        denom = s0 - wii
        if np.any(denom <= 1e-300):
            return np.inf
        est = (t0 - wii * y) / denom
    else:
        s1 = (w * d).sum(axis=1)
        s2 = (w * d * d).sum(axis=1)
        t1 = (w * d) @ y
        # the i-th point sits at distance zero, so dropping it only
        # touches the zeroth-order sums
        denom = (s0 - wii) * s2 - s1 * s1
        if np.any(denom <= 1e-300 * np.maximum(1.0, s2)):
            return np.inf
        est = (s2 * (t0 - wii * y) - s1 * t1) / denom
    return float(np.mean((y - est) ** 2))


def _loo_cv_cdf(y, h, grid):
    a = ndtr((grid[None, :] - y[:, None]) / h)
    n = y.size
    f_all = a.mean(axis=0)
    f_loo = (n * f_all[None, :] - a) / (n - 1.0)
    indic = (y[:, None] <= grid[None, :]).astype(float)
    err = (indic - f_loo) ** 2
    return float(np.mean(np.trapezoid(err, grid, axis=1)))


def lscv_bandwidth(x, y, target: str, order: int = 1) -> Bandwidth:
    """Least-squares cross-validated bandwidth.

    target 'regression' smooths y on x (local linear by default),
    'variance' smooths squared residuals on x (local constant), and
    'cdf' smooths the distribution of y (x is ignored). Candidates are
    50 log-spaced values in [h_srt/20, 20*h_srt]; the leave-one-out
    squared error is the normative objective here.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 10:
        raise TooFewPointsError("cross-validation needs n >= 10")
    if target == "cdf":
        candidates = _candidate_grid(y)
        hmax = candidates[-1]
        grid = np.linspace(y.min() - 3 * hmax, y.max() + 3 * hmax, 201)
        scores = np.array([_loo_cv_cdf(y, h, grid) for h in candidates])
        fallback = silverman_bandwidth(y)
    elif target in ("regression", "variance"):
        x = np.asarray(x, dtype=float)
        if x.shape != y.shape:
            raise TooFewPointsError("x and y must have equal length")
        use_order = 0 if target == "variance" else order
        candidates = _candidate_grid(x)
        scores = np.array([_loo_cv_regression(x, y, h, use_order) for h in candidates])
        fallback = silverman_bandwidth(x)
    else:
        raise ValueError("target must be regression, variance, or cdf")
    finite = np.isfinite(scores)
    if not np.any(finite):
        warnings.warn("all LSCV candidates failed; using rule of thumb", DegenerateGridWarning)
        return Bandwidth(fallback.value, "lscv")
    span = np.nanmax(scores[finite]) - np.nanmin(scores[finite])
    if span <= 1e-14 * max(1.0, abs(float(np.nanmax(scores[finite])))):
        warnings.warn("LSCV objective is flat; using rule of thumb", DegenerateGridWarning)
        return Bandwidth(fallback.value, "lscv")
    best = int(np.nanargmin(np.where(finite, scores, np.inf)))
    return Bandwidth(float(candidates[best]), "lscv")


@dataclass(frozen=True)
class LocationScaleFit:
    """Sequential mean/variance kernel fit with standardised residuals."""

    x: np.ndarray
    y: np.ndarray
    bw_mean: Bandwidth
    bw_var: Bandwidth
    order: int
    sq_resid: np.ndarray  # squared mean-fit residuals, aligned with x
    residuals: np.ndarray  # (y - mu(x)) / sigma(x), sorted ascending

    def mu(self, x0):
        return local_poly_regression(self.x, self.y, self.bw_mean, x0, order=self.order)

    def sigma2(self, x0):
        return local_constant_variance(self.x, self.sq_resid, self.bw_var, x0)


def fit_location_scale(x, y, order: int = 1, bw_mean: Bandwidth | None = None,
                       bw_var: Bandwidth | None = None) -> LocationScaleFit:
    """Fit mu then sigma^2 (on squared residuals), both bandwidths by LSCV.

    Pre-selected bandwidths may be passed in (bootstrap replicates keep
    the original fit's bandwidths).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if bw_mean is None:
        bw_mean = lscv_bandwidth(x, y, "regression", order=order)
    mu_hat = local_poly_regression(x, y, bw_mean, x, order=order)
    sq = (y - mu_hat) ** 2
    if bw_var is None:
        bw_var = lscv_bandwidth(x, sq, "variance")
    var_hat = np.maximum(
        np.asarray(local_poly_regression(x, sq, bw_var, x, order=0), dtype=float), _VAR_FLOOR
    )
    resid = np.sort((y - mu_hat) / np.sqrt(var_hat))
    return LocationScaleFit(
        x=x, y=y, bw_mean=bw_mean, bw_var=bw_var, order=order, sq_resid=sq, residuals=resid
    )
