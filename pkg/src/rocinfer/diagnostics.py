"""Fit criteria, posterior predictive checks, residuals, and chain ESS."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, ndtri

from .errors import MissingDrawsError, NegativePenaltyWarning
from .mixtures import DdpDraws, DpmDraws, loglik_at_posterior_mean
from .streams import _gen


@dataclass(frozen=True)
class GroupCriteria:
    """Information criteria for one fitted group."""

    waic: float
    waic_penalty: float
    dic: float
    dic_penalty: float
    lpml: float

    def as_dict(self) -> dict:
        return {
            "waic": self.waic,
            "waic_penalty": self.waic_penalty,
            "dic": self.dic,
            "dic_penalty": self.dic_penalty,
            "lpml": self.lpml,
        }


@dataclass(frozen=True)
class FitCriteria:
    healthy: GroupCriteria | None = None
    diseased: GroupCriteria | None = None

    def as_dict(self) -> dict:
        out = {}
        if self.healthy is not None:
            out["healthy"] = self.healthy.as_dict()
        if self.diseased is not None:
            out["diseased"] = self.diseased.as_dict()
        return out


def _check_ll(ll) -> np.ndarray:
    ll = np.asarray(ll, dtype=float)
    if ll.ndim != 2 or ll.size == 0:
        raise MissingDrawsError("need a draws-by-observations log-likelihood matrix")
    if not np.all(np.isfinite(ll)):
        raise MissingDrawsError("log-likelihood matrix has non-finite entries")
    return ll


def waic(ll) -> tuple:
    """Widely applicable information criterion from per-draw log densities.

    lppd uses a log-sum-exp stabilised Monte Carlo average; the penalty is
    the sum over observations of the across-draw variance.
    """
    ll = _check_ll(ll)
    S = ll.shape[0]
    lppd = float(np.sum(logsumexp(ll, axis=0) - np.log(S)))
    penalty = float(np.sum(np.var(ll, axis=0, ddof=1))) if S > 1 else 0.0
    return -2.0 * (lppd - penalty), penalty


def dic(ll, ll_at_posterior_mean) -> tuple:
    """Deviance information criterion with a plug-in at posterior means.

    penalty = mean deviance minus the deviance at the posterior means of
    the mixture parameters. A negative penalty is reported as is (mixture
    plug-ins can beat the average); it signals poor identification.
    """
    ll = _check_ll(ll)
    ll_hat = np.asarray(ll_at_posterior_mean, dtype=float)
    if ll_hat.shape != (ll.shape[1],):
        raise MissingDrawsError("plug-in log-likelihood length must match observations")
    dbar = float(np.mean(-2.0 * np.sum(ll, axis=1)))
    dhat = float(-2.0 * np.sum(ll_hat))
    penalty = dbar - dhat
    if penalty < 0:
        warnings.warn(
            "DIC penalty is negative (plug-in beats the average deviance)",
            NegativePenaltyWarning,
        )
    return dhat + 2.0 * penalty, penalty


def lpml(ll) -> tuple:
    """Log pseudo marginal likelihood and per-observation CPOs.

    CPO_i is the harmonic mean of the per-draw densities, computed through
    a shifted log-sum-exp so extreme draws cannot overflow.
    """
    ll = _check_ll(ll)
    S = ll.shape[0]
    # log CPO_i = -log mean_s exp(-ll_si)
    log_cpo = -(logsumexp(-ll, axis=0) - np.log(S))
    return float(np.sum(log_cpo)), np.exp(log_cpo)


def criteria_from_draws(draws, loglik=None, ll_hat=None) -> GroupCriteria:
    """Bundle WAIC, DIC, and LPML for one group's saved draws.

    loglik overrides the matrix stored in the draws (used to shift the fit
    scale back to the raw marker scale); ll_hat overrides the plug-in.
    """
    ll = draws.loglik if loglik is None else np.asarray(loglik, dtype=float)
    if ll_hat is None:
        ll_hat = loglik_at_posterior_mean(draws)
        if loglik is not None:
            ll_hat = ll_hat + float(np.mean(loglik) - np.mean(draws.loglik))
    w, wp = waic(ll)
    d, dp = dic(ll, ll_hat)
    lp, _ = lpml(ll)
    return GroupCriteria(waic=w, waic_penalty=wp, dic=d, dic_penalty=dp, lpml=lp)


def moment_skewness(x) -> float:
    x = np.asarray(x, dtype=float)
    m = x.mean()
    m2 = np.mean((x - m) ** 2)
    if m2 == 0:
        return 0.0
    return float(np.mean((x - m) ** 3) / m2 ** 1.5)


def moment_kurtosis(x) -> float:
    """m4/m2^2 (normal reference value 3, not excess)."""
    x = np.asarray(x, dtype=float)
    m = x.mean()
    m2 = np.mean((x - m) ** 2)
    if m2 == 0:
        return 0.0
    return float(np.mean((x - m) ** 4) / m2 ** 2)


_STAT_FUNCS = {"skewness": moment_skewness, "kurtosis": moment_kurtosis}


@dataclass(frozen=True)
class PredictiveCheck:
    observed: dict
    replicated: dict  # statistic name -> (S,) array
    density_replicates: np.ndarray  # (R, n) posterior predictive datasets
    density_indices: np.ndarray


def _simulate_replicates(draws, rng) -> np.ndarray:
    """One posterior predictive dataset per saved draw, shape (S, n)."""
    gen = _gen(rng)
    S = draws.nsave
    if isinstance(draws, DdpDraws):
        n = draws.Z.shape[0]
    else:
        n = draws.y.size
    out = np.empty((S, n))
    for s in range(S):
        w = draws.weights[s]
        cum = np.cumsum(w)
        cum /= cum[-1]
        z = np.searchsorted(cum, gen.random(n), side="right")
        z = np.minimum(z, w.size - 1)
        if isinstance(draws, DdpDraws):
            mean = np.einsum("ij,ij->i", draws.Z, draws.beta[s][z])
        else:
            mean = draws.means[s][z]
        out[s] = mean + np.sqrt(draws.sigma2[s][z]) * gen.standard_normal(n)
    return out


def predictive_checks(draws, observed, statistics=("skewness", "kurtosis"),
                      n_rep_densities: int = 500, rng=None) -> PredictiveCheck:
    """Posterior predictive datasets scored by moment statistics.

    Simulates one replicate per saved draw, computes the requested
    statistics on each, and keeps up to n_rep_densities randomly chosen
    replicates for density overlays.
    """
    observed = np.asarray(observed, dtype=float)
    for name in statistics:
        if name not in _STAT_FUNCS:
            raise MissingDrawsError("unknown predictive statistic %r" % name)
    gen = _gen(rng)
    reps = _simulate_replicates(draws, gen)
    obs_stats = {name: _STAT_FUNCS[name](observed) for name in statistics}
    rep_stats = {
        name: np.array([_STAT_FUNCS[name](row) for row in reps]) for name in statistics
    }
    S = reps.shape[0]
    keep = min(n_rep_densities, S)
    idx = np.sort(gen.choice(S, size=keep, replace=False))
    return PredictiveCheck(
        observed=obs_stats,
        replicated=rep_stats,
        density_replicates=reps[idx],
        density_indices=idx,
    )


def ppoints(n: int) -> np.ndarray:
    """Plotting positions: (j-0.5)/n for n>10, else (j-3/8)/(n+1/4)."""
    j = np.arange(1, n + 1)
    if n > 10:
        return (j - 0.5) / n
    return (j - 3.0 / 8.0) / (n + 0.25)


@dataclass(frozen=True)
class QuantileResiduals:
    residuals: np.ndarray  # (S, n), each row sorted
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    theoretical: np.ndarray


def _cdf_matrix(draws, y) -> np.ndarray:
    """(S, n) matrix of F^(s)(y_i), conditional on each row's design for DDP."""
    if isinstance(draws, DpmDraws):
        return draws.cdf(y)
    if isinstance(draws, DdpDraws):
        from scipy.special import ndtr

        S = draws.nsave
        n = y.size
        out = np.empty((S, n))
        sd = np.sqrt(draws.sigma2)
        chunk = max(1, int(2_000_000 / max(1, n * draws.weights.shape[1])))
        for start in range(0, S, chunk):
            stop = min(S, start + chunk)
            means = np.einsum("slq,nq->snl", draws.beta[start:stop], draws.Z)
            zs = (y[None, :, None] - means) / sd[start:stop, None, :]
            out[start:stop] = np.einsum("snl,sl->sn", ndtr(zs), draws.weights[start:stop])
        return out
    return np.asarray(draws, dtype=float)


def quantile_residuals(draws, y=None) -> QuantileResiduals:
    """Normal quantile residuals per draw, with pointwise bands.

    draws may be DpmDraws/DdpDraws (y defaults to the fitted data) or an
    (S, n) matrix of CDF values. Each draw's residuals are sorted before
    summarising so the bands live on the QQ ordinates.
    """
    if isinstance(draws, (DpmDraws, DdpDraws)):
        yy = draws.y if y is None else np.asarray(y, dtype=float)
        F = _cdf_matrix(draws, yy)
    else:
        F = np.asarray(draws, dtype=float)
        if F.ndim != 2:
            raise MissingDrawsError("need an (S, n) matrix of CDF values")
    F = np.clip(F, 1e-12, 1.0 - 1e-12)
    res = np.sort(ndtri(F), axis=1)
    n = res.shape[1]
    return QuantileResiduals(
        residuals=res,
        mean=res.mean(axis=0),
        lo=np.percentile(res, 2.5, axis=0),
        hi=np.percentile(res, 97.5, axis=0),
        theoretical=ndtri(ppoints(n)),
    )


def effective_sample_size(chain) -> float:
    """ESS with Geyer's initial monotone positive sequence truncation.

    A constant chain returns its length (autocorrelation undefined there).
    No upper cap: slightly antithetic chains can exceed the raw size.
    """
    x = np.asarray(chain, dtype=float).ravel()
    S = x.size
    if S < 2:
        return float(S)
    x = x - x.mean()
    var0 = float(x @ x) / S
    if var0 == 0 or not np.isfinite(var0):
        return float(S)
    # autocovariances via FFT (biased 1/S normalisation)
    nfft = int(2 ** np.ceil(np.log2(2 * S)))
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:S].real / S
    rho = acov / acov[0]
    # pair sums of consecutive autocorrelations, truncated at the first
    # nonpositive pair, then forced nonincreasing
    tau = 0.0
    prev = np.inf
    m = 0
    while 2 * m + 1 < S:
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        tau += pair
        prev = pair
        m += 1
    tau = max(2.0 * tau - 1.0, 1e-10)
    return float(S / tau)
