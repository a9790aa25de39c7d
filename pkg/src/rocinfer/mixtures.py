"""Truncated stick-breaking normal mixtures fit by blocked Gibbs sampling.

Two samplers: a location-scale normal mixture for a single sample
(fit_dpm), and its regression extension where component means are linear
in a design matrix while the stick weights are shared across covariates
(fit_ddp). Both save weights, atoms, the concentration parameter, and a
per-observation log-likelihood matrix for the fit criteria.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.special import logsumexp, ndtr, ndtri

from .errors import (
    ConfigError,
    DimMismatchError,
    NumericalCollapseError,
    TooFewPointsError,
)
from .streams import (
    _gen,
    categorical_rows,
    gamma_shape_rate,
    stick_breaking,
    wishart,
)

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DpmPrior:
    """Normal-gamma base measure plus a gamma prior on the concentration.

    None fields are resolved from the data: m0 = mean(y), S0 = 10 var(y),
    b = a var(y). On a standardised sample this reduces to m0=0, S0=10,
    b=2 (with the default a=2).
    """

    m0: float | None = None
    S0: float | None = None
    a: float = 2.0
    b: float | None = None
    a_alpha: float = 2.0
    b_alpha: float = 2.0
    L: int = 10

    def resolved(self, y) -> "DpmPrior":
        y = np.asarray(y, dtype=float)
        var = float(np.var(y, ddof=1)) if y.size > 1 else 1.0
        var = max(var, 1e-12)
        out = self
        if out.m0 is None:
            out = replace(out, m0=float(np.mean(y)))
        if out.S0 is None:
            out = replace(out, S0=10.0 * var)
        if out.b is None:
            out = replace(out, b=out.a * var)
        out.validate()
        return out

    def validate(self):
        if self.L < 1:
            raise ConfigError("L must be at least 1")
        for name in ("S0", "a", "b", "a_alpha", "b_alpha"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError("%s must be positive" % name)


@dataclass(frozen=True)
class DdpPrior:
    """Regression base measure with conjugate hyperpriors on (m, S).

    None fields resolve from the data: m0 = (mean(y), 0, ..., 0),
    S0 = 10 var(y) I, Psi = var(y) I, b = a var(y), nu = q + 2.
    """

    m0: np.ndarray | None = None
    S0: np.ndarray | None = None
    nu: float | None = None
    Psi: np.ndarray | None = None
    a: float = 2.0
    b: float | None = None
    a_alpha: float = 2.0
    b_alpha: float = 2.0
    L: int = 10

    def resolved(self, y, q: int) -> "DdpPrior":
        y = np.asarray(y, dtype=float)
        var = float(np.var(y, ddof=1)) if y.size > 1 else 1.0
        var = max(var, 1e-12)
        out = self
        if out.m0 is None:
            m0 = np.zeros(q)
            m0[0] = float(np.mean(y))
            out = replace(out, m0=m0)
        if out.S0 is None:
            out = replace(out, S0=10.0 * var * np.eye(q))
        if out.nu is None:
            out = replace(out, nu=q + 2.0)
        if out.Psi is None:
            out = replace(out, Psi=var * np.eye(q))
        if out.b is None:
            out = replace(out, b=out.a * var)
        out.validate(q)
        return out

    def validate(self, q: int):
        if self.L < 1:
            raise ConfigError("L must be at least 1")
        for name in ("a", "b", "a_alpha", "b_alpha"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError("%s must be positive" % name)
        m0 = np.asarray(self.m0, dtype=float)
        S0 = np.asarray(self.S0, dtype=float)
        Psi = np.asarray(self.Psi, dtype=float)
        if m0.shape != (q,) or S0.shape != (q, q) or Psi.shape != (q, q):
            raise DimMismatchError("prior dimensions do not match the design matrix")
        if not self.nu > q - 1:
            raise ConfigError("nu must exceed q - 1")


@dataclass(frozen=True)
class McmcControl:
    nsave: int = 8000
    nburn: int = 2000
    nskip: int = 1

    def __post_init__(self):
        if self.nsave < 1 or self.nburn < 0 or self.nskip < 1:
            raise ConfigError("need nsave >= 1, nburn >= 0, nskip >= 1")


@dataclass(frozen=True)
class DpmDraws:
    """Saved Gibbs output for the no-covariate mixture."""

    weights: np.ndarray  # (S, L)
    means: np.ndarray    # (S, L)
    sigma2: np.ndarray   # (S, L)
    alpha: np.ndarray    # (S,)
    loglik: np.ndarray   # (S, n), on the scale y was fit on
    y: np.ndarray
    prior: DpmPrior
    mcmc: McmcControl

    @property
    def nsave(self) -> int:
        return self.weights.shape[0]

    def cdf(self, y0) -> np.ndarray:
        return mixture_cdf(self.weights, self.means, self.sigma2, y0)

    def pdf(self, y0) -> np.ndarray:
        return mixture_pdf(self.weights, self.means, self.sigma2, y0)


@dataclass(frozen=True)
class DdpDraws:
    """Saved Gibbs output for the shared-weights regression mixture."""

    weights: np.ndarray  # (S, L)
    beta: np.ndarray     # (S, L, q)
    sigma2: np.ndarray   # (S, L)
    alpha: np.ndarray    # (S,)
    loglik: np.ndarray   # (S, n)
    y: np.ndarray
    Z: np.ndarray
    prior: DdpPrior
    mcmc: McmcControl

    @property
    def nsave(self) -> int:
        return self.weights.shape[0]

    def conditional_means(self, zrow) -> np.ndarray:
        """Per-draw component means z'beta_l, shape (S, L)."""
        z = np.asarray(zrow, dtype=float)
        return self.beta @ z

    def conditional_cdf(self, zrow, y0) -> np.ndarray:
        return mixture_cdf(self.weights, self.conditional_means(zrow), self.sigma2, y0)

    def conditional_pdf(self, zrow, y0) -> np.ndarray:
        return mixture_pdf(self.weights, self.conditional_means(zrow), self.sigma2, y0)


def _as_sl(arr) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    return a


def mixture_cdf(weights, means, sigma2, y0) -> np.ndarray:
    """F(y0) of a normal mixture, evaluated per draw.

    weights/means/sigma2 are (S, L) (a single (L,) draw is promoted);
    y0 may be scalar or a vector. Returns (S, m), or (m,) for a single
    draw, or a scalar for a single draw and scalar y0.
    """
    w, mu, s2 = _as_sl(weights), _as_sl(means), _as_sl(sigma2)
    scalar_draw = np.asarray(weights).ndim == 1
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    sd = np.sqrt(s2)
    out = np.einsum(
        "sml,sl->sm", ndtr((y[None, :, None] - mu[:, None, :]) / sd[:, None, :]), w
    )
    if scalar_draw:
        out = out[0]
        if np.isscalar(y0) or np.asarray(y0).ndim == 0:
            return float(out[0])
    return out


def mixture_pdf(weights, means, sigma2, y0) -> np.ndarray:
    """Density counterpart of mixture_cdf, same shape conventions."""
    w, mu, s2 = _as_sl(weights), _as_sl(means), _as_sl(sigma2)
    scalar_draw = np.asarray(weights).ndim == 1
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    z = (y[None, :, None] - mu[:, None, :]) / np.sqrt(s2)[:, None, :]
    dens = np.exp(-0.5 * z * z) / np.sqrt(2.0 * math.pi * s2)[:, None, :]
    out = np.einsum("sml,sl->sm", dens, w)
    if scalar_draw:
        out = out[0]
        if np.isscalar(y0) or np.asarray(y0).ndim == 0:
            return float(out[0])
    return out


def ddp_conditional_cdf(weights, beta, sigma2, zrow, y0) -> np.ndarray:
    """mixture_cdf with component means z'beta_l per draw."""
    b = np.asarray(beta, dtype=float)
    z = np.asarray(zrow, dtype=float)
    means = b @ z if b.ndim == 3 else (b @ z)[None, :]
    if b.ndim == 2:
        return mixture_cdf(np.asarray(weights), means[0], sigma2, y0)
    return mixture_cdf(weights, means, sigma2, y0)


def mixture_mean_variance(weights, means, sigma2):
    """Mean and variance of the mixture, per draw (law of total variance)."""
    w, mu, s2 = _as_sl(weights), _as_sl(means), _as_sl(sigma2)
    scalar_draw = np.asarray(weights).ndim == 1
    m = np.einsum("sl,sl->s", w, mu)
    v = np.einsum("sl,sl->s", w, s2) + np.einsum("sl,sl->s", w, mu * mu) - m * m
    if scalar_draw:
        return float(m[0]), float(v[0])
    return m, v


def occupied_components_prior(alpha: float, n: int):
    """Prior mean and variance of the number of occupied clusters."""
    alpha = float(alpha)
    if alpha <= 0 or n < 1:
        raise ConfigError("need alpha > 0 and n >= 1")
    mean = alpha * math.log((alpha + n) / alpha)
    return mean, mean - alpha


def _mixture_loglik_rows(y, weights, means, sigma2) -> np.ndarray:
    """log f(y_i) under one draw; y (n,), parameters (L,). Returns (n,)."""
    logw = np.log(np.maximum(weights, 1e-300))
    lp = (
        logw[None, :]
        - 0.5 * (_LOG_2PI + np.log(sigma2))[None, :]
        - 0.5 * (y[:, None] - means[None, :]) ** 2 / sigma2[None, :]
    )
    return logsumexp(lp, axis=1)


def loglik_at_posterior_mean(draws, y=None, Z=None) -> np.ndarray:
    """Per-observation log-likelihood at componentwise posterior means.

    Plug-in used by the deviance criterion: average weights, atoms, and
    variances over draws, then evaluate the mixture once.
    """
    wbar = draws.weights.mean(axis=0)
    s2bar = draws.sigma2.mean(axis=0)
    if isinstance(draws, DdpDraws):
        zmat = draws.Z if Z is None else np.asarray(Z, dtype=float)
        yy = draws.y if y is None else np.asarray(y, dtype=float)
        betabar = draws.beta.mean(axis=0)
        means = zmat @ betabar.T  # (n, L)
        logw = np.log(np.maximum(wbar, 1e-300))
        lp = (
            logw[None, :]
            - 0.5 * (_LOG_2PI + np.log(s2bar))[None, :]
            - 0.5 * (yy[:, None] - means) ** 2 / s2bar[None, :]
        )
        return logsumexp(lp, axis=1)
    yy = draws.y if y is None else np.asarray(y, dtype=float)
    return _mixture_loglik_rows(yy, wbar, draws.means.mean(axis=0), s2bar)


def sample_atoms_prior(prior: DpmPrior, size: int, rng):
    """(mu, sigma2) draws from the base measure, used for empty components."""
    gen = _gen(rng)
    mu = prior.m0 + math.sqrt(prior.S0) * gen.standard_normal(size)
    prec = gamma_shape_rate(prior.a, prior.b, gen, size=size)
    return mu, 1.0 / np.asarray(prec, dtype=float)


def _check_state(sigma2):
    if not np.all(np.isfinite(sigma2)) or np.any(sigma2 <= 0):
        raise NumericalCollapseError("a component variance left the feasible range")


def _update_sticks(counts, alpha, gen):
    L = counts.size
    if L == 1:
        return np.ones(1)
    tail = counts.sum() - np.cumsum(counts)
    v = gen.beta(1.0 + counts[: L - 1], alpha + tail[: L - 1])
    v = np.clip(v, 1e-12, 1.0 - 1e-12)
    return np.concatenate([v, [1.0]])


def _update_alpha(v, prior_a, prior_b, gen):
    L = v.size
    if L == 1:
        return float(gamma_shape_rate(prior_a, prior_b, gen))
    rate = prior_b - np.sum(np.log1p(-v[: L - 1]))
    if not rate > 0:
        raise NumericalCollapseError("concentration update produced a nonpositive rate")
    return float(gamma_shape_rate(prior_a + L - 1, rate, gen))


def fit_dpm(y, prior: DpmPrior | None = None, mcmc: McmcControl | None = None,
            rng=None) -> DpmDraws:
    """Blocked Gibbs for the truncated stick-breaking normal mixture.

    Sweep order: allocations, sticks, atoms (mu given sigma2, then sigma2
    given the new mu), concentration. Empty components are refreshed from
    the base measure. Draws are saved every nskip sweeps after nburn.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise TooFewPointsError("need at least two observations")
    if not np.all(np.isfinite(y)):
        raise TooFewPointsError("observations must be finite")
    prior = (prior or DpmPrior()).resolved(y)
    mcmc = mcmc or McmcControl()
    gen = _gen(rng)
    n, L = y.size, prior.L

    alpha = prior.a_alpha / prior.b_alpha
    mu, sigma2 = sample_atoms_prior(prior, L, gen)
    v = _update_sticks(np.zeros(L, dtype=int), alpha, gen)
    w = stick_breaking(v)

    S = mcmc.nsave
    out_w = np.empty((S, L))
    out_mu = np.empty((S, L))
    out_s2 = np.empty((S, L))
    out_alpha = np.empty(S)
    out_ll = np.empty((S, n))

    total = mcmc.nburn + mcmc.nsave * mcmc.nskip
    saved = 0
    for sweep in range(total):
        # (i) allocations
        logw = np.log(np.maximum(w, 1e-300))
        lp = (
            logw[None, :]
            - 0.5 * (_LOG_2PI + np.log(sigma2))[None, :]
            - 0.5 * (y[:, None] - mu[None, :]) ** 2 / sigma2[None, :]
        )
        lp -= lp.max(axis=1, keepdims=True)
        z = categorical_rows(np.exp(lp), gen)
        counts = np.bincount(z, minlength=L)

        # (ii) sticks and weights
        v = _update_sticks(counts, alpha, gen)
        w = stick_breaking(v)

        # (iii) atoms
        sum_y = np.bincount(z, weights=y, minlength=L)
        post_prec = 1.0 / prior.S0 + counts / sigma2
        post_mean = (prior.m0 / prior.S0 + sum_y / sigma2) / post_prec
        mu = post_mean + gen.standard_normal(L) / np.sqrt(post_prec)
        ss = np.bincount(z, weights=(y - mu[z]) ** 2, minlength=L)
        shape = prior.a + 0.5 * counts
        rate = prior.b + 0.5 * ss
        sigma2 = 1.0 / np.asarray(gamma_shape_rate(shape, rate, gen), dtype=float)
        empty = counts == 0
        if np.any(empty):
            mu_e, s2_e = sample_atoms_prior(prior, int(empty.sum()), gen)
            mu[empty] = mu_e
            sigma2[empty] = s2_e
        _check_state(sigma2)

        # (iv) concentration
        alpha = _update_alpha(v, prior.a_alpha, prior.b_alpha, gen)

        keep = sweep >= mcmc.nburn and (sweep - mcmc.nburn) % mcmc.nskip == mcmc.nskip - 1
        if keep:
            out_w[saved] = w
            out_mu[saved] = mu
            out_s2[saved] = sigma2
            out_alpha[saved] = alpha
            out_ll[saved] = _mixture_loglik_rows(y, w, mu, sigma2)
            saved += 1

    return DpmDraws(
        weights=out_w, means=out_mu, sigma2=out_s2, alpha=out_alpha,
        loglik=out_ll, y=y.copy(), prior=prior, mcmc=mcmc,
    )


def fit_ddp(y, Z, prior: DdpPrior | None = None, mcmc: McmcControl | None = None,
            rng=None) -> DdpDraws:
    """Blocked Gibbs for the shared-weights regression mixture.

    Component means are z'beta_l; the weights do not depend on covariates.
    beta_l and sigma2_l get conjugate updates; the base-measure mean m and
    covariance S get normal and Wishart updates.
    """
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != y.size:
        raise DimMismatchError("design matrix rows must match the response length")
    if y.size < 2:
        raise TooFewPointsError("need at least two observations")
    n, q = Z.shape
    prior = (prior or DdpPrior()).resolved(y, q)
    mcmc = mcmc or McmcControl()
    gen = _gen(rng)
    L = prior.L

    m0 = np.asarray(prior.m0, dtype=float)
    S0 = np.asarray(prior.S0, dtype=float)
    S0_inv = scipy.linalg.inv(S0)
    nu, Psi = float(prior.nu), np.asarray(prior.Psi, dtype=float)
    nuPsi = nu * Psi

    alpha = prior.a_alpha / prior.b_alpha
    m = m0.copy()
    S_inv = scipy.linalg.inv(Psi)  # E[S^-1] under the Wishart prior
    S_chol = scipy.linalg.cholesky(scipy.linalg.inv(S_inv), lower=True)
    beta = m[None, :] + (S_chol @ gen.standard_normal((q, L))).T
    sigma2 = 1.0 / np.asarray(
        gamma_shape_rate(prior.a, prior.b, gen, size=L), dtype=float
    )
    v = _update_sticks(np.zeros(L, dtype=int), alpha, gen)
    w = stick_breaking(v)

    S = mcmc.nsave
    out_w = np.empty((S, L))
    out_beta = np.empty((S, L, q))
    out_s2 = np.empty((S, L))
    out_alpha = np.empty(S)
    out_ll = np.empty((S, n))

    total = mcmc.nburn + mcmc.nsave * mcmc.nskip
    saved = 0
    for sweep in range(total):
        means = Z @ beta.T  # (n, L)
        logw = np.log(np.maximum(w, 1e-300))
        lp = (
            logw[None, :]
            - 0.5 * (_LOG_2PI + np.log(sigma2))[None, :]
            - 0.5 * (y[:, None] - means) ** 2 / sigma2[None, :]
        )
        lp -= lp.max(axis=1, keepdims=True)
        z = categorical_rows(np.exp(lp), gen)
        counts = np.bincount(z, minlength=L)

        v = _update_sticks(counts, alpha, gen)
        w = stick_breaking(v)

        prior_part = S_inv @ m
        for l in range(L):
            rows = z == l
            if counts[l]:
                Zl = Z[rows]
                yl = y[rows]
                prec = S_inv + (Zl.T @ Zl) / sigma2[l]
                rhs = prior_part + (Zl.T @ yl) / sigma2[l]
            else:
                prec = S_inv
                rhs = prior_part
            try:
                chol = scipy.linalg.cholesky(prec, lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise NumericalCollapseError("component precision lost definiteness") from exc
            mean_l = scipy.linalg.cho_solve((chol, True), rhs)
            beta[l] = mean_l + scipy.linalg.solve_triangular(
                chol.T, gen.standard_normal(q), lower=False
            )
            if counts[l]:
                resid = y[rows] - Z[rows] @ beta[l]
                rate = prior.b + 0.5 * float(resid @ resid)
            else:
                rate = prior.b
            sigma2[l] = 1.0 / float(gamma_shape_rate(prior.a + 0.5 * counts[l], rate, gen))
        _check_state(sigma2)

        # base-measure mean
        prec_m = S0_inv + L * S_inv
        rhs_m = S0_inv @ m0 + S_inv @ beta.sum(axis=0)
        chol_m = scipy.linalg.cholesky(prec_m, lower=True)
        m = scipy.linalg.cho_solve((chol_m, True), rhs_m) + scipy.linalg.solve_triangular(
            chol_m.T, gen.standard_normal(q), lower=False
        )

        # base-measure covariance (precision is Wishart-conjugate)
        dev = beta - m[None, :]
        scatter = dev.T @ dev
        scale = scipy.linalg.inv(nuPsi + scatter)
        scale = 0.5 * (scale + scale.T)
        S_inv = wishart(nu + L, scale, gen)

        alpha = _update_alpha(v, prior.a_alpha, prior.b_alpha, gen)

        keep = sweep >= mcmc.nburn and (sweep - mcmc.nburn) % mcmc.nskip == mcmc.nskip - 1
        if keep:
            out_w[saved] = w
            out_beta[saved] = beta
            out_s2[saved] = sigma2
            out_alpha[saved] = alpha
            mm = Z @ beta.T
            lp = (
                np.log(np.maximum(w, 1e-300))[None, :]
                - 0.5 * (_LOG_2PI + np.log(sigma2))[None, :]
                - 0.5 * (y[:, None] - mm) ** 2 / sigma2[None, :]
            )
            out_ll[saved] = logsumexp(lp, axis=1)
            saved += 1

    return DdpDraws(
        weights=out_w, beta=out_beta, sigma2=out_s2, alpha=out_alpha,
        loglik=out_ll, y=y.copy(), Z=Z.copy(), prior=prior, mcmc=mcmc,
    )


def mixture_quantile(weights, means, sigma2, q, max_iter: int = 200) -> np.ndarray:
    """Per-draw quantiles of normal mixtures by vectorised bisection.

    weights/means/sigma2 are (S, L); q is (m,) shared across draws or
    (S, m). Returns (S, m). Brackets span all components +-10 sd, so any
    q strictly inside (0, 1) is straddled; q is clipped to [1e-12, 1-1e-12].
    """
    w, mu, s2 = _as_sl(weights), _as_sl(means), _as_sl(sigma2)
    sd = np.sqrt(s2)
    S = w.shape[0]
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = np.broadcast_to(q, (S, q.size))
    q = np.clip(q, 1e-12, 1.0 - 1e-12)
    if w.shape[1] == 1:
        return mu[:, :1] + sd[:, :1] * ndtri(q)
    m = q.shape[1]
    out = np.empty((S, m))
    chunk = max(1, int(4_000_000 / max(1, m * w.shape[1])))
    for start in range(0, S, chunk):
        stop = min(S, start + chunk)
        wc, muc, sdc = w[start:stop], mu[start:stop], sd[start:stop]
        qc = q[start:stop]
        lo = np.broadcast_to((muc - 10.0 * sdc).min(axis=1)[:, None], qc.shape).copy()
        hi = np.broadcast_to((muc + 10.0 * sdc).max(axis=1)[:, None], qc.shape).copy()
        width_floor = 1e-10 * max(1.0, float(np.max(hi - lo)))
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            f = np.einsum(
                "sml,sl->sm",
                ndtr((mid[:, :, None] - muc[:, None, :]) / sdc[:, None, :]),
                wc,
            )
            go_right = f < qc
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
            if np.all((np.abs(f - qc) <= 1e-8) | (hi - lo <= width_floor)):
                break
        out[start:stop] = 0.5 * (lo + hi)
    return out
