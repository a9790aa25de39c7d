"""Seedable random streams and the samplers the Bayesian methods need.

A stream is identified by (seed, stream_id). Streams with distinct ids are
statistically independent and their draw sequences do not depend on how
many workers execute them, which is what makes parallel bootstrap and MCMC
runs reproducible: replicate k always uses stream_id k regardless of
scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import BadAlphaError, BadStickError, DimMismatchError, NotSPDError


class RngStream:
    """A reproducible random stream keyed by (seed, stream_id).

    Identical (seed, stream_id) pairs give identical draw sequences on any
    platform; distinct stream_ids give independent streams (PCG64 seeded
    through SeedSequence spawn keys).
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def stream(self, stream_id: int) -> "RngStream":
        """A sibling stream under the same seed."""
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return "RngStream(seed=%d, stream_id=%d)" % (self.seed, self.stream_id)


def _gen(rng) -> np.random.Generator:
    return rng.generator if isinstance(rng, RngStream) else rng


def parallel_map(fn, items, workers: int = 1) -> list:
    """Map fn over items, optionally on a thread pool.

    Results come back in item order, so reductions are deterministic no
    matter how many workers run. fn must not share mutable state between
    items beyond its own stream.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items))


def dirichlet(alpha, rng, size: int | None = None) -> np.ndarray:
    """Dirichlet draws via normalised gammas.

    Returns one probability vector, or a (size, k) matrix when size is
    given. Components are positive and each row sums to one.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0 or np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
        raise BadAlphaError("dirichlet needs a vector of positive finite alphas")
    g = _gen(rng)
    shape = (alpha.size,) if size is None else (int(size), alpha.size)
    draws = g.gamma(np.broadcast_to(alpha, shape), 1.0)
    total = draws.sum(axis=-1, keepdims=True)
    # all-zero rows cannot occur for alpha >= machine-scale; guard anyway
    bad = total[..., 0] == 0.0
    if np.any(bad):
        draws[bad] = 1.0
        total = draws.sum(axis=-1, keepdims=True)
    return draws / total


def stick_breaking(v) -> np.ndarray:
    """Weights from stick-breaking proportions.

    v has the last entry forced to 1 so the weights telescope to sum one.
    Accepts a vector or a matrix of row-wise proportion vectors.
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0 or np.any(v < 0) or np.any(v > 1):
        raise BadStickError("stick proportions must lie in [0,1]")
    if not np.allclose(v[..., -1], 1.0, rtol=0, atol=1e-12):
        raise BadStickError("last stick proportion must equal 1")
    ones = np.ones(v.shape[:-1] + (1,))
    surv = np.cumprod(1.0 - v[..., :-1], axis=-1)
    return v * np.concatenate([ones, surv], axis=-1)


def wishart(nu: float, scale: np.ndarray, rng) -> np.ndarray:
    """Wishart draw by Bartlett decomposition; E[draw] = nu * scale."""
    scale = np.asarray(scale, dtype=float)
    if scale.ndim != 2 or scale.shape[0] != scale.shape[1]:
        raise DimMismatchError("scale must be a square matrix")
    d = scale.shape[0]
    if nu <= d - 1:
        raise NotSPDError("wishart needs nu > dim - 1")
    if not np.allclose(scale, scale.T, rtol=0, atol=1e-10):
        raise NotSPDError("scale must be symmetric")
    try:
        lower = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError:
        raise NotSPDError("scale must be positive definite") from None
    g = _gen(rng)
    bart = np.zeros((d, d))
    # diagonal: sqrt of chi-square with decreasing degrees of freedom
    dof = nu - np.arange(d)
    bart[np.diag_indices(d)] = np.sqrt(g.gamma(dof / 2.0, 2.0))
    if d > 1:
        idx = np.tril_indices(d, -1)
        bart[idx] = g.standard_normal(len(idx[0]))
    root = lower @ bart
    return root @ root.T


def gamma_shape_rate(shape, rate, rng, size=None) -> np.ndarray | float:
    """Gamma draws in the shape-rate parameterisation (mean shape/rate)."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise BadAlphaError("gamma needs positive shape and rate")
    return _gen(rng).gamma(shape, 1.0 / rate, size=size)


def beta(a, b, rng, size=None) -> np.ndarray | float:
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise BadAlphaError("beta needs positive parameters")
    return _gen(rng).beta(a, b, size=size)


def truncated_normal(mean, sd, low, high, rng, size=None) -> np.ndarray | float:
    """Truncated normal by inverse-CDF; low/high may be +-inf."""
    if np.any(np.asarray(sd) <= 0):
        raise BadAlphaError("truncated_normal needs sd > 0")
    if np.any(np.asarray(low) >= np.asarray(high)):
        raise BadAlphaError("truncated_normal needs low < high")
    g = _gen(rng)
    a = ndtr((np.asarray(low, dtype=float) - mean) / sd)
    b = ndtr((np.asarray(high, dtype=float) - mean) / sd)
    u = g.uniform(a, b, size=size)
    # keep strictly inside (0,1) so ndtri stays finite
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    return mean + sd * ndtri(u)


def categorical(weights, rng, size=None) -> np.ndarray | int:
    """Indices sampled proportionally to nonnegative weights."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or w.sum() <= 0:
        raise BadAlphaError("categorical needs nonnegative weights with positive sum")
    cum = np.cumsum(w)
    cum /= cum[-1]
    u = _gen(rng).random(size=size)
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, w.size - 1)


def categorical_rows(prob_rows: np.ndarray, rng) -> np.ndarray:
    """One categorical index per row of a nonnegative-weight matrix."""
    cum = np.cumsum(prob_rows, axis=1)
    u = _gen(rng).random(prob_rows.shape[0])
    idx = (cum < (u * cum[:, -1])[:, None]).sum(axis=1)
    return np.minimum(idx, prob_rows.shape[1] - 1)
