import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from rocinfer.diagnostics import effective_sample_size
from rocinfer.errors import ConfigError, DimMismatchError
from rocinfer.mixtures import (
    DdpPrior,
    DpmDraws,
    DpmPrior,
    McmcControl,
    fit_ddp,
    fit_dpm,
    loglik_at_posterior_mean,
    mixture_cdf,
    mixture_mean_variance,
    mixture_pdf,
    mixture_quantile,
    occupied_components_prior,
    sample_atoms_prior,
)
from rocinfer.streams import RngStream


def test_dpm_prior_resolves_from_data():
    y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    p = DpmPrior().resolved(y)
    assert p.m0 == pytest.approx(3.0)
    assert p.S0 == pytest.approx(25.0)  # 10 * var(ddof=1)
    assert p.b == pytest.approx(5.0)
    assert p.a == 2.0 and p.L == 10
    # explicit fields survive resolution
    q = DpmPrior(m0=0.0, S0=1.0, b=9.0, L=3).resolved(y)
    assert (q.m0, q.S0, q.b, q.L) == (0.0, 1.0, 9.0, 3)


def test_prior_and_control_validation():
    with pytest.raises(ConfigError):
        DpmPrior(L=0).resolved(np.arange(5.0))
    with pytest.raises(ConfigError):
        DpmPrior(S0=-1.0).resolved(np.arange(5.0))
    with pytest.raises(ConfigError):
        McmcControl(nsave=0)
    with pytest.raises(ConfigError):
        McmcControl(nskip=0)
    McmcControl(nburn=0)  # zero burn-in is allowed


def test_ddp_prior_resolves_shapes():
    y = np.arange(10.0)
    p = DdpPrior().resolved(y, q=3)
    var = np.var(y, ddof=1)
    assert p.m0.shape == (3,) and p.m0[0] == pytest.approx(y.mean())
    assert np.allclose(p.S0, 10.0 * var * np.eye(3))
    assert np.allclose(p.Psi, var * np.eye(3))
    assert p.nu == 5.0
    with pytest.raises(DimMismatchError):
        DdpPrior(m0=np.zeros(2)).resolved(y, q=3)


def test_sample_atoms_prior_moments():
    prior = DpmPrior(m0=1.0, S0=4.0, a=3.0, b=6.0)
    mu, s2 = sample_atoms_prior(prior, 20000, RngStream(11, 0))
    assert mu.mean() == pytest.approx(1.0, abs=0.05)
    assert mu.var() == pytest.approx(4.0, rel=0.05)
    # sigma2 is inverse gamma: mean b/(a-1) = 3
    assert s2.mean() == pytest.approx(3.0, abs=0.12)
    assert np.all(s2 > 0)


def test_mixture_cdf_single_component_is_normal():
    val = mixture_cdf([1.0], [0.5], [4.0], np.array([0.5, 2.5]))
    assert np.allclose(val, ndtr(np.array([0.0, 1.0])))
    dens = mixture_pdf([1.0], [0.0], [1.0], np.array([0.0]))
    assert dens[0] == pytest.approx(1.0 / np.sqrt(2 * np.pi), abs=1e-12)
    assert mixture_cdf([1.0], [0.0], [1.0], 0.0) == pytest.approx(0.5)


def test_mixture_mean_variance_hand_case():
    m, v = mixture_mean_variance([0.5, 0.5], [0.0, 2.0], [1.0, 1.0])
    assert isinstance(m, float)
    assert m == pytest.approx(1.0) and v == pytest.approx(2.0)


def test_occupied_components_prior_hand_case():
    mean, var = occupied_components_prior(1.0, 10)
    assert mean == pytest.approx(np.log(11.0))
    assert var == pytest.approx(np.log(11.0) - 1.0)
    with pytest.raises(ConfigError):
        occupied_components_prior(0.0, 10)


def test_mixture_quantile_single_component_fast_path():
    q = np.array([0.1, 0.5, 0.9])
    out = mixture_quantile([[1.0]], [[2.0]], [[9.0]], q)
    assert np.allclose(out[0], 2.0 + 3.0 * ndtri(q), atol=1e-12)


def test_mixture_quantile_roundtrips_through_cdf():
    w = np.array([[0.2, 0.5, 0.3]])
    mu = np.array([[-1.0, 0.0, 3.0]])
    s2 = np.array([[0.5, 2.0, 1.0]])
    q = np.linspace(0.01, 0.99, 25)
    x = mixture_quantile(w, mu, s2, q)
    back = mixture_cdf(w, mu, s2, x[0])  # (1, 25): draw 0 at each quantile
    assert np.allclose(back[0], q, atol=1e-6)
    assert np.all(np.diff(x[0]) > 0)


def _mixture_means_per_draw(draws):
    m, _ = mixture_mean_variance(draws.weights, draws.means, draws.sigma2)
    return m


def test_dpm_single_component_interval_covers_truth():
    """Scaled-down coverage check: 20 standard-normal datasets, the
    central 95% interval for the mixture mean should cover 0 nearly
    always under a one-component fit."""
    mcmc = McmcControl(nsave=150, nburn=100)
    hits = 0
    for rep in range(20):
        y = RngStream(500 + rep, 0).generator.standard_normal(60)
        draws = fit_dpm(y, prior=DpmPrior(L=1), mcmc=mcmc, rng=RngStream(500 + rep, 1))
        m = _mixture_means_per_draw(draws)
        lo, hi = np.percentile(m, [2.5, 97.5])
        hits += int(lo <= 0.0 <= hi)
    assert hits >= 17


def test_dpm_recovers_location_and_scale():
    y = 2.0 + 0.5 * RngStream(42, 0).generator.standard_normal(200)
    draws = fit_dpm(y, prior=DpmPrior(L=1), mcmc=McmcControl(nsave=300, nburn=200),
                    rng=RngStream(42, 1))
    m = _mixture_means_per_draw(draws)
    _, v = mixture_mean_variance(draws.weights, draws.means, draws.sigma2)
    assert m.mean() == pytest.approx(2.0, abs=0.15)
    assert np.mean(v) == pytest.approx(0.25, rel=0.4)
    assert draws.weights.shape == (300, 1)
    assert np.allclose(draws.weights.sum(axis=1), 1.0)
    assert draws.loglik.shape == (300, 200)


def test_dpm_bimodal_functional_mixes():
    # Label switching is irrelevant for permutation-invariant functionals;
    # the mixture cdf at the trough should mix reasonably well.
    gen = RngStream(77, 0).generator
    y = np.concatenate([-2.0 + 0.5 * gen.standard_normal(60),
                        2.0 + 0.5 * gen.standard_normal(60)])
    draws = fit_dpm(y, prior=DpmPrior(L=10),
                    mcmc=McmcControl(nsave=400, nburn=200), rng=RngStream(77, 1))
    chain = draws.cdf(np.array([0.0]))[:, 0]
    assert chain.mean() == pytest.approx(0.5, abs=0.1)
    assert effective_sample_size(chain) > 40.0


def test_dpm_same_stream_is_deterministic():
    y = RngStream(9, 0).generator.standard_normal(50)
    kw = dict(prior=DpmPrior(L=4), mcmc=McmcControl(nsave=50, nburn=20))
    a = fit_dpm(y, rng=RngStream(9, 1), **kw)
    b = fit_dpm(y, rng=RngStream(9, 1), **kw)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.means, b.means)
    assert np.array_equal(a.sigma2, b.sigma2)
    assert np.array_equal(a.alpha, b.alpha)


def test_dpm_rejects_degenerate_input():
    with pytest.raises(Exception):
        fit_dpm(np.array([1.0]))


def test_loglik_at_posterior_mean_single_draw_identity():
    y = np.array([-0.3, 0.1, 1.2])
    prior = DpmPrior().resolved(y)
    draws = DpmDraws(
        weights=np.array([[0.6, 0.4]]),
        means=np.array([[0.0, 1.0]]),
        sigma2=np.array([[1.0, 2.0]]),
        alpha=np.array([1.0]),
        loglik=np.zeros((1, 3)),
        y=y,
        prior=prior,
        mcmc=McmcControl(nsave=1, nburn=0),
    )
    ll = loglik_at_posterior_mean(draws)
    direct = np.log(
        0.6 * np.exp(-0.5 * y ** 2) / np.sqrt(2 * np.pi)
        + 0.4 * np.exp(-0.5 * (y - 1.0) ** 2 / 2.0) / np.sqrt(4 * np.pi)
    )
    assert np.allclose(ll, direct, atol=1e-12)


def test_ddp_recovers_linear_regression():
    gen = RngStream(123, 0).generator
    x = gen.uniform(0.0, 1.0, 150)
    y = 1.0 + 2.0 * x + 0.3 * gen.standard_normal(150)
    Z = np.column_stack([np.ones_like(x), x])
    draws = fit_ddp(y, Z, prior=DdpPrior(L=5),
                    mcmc=McmcControl(nsave=250, nburn=150), rng=RngStream(123, 1))
    assert draws.beta.shape == (250, 5, 2)
    assert np.allclose(draws.weights.sum(axis=1), 1.0, atol=1e-12)
    # conditional mean at x = 0 and x = 1, permutation invariant
    at0 = np.einsum("sl,sl->s", draws.weights, draws.conditional_means([1.0, 0.0]))
    at1 = np.einsum("sl,sl->s", draws.weights, draws.conditional_means([1.0, 1.0]))
    assert at0.mean() == pytest.approx(1.0, abs=0.3)
    assert at1.mean() == pytest.approx(3.0, abs=0.3)
    assert draws.conditional_means([1.0, 0.5]).shape == (250, 5)


def test_ddp_rejects_mismatched_design():
    y = np.arange(5.0)
    with pytest.raises(DimMismatchError):
        fit_ddp(y, np.ones((4, 2)))
