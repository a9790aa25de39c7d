import numpy as np
import pytest

from rocinfer.sample import Column, DiagnosticSample


def binormal_sample(n_h=200, n_d=200, shift=1.0, seed=0, scale=1.0):
    """Two-group normal marker with a mean shift; no covariates."""
    g = np.random.default_rng(seed)
    y = np.concatenate([g.normal(0, scale, n_h), g.normal(shift, scale, n_d)])
    lab = np.array([0] * n_h + [1] * n_d)
    return DiagnosticSample(marker=y, disease=lab, nondiseased_tag=0)


def covariate_sample(n_h=300, n_d=300, slope=1.0, shift=1.5, seed=0):
    """Marker = slope*x + noise, diseased shifted up; x ~ U(0,1) shared."""
    g = np.random.default_rng(seed)
    x = g.uniform(0.0, 1.0, n_h + n_d)
    eps = g.normal(0.0, 1.0, n_h + n_d)
    y = slope * x + eps
    y[n_h:] += shift
    lab = np.array([0] * n_h + [1] * n_d)
    return DiagnosticSample(
        marker=y, disease=lab, nondiseased_tag=0,
        covariates={"x": Column(x)},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
