import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fairdyn.dist import FeaturePair, GaussianPair, make_pair
from fairdyn.errors import InvalidDistribution

from oracles import mp_ncdf

finite = st.floats(-50, 50, allow_nan=False)
pairs = st.builds(
    lambda m0, gap, sigma: GaussianPair(m0, m0 + gap, sigma),
    st.floats(-3, 3),
    st.floats(0.1, 4),
    st.floats(0.2, 3),
)


class GenericGaussian(FeaturePair):
    """Gaussian densities routed through the generic (numerical) ratio methods."""

    family = "generic-test"

    def __init__(self, inner):
        self.inner = inner

    def pdf(self, y, x):
        return self.inner.pdf(y, x)

    def cdf(self, y, x):
        return self.inner.cdf(y, x)


@pytest.mark.parametrize(
    "y, x, expected",
    [(1, 1.0, 1 / math.sqrt(2 * math.pi)), (0, -1.0, 1 / math.sqrt(2 * math.pi)),
     (1, 0.0, math.exp(-0.5) / math.sqrt(2 * math.pi))],
)
def test_pdf_examples(gauss, y, x, expected):
    assert gauss.pdf(y, x) == pytest.approx(expected, rel=1e-12)


def test_cdf_examples(gauss):
    assert gauss.cdf(1, 1.0) == 0.5
    assert gauss.cdf(0, math.inf) == 1.0
    assert gauss.cdf(1, -math.inf) == 0.0
    assert gauss.cdf(1, 0.0) == pytest.approx(mp_ncdf(-1), rel=1e-12)
    assert gauss.cdf(1, 0.0) == pytest.approx(0.1586553, abs=1e-7)


def test_cdf_scalar_and_array_paths_agree(gauss):
    xs = np.linspace(-9, 9, 181)
    arr = gauss.cdf(0, xs)
    scal = np.array([gauss.cdf(0, float(x)) for x in xs])
    np.testing.assert_allclose(scal, arr, rtol=5e-14, atol=1e-300)


def test_likelihood_ratio_examples(gauss):
    assert gauss.likelihood_ratio(0.0) == 1.0
    assert gauss.likelihood_ratio(0.5) == pytest.approx(math.e, rel=1e-14)
    assert gauss.likelihood_ratio(-0.5) == pytest.approx(1 / math.e, rel=1e-14)


def test_inverse_likelihood_ratio_examples(gauss):
    assert gauss.inverse_likelihood_ratio(1.0) == 0.0
    assert gauss.inverse_likelihood_ratio(0.8) == pytest.approx(0.5 * math.log(0.8), abs=1e-15)
    assert gauss.inverse_likelihood_ratio(0.8) == pytest.approx(-0.1115718, abs=1e-7)
    # closed form 0.5 ln(10.8)
    assert gauss.inverse_likelihood_ratio(10.8) == pytest.approx(0.5 * math.log(10.8), abs=1e-15)


def test_inverse_likelihood_ratio_extremes(gauss):
    assert gauss.inverse_likelihood_ratio(0.0) == -math.inf
    assert gauss.inverse_likelihood_ratio(math.inf) == math.inf
    with pytest.raises(ValueError):
        gauss.inverse_likelihood_ratio(-1.0)


def test_validate_mlr_examples(gauss):
    assert gauss.validate_mlr([-3, -1, 0, 1, 3])
    assert not GaussianPair(1.0, -1.0, 1.0).validate_mlr([-1, 0, 1])
    with pytest.raises(ValueError):
        gauss.validate_mlr([0.0])


def test_swapped_means_rejected_by_factory():
    with pytest.raises(InvalidDistribution):
        make_pair("gaussian", mean0=1.0, mean1=-1.0, sigma=1.0)


@pytest.mark.parametrize("kwargs", [{"sigma": 0.0}, {"sigma": -1.0}, {"mean0": math.nan}])
def test_invalid_parameters(kwargs):
    with pytest.raises(InvalidDistribution):
        GaussianPair(**kwargs)


def test_unknown_family():
    with pytest.raises(InvalidDistribution, match="unknown distribution family"):
        make_pair("cauchy")


@given(pairs, finite, st.sampled_from([0, 1]))
def test_density_positive(d, x, y):
    # far tails underflow to 0 in double precision; positivity holds where representable
    if abs(x - d._mean(y)) / d.sigma < 35:
        assert d.pdf(y, x) > 0


@given(pairs, st.lists(st.floats(-5, 5), min_size=2, max_size=30, unique=True))
def test_validate_mlr_on_random_grids(d, pts):
    grid = np.sort(np.array(pts))
    if np.any(np.diff(grid) <= 1e-9):
        return
    assert d.validate_mlr(grid)


@given(pairs)
def test_ratio_round_trip(d):
    for r in np.logspace(-12, 12, 49):
        x = d.inverse_likelihood_ratio(r)
        assert d.likelihood_ratio(x) == pytest.approx(r, rel=1e-9)


@given(pairs, st.floats(-6, 6), st.floats(-6, 6), st.sampled_from([0, 1]))
def test_cdf_matches_integrated_pdf(d, a, b, y):
    a, b = sorted((a * d.sigma, b * d.sigma))
    area, _ = integrate.quad(lambda x: d.pdf(y, x), a, b, epsabs=1e-12, epsrel=1e-12)
    assert d.cdf(y, b) - d.cdf(y, a) == pytest.approx(area, abs=1e-7)


def test_generic_inversion_matches_closed_form(gauss):
    g = GenericGaussian(gauss)
    for r in (1e-6, 0.05, 0.8, 1.0, 3.0, 10.8, 1e5):
        assert g.inverse_likelihood_ratio(r) == pytest.approx(gauss.inverse_likelihood_ratio(r), abs=1e-9)
    assert g.inverse_likelihood_ratio(0.0) == -math.inf
    assert g.inverse_likelihood_ratio(math.inf) == math.inf


def test_generic_derivative_matches_closed_form(gauss):
    g = GenericGaussian(gauss)
    for x in (-1.0, 0.0, 0.7):
        assert g.likelihood_ratio_derivative(x) == pytest.approx(gauss.likelihood_ratio_derivative(x), rel=1e-6)
