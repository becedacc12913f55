import math

import numpy as np
from numpy.testing import assert_allclose
from hypothesis import assume, given, settings, strategies as st
import pytest
from scipy import integrate, stats

from branchcut.exceptions import NotAPositiveCombinationError, RouteUnavailableError
from branchcut.inversion import (
    Route,
    cdf,
    degenerate_pair_integral,
    fb_norm_from_pdf,
    finite_cut_integral,
    finite_cut_integral_derivative,
    lifted_spec,
    multiplicity_lift,
    pdf,
    pdf_central_simple,
    pdf_closed_form,
    pdf_general_contour,
    quantile,
    survivor,
    unbounded_cut_integral,
    unbounded_cut_integral_derivative,
)
from branchcut.oracles import gamma_cdf, gamma_pdf
from branchcut.qform import ChiSquareTerm, moments, normalize_spec, spec_from_lambdas


@pytest.fixture
def simple_spec():
    return normalize_spec([(0.8, 1), (1.7, 1), (3.1, 2), (4.5, 1)])


def test_exponential_density(exp1):
    result = pdf(exp1, 2.0)
    assert result.route == Route.CLOSED_FORM
    assert_allclose(result.value, math.exp(-2.0), rtol=1e-13)


def test_chi2_3_cdf(chi2_3):
    assert_allclose(cdf(chi2_3, 3.0).value, 0.6083748237289110, rtol=1e-8)
    assert_allclose(survivor(chi2_3, 3.0).value, 1 - 0.6083748237289110, rtol=1e-7)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("x", [0.4, 2.0, 7.5])
def test_gamma_family(n, x):
    theta = 0.7
    spec = normalize_spec([(theta, n)])
    assert_allclose(pdf(spec, x).value, gamma_pdf(theta, n, x), rtol=1e-8)
    assert_allclose(cdf(spec, x).value, gamma_cdf(theta, n, x), rtol=1e-8)


def test_half_order_density_routes_central_simple():
    spec = normalize_spec([(1.0, 1)])
    result = pdf(spec, 0.7)
    assert result.route == Route.CENTRAL_SIMPLE
    assert_allclose(result.value, math.exp(-0.7) / math.sqrt(math.pi * 0.7), rtol=1e-9)


def test_hypoexponential_density():
    spec = normalize_spec([(0.5, 2), (1.3, 2)])
    x = 1.5
    expected = 0.5 * 1.3 / (1.3 - 0.5) * (math.exp(-0.5 * x) - math.exp(-1.3 * x))
    assert_allclose(pdf_closed_form(spec, x).value, expected, rtol=1e-12)
    assert_allclose(pdf_general_contour(spec, x).value, expected, rtol=1e-8)


@pytest.mark.parametrize("s", [0.4, 1.2, 3.0])
def test_central_simple_matches_general_contour(simple_spec, s):
    reference = pdf_central_simple(simple_spec, s).value
    assert pdf(simple_spec, s).route == Route.CENTRAL_SIMPLE
    assert_allclose(pdf_general_contour(simple_spec, s).value, reference, rtol=1e-8)
    assert_allclose(pdf_general_contour(simple_spec, s, collapse=False).value, reference, rtol=1e-8)


def test_central_simple_parametrizations_agree(simple_spec):
    sin2 = pdf_central_simple(simple_spec, 1.1).value
    beta = pdf_central_simple(simple_spec, 1.1, parametrization="beta").value
    assert_allclose(beta, sin2, rtol=1e-9)


def test_central_simple_unavailable(noncentral_mix):
    with pytest.raises(RouteUnavailableError):
        pdf_central_simple(noncentral_mix, 1.0)
    with pytest.raises(RouteUnavailableError):
        pdf_closed_form(noncentral_mix, 1.0)


@pytest.mark.parametrize("lam, n, delta", [(0.5, 3, 2.0), (0.25, 1, 1.0), (1.0, 4, 0.5)])
def test_noncentral_against_scipy(lam, n, delta):
    spec = normalize_spec([ChiSquareTerm.from_lambda(lam, n, delta)])
    for x in (0.8, 3.0):
        assert_allclose(pdf(spec, x).value, stats.ncx2.pdf(x / lam, n, delta) / lam, rtol=1e-7)
        assert_allclose(cdf(spec, x).value, stats.ncx2.cdf(x / lam, n, delta), rtol=1e-7)


@pytest.mark.slow
def test_density_integrates_to_cdf(noncentral_mix):
    value, _ = integrate.quad(lambda s: pdf(noncentral_mix, s).value, 0.0, 1.5, epsabs=1e-11, limit=200)
    assert_allclose(value, cdf(noncentral_mix, 1.5).value, rtol=1e-7)


def test_cdf_theta0_invariance(noncentral_mix):
    reference = cdf(noncentral_mix, 1.5, theta0=1.0).value
    for theta0 in (0.25, 4.0):
        assert_allclose(cdf(noncentral_mix, 1.5, theta0=theta0).value, reference, rtol=1e-7)


def test_nonpositive_points(exp1, theta1):
    assert pdf(exp1, 0.0).value == 0.0
    assert pdf(theta1, -1.0).value == 0.0
    assert cdf(theta1, 0.0).value == 0.0


def test_negative_list_rejected():
    spec = normalize_spec([(1.0, 2)], [(2.0, 2)])
    with pytest.raises(NotAPositiveCombinationError):
        pdf(spec, 1.0)
    with pytest.raises(NotAPositiveCombinationError):
        cdf(spec, 1.0)


def test_elementary_integrals():
    others_theta, others_n = np.array([0.5, 3.0]), np.array([1.0, 2.0])
    sin2 = finite_cut_integral(1.0, 2.0, others_theta, others_n, 0.8)
    beta = finite_cut_integral(1.0, 2.0, others_theta, others_n, 0.8, parametrization="beta")
    assert_allclose(beta.value, sin2.value, rtol=1e-9)
    with pytest.raises(ValueError):
        finite_cut_integral(1.0, 2.0, others_theta, others_n, 0.8, parametrization="chebyshev")

    short = finite_cut_integral(1.5, 1.5 + 1e-7, others_theta, others_n, 0.8).value
    assert_allclose(short, degenerate_pair_integral(1.5, others_theta, others_n, 0.8), rtol=1e-6)


def test_unbounded_cut_integral_without_others():
    # 2 e^(-s a) integral of exp(-s u^2) = e^(-s a) sqrt(pi / s)
    s, start = 1.7, 2.0
    value = unbounded_cut_integral(start, [], [], s).value
    assert_allclose(value, math.exp(-s * start) * math.sqrt(math.pi / s), rtol=1e-10)


@pytest.mark.parametrize("wrt", ["left", "right", 0, 1])
def test_finite_cut_derivative(wrt):
    others_theta, others_n = np.array([0.5, 3.0]), np.array([1.0, 2.0])
    a, b, s, h = 1.0, 2.0, 0.8, 1e-5

    def value(shift):
        aa = a + shift if wrt == "left" else a
        bb = b + shift if wrt == "right" else b
        ot = others_theta.copy()
        if isinstance(wrt, int):
            ot[wrt] += shift
        return finite_cut_integral(aa, bb, ot, others_n, s, rel_tol=1e-13).value

    numeric = (value(h) - value(-h)) / (2 * h)
    analytic = finite_cut_integral_derivative(a, b, others_theta, others_n, s, wrt).value
    assert_allclose(analytic, numeric, rtol=1e-6)


@pytest.mark.parametrize("wrt", ["start", 0])
def test_unbounded_cut_derivative(wrt):
    others_theta, others_n = np.array([0.5]), np.array([1.0])
    start, s, h = 2.0, 1.3, 1e-5

    def value(shift):
        ot = others_theta + (shift if wrt == 0 else 0.0)
        return unbounded_cut_integral(start + (shift if wrt == "start" else 0.0), ot, others_n, s,
                                      rel_tol=1e-13).value

    numeric = (value(h) - value(-h)) / (2 * h)
    analytic = unbounded_cut_integral_derivative(start, others_theta, others_n, s, wrt).value
    assert_allclose(analytic, numeric, rtol=1e-6)


@pytest.mark.parametrize("term_index", [0, 1, 2])
def test_multiplicity_lift_matches_lifted_contour(term_index):
    spec = normalize_spec([(0.8, 1), (1.7, 1), (3.1, 1)])
    lift = multiplicity_lift(spec, term_index)
    lifted = lifted_spec(spec, term_index)
    assert lifted.positive[term_index].n == 3
    for s in (0.5, 1.5):
        assert_allclose(lift(s).value, pdf_general_contour(lifted, s).value, rtol=1e-7)


def test_multiplicity_lift_of_exponential_gives_gamma():
    # n = 2 -> 4 at theta = 1: density s e^(-s)
    lift = multiplicity_lift(normalize_spec([(1.0, 2)]), 0, fallback=True)
    assert_allclose(lift(1.5).value, 1.5 * math.exp(-1.5), rtol=1e-8)
    assert lift(0.0).value == 0.0


def test_multiplicity_lift_unavailable():
    spec = normalize_spec([(1.0, 3), (2.0, 1)])
    with pytest.raises(RouteUnavailableError):
        multiplicity_lift(spec, 0)
    lift = multiplicity_lift(spec, 0, fallback=True)
    assert_allclose(lift(1.0).value, pdf(lifted_spec(spec, 0), 1.0).value, rtol=1e-10)


def test_quantile(exp1):
    assert_allclose(quantile(exp1, 0.5), math.log(2), atol=1e-8)
    assert_allclose(quantile(exp1, 0.99), -math.log(0.01), atol=1e-8)
    with pytest.raises(ValueError):
        quantile(exp1, 1.5)


def test_fb_norm_from_pdf_bingham_equal_thetas():
    # theta = (2, 2, 2) on the 2-sphere: 4 pi e^(-2)
    assert_allclose(fb_norm_from_pdf([2.0, 2.0, 2.0], [0.0, 0.0, 0.0], [1, 1, 1]), 4 * math.pi * math.exp(-2),
                    rtol=1e-9)


@settings(max_examples=20, deadline=None)
@given(thetas=st.lists(st.floats(0.2, 6.0), min_size=1, max_size=6, unique=True), s=st.floats(0.2, 6.0))
def test_routes_agree_on_distinct_unit_terms(thetas, s):
    ordered = sorted(thetas)
    assume(all(b - a > 0.05 * b for a, b in zip(ordered, ordered[1:])))
    spec = normalize_spec([(theta, 1) for theta in ordered])
    reference = pdf_central_simple(spec, s).value
    assert_allclose(pdf_general_contour(spec, s).value, reference, rtol=1e-9)


def _random_positive_spec(seed):
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(int(rng.integers(1, 6))):
        delta = float(rng.uniform(0, 5)) if rng.random() < 0.5 else 0.0
        terms.append((float(rng.uniform(0.1, 1.0)), int(rng.integers(1, 5)), delta))
    return spec_from_lambdas(terms)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_density_integrates_to_one(seed):
    spec = _random_positive_spec(seed)
    mean, _ = moments(spec)

    def f(s):
        return pdf(spec, s).value

    head, _ = integrate.quad(f, 0.0, mean, epsabs=1e-10, limit=200)
    tail, _ = integrate.quad(f, mean, math.inf, epsabs=1e-10, limit=200)
    assert_allclose(head + tail, 1.0, atol=1e-6)


@pytest.mark.parametrize("s", [1e-8, 1e-5, 1e-3, 2.14e-3])
def test_density_near_zero_is_small_and_nonnegative(s):
    # total dof 9: the density vanishes like s^3.5
    spec = spec_from_lambdas([(0.468279, 2, 0.0), (0.380648, 4, 0.0), (0.229744, 3, 0.0)])
    result = pdf(spec, s)
    assert result.route == Route.GENERAL
    assert 0.0 <= result.value <= 1e-6
    assert math.isfinite(result.abs_err)
