import json
import math

from hypothesis import given, settings, strategies as st
import numpy as np
from numpy.testing import assert_allclose
import pytest

from branchcut.exceptions import (
    EmptyPositiveListError,
    NegativeNoncentralityError,
    NonIntegerDofError,
    NonPositiveThetaError,
    NotAPositiveCombinationError,
    ShiftTooLargeError,
    SpecParseError,
    Theta0OutOfRangeError,
)
from branchcut.qform import (
    ChiSquareTerm,
    QuadraticFormSpec,
    branch_layout,
    dump_spec,
    load_spec,
    moments,
    normalize_spec,
    rescale_shift,
    spec_from_dict,
    spec_from_lambdas,
    swap_roles,
    tilt_for_cdf,
)


@pytest.mark.parametrize("theta", [0.0, -1.0, math.inf, math.nan])
def test_term_rejects_bad_theta(theta):
    with pytest.raises(NonPositiveThetaError):
        ChiSquareTerm(theta=theta, n=1)


@pytest.mark.parametrize("n", [0, -2, 1.5, True, "3"])
def test_term_rejects_bad_dof(n):
    with pytest.raises(NonIntegerDofError):
        ChiSquareTerm(theta=1.0, n=n)


def test_term_accepts_integral_float_dof():
    assert ChiSquareTerm(theta=1.0, n=2.0).n == 2


def test_term_rejects_negative_noncentrality():
    with pytest.raises(NegativeNoncentralityError):
        ChiSquareTerm(theta=1.0, n=1, gamma2=-0.1)


def test_from_lambda_parametrization():
    term = ChiSquareTerm.from_lambda(0.5, 2, 1.0)
    assert term.theta == 1.0
    assert term.gamma2 == 2.0
    assert term.lam == 0.5
    assert term.delta == 1.0
    assert term.noncentral


def test_normalize_merges_equal_thetas():
    spec = normalize_spec([(1.0, 1, 0.5), (0.5, 2, 0.0), (1.0, 1, 0.25)])
    assert_allclose(spec.thetas, [0.5, 1.0])
    assert list(spec.ns) == [2, 2]
    assert_allclose(spec.gamma2s, [0.0, 0.75])


def test_normalize_merges_within_relative_tolerance():
    spec = normalize_spec([(1.0, 1), (1.0 + 1e-14, 1)])
    assert spec.p == 1
    assert spec.positive[0].n == 2


def test_normalize_requires_positive_terms():
    with pytest.raises(EmptyPositiveListError):
        normalize_spec([], [(1.0, 1)])


@given(st.lists(st.tuples(st.floats(0.01, 100.0), st.integers(1, 6), st.floats(0.0, 10.0)),
                min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_normalize_sorted_and_dof_preserving(terms):
    spec = normalize_spec(terms)
    assert np.all(np.diff(spec.thetas) > 0)
    assert spec.total_dof == sum(n for _, n, _ in terms)
    assert_allclose(spec.gamma2s.sum(), sum(g for _, _, g in terms), rtol=1e-12, atol=1e-12)


def test_moments():
    assert moments(normalize_spec([(1.0, 2)])) == (1.0, 1.0)
    mean, variance = moments(normalize_spec([(0.5, 3)]))
    assert_allclose((mean, variance), (3.0, 6.0))
    # lambda chi2_n(delta): mean lambda (n + delta), variance 2 lambda^2 (n + 2 delta)
    mean, variance = moments(spec_from_lambdas([(0.35, 6, 6.0)], [(0.15, 1, 2.0)]))
    assert_allclose(mean, 0.35 * 12 - 0.15 * 3)
    assert_allclose(variance, 2 * 0.35 ** 2 * 18 + 2 * 0.15 ** 2 * 5)


def test_swap_roles():
    spec = normalize_spec([(1.0, 2)], [(3.0, 1)])
    swapped = swap_roles(spec)
    assert swapped.positive == spec.negative
    assert swapped.negative == spec.positive


def test_layout_pairs_odd_thetas():
    layout = branch_layout(normalize_spec([(1.0, 1), (2.0, 1), (3.0, 1)]))
    assert len(layout.finite_cuts) == 1
    cut = layout.finite_cuts[0]
    assert (cut.left, cut.right) == (1.0, 2.0)
    assert cut.collapsible
    assert layout.unbounded_cut.start == 3.0
    assert layout.unbounded_cut.collapsible
    assert layout.n_cuts == 2


def test_layout_even_poles():
    layout = branch_layout(normalize_spec([(1.0, 1), (1.5, 2), (2.0, 1), (2.5, 4)]))
    assert [p.location for p in layout.interior_poles] == [1.5]
    assert [p.location for p in layout.isolated_even_poles] == [2.5]
    assert layout.isolated_even_poles[0].order == 2
    assert not layout.finite_cuts[0].collapsible
    assert layout.unbounded_cut is None


def test_layout_unbounded_cut_claims_larger_even_poles():
    layout = branch_layout(normalize_spec([(1.0, 2), (2.0, 3), (3.0, 2, 1.0)]))
    assert layout.unbounded_cut.start == 2.0
    assert layout.unbounded_cut.endpoint_dof == 3
    assert not layout.unbounded_cut.collapsible
    assert [p.location for p in layout.unbounded_cut.interior_poles] == [3.0]
    assert layout.unbounded_cut.interior_poles[0].noncentral
    assert [p.location for p in layout.isolated_even_poles] == [1.0]


def test_noncentral_endpoint_blocks_collapse():
    layout = branch_layout(normalize_spec([(1.0, 1, 0.3), (2.0, 1)]))
    assert layout.finite_cuts[0].endpoints_noncentral == (True, False)
    assert not layout.finite_cuts[0].collapsible


def test_rescale_shift_geometry():
    spec = normalize_spec([(1.0, 1, 0.5), (2.0, 2)])
    shifted, prefactor = rescale_shift(spec, 2.0, 0.5)
    assert_allclose(shifted.thetas, [1.0, 3.0])
    assert_allclose(shifted.gamma2s, [1.0, 0.0])
    assert prefactor > 0


def test_rescale_shift_errors():
    spec = normalize_spec([(1.0, 1)])
    with pytest.raises(ShiftTooLargeError):
        rescale_shift(spec, 1.0, 1.0)
    with pytest.raises(ValueError):
        rescale_shift(spec, 0.0, 0.0)
    with pytest.raises(NotAPositiveCombinationError):
        rescale_shift(normalize_spec([(1.0, 1)], [(1.0, 1)]), 1.0, 0.0)


def test_tilt_for_cdf_exponential():
    tilted, log_const = tilt_for_cdf(normalize_spec([(1.0, 2)]), 1.0)
    assert_allclose(tilted.thetas, [1.0, 2.0])
    assert list(tilted.ns) == [2, 2]
    assert_allclose(log_const, -math.log(2))


def test_tilt_shifts_negative_list():
    spec = normalize_spec([(1.0, 2)], [(2.0, 1, 0.4)])
    tilted, _ = tilt_for_cdf(spec, 0.5)
    assert_allclose(tilted.thetas_prime, [1.5])
    assert_allclose([t.gamma2 for t in tilted.negative], [0.4])
    with pytest.raises(Theta0OutOfRangeError):
        tilt_for_cdf(spec, 2.0)
    with pytest.raises(Theta0OutOfRangeError):
        tilt_for_cdf(spec, 0.0)


def test_spec_from_dict_lambda_delta():
    spec = spec_from_dict({"positive": [{"lambda": 0.5, "n": 2, "delta": 1.0}],
                           "negative": [{"theta": 2.0, "n": 1, "gamma2": 0.5}]})
    assert spec.positive[0] == ChiSquareTerm(theta=1.0, n=2, gamma2=2.0)
    assert spec.negative[0] == ChiSquareTerm(theta=2.0, n=1, gamma2=0.5)


@pytest.mark.parametrize("document", [
    {"positive": [{"theta": 1.0, "lambda": 0.5, "n": 1}]},
    {"positive": [{"theta": 1.0, "gamma2": 1.0, "delta": 0.5, "n": 1}]},
    {"positive": [{"theta": 1.0, "n": 1, "weight": 3}]},
    {"positive": [{"theta": 1.0}]},
    {"positive": [{"theta": "abc", "n": 1}]},
    {"negative": [{"theta": 1.0, "n": 1}]},
    [1, 2, 3],
])
def test_spec_from_dict_rejects(document):
    with pytest.raises(SpecParseError):
        spec_from_dict(document)


def test_spec_from_dict_validation_errors_propagate():
    with pytest.raises(NonIntegerDofError):
        spec_from_dict({"positive": [{"theta": 1.0, "n": 1.5}]})


def test_load_spec_bad_json(tmp_path):
    fpath = tmp_path / "bad.json"
    fpath.write_text("{not json")
    with pytest.raises(SpecParseError):
        load_spec(fpath)


def test_load_spec_missing_file(tmp_path):
    with pytest.raises(SpecParseError):
        load_spec(tmp_path / "missing.json")


def test_dump_and_load(tmp_path):
    spec = normalize_spec([(0.7, 3, 1.5), (2.0, 1)], [(1.1, 2)])
    fpath = tmp_path / "spec.json"
    dump_spec(spec, fpath, provenance="unit test")
    assert json.loads(fpath.read_text())["provenance"] == "unit test"
    assert load_spec(fpath) == spec


def test_table1_fixture(fixtures_dpath):
    spec = load_spec(fixtures_dpath / "table1_row2.json")
    assert_allclose(spec.thetas, [1 / 0.7, 1 / 0.3])
    assert list(spec.ns) == [6, 2]
    assert_allclose([t.delta for t in spec.positive], [6.0, 2.0])
    assert_allclose([t.delta for t in spec.negative], [6.0, 2.0])


def test_repr_mentions_both_lists():
    spec = normalize_spec([(1.0, 2)], [(2.0, 1)])
    assert isinstance(spec, QuadraticFormSpec)
    assert " - [" in repr(spec)


term_lists = st.lists(st.tuples(st.floats(0.05, 20.0), st.integers(1, 6), st.floats(0.0, 5.0)),
                      min_size=1, max_size=6)


@given(term_lists, st.lists(st.tuples(st.floats(0.05, 20.0), st.integers(1, 4)), max_size=3))
@settings(max_examples=100, deadline=None)
def test_normalize_is_idempotent(positive, negative):
    spec = normalize_spec(positive, negative)
    assert normalize_spec(spec.positive, spec.negative) == spec


@given(st.lists(st.floats(0.05, 20.0), min_size=1, max_size=9))
@settings(max_examples=100, deadline=None)
def test_cut_count_for_unit_multiplicities(thetas):
    spec = normalize_spec([(theta, 1) for theta in thetas])
    n_odd = int(np.sum(spec.ns % 2 == 1))
    layout = branch_layout(spec)
    assert layout.n_cuts == (n_odd + 1) // 2
    assert (layout.unbounded_cut is not None) == (n_odd % 2 == 1)


@given(st.lists(st.tuples(st.floats(0.05, 20.0), st.integers(1, 6), st.floats(0.0, 2.0)), min_size=1, max_size=6),
       st.floats(0.2, 5.0), st.floats(-1.0, 0.9))
@settings(max_examples=100, deadline=None)
def test_rescale_shift_round_trip(terms, s, fraction):
    spec = normalize_spec(terms)
    c = fraction * float(spec.thetas.min())
    shifted, forward = rescale_shift(spec, s, c)
    recovered, backward = rescale_shift(shifted, 1 / s, -s * c)
    assert_allclose(recovered.thetas, spec.thetas, rtol=1e-12)
    assert_allclose(recovered.gamma2s, spec.gamma2s, rtol=1e-12, atol=1e-300)
    assert list(recovered.ns) == list(spec.ns)
    # the two prefactors compose to exp(c (1 - s)), which is 1 when s = 1
    assert_allclose(forward * backward, math.exp(c * (1 - s)), rtol=1e-12)


def test_rescale_shift_identity_prefactor():
    spec = normalize_spec([(1.0, 1), (2.0, 1)])
    same, prefactor = rescale_shift(spec, 1.0, 0.0)
    assert same == spec
    assert prefactor == 1.0
