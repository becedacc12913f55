import math

import numpy as np
from numpy.testing import assert_allclose
import pytest

from branchcut.qform import branch_layout, normalize_spec
from branchcut.quadrature import (
    PieceKind,
    QuadratureResult,
    integrate_circle,
    integrate_finite,
    integrate_semi_infinite,
    plan_contours,
)


def test_integrate_finite_sine():
    result = integrate_finite(math.sin, 0.0, math.pi)
    assert_allclose(result.value, 2.0, rtol=1e-12)
    assert result.n_evals > 0


def test_integrate_finite_rejects_reversed_limits():
    with pytest.raises(ValueError):
        integrate_finite(math.sin, 1.0, 1.0)


def test_integrate_finite_complex():
    result = integrate_finite(lambda x: np.exp(1j * x), 0.0, math.pi, complex_valued=True)
    assert_allclose(result.value, 2j, atol=1e-12)


def test_integrate_finite_algebraic_weight():
    # 1 / sqrt((1 + x)(1 - x))
    result = integrate_finite(lambda x: 1.0, -1.0, 1.0, weight="alg", wvar=(-0.5, -0.5))
    assert_allclose(result.value, math.pi, rtol=1e-12)


def test_integrate_semi_infinite_gaussian():
    result = integrate_semi_infinite(lambda u: math.exp(-u * u))
    assert_allclose(result.value, 0.5 * math.sqrt(math.pi), rtol=1e-10)


def test_result_arithmetic():
    total = QuadratureResult(1.0, 0.1, 5) + QuadratureResult(2.0, 0.2, 7)
    assert (total.value, total.n_evals) == (3.0, 12)
    assert_allclose(total.abs_err, 0.3)
    scaled = total.scaled(-2.0)
    assert scaled.value == -6.0
    assert_allclose(scaled.abs_err, 0.6)


@pytest.mark.parametrize("f, expected", [
    (lambda t: 1 / t, 1.0),
    (lambda t: np.exp(t) / t ** 2, 1.0),
    (lambda t: 1 / (t * (t - 3)), -1 / 3),
])
def test_integrate_circle_residues(f, expected):
    result = integrate_circle(f, 0.0, 1.0)
    assert_allclose(result.value, expected, atol=1e-12)


def test_integrate_circle_unnormalized():
    result = integrate_circle(lambda t: 1 / (t + 0.5), 0.0, 1.0, residue_normalized=False)
    assert_allclose(result.value, 2j * math.pi, rtol=1e-12)


def test_integrate_circle_rejects_radius():
    with pytest.raises(ValueError):
        integrate_circle(lambda t: t, 0.0, 0.0)


def test_plan_collapses_half_order_cuts():
    spec = normalize_spec([(1.0, 1), (2.0, 1), (3.0, 1)])
    plan = plan_contours(branch_layout(spec), spec, 1.0)
    assert [p.kind for p in plan.pieces] == [PieceKind.SEGMENT, PieceKind.SEMI_INFINITE]
    assert plan.pieces[0].exclude == (0, 1)
    assert plan.describe().startswith("segment[1,2]")


def test_plan_circles_enclose_only_their_cut():
    spec = normalize_spec([(1.0, 1), (2.0, 1), (3.0, 1)])
    plan = plan_contours(branch_layout(spec), spec, 1.0, collapse=False)
    circle, keyhole = plan.pieces
    assert circle.kind == PieceKind.CIRCLE
    assert circle.center - circle.radius < -2.0
    assert -1.0 < circle.center + circle.radius < 0.0
    assert keyhole.kind == PieceKind.KEYHOLE
    assert 0 < keyhole.rho < 1.0
    assert plan.margin_violations(spec) == []


def test_plan_residues_and_noncentral_circles():
    spec = normalize_spec([(1.0, 2), (2.0, 4, 0.5), (3.0, 1)])
    plan = plan_contours(branch_layout(spec), spec, 2.0)
    kinds = [p.kind for p in plan.pieces]
    assert kinds == [PieceKind.RESIDUE, PieceKind.CIRCLE, PieceKind.SEMI_INFINITE]
    assert plan.pieces[0].order == 1
    circle = plan.pieces[1]
    assert -3.0 < circle.center - circle.radius < -2.0 < circle.center + circle.radius < -1.0


@pytest.mark.parametrize("f, a, b", [
    (math.sin, 0.0, 2 * math.pi),
    (lambda x: x - 0.5, 0.0, 1.0),
    (lambda x: math.cos(3 * x), 0.0, math.pi),
])
def test_integrate_finite_near_zero_value(f, a, b):
    result = integrate_finite(f, a, b)
    assert_allclose(result.value, 0.0, atol=1e-10)


def test_integrate_finite_complex_near_zero_value():
    result = integrate_finite(lambda x: np.exp(2j * x), 0.0, math.pi, complex_valued=True)
    assert_allclose(result.value, 0.0, atol=1e-10)


def test_integrate_circle_entire_function():
    # no singularity inside: the loop cancels
    result = integrate_circle(np.exp, 0.0, 1.0)
    assert_allclose(result.value, 0.0, atol=1e-12)
