""" Density, distribution and survivor functions of positive combinations of chi-squares
    by deforming the Bromwich contour onto the branch cuts of the Laplace transform.
"""
from dataclasses import dataclass, replace
from enum import Enum
import logging
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from branchcut.exceptions import (
    NotAPositiveCombinationError,
    RouteUnavailableError,
)
from branchcut.integrand import (
    IntegrandContext,
    bromwich_integrand,
    exp_series_derivatives,
    log_kernel,
    log_kernel_derivatives,
)
from branchcut.qform import (
    BranchCutLayout,
    ChiSquareTerm,
    QuadraticFormSpec,
    branch_layout,
    moments,
    normalize_spec,
    tilt_for_cdf,
)
from branchcut.quadrature import (
    ContourPiece,
    ContourPlan,
    PieceKind,
    QuadratureDefaults,
    QuadratureResult,
    integrate_circle,
    integrate_finite,
    integrate_semi_infinite,
    plan_contours,
)


class Route(str, Enum):
    CENTRAL_SIMPLE = "central-simple"
    GENERAL = "general-contour"
    CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class EvalResult:
    value: float
    abs_err: float
    route: Route
    n_evals: int = 0
    contour: str = ""

    def __float__(self):
        return float(self.value)


def _require_positive(spec: QuadraticFormSpec) -> None:
    if spec.has_negative:
        raise NotAPositiveCombinationError(spec)


def _zero(reason: str) -> EvalResult:
    return EvalResult(0.0, 0.0, Route.CLOSED_FORM, 0, reason)


def nonnegative(result: EvalResult) -> EvalResult:
    """ Clamps a density estimate at 0, widening abs_err so it still covers the raw value """
    if result.value >= 0:
        return result
    return replace(result, value=0.0, abs_err=max(result.abs_err, -result.value))


# Routing -------------------------------------------------------------------

def closed_form_applicable(spec: QuadraticFormSpec) -> bool:
    return all(t.n % 2 == 0 and not t.noncentral for t in spec.positive)


def central_simple_applicable(spec: QuadraticFormSpec, layout: Optional[BranchCutLayout] = None) -> bool:
    """ Central terms with multiplicity 1, or 2 away from every cut (a coalesced pair) """
    if spec.has_negative or not spec.is_central:
        return False
    if any(t.n > 2 for t in spec.positive):
        return False
    layout = branch_layout(spec) if layout is None else layout
    return len(layout.interior_poles) == 0


def pdf(spec: QuadraticFormSpec, s: float, rel_tol: float = QuadratureDefaults.rel_tol) -> EvalResult:
    """ Density of a positive combination at s
        Parameters:
            - spec: normalized spec with an empty negative list
            - s: evaluation point
            - rel_tol: per-piece relative tolerance
        Returns:
            - EvalResult; closed-form residues, then the central-simple route, then the general contour
    """
    _require_positive(spec)
    if s <= 0:
        return _zero("s<=0")
    if closed_form_applicable(spec):
        return nonnegative(pdf_closed_form(spec, s))
    layout = branch_layout(spec)
    if central_simple_applicable(spec, layout):
        return nonnegative(pdf_central_simple(spec, s, rel_tol=rel_tol))
    return nonnegative(pdf_general_contour(spec, s, rel_tol=rel_tol))


# Elementary integrals ------------------------------------------------------

def _abs_log_r(x, others_theta, others_n):
    """ log of prod |theta_i - x|^(n_i) """
    return float(np.sum(others_n * np.log(np.abs(others_theta - x))))


def _sum_over(x, others_theta, others_n):
    """ 1/2 sum n_i / (x - theta_i) """
    return float(0.5 * np.sum(others_n / (x - others_theta)))


def finite_cut_integral(
    a: float,
    b: float,
    others_theta: Sequence[float],
    others_n: Sequence[int],
    s: float,
    rel_tol: float = QuadratureDefaults.rel_tol,
    parametrization: str = "sin2",
) -> QuadratureResult:
    """ Integral of exp(-s x) / sqrt((x - a)(b - x) R(x)) over [a, b], R(x) = prod |theta_i - x|^(n_i)
        Parameters:
            - a, b: cut endpoints
            - others_theta, others_n: remaining terms of the spec
            - s: evaluation point
            - parametrization: "sin2" for x = a cos^2 u + b sin^2 u, "beta" for algebraic endpoint weights
        Returns:
            - QuadratureResult
    """
    others_theta = np.asarray(others_theta, dtype=float)
    others_n = np.asarray(others_n, dtype=float)
    alpha = b - a

    if parametrization == "sin2":
        def integrand(u):
            sin2 = math.sin(u) ** 2
            x = a + alpha * sin2
            return math.exp(-s * alpha * sin2 - 0.5 * _abs_log_r(x, others_theta, others_n))
        result = integrate_finite(integrand, 0.0, 0.5 * math.pi, rel_tol=rel_tol)
        return result.scaled(2 * math.exp(-s * a))

    if parametrization == "beta":
        def integrand(x):
            return math.exp(-s * (x - a) - 0.5 * _abs_log_r(x, others_theta, others_n))
        result = integrate_finite(integrand, a, b, rel_tol=rel_tol, weight="alg", wvar=(-0.5, -0.5))
        return result.scaled(math.exp(-s * a))

    raise ValueError(f"unknown parametrization {parametrization}")


def degenerate_pair_integral(theta: float, others_theta: Sequence[float], others_n: Sequence[int], s: float) -> float:
    """ Zero-length cut limit: pi exp(-s theta) / sqrt(R(theta)) """
    others_theta = np.asarray(others_theta, dtype=float)
    others_n = np.asarray(others_n, dtype=float)
    return math.pi * math.exp(-s * theta - 0.5 * _abs_log_r(theta, others_theta, others_n))


def unbounded_cut_integral(
    start: float,
    others_theta: Sequence[float],
    others_n: Sequence[int],
    s: float,
    rel_tol: float = QuadratureDefaults.rel_tol,
) -> QuadratureResult:
    """ 2 exp(-s start) times the integral over u > 0 of exp(-s u^2) / sqrt(R(start + u^2)) """
    others_theta = np.asarray(others_theta, dtype=float)
    others_n = np.asarray(others_n, dtype=float)

    def integrand(u):
        x = start + u * u
        return math.exp(-s * u * u - 0.5 * _abs_log_r(x, others_theta, others_n))

    result = integrate_semi_infinite(integrand, 0.0, rel_tol=rel_tol)
    return result.scaled(2 * math.exp(-s * start))


def finite_cut_integral_derivative(
    a: float,
    b: float,
    others_theta: Sequence[float],
    others_n: Sequence[int],
    s: float,
    wrt: Union[str, int],
    rel_tol: float = QuadratureDefaults.rel_tol,
) -> QuadratureResult:
    """ Derivative of finite_cut_integral with respect to the left endpoint ("left"),
        the right endpoint ("right") or an off-cut theta (its index into others_theta)
    """
    others_theta = np.asarray(others_theta, dtype=float)
    others_n = np.asarray(others_n, dtype=float)
    alpha = b - a

    def kernel(u):
        sin2 = math.sin(u) ** 2
        x = a + alpha * sin2
        return x, sin2, math.exp(-s * (x - a) - 0.5 * _abs_log_r(x, others_theta, others_n))

    if wrt in ("left", "right"):
        def integrand(u):
            x, sin2, k = kernel(u)
            weight = (1 - sin2) if wrt == "left" else sin2
            return -2 * weight * (s + _sum_over(x, others_theta, others_n)) * k
    else:
        j = int(wrt)

        def integrand(u):
            x, _, k = kernel(u)
            return -others_n[j] * k / (others_theta[j] - x)

    result = integrate_finite(integrand, 0.0, 0.5 * math.pi, rel_tol=rel_tol)
    return result.scaled(math.exp(-s * a))


def degenerate_pair_integral_derivative(
    theta: float,
    others_theta: Sequence[float],
    others_n: Sequence[int],
    s: float,
    wrt: Union[str, int],
) -> float:
    others_theta = np.asarray(others_theta, dtype=float)
    others_n = np.asarray(others_n, dtype=float)
    value = degenerate_pair_integral(theta, others_theta, others_n, s)
    if wrt == "self":
        return value * (-s + float(np.sum(0.5 * others_n / (others_theta - theta))))
    j = int(wrt)
    return value * (-0.5 * others_n[j] / (others_theta[j] - theta))


def unbounded_cut_integral_derivative(
    start: float,
    others_theta: Sequence[float],
    others_n: Sequence[int],
    s: float,
    wrt: Union[str, int],
    rel_tol: float = QuadratureDefaults.rel_tol,
) -> QuadratureResult:
    """ Derivative of unbounded_cut_integral with respect to its start ("start") or an off-cut theta """
    others_theta = np.asarray(others_theta, dtype=float)
    others_n = np.asarray(others_n, dtype=float)

    def kernel(u):
        x = start + u * u
        return x, math.exp(-s * u * u - 0.5 * _abs_log_r(x, others_theta, others_n))

    if wrt == "start":
        def integrand(u):
            x, k = kernel(u)
            return -(s + _sum_over(x, others_theta, others_n)) * k
    else:
        j = int(wrt)

        def integrand(u):
            x, k = kernel(u)
            return 0.5 * others_n[j] * k / (x - others_theta[j])

    result = integrate_semi_infinite(integrand, 0.0, rel_tol=rel_tol)
    return result.scaled(2 * math.exp(-s * start))


# Central-simple route ------------------------------------------------------

@dataclass(frozen=True)
class _Unit:
    kind: str  # "finite", "degenerate" or "unbounded"
    indices: Tuple[int, ...]


def _central_simple_units(spec: QuadraticFormSpec, layout: BranchCutLayout):
    units = [_Unit("finite", cut.endpoint_indices) for cut in layout.finite_cuts]
    units += [_Unit("degenerate", (p.index,)) for p in layout.isolated_even_poles]
    units.sort(key=lambda unit: spec.positive[unit.indices[0]].theta)
    if layout.unbounded_cut is not None:
        units.append(_Unit("unbounded", (layout.unbounded_cut.endpoint_index,)))
    return units


def _others(spec: QuadraticFormSpec, indices: Sequence[int]):
    keep = [i for i in range(spec.p) if i not in indices]
    return keep, spec.thetas[keep], spec.ns[keep].astype(float)


def _unit_integral(spec, unit, s, rel_tol, parametrization="sin2") -> QuadratureResult:
    keep, others_theta, others_n = _others(spec, unit.indices)
    thetas = spec.thetas
    if unit.kind == "finite":
        a, b = thetas[unit.indices[0]], thetas[unit.indices[1]]
        return finite_cut_integral(a, b, others_theta, others_n, s, rel_tol, parametrization)
    if unit.kind == "degenerate":
        value = degenerate_pair_integral(thetas[unit.indices[0]], others_theta, others_n, s)
        return QuadratureResult(value, 0.0, 0)
    return unbounded_cut_integral(thetas[unit.indices[0]], others_theta, others_n, s, rel_tol)


def pdf_central_simple(
    spec: QuadraticFormSpec,
    s: float,
    rel_tol: float = QuadratureDefaults.rel_tol,
    parametrization: str = "sin2",
) -> EvalResult:
    """ Alternating sum over cut units in ascending theta order,
        pdf = (prod sqrt(theta_i)^(n_i) / pi) sum_r (-1)^(r+1) E_r
    """
    if not central_simple_applicable(spec):
        raise RouteUnavailableError(Route.CENTRAL_SIMPLE.value,
                                    "needs central terms with multiplicity 1, or 2 off every cut")
    if s <= 0:
        return _zero("s<=0")

    layout = branch_layout(spec)
    units = _central_simple_units(spec, layout)
    # Sign (-1)^(r+1): on the upper lip of the r-th unit the principal branches of the
    # 2(r-1) half-order factors to its right contribute exp(-i pi/2) each, and each coalesced
    # pair to its right contributes exp(-i pi); checked against the general contour and Imhof.
    total = QuadratureResult(0.0, 0.0, 0)
    for r, unit in enumerate(units, start=1):
        sign = 1.0 if r % 2 == 1 else -1.0
        total = total + _unit_integral(spec, unit, s, rel_tol, parametrization).scaled(sign)

    kappa = IntegrandContext(spec).kappa
    result = total.scaled(kappa / math.pi)
    return EvalResult(float(result.value), result.abs_err, Route.CENTRAL_SIMPLE, result.n_evals,
                      " + ".join(u.kind for u in units))


# General contour route -----------------------------------------------------

def _segment(ctx, piece, s, rel_tol) -> QuadratureResult:
    a, b = piece.span

    def integrand(u):
        x = a + (b - a) * math.sin(u) ** 2
        return float(np.exp(log_kernel(ctx, -x, exclude=piece.exclude) - s * x).real)

    return integrate_finite(integrand, 0.0, 0.5 * math.pi, rel_tol=rel_tol).scaled(2 / math.pi)


def _semi_infinite(ctx, piece, s, rel_tol) -> QuadratureResult:
    start = piece.span[0]

    def integrand(u):
        x = start + u * u
        return float(np.exp(log_kernel(ctx, -x, exclude=piece.exclude) - s * x).real)

    return integrate_semi_infinite(integrand, 0.0, rel_tol=rel_tol).scaled(2 / math.pi)


def _circle(ctx, piece, s, rel_tol) -> QuadratureResult:
    result = integrate_circle(lambda t: bromwich_integrand(ctx, t, s), piece.center, piece.radius, rel_tol=rel_tol)
    return QuadratureResult(result.value.real, result.abs_err, result.n_evals)


def _residue(ctx, piece, s, rel_tol) -> QuadratureResult:
    m = piece.order
    t0 = -piece.span[0]
    derivs = log_kernel_derivatives(ctx, t0, m - 1, exclude=piece.exclude)
    derivs[0] += s * t0
    if m > 1:
        derivs[1] += s
    value = (exp_series_derivatives(derivs)[m - 1] / math.factorial(m - 1)).real
    return QuadratureResult(value, 8 * m * np.finfo(float).eps * abs(value), m)


def _keyhole(ctx, piece, s, rel_tol) -> QuadratureResult:
    start, rho, nu = piece.span[0], piece.rho, piece.nu
    tau0 = -start + rho
    x0 = start - rho
    x_last = max((start,) + piece.interior)
    # Beyond x_end, exp(-s x) is below rel_tol; at s = 0 the kernel alone must decay
    x_end = x_last + (math.log(1 / rel_tol) + 10.0) / s + nu if s > 0 else math.inf

    def vertical(y):
        return float(bromwich_integrand(ctx, complex(tau0, y), s).real)

    def horizontal(x):
        return float(bromwich_integrand(ctx, complex(-x, nu), s).imag)

    up = integrate_finite(vertical, 0.0, nu, rel_tol=rel_tol)
    points = [x for x in piece.interior if x0 < x < x_end] if math.isfinite(x_end) else None
    across = integrate_finite(horizontal, x0, x_end, rel_tol=rel_tol, points=points)
    return (up + across.scaled(-1.0)).scaled(1 / math.pi)


_PIECE_EVALUATORS = {
    PieceKind.SEGMENT: _segment,
    PieceKind.SEMI_INFINITE: _semi_infinite,
    PieceKind.CIRCLE: _circle,
    PieceKind.RESIDUE: _residue,
    PieceKind.KEYHOLE: _keyhole,
}


def evaluate_plan(ctx: IntegrandContext, plan: ContourPlan, rel_tol: float = QuadratureDefaults.rel_tol) -> QuadratureResult:
    """ Sum of (1/2 pi i) times the loop integrals of g(t) g'(-t) e^(st), without the kappa prefactor """
    total = QuadratureResult(0.0, 0.0, 0)
    for piece in plan.pieces:
        part = _PIECE_EVALUATORS[piece.kind](ctx, piece, plan.s, rel_tol)
        logging.debug(f"{piece.describe()} at s={plan.s}: {part.value} +- {part.abs_err}")
        total = total + part
    return total


def pdf_general_contour(
    spec: QuadraticFormSpec,
    s: float,
    rel_tol: float = QuadratureDefaults.rel_tol,
    collapse: bool = True,
) -> EvalResult:
    """ Contours around every cut and pole of g, for s > 0. A non-empty negative list enters
        as the analytic multiplier g'(-t), which gives the density of the difference at s >= 0.
        Parameters:
            - spec: normalized spec
            - s: positive evaluation point
            - collapse: collapse central half-order cuts onto the real axis
        Returns:
            - EvalResult
    """
    if s <= 0 and not spec.has_negative:
        return _zero("s<=0")
    if s < 0:
        raise ValueError(f"the contour route needs s >= 0, not {s}")
    ctx = IntegrandContext(spec)
    plan = plan_contours(branch_layout(spec), spec, s, collapse=collapse)
    result = evaluate_plan(ctx, plan, rel_tol).scaled(math.exp(ctx.log_prefactor))
    return EvalResult(float(result.value), result.abs_err, Route.GENERAL, result.n_evals, plan.describe())


def pdf_closed_form(spec: QuadraticFormSpec, s: float) -> EvalResult:
    """ Residue sum for central positive lists with even multiplicities (any negative list, s >= 0) """
    if not closed_form_applicable(spec):
        raise RouteUnavailableError(Route.CLOSED_FORM.value, "needs central terms with even multiplicities")
    if s <= 0 and not spec.has_negative:
        return _zero("s<=0")
    if s < 0:
        raise ValueError(f"residues give the density of the difference for s >= 0, not {s}")

    ctx = IntegrandContext(spec)
    plan = ContourPlan(
        pieces=tuple(ContourPiece(PieceKind.RESIDUE, (t.theta, t.theta), exclude=(i,), order=t.n // 2)
                     for i, t in enumerate(spec.positive)),
        s=s,
    )
    result = evaluate_plan(ctx, plan).scaled(math.exp(ctx.log_prefactor))
    return EvalResult(float(result.value), result.abs_err, Route.CLOSED_FORM, result.n_evals, plan.describe())


# Multiplicity lift ---------------------------------------------------------

def lifted_spec(spec: QuadraticFormSpec, term_index: int) -> QuadraticFormSpec:
    terms = list(spec.positive)
    t = terms[term_index]
    terms[term_index] = ChiSquareTerm(theta=t.theta, n=t.n + 2, gamma2=t.gamma2)
    return QuadraticFormSpec(positive=tuple(terms), negative=spec.negative)


def central_simple_theta_derivative(
    spec: QuadraticFormSpec,
    s: float,
    term_index: int,
    rel_tol: float = QuadratureDefaults.rel_tol,
) -> QuadratureResult:
    """ d/d theta_j of J = pdf / kappa, by differentiating every elementary integral """
    layout = branch_layout(spec)
    units = _central_simple_units(spec, layout)
    thetas = spec.thetas
    total = QuadratureResult(0.0, 0.0, 0)
    for r, unit in enumerate(units, start=1):
        sign = 1.0 if r % 2 == 1 else -1.0
        keep, others_theta, others_n = _others(spec, unit.indices)
        if term_index in unit.indices:
            wrt = {"finite": ("left", "right")[unit.indices.index(term_index)],
                   "degenerate": "self", "unbounded": "start"}[unit.kind]
        else:
            wrt = keep.index(term_index)

        if unit.kind == "finite":
            a, b = thetas[unit.indices[0]], thetas[unit.indices[1]]
            part = finite_cut_integral_derivative(a, b, others_theta, others_n, s, wrt, rel_tol)
        elif unit.kind == "degenerate":
            part = QuadratureResult(
                degenerate_pair_integral_derivative(thetas[unit.indices[0]], others_theta, others_n, s, wrt),
                0.0, 0)
        else:
            part = unbounded_cut_integral_derivative(thetas[unit.indices[0]], others_theta, others_n, s, wrt,
                                                     rel_tol)
        total = total + part.scaled(sign)
    return total.scaled(1 / math.pi)


def multiplicity_lift(
    spec: QuadraticFormSpec,
    term_index: int,
    rel_tol: float = QuadratureDefaults.rel_tol,
    fallback: bool = False,
) -> Callable[[float], EvalResult]:
    """ Evaluator for the spec with n_j increased by 2
        Central term j: pdf(n + 2 e_j) = -(2 theta_j / n_j) kappa dJ/dtheta_j, with J = pdf / kappa
        differentiated analytically on the central-simple route.
        Non-central term j: pdf(n + 2 e_j) = theta_j kappa dJ/d(gamma_j^2 / 4), whose kernel is the
        lifted kernel itself, so it is evaluated on the general contour.
        Parameters:
            - spec: positive combination
            - term_index: index j into spec.positive
            - fallback: use the general contour on the lifted spec instead of raising RouteUnavailableError
        Returns:
            - callable s -> EvalResult
    """
    _require_positive(spec)
    term = spec.positive[term_index]
    lifted = lifted_spec(spec, term_index)

    def general(s):
        return pdf_general_contour(lifted, s, rel_tol=rel_tol)

    if term.noncentral:
        return general

    if not central_simple_applicable(spec):
        if fallback:
            logging.info(f"no analytic lift for {spec}; evaluating {lifted} on the general contour")
            return general
        raise RouteUnavailableError("multiplicity-lift", f"{spec} is not central-simple")

    kappa = IntegrandContext(spec).kappa
    factor = -2 * term.theta / term.n * kappa

    def evaluate(s):
        if s <= 0:
            return _zero("s<=0")
        derivative = central_simple_theta_derivative(spec, s, term_index, rel_tol=rel_tol)
        result = derivative.scaled(factor)
        return EvalResult(float(result.value), result.abs_err, Route.CENTRAL_SIMPLE, result.n_evals,
                          f"lift of term {term_index}")

    return evaluate


# Distribution function -----------------------------------------------------

def cdf(spec: QuadraticFormSpec, x: float, theta0: Optional[float] = None,
        rel_tol: float = QuadratureDefaults.rel_tol) -> EvalResult:
    """ P(X <= x) through the density of the tilted variable
        Parameters:
            - spec: positive combination
            - x: evaluation point
            - theta0: tilt, defaults to 1/x
        Returns:
            - EvalResult carrying the route of the tilted density
    """
    _require_positive(spec)
    if x <= 0:
        return _zero("x<=0")
    theta0 = 1.0 / x if theta0 is None else theta0
    tilted, log_const = tilt_for_cdf(spec, theta0)
    density = pdf(tilted, x, rel_tol=rel_tol)
    factor = math.exp(theta0 * x + log_const)
    return EvalResult(density.value * factor, density.abs_err * factor, density.route, density.n_evals,
                      density.contour)


def survivor(spec: QuadraticFormSpec, x: float, theta0: Optional[float] = None,
             rel_tol: float = QuadratureDefaults.rel_tol) -> EvalResult:
    result = cdf(spec, x, theta0=theta0, rel_tol=rel_tol)
    return EvalResult(1.0 - result.value, result.abs_err, result.route, result.n_evals, result.contour)


def quantile(
    spec: QuadraticFormSpec,
    p: float,
    cdf_fn: Optional[Callable[[QuadraticFormSpec, float], EvalResult]] = None,
    xtol: float = 1e-10,
) -> float:
    """ Bisection on the distribution function; cdf_fn defaults to cdf """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), not {p}")
    cdf_fn = cdf if cdf_fn is None else cdf_fn
    mean, variance = moments(spec)
    sd = math.sqrt(variance)

    def excess(x):
        return cdf_fn(spec, x).value - p

    lower = 0.0 if not spec.has_negative else mean - 10 * sd
    upper = mean + 10 * sd
    while excess(upper) < 0:
        upper += 10 * sd
    while spec.has_negative and excess(lower) > 0:
        lower -= 10 * sd
    return optimize.bisect(excess, lower, upper, xtol=xtol * max(1.0, abs(mean)))


# Fisher-Bingham normalizing constant ---------------------------------------

def fb_norm_from_pdf(theta: Sequence[float], gamma: Sequence[float], n: Sequence[int],
                     rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ Normalizing constant of exp(sum -theta_i |x_i|^2 + gamma_i x_i1) on the unit sphere of
        dimension sum n_i, as 2 pi^(N/2) / kappa times the density at 1
        Parameters:
            - theta: positive thetas
            - gamma: linear coefficients (not squared)
            - n: multiplicities
        Returns:
            - the constant
    """
    spec = normalize_spec([(th, ni, g * g) for th, g, ni in zip(theta, gamma, n)])
    density = pdf(spec, 1.0, rel_tol=rel_tol)
    log_c = math.log(2) + 0.5 * spec.total_dof * math.log(math.pi) - IntegrandContext(spec).log_kappa
    return math.exp(log_c) * density.value
