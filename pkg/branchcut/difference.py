from dataclasses import dataclass
import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from branchcut.exceptions import DuplicateRatesError, Theta0OutOfRangeError
from branchcut.inversion import (
    EvalResult,
    Route,
    cdf,
    closed_form_applicable,
    nonnegative,
    pdf,
    pdf_closed_form,
    pdf_general_contour,
)
from branchcut.qform import QuadraticFormSpec, moments, swap_roles, tilt_for_cdf
from branchcut.quadrature import QuadratureDefaults


class DifferenceDefaults(object):
    # Default tilt as a fraction of min(theta')
    theta0_fraction = 0.5


@dataclass(frozen=True)
class DifferenceSpec:
    """ Z = X - Y with a tilt admissible for the distribution function identity """
    spec: QuadraticFormSpec
    theta0: Optional[float] = None

    def __post_init__(self):
        if self.theta0 is not None:
            upper = min((t.theta for t in self.spec.negative), default=math.inf)
            if not 0 < self.theta0 < upper:
                raise Theta0OutOfRangeError(self.theta0, upper)

    @property
    def default_theta0(self) -> float:
        return default_theta0(self.spec)


SpecLike = Union[DifferenceSpec, QuadraticFormSpec]


def default_theta0(spec: QuadraticFormSpec) -> float:
    if spec.has_negative:
        return DifferenceDefaults.theta0_fraction * min(t.theta for t in spec.negative)
    return DifferenceDefaults.theta0_fraction * min(t.theta for t in spec.positive)


def _unwrap(spec: SpecLike):
    if isinstance(spec, DifferenceSpec):
        return spec.spec, spec.theta0
    return spec, None


def pdf_diff(spec: SpecLike, z: float, rel_tol: float = QuadratureDefaults.rel_tol) -> EvalResult:
    """ Density of X - Y at z; for z < 0 the roles of X and Y are swapped and -z is used
    """
    spec, _ = _unwrap(spec)
    if z < 0:
        if not spec.has_negative:
            return EvalResult(0.0, 0.0, Route.CLOSED_FORM, 0, "z<0")
        spec, z = swap_roles(spec), -z
    if not spec.has_negative:
        return pdf(spec, z, rel_tol=rel_tol)
    if closed_form_applicable(spec):
        return nonnegative(pdf_closed_form(spec, z))
    return nonnegative(pdf_general_contour(spec, z, rel_tol=rel_tol))


def _lower_tail(spec: QuadraticFormSpec, z: float, theta0: Optional[float], rel_tol: float) -> EvalResult:
    # P(X - Y <= z) = exp(theta0 z + log const) * density of the tilted difference at z
    theta0 = default_theta0(spec) if theta0 is None else theta0
    tilted, log_const = tilt_for_cdf(spec, theta0)
    density = pdf_diff(tilted, z, rel_tol=rel_tol)
    factor = math.exp(theta0 * z + log_const)
    return EvalResult(density.value * factor, density.abs_err * factor, density.route, density.n_evals,
                      density.contour)


def _complement(result: EvalResult) -> EvalResult:
    return EvalResult(1.0 - result.value, result.abs_err, result.route, result.n_evals, result.contour)


def cdf_diff(spec: SpecLike, z: float, theta0: Optional[float] = None,
             rel_tol: float = QuadratureDefaults.rel_tol) -> EvalResult:
    """ P(X - Y <= z)
        Parameters:
            - spec: normalized spec or DifferenceSpec
            - z: evaluation point
            - theta0: tilt in (0, min theta'), defaults to half of min theta'
        Returns:
            - EvalResult; above the mean the upper tail is computed as P(Y - X <= -z)
    """
    spec, spec_theta0 = _unwrap(spec)
    theta0 = spec_theta0 if theta0 is None else theta0
    if not spec.has_negative:
        return cdf(spec, z, theta0=theta0, rel_tol=rel_tol)
    mean, _ = moments(spec)
    if z <= mean:
        return _lower_tail(spec, z, theta0, rel_tol)
    logging.debug(f"z={z} above the mean {mean}: upper tail through the swapped difference")
    return _complement(_lower_tail(swap_roles(spec), -z, theta0, rel_tol))


def survivor_diff(spec: SpecLike, z: float, theta0: Optional[float] = None,
                  rel_tol: float = QuadratureDefaults.rel_tol) -> EvalResult:
    return _complement(cdf_diff(spec, z, theta0=theta0, rel_tol=rel_tol))


def hypoexp_diff_closed_form(thetas: Sequence[float], thetas_prime: Sequence[float], z: float) -> float:
    """ Density of a sum of exponentials with rates thetas minus an independent sum with rates thetas_prime,
        from the simple poles of g(t) g'(-t) e^(zt):
        z >= 0: prod(theta) prod(theta') sum_i e^(-theta_i z) / (prod_k!=i (theta_k - theta_i) prod_l (theta'_l + theta_i))
        z < 0: the same with the lists exchanged and e^(theta'_l z)
    """
    thetas = np.asarray(thetas, dtype=float)
    thetas_prime = np.asarray(thetas_prime, dtype=float)
    rates = np.concatenate([thetas, thetas_prime])
    if np.unique(rates).size != rates.size:
        raise DuplicateRatesError(rates)
    if thetas.size == 0:
        raise ValueError("the positive rate list must not be empty")

    if z < 0:
        if thetas_prime.size == 0:
            return 0.0
        thetas, thetas_prime, z = thetas_prime, thetas, -z

    scale = np.prod(thetas) * np.prod(thetas_prime)
    total = 0.0
    for i, theta in enumerate(thetas):
        others = np.delete(thetas, i)
        total += math.exp(-theta * z) / (np.prod(others - theta) * np.prod(thetas_prime + theta))
    return float(scale * total)
