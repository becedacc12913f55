""" Normalizing constants of directional distributions, all through the density machinery:
    C(theta, gamma, n) = integral over the unit sphere of exp(sum -theta_i |x_i|^2 + gamma_i x_i1)
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from branchcut.exceptions import DuplicateRatesError, InadmissibleRadiusError
from branchcut.integrand import IntegrandContext
from branchcut.inversion import (
    central_simple_applicable,
    fb_norm_from_pdf,
    finite_cut_integral,
    multiplicity_lift,
    unbounded_cut_integral,
)
from branchcut.qform import SpecDefaults, normalize_spec
from branchcut.quadrature import QuadratureDefaults, integrate_circle, integrate_semi_infinite


class DirectionalDefaults(object):
    # Working thetas start at 1 after the shift
    shifted_min_theta = 1.0
    kent_radius_fraction = 0.75


@dataclass(frozen=True)
class BinghamParams:
    theta: Tuple[float, ...]
    n: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        n = tuple(int(k) for k in self.n) if self.n else (1,) * len(self.theta)
        if len(n) != len(self.theta):
            raise ValueError(f"theta and n must have the same length, got {len(self.theta)} and {len(n)}")
        object.__setattr__(self, "n", n)

    @property
    def dimension(self) -> int:
        return sum(self.n)


@dataclass(frozen=True)
class KentParams:
    """ Kent (FB5) density exp(kappa x1 + beta (x2^2 - x3^2)) on the 2-sphere """
    beta: float
    kappa: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, not {self.beta}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be non-negative, not {self.kappa}")

    @property
    def alpha(self) -> float:
        # thetas (0, beta, 2 beta) after the shift, equally spaced by alpha = beta
        return self.beta


def _shift(theta: Sequence[float]) -> Tuple[np.ndarray, float]:
    theta = np.asarray(theta, dtype=float)
    c = theta.min() - DirectionalDefaults.shifted_min_theta
    return theta - c, c


def fb_const(theta: Sequence[float], gamma: Sequence[float], n: Sequence[int],
             rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ Fisher-Bingham constant for any real thetas: C(theta) = e^(-c) C(theta - c), c = min(theta) - 1 """
    shifted, c = _shift(theta)
    return math.exp(-c) * fb_norm_from_pdf(shifted, gamma, n, rel_tol=rel_tol)


def bingham_const_explicit(theta: Sequence[float], rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ Unit-multiplicity Bingham constant for p = 3 or 4 distinct thetas:
        p = 3: 2 sqrt(pi) (E(theta1, theta2) - E(theta3, inf))
        p = 4: 2 pi (E(theta1, theta2) - E(theta3, theta4))
    """
    shifted, c = _shift(np.sort(np.asarray(theta, dtype=float)))
    p = shifted.size
    if p not in (3, 4):
        raise ValueError(f"explicit forms exist for p = 3 or 4, not {p}")
    if np.any(np.diff(shifted) < SpecDefaults.theta_rtol * shifted[1:]):
        raise DuplicateRatesError(theta)

    ones = np.ones(p - 2)
    first = finite_cut_integral(shifted[0], shifted[1], shifted[2:], ones, 1.0, rel_tol).value
    if p == 3:
        second = unbounded_cut_integral(shifted[2], shifted[:2], ones, 1.0, rel_tol).value
    else:
        second = finite_cut_integral(shifted[2], shifted[3], shifted[:2], ones, 1.0, rel_tol).value
    return math.exp(-c) * 2 * math.pi ** (p / 2 - 1) * (first - second)


def bingham_const(params: BinghamParams, rel_tol: float = QuadratureDefaults.rel_tol,
                  fast_path: bool = True) -> float:
    """ Bingham constant C(theta) = integral of exp(-sum theta_i |x_i|^2) over the sphere
        Parameters:
            - params: thetas (any sign) and coordinate multiplicities
            - fast_path: use the explicit p = 3, 4 forms for distinct unit-multiplicity thetas
        Returns:
            - the constant
    """
    if params.dimension < 2:
        raise ValueError(f"the sphere needs at least two coordinates, got {params.dimension}")
    theta = np.asarray(params.theta)
    if fast_path and len(theta) in (3, 4) and all(k == 1 for k in params.n) \
            and np.unique(theta).size == theta.size:
        return bingham_const_explicit(theta, rel_tol=rel_tol)
    return fb_const(theta, np.zeros(theta.size), params.n, rel_tol=rel_tol)


def _bingham_theta_derivative(theta: Sequence[float], n: Sequence[int], j: int,
                              rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ dC/dtheta_j = -(n_j / (2 pi)) C(theta, n + 2 e_j), the lifted density coming from the
        analytic differentiation of the elementary integrals when available
    """
    shifted, c = _shift(theta)
    spec = normalize_spec([(th, k, 0.0) for th, k in zip(shifted, n)])
    merged = int(np.argmin(np.abs(spec.thetas - shifted[j])))
    lift = multiplicity_lift(spec, merged, rel_tol=rel_tol, fallback=True)
    density = lift(1.0).value
    log_kappa_lifted = IntegrandContext(spec).log_kappa + math.log(spec.thetas[merged])
    dimension = spec.total_dof + 2
    lifted_const = math.exp(math.log(2) + 0.5 * dimension * math.log(math.pi) - log_kappa_lifted) * density
    logging.debug(f"lifted term {merged} of {spec}: central-simple={central_simple_applicable(spec)}")
    return math.exp(-c) * -(n[j] / (2 * math.pi)) * lifted_const


def _so3_theta(phi: Sequence[float]) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (3,):
        raise ValueError(f"phi must have three entries, got {phi.shape}")
    return -2 * np.array([phi[0], phi[1], phi[2], phi.sum()])


def fisher_so3_const(phi: Sequence[float], normalized: bool = False,
                     rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ Integral of exp(tr(diag(phi) R)) over SO(3) as the image of the unit quaternions:
        (1/2) exp(-(phi1 + phi2 + phi3)) C(theta), theta = -2 (phi1, phi2, phi3, phi1 + phi2 + phi3).
        The measure gives pi^2 at phi = 0; normalized=True divides by it.
    """
    theta = _so3_theta(phi)
    value = 0.5 * math.exp(-float(np.sum(phi))) * bingham_const(BinghamParams(theta), rel_tol=rel_tol)
    return value / math.pi ** 2 if normalized else value


def fisher_so3_grad(phi: Sequence[float], rel_tol: float = QuadratureDefaults.rel_tol) -> np.ndarray:
    """ Gradient of log fisher_so3_const, i.e. the expected diagonal of R:
        -1 - (2/C) dC/dtheta_i - (2/C) dC/dtheta_4
    """
    theta = _so3_theta(phi)
    n = (1, 1, 1, 1)
    c_value = bingham_const(BinghamParams(theta), rel_tol=rel_tol, fast_path=False)
    d_last = _bingham_theta_derivative(theta, n, 3, rel_tol=rel_tol)
    grad = np.empty(3)
    for i in range(3):
        d_i = _bingham_theta_derivative(theta, n, i, rel_tol=rel_tol)
        grad[i] = -1 - 2 * d_i / c_value - 2 * d_last / c_value
    return grad


def complex_bingham_const(theta: Sequence[float]) -> float:
    """ Complex Bingham constant 2 pi^k sum_r e^(-theta_r) / prod_(i != r) (theta_i - theta_r)
    """
    theta = np.asarray(theta, dtype=float)
    if np.unique(theta).size != theta.size:
        raise DuplicateRatesError(theta)
    k = theta.size
    terms = [math.exp(-theta[r]) / np.prod(np.delete(theta, r) - theta[r]) for r in range(k)]
    return 2 * math.pi ** k * math.fsum(terms)


def _kent_integrand(alpha: float, gamma2: float):
    quarter = 0.25 * gamma2

    def f(t):
        t = np.asarray(t, dtype=complex)
        w = alpha + t
        log_g = quarter / w - 0.5 * (np.log(t) + np.log(w) + np.log(2 * alpha + t))
        return np.exp(log_g + t)

    return f


def kent_fb_const(alpha: float, gamma: float, radius: Optional[float] = None,
                  rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ C(theta, gamma) for theta = (0, alpha, 2 alpha) with gamma on the middle coordinate:
        2 pi^(3/2) times [circle of radius r around [-alpha, 0], centred at -alpha/2]
        minus the collapsed cut from -2 alpha,
        (2/pi) e^(-2 alpha) integral of exp(-u^2 - gamma^2 / (4 (alpha + u^2))) / sqrt((alpha + u^2)(2 alpha + u^2))
    """
    radius = DirectionalDefaults.kent_radius_fraction * alpha if radius is None else radius
    if not 0.5 * alpha < radius < alpha:
        raise InadmissibleRadiusError(radius, 0.5 * alpha, alpha)
    gamma2 = gamma * gamma

    circle = integrate_circle(_kent_integrand(alpha, gamma2), -0.5 * alpha, radius, rel_tol=rel_tol)

    def ray(u):
        x = alpha + u * u
        return math.exp(-u * u - 0.25 * gamma2 / x) / math.sqrt(x * (alpha + x))

    cut = integrate_semi_infinite(ray, 0.0, rel_tol=rel_tol)
    bracket = circle.value.real - 2 / math.pi * math.exp(-2 * alpha) * cut.value
    return 2 * math.pi ** 1.5 * bracket


def kent_const(params: KentParams, radius: Optional[float] = None,
               rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ Integral of exp(kappa x1 + beta (x2^2 - x3^2)) over the 2-sphere, e^beta C((0, beta, 2 beta), kappa) """
    return math.exp(params.beta) * kent_fb_const(params.alpha, params.kappa, radius=radius, rel_tol=rel_tol)

