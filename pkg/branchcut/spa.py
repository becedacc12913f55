""" Saddlepoint approximations of the density and distribution function, used to compare against
    the contour inversion and as a cheap tail cross-check.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, stats

from branchcut.exceptions import SaddleOutOfRangeError
from branchcut.qform import QuadraticFormSpec, moments, swap_roles, tilt_for_cdf
from branchcut.quadrature import QuadratureDefaults, integrate_finite


class SpaDefaults(object):
    # Bracket ends sit this fraction of the smallest theta inside the domain
    domain_eps = 1e-9
    residual_rtol = 1e-12
    newton_steps = 3
    # Below this |u| the Lugannani-Rice terms cancel; the limit expression is used instead
    mean_limit_u = 1e-4
    max_bracket_expansions = 200


@dataclass(frozen=True)
class CgfContext:
    """ Cumulant generating function K(t) = log E exp(t (X - Y)) on (-min theta', min theta),
        positive terms -(n/2) log(1 - t/theta) + (gamma2/4) (1/(theta - t) - 1/theta)
        and the mirrored terms for the negative list
    """
    spec: QuadraticFormSpec
    theta: np.ndarray = field(init=False, repr=False)
    half_n: np.ndarray = field(init=False, repr=False)
    quarter_g2: np.ndarray = field(init=False, repr=False)
    theta_prime: np.ndarray = field(init=False, repr=False)
    half_n_prime: np.ndarray = field(init=False, repr=False)
    quarter_g2_prime: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pos, neg = self.spec.positive, self.spec.negative
        object.__setattr__(self, "theta", np.array([t.theta for t in pos], dtype=float))
        object.__setattr__(self, "half_n", np.array([0.5 * t.n for t in pos], dtype=float))
        object.__setattr__(self, "quarter_g2", np.array([0.25 * t.gamma2 for t in pos], dtype=float))
        object.__setattr__(self, "theta_prime", np.array([t.theta for t in neg], dtype=float))
        object.__setattr__(self, "half_n_prime", np.array([0.5 * t.n for t in neg], dtype=float))
        object.__setattr__(self, "quarter_g2_prime", np.array([0.25 * t.gamma2 for t in neg], dtype=float))

    @property
    def domain(self) -> Tuple[float, float]:
        lower = -self.theta_prime.min() if self.theta_prime.size else -math.inf
        return lower, float(self.theta.min())

    @property
    def mean(self) -> float:
        return moments(self.spec)[0]

    def K(self, t: float) -> float:
        a = self.theta - t
        value = np.sum(-self.half_n * np.log1p(-t / self.theta) + self.quarter_g2 * (1 / a - 1 / self.theta))
        if self.theta_prime.size:
            b = self.theta_prime + t
            value += np.sum(-self.half_n_prime * np.log1p(t / self.theta_prime)
                            + self.quarter_g2_prime * (1 / b - 1 / self.theta_prime))
        return float(value)

    def K1(self, t: float) -> float:
        a = self.theta - t
        value = np.sum(self.half_n / a + self.quarter_g2 / a ** 2)
        if self.theta_prime.size:
            b = self.theta_prime + t
            value -= np.sum(self.half_n_prime / b + self.quarter_g2_prime / b ** 2)
        return float(value)

    def K2(self, t: float) -> float:
        a = self.theta - t
        value = np.sum(self.half_n / a ** 2 + 2 * self.quarter_g2 / a ** 3)
        if self.theta_prime.size:
            b = self.theta_prime + t
            value += np.sum(self.half_n_prime / b ** 2 + 2 * self.quarter_g2_prime / b ** 3)
        return float(value)

    def K3(self, t: float) -> float:
        a = self.theta - t
        value = np.sum(2 * self.half_n / a ** 3 + 6 * self.quarter_g2 / a ** 4)
        if self.theta_prime.size:
            b = self.theta_prime + t
            value -= np.sum(2 * self.half_n_prime / b ** 3 + 6 * self.quarter_g2_prime / b ** 4)
        return float(value)


def _bracket(ctx: CgfContext, s: float) -> Tuple[float, float]:
    lower, upper = ctx.domain
    scale = float(min(ctx.theta.min(), ctx.theta_prime.min() if ctx.theta_prime.size else math.inf))
    eps = SpaDefaults.domain_eps * scale
    hi = upper - eps
    if math.isfinite(lower):
        return lower + eps, hi

    # K' decreases to 0 as t -> -inf; walk left until it drops below s
    lo = min(-1.0, -upper)
    for _ in range(SpaDefaults.max_bracket_expansions):
        if ctx.K1(lo) < s:
            return lo, hi
        lo *= 2
    raise SaddleOutOfRangeError(s, ctx.K1(lo), ctx.K1(hi))


def solve_saddle(ctx: CgfContext, s: float) -> float:
    """ Root of K'(t) = s inside the domain, by brentq on a bracket of the domain
        followed by a few safeguarded Newton steps
    """
    lower, upper = ctx.domain
    if not ctx.theta_prime.size and s <= 0:
        raise SaddleOutOfRangeError(s, 0.0, math.inf)

    lo, hi = _bracket(ctx, s)
    f_lo, f_hi = ctx.K1(lo) - s, ctx.K1(hi) - s
    if f_lo > 0 or f_hi < 0:
        raise SaddleOutOfRangeError(s, ctx.K1(lo), ctx.K1(hi))

    t = optimize.brentq(lambda x: ctx.K1(x) - s, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    for _ in range(SpaDefaults.newton_steps):
        residual = ctx.K1(t) - s
        if abs(residual) < SpaDefaults.residual_rtol * (1 + abs(s)):
            break
        step = t - residual / ctx.K2(t)
        if lower < step < upper:
            t = step
    return t


def spa_pdf(ctx: CgfContext, s: float, t_hat: Optional[float] = None) -> float:
    """ exp(K(t) - t s) / sqrt(2 pi K''(t)) at the saddlepoint t """
    t = solve_saddle(ctx, s) if t_hat is None else t_hat
    return math.exp(ctx.K(t) - t * s) / math.sqrt(2 * math.pi * ctx.K2(t))


def spa_normalization(ctx: CgfContext, rel_tol: float = QuadratureDefaults.rel_tol) -> float:
    """ Integral of spa_pdf over the support, in the saddlepoint variable: s = K'(t), ds = K''(t) dt
    """
    lower, upper = ctx.domain

    def integrand(t):
        k2 = ctx.K2(t)
        return math.exp(ctx.K(t) - t * ctx.K1(t)) * math.sqrt(k2 / (2 * math.pi))

    left = integrate_finite(integrand, lower, 0.0, rel_tol=rel_tol)
    right = integrate_finite(integrand, 0.0, upper, rel_tol=rel_tol)
    return float(left.value + right.value)


def spa_pdf_normalized(ctx: CgfContext, s: float, norm: Optional[float] = None) -> float:
    """ spa_pdf divided by its own integral, exact for every single-term central spec """
    norm = spa_normalization(ctx) if norm is None else norm
    return spa_pdf(ctx, s) / norm


def spa_cdf(ctx: CgfContext, s: float) -> float:
    """ Lugannani-Rice approximation Phi(w) + phi(w) (1/w - 1/u) with
        w = sign(t) sqrt(2 (t s - K(t))) and u = t sqrt(K''(t)).
        Close to the mean the limit 1/2 + K'''(0) / (6 sqrt(2 pi) K''(0)^(3/2)) is used,
        plus the first order density term.
    """
    t = solve_saddle(ctx, s)
    k2 = ctx.K2(t)
    u = t * math.sqrt(k2)
    if abs(u) < SpaDefaults.mean_limit_u:
        k2_0 = ctx.K2(0.0)
        limit = 0.5 + ctx.K3(0.0) / (6 * math.sqrt(2 * math.pi) * k2_0 ** 1.5)
        return limit + spa_pdf(ctx, s, t_hat=t) * (s - ctx.mean)
    w = math.copysign(math.sqrt(max(2 * (t * s - ctx.K(t)), 0.0)), t)
    return float(stats.norm.cdf(w) + stats.norm.pdf(w) * (1 / w - 1 / u))


def spa_cdf_via_pdf(ctx: CgfContext, s: float, theta0: Optional[float] = None) -> float:
    """ Density saddlepoint approximation of the tilted variable, times the tilt prefactor:
        cdf(s) ~ exp(theta0 s + log const) * spa_pdf(tilted, s)
        Parameters:
            - ctx: CGF of the original variable
            - s: evaluation point
            - theta0: tilt, defaults to 1/s for positive combinations and to half of min theta' otherwise
        Returns:
            - approximate P(X - Y <= s)
    """
    spec = ctx.spec
    if theta0 is None:
        if spec.has_negative:
            theta0 = 0.5 * float(ctx.theta_prime.min())
        elif s > 0:
            theta0 = 1.0 / s
        else:
            return 0.0
    tilted, log_const = tilt_for_cdf(spec, theta0)
    value = math.exp(theta0 * s + log_const) * spa_pdf(CgfContext(tilted), s)
    logging.debug(f"spa_cdf_via_pdf at {s} with theta0={theta0}: {value}")
    return value


def spa_survivor_via_pdf(ctx: CgfContext, s: float, theta0: Optional[float] = None) -> float:
    """ P(X - Y > s) as the density approximation of the tilted variable with the roles swapped,
        i.e. P(Y - X <= -s); theta0 defaults to half of min theta
    """
    theta0 = 0.5 * float(ctx.theta.min()) if theta0 is None else theta0
    swapped = swap_roles(ctx.spec)
    tilted, log_const = tilt_for_cdf(swapped, theta0)
    return math.exp(-theta0 * s + log_const) * spa_pdf(CgfContext(tilted), -s)
