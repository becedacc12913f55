from dataclasses import dataclass, field
import math
from typing import Iterable, Union

import numpy as np

from branchcut import config
from branchcut.exceptions import PoleEvaluationError
from branchcut.qform import QuadraticFormSpec, log_kappa

ComplexLike = Union[complex, float, np.ndarray]


@dataclass(frozen=True)
class IntegrandContext:
    """ Laplace transform of a quadratic form, split as kappa * g(t) * kappa' * g'(-t)
        with g(t) = exp(sum gamma2 / (4 (theta + t))) / prod (theta + t)^(n/2)
    """
    spec: QuadraticFormSpec
    theta: np.ndarray = field(init=False, repr=False)
    half_n: np.ndarray = field(init=False, repr=False)
    quarter_g2: np.ndarray = field(init=False, repr=False)
    theta_prime: np.ndarray = field(init=False, repr=False)
    half_n_prime: np.ndarray = field(init=False, repr=False)
    quarter_g2_prime: np.ndarray = field(init=False, repr=False)
    log_kappa: float = field(init=False)
    log_kappa_prime: float = field(init=False)

    def __post_init__(self):
        pos, neg = self.spec.positive, self.spec.negative
        attrs = {
            "theta": np.array([t.theta for t in pos], dtype=float),
            "half_n": np.array([0.5 * t.n for t in pos], dtype=float),
            "quarter_g2": np.array([0.25 * t.gamma2 for t in pos], dtype=float),
            "theta_prime": np.array([t.theta for t in neg], dtype=float),
            "half_n_prime": np.array([0.5 * t.n for t in neg], dtype=float),
            "quarter_g2_prime": np.array([0.25 * t.gamma2 for t in neg], dtype=float),
            "log_kappa": log_kappa(pos),
            "log_kappa_prime": log_kappa(neg),
        }
        for key, value in attrs.items():
            object.__setattr__(self, key, value)

    @property
    def kappa(self) -> float:
        return math.exp(self.log_kappa)

    @property
    def kappa_prime(self) -> float:
        return math.exp(self.log_kappa_prime)

    @property
    def log_prefactor(self) -> float:
        return self.log_kappa + self.log_kappa_prime

    def without_negative(self) -> "IntegrandContext":
        return IntegrandContext(QuadraticFormSpec(positive=self.spec.positive))


def _factor_logs(t: np.ndarray, theta, half_n, quarter_g2, sign: int, mask) -> np.ndarray:
    # sign=+1: factors of g(t); sign=-1: factors of g'(-t)
    total = np.zeros(t.shape, dtype=complex)
    for i in np.flatnonzero(mask):
        z = theta[i] + sign * t
        if np.any(np.abs(z) < config.POLE_DISTANCE_FLOOR):
            bad = t.flat[int(np.argmin(np.abs(z)))]
            raise PoleEvaluationError(bad, f"distance to pole {-sign * theta[i]} below floor")
        if quarter_g2[i] > 0:
            essential = quarter_g2[i] / z
            if np.any(essential.real > config.MAX_REAL_EXPONENT):
                bad = t.flat[int(np.argmax(essential.real))]
                raise PoleEvaluationError(bad, f"essential exponent above {config.MAX_REAL_EXPONENT}")
            total += essential
        total -= half_n[i] * np.log(z)
    return total


def log_kernel(
    ctx: IntegrandContext,
    t: ComplexLike,
    exclude: Iterable[int] = (),
    include_negative: bool = True,
) -> np.ndarray:
    """ Principal-branch logarithm of g(t) * g'(-t)
        Parameters:
            - ctx: integrand context
            - t: scalar or array of complex points; real points sit on the upper lip of any cut
            - exclude: indices of positive-list factors to omit (endpoint removal, residues)
            - include_negative: whether the g'(-t) factors are included
        Returns:
            - complex array shaped like t
    """
    t = np.asarray(t, dtype=complex)
    mask = np.ones(ctx.theta.size, dtype=bool)
    mask[list(exclude)] = False
    total = _factor_logs(t, ctx.theta, ctx.half_n, ctx.quarter_g2, +1, mask)
    if include_negative and ctx.theta_prime.size:
        total += _factor_logs(t, ctx.theta_prime, ctx.half_n_prime, ctx.quarter_g2_prime, -1,
                              np.ones(ctx.theta_prime.size, dtype=bool))
    return total


def g_eval(ctx: IntegrandContext, t: ComplexLike) -> Union[complex, np.ndarray]:
    value = np.exp(log_kernel(ctx, t, include_negative=False))
    return value[()] if value.ndim == 0 else value


def g_diff_eval(ctx_x: IntegrandContext, ctx_y: IntegrandContext, t: ComplexLike) -> Union[complex, np.ndarray]:
    """ g(t) * g'(-t) with g from ctx_x's positive list and g' from ctx_y's positive list """
    t = np.asarray(t, dtype=complex)
    value = np.exp(log_kernel(ctx_x, t, include_negative=False)
                   + log_kernel(ctx_y, -t, include_negative=False))
    return value[()] if value.ndim == 0 else value


def bromwich_integrand(ctx: IntegrandContext, t: ComplexLike, s: float, exclude: Iterable[int] = ()) -> np.ndarray:
    """ exp(log kernel + s t), the contour integrand without the kappa prefactor """
    t = np.asarray(t, dtype=complex)
    return np.exp(log_kernel(ctx, t, exclude=exclude) + s * t)


def log_kernel_derivatives(
    ctx: IntegrandContext,
    t0: float,
    order: int,
    exclude: Iterable[int] = (),
) -> np.ndarray:
    """ [L(t0), L'(t0), ..., L^(order)(t0)] for L the log kernel with `exclude` omitted
    """
    t0 = float(t0)
    exclude = set(exclude)
    # complex: the value at t0 carries the phase of factors whose pole lies to the right
    out = np.zeros(order + 1, dtype=complex)
    out[0] = log_kernel(ctx, t0, exclude=exclude)
    for k in range(1, order + 1):
        fk = math.factorial(k)
        fk1 = math.factorial(k - 1)
        for i in range(ctx.theta.size):
            if i in exclude:
                continue
            z = ctx.theta[i] + t0
            out[k] += -ctx.half_n[i] * (-1) ** (k - 1) * fk1 * z ** (-k)
            out[k] += ctx.quarter_g2[i] * (-1) ** k * fk * z ** (-k - 1)
        for i in range(ctx.theta_prime.size):
            w = ctx.theta_prime[i] - t0
            out[k] += ctx.half_n_prime[i] * fk1 * w ** (-k)
            out[k] += ctx.quarter_g2_prime[i] * fk * w ** (-k - 1)
    return out


def exp_series_derivatives(log_derivs: np.ndarray) -> np.ndarray:
    """ Derivatives F, F', ..., F^(m) of F = exp(phi) from phi, phi', ..., phi^(m)
    """
    m = log_derivs.size - 1
    out = np.zeros(m + 1, dtype=complex)
    out[0] = np.exp(log_derivs[0])
    for k in range(m):
        out[k + 1] = sum(math.comb(k, i) * log_derivs[i + 1] * out[k - i] for i in range(k + 1))
    return out
