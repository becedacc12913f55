""" Independent reference values: Imhof's real inversion along the vertical line, Monte Carlo from
    squared normal vectors, direct convolution of densities, sphere quadrature and closed forms.
    None of these use the deformed contours.
"""
from dataclasses import dataclass
import logging
import math
from multiprocessing import Pool
from typing import Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats
from tqdm import tqdm

from branchcut.exceptions import DuplicateRatesError, NoConvergenceError
from branchcut.inversion import pdf
from branchcut.qform import QuadraticFormSpec


class OracleDefaults(object):
    imhof_abs_tol = 1e-10
    # Head interval of the Imhof integral, in units of 1 / max |lambda|
    imhof_head = 20.0
    imhof_limit = 2000
    mc_shard_size = 1_000_000
    mc_min_samples = 10_000
    # Half width of the histogram window, in standard deviations
    mc_bandwidth = 0.01
    convolution_abs_tol = 1e-9
    convolution_rel_tol = 1e-9
    sphere_rel_tol = 1e-12


def _signed_terms(spec: QuadraticFormSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam = [1 / (2 * t.theta) for t in spec.positive] + [-1 / (2 * t.theta) for t in spec.negative]
    n = [t.n for t in spec.positive + spec.negative]
    delta = [t.delta for t in spec.positive + spec.negative]
    return np.array(lam), np.array(n, dtype=float), np.array(delta)


def _quad(f, a, b, what, **kwargs):
    out = integrate.quad(f, a, b, full_output=1, **kwargs)
    if len(out) > 3 and not out[1] < 1e3 * OracleDefaults.imhof_abs_tol:
        raise NoConvergenceError(what, f"[{a}, {b}]: {out[3].splitlines()[0]} (abs_err {out[1]})")
    return out[0]


def imhof_cdf(spec: QuadraticFormSpec, x: float) -> float:
    """ P(Q <= x) for Q = sum lambda_j chi2_(n_j)(delta_j) with signed lambdas:
        1/2 - (1/pi) integral over (0, inf) of sin(phase(u)) / (u rho(u))
        phase(u) = (1/2) sum [n atan(lambda u) + delta lambda u / (1 + lambda^2 u^2)] - x u / 2
        rho(u) = prod (1 + lambda^2 u^2)^(n/4) exp((1/2) sum delta lambda^2 u^2 / (1 + lambda^2 u^2))
        The oscillatory tail is split into cosine and sine weighted Fourier integrals.
    """
    lam, n, delta = _signed_terms(spec)
    omega = 0.5 * x

    def phase_without_x(u):
        lu = lam * u
        return 0.5 * np.sum(n * np.arctan(lu) + delta * lu / (1 + lu * lu))

    def log_rho(u):
        lu2 = (lam * u) ** 2
        return np.sum(0.25 * n * np.log1p(lu2) + 0.5 * delta * lu2 / (1 + lu2))

    def integrand(u):
        if u == 0:
            return 0.5 * float(np.sum(lam * (n + delta))) - omega
        return math.sin(phase_without_x(u) - omega * u) / (u * math.exp(log_rho(u)))

    head_end = OracleDefaults.imhof_head / float(np.max(np.abs(lam)))
    head = _quad(integrand, 0.0, head_end, "imhof_cdf head",
                 epsabs=OracleDefaults.imhof_abs_tol, epsrel=0.0, limit=OracleDefaults.imhof_limit)

    if omega == 0:
        tail = _quad(integrand, head_end, np.inf, "imhof_cdf tail",
                     epsabs=OracleDefaults.imhof_abs_tol, epsrel=0.0, limit=OracleDefaults.imhof_limit)
    else:
        # sin(phi - w u) = sin(phi) cos(w u) - cos(phi) sin(w u)
        w, sign = abs(omega), math.copysign(1.0, omega)

        def sin_part(u):
            return math.sin(phase_without_x(u)) / (u * math.exp(log_rho(u)))

        def cos_part(u):
            return math.cos(phase_without_x(u)) / (u * math.exp(log_rho(u)))

        tail = _quad(sin_part, head_end, np.inf, "imhof_cdf tail", weight="cos", wvar=w,
                     epsabs=OracleDefaults.imhof_abs_tol)
        tail -= sign * _quad(cos_part, head_end, np.inf, "imhof_cdf tail", weight="sin", wvar=w,
                             epsabs=OracleDefaults.imhof_abs_tol)

    survivor = 0.5 + (head + tail) / math.pi
    return 1.0 - survivor


@dataclass(frozen=True)
class McEstimate:
    x_grid: np.ndarray
    cdf: np.ndarray
    cdf_se: np.ndarray
    pdf: np.ndarray
    pdf_se: np.ndarray
    n_samples: int


def _mc_shard(spec: QuadraticFormSpec, x_grid: np.ndarray, half_width: float, n: int,
              seed: np.random.SeedSequence) -> Tuple[np.ndarray, np.ndarray]:
    # Q = sum_j +-lambda_j |Z_j + mu_j|^2 with |mu_j|^2 = delta_j on the first coordinate
    rng = np.random.default_rng(seed)
    q = np.zeros(n)
    for sign, terms in ((1.0, spec.positive), (-1.0, spec.negative)):
        for term in terms:
            z = rng.standard_normal((n, term.n))
            z[:, 0] += math.sqrt(term.delta)
            q += sign * term.lam * np.einsum("ij,ij->i", z, z)
    q.sort()
    below = np.searchsorted(q, x_grid, side="right")
    window = (np.searchsorted(q, x_grid + half_width, side="right")
              - np.searchsorted(q, x_grid - half_width, side="right"))
    return below, window


def mc_estimate(spec: QuadraticFormSpec, x_grid: Sequence[float], n_samples: int, seed: int,
                n_workers: int = 0, progress: bool = False) -> McEstimate:
    """ Empirical cdf and histogram density with binomial standard errors
        Parameters:
            - spec: any normalized spec
            - x_grid: evaluation points
            - n_samples: total draws, at least 1e4
            - seed: root seed; shards get spawned child seeds, so results do not depend on n_workers
            - n_workers: processes sharing the shards
        Returns:
            - McEstimate
    """
    if n_samples < OracleDefaults.mc_min_samples:
        raise ValueError(f"n_samples must be at least {OracleDefaults.mc_min_samples}, not {n_samples}")
    x_grid = np.asarray(x_grid, dtype=float)
    variance = sum(2 * t.lam ** 2 * (t.n + 2 * t.delta) for t in spec.positive + spec.negative)
    half_width = OracleDefaults.mc_bandwidth * math.sqrt(variance)

    size = OracleDefaults.mc_shard_size
    shard_sizes = [size] * (n_samples // size) + ([n_samples % size] if n_samples % size else [])
    children = np.random.SeedSequence(seed).spawn(len(shard_sizes))
    args_list = [(spec, x_grid, half_width, k, child) for k, child in zip(shard_sizes, children)]
    desc = f"[MC] {n_samples} samples"
    if n_workers > 0:
        with Pool(n_workers) as p:
            counts = p.starmap(_mc_shard, tqdm(args_list, total=len(args_list), desc=desc, disable=not progress))
    else:
        counts = [_mc_shard(*args) for args in tqdm(args_list, total=len(args_list), desc=desc,
                                                    disable=not progress)]

    below = np.sum([c[0] for c in counts], axis=0)
    window = np.sum([c[1] for c in counts], axis=0)
    p_cdf = below / n_samples
    p_win = window / n_samples
    logging.info(f"Monte Carlo with {len(shard_sizes)} shards, seed {seed}, bandwidth {half_width}")
    return McEstimate(
        x_grid=x_grid,
        cdf=p_cdf,
        cdf_se=np.sqrt(p_cdf * (1 - p_cdf) / n_samples),
        pdf=p_win / (2 * half_width),
        pdf_se=np.sqrt(p_win * (1 - p_win) / n_samples) / (2 * half_width),
        n_samples=n_samples,
    )


def convolve_pdf_diff(spec_x: QuadraticFormSpec, spec_y: QuadraticFormSpec, z: float) -> float:
    """ Density of X - Y at z as the integral over y >= 0 of f_X(y + z) f_Y(y) (z >= 0),
        or of f_X(y) f_Y(y - z) (z < 0)
    """
    if z >= 0:
        def integrand(y):
            return pdf(spec_x, y + z).value * pdf(spec_y, y).value
    else:
        def integrand(y):
            return pdf(spec_x, y).value * pdf(spec_y, y - z).value

    value, abs_err = integrate.quad(integrand, 0.0, np.inf, epsabs=OracleDefaults.convolution_abs_tol,
                                    epsrel=OracleDefaults.convolution_rel_tol, limit=500)
    logging.debug(f"convolution at z={z}: {value} +- {abs_err}")
    return value


def sphere_quadrature_s2(theta: Sequence[float], gamma_axis_index: int = 0, gamma: float = 0.0) -> float:
    """ Integral over the 2-sphere of exp(sum -theta_i x_i^2 + gamma x_a), with the azimuth around
        axis a integrated through I0:
        integral over u in [-1, 1] of exp(-theta_a u^2 + gamma u) 2 pi e^(-r (theta_b + theta_c)/2) I0(r (theta_c - theta_b)/2),
        r = 1 - u^2
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (3,):
        raise ValueError(f"theta must have three entries, got {theta.shape}")
    theta_a = theta[gamma_axis_index]
    theta_b, theta_c = np.delete(theta, gamma_axis_index)

    def integrand(u):
        r = 1 - u * u
        z = 0.5 * r * (theta_c - theta_b)
        # ive(0, z) = I0(z) e^(-|z|)
        log_value = -theta_a * u * u + gamma * u - 0.5 * r * (theta_b + theta_c) + abs(z)
        return 2 * math.pi * math.exp(log_value) * special.ive(0, z)

    value, _ = integrate.quad(integrand, -1.0, 1.0, epsabs=0.0, epsrel=OracleDefaults.sphere_rel_tol, limit=200)
    return value


def circle_bessel(theta: Sequence[float]) -> float:
    """ Bingham constant on the unit circle, 2 pi e^(-(theta1 + theta2)/2) I0((theta2 - theta1)/2) """
    theta1, theta2 = theta
    z = 0.5 * (theta2 - theta1)
    return 2 * math.pi * math.exp(-0.5 * (theta1 + theta2) + abs(z)) * special.ive(0, z)


def gamma_pdf(theta: float, n: int, x: float) -> float:
    """ Density of chi2_n / (2 theta), a gamma with shape n/2 and rate theta """
    return float(stats.gamma.pdf(x, a=0.5 * n, scale=1 / theta))


def gamma_cdf(theta: float, n: int, x: float) -> float:
    return float(special.gammainc(0.5 * n, theta * x)) if x > 0 else 0.0


def _hypoexponential_weights(rates: Sequence[float]) -> np.ndarray:
    rates = np.asarray(rates, dtype=float)
    if np.unique(rates).size != rates.size:
        raise DuplicateRatesError(rates)
    return np.array([np.prod([r_k / (r_k - r_i) for r_k in np.delete(rates, i)]) for i, r_i in enumerate(rates)])


def hypoexponential_pdf(rates: Sequence[float], x: float) -> float:
    """ Density of a sum of exponentials with distinct rates, sum_i w_i r_i e^(-r_i x) """
    if x < 0:
        return 0.0
    rates = np.asarray(rates, dtype=float)
    weights = _hypoexponential_weights(rates)
    return float(math.fsum(weights * rates * np.exp(-rates * x)))


def hypoexponential_cdf(rates: Sequence[float], x: float) -> float:
    if x <= 0:
        return 0.0
    rates = np.asarray(rates, dtype=float)
    weights = _hypoexponential_weights(rates)
    return float(math.fsum(weights * -np.expm1(-rates * x)))


def mc_outliers(estimate: McEstimate, reference: Sequence[float], n_sigma: float = 4.0) -> np.ndarray:
    """ Points where the Monte Carlo cdf is more than n_sigma standard errors away from reference """
    reference = np.asarray(reference, dtype=float)
    se = np.maximum(estimate.cdf_se, 1.0 / estimate.n_samples)
    return np.flatnonzero(np.abs(estimate.cdf - reference) > n_sigma * se)
