""" Acceptance suites behind the `check` subcommand. Every case reports the achieved error against its tolerance.
"""
from dataclasses import dataclass
import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np

from branchcut.difference import cdf_diff, pdf_diff, survivor_diff
from branchcut.directional import BinghamParams, bingham_const, complex_bingham_const
from branchcut.inversion import cdf, pdf, pdf_central_simple, pdf_general_contour
from branchcut.oracles import (
    circle_bessel,
    convolve_pdf_diff,
    gamma_cdf,
    gamma_pdf,
    hypoexponential_cdf,
    hypoexponential_pdf,
    imhof_cdf,
    mc_estimate,
    mc_outliers,
)
from branchcut.qform import QuadraticFormSpec, moments, normalize_spec, rescale_shift, spec_from_lambdas


class CheckDefaults(object):
    table1_tol = 1e-6
    gamma_rtol = 1e-10
    hypoexp_rtol = 1e-9
    route_rtol = 1e-9
    theta0_rtol = 1e-7
    rescale_rtol = 1e-8
    imhof_atol = 1e-6
    convolution_atol = 1e-6
    n_random_specs = 30
    mc_samples = 10_000_000
    mc_sigma = 4.0


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    target: float
    tolerance: float
    relative: bool = False
    error_message: str = ""

    @property
    def error(self) -> float:
        if not math.isfinite(self.value):
            return math.inf
        delta = abs(self.value - self.target)
        return delta / abs(self.target) if self.relative else delta

    @property
    def passed(self) -> bool:
        return not self.error_message and self.error <= self.tolerance

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        kind = "rel" if self.relative else "abs"
        s = f"[{status}] {self.suite}/{self.name}: {self.value:.10g} vs {self.target:.10g} " \
            f"({kind} err {self.error:.3g}, tol {self.tolerance:.1g})"
        if self.error_message:
            s += f" - {self.error_message}"
        return s


def _case(suite: str, name: str, compute: Callable[[], float], target, tolerance: float,
          relative: bool = False) -> CheckResult:
    """ target may be a callable, evaluated under the same error handling as compute """
    try:
        target = float(target()) if callable(target) else float(target)
        value = float(compute())
    except Exception as e:
        logging.error(f"Caught {e!r} in {suite}/{name}")
        target = target if isinstance(target, float) else math.nan
        return CheckResult(suite, name, math.nan, target, tolerance, relative, repr(e))
    return CheckResult(suite, name, value, target, tolerance, relative)


# Each row: positive and negative (lambda, n, delta) triples, then (s, survivor) targets
TABLE1_ROWS = {
    "row1": (
        [(0.2, 6, 0.0), (0.1, 4, 0.0), (0.1 / 3, 2, 0.0)],
        [(0.4, 2, 0.0), (0.2, 4, 0.0), (0.2 / 3, 6, 0.0)],
        [(-2.0, 0.9102254), (0.0, 0.4061061), (2.5, 0.0097598)],
    ),
    "row2": (
        [(0.35, 6, 6.0), (0.15, 2, 2.0)],
        [(0.35, 1, 6.0), (0.15, 1, 2.0)],
        [(-2.0, 0.921792), (2.0, 0.4778933), (7.0, 0.0396319)],
    ),
    "row3": (
        [(0.1, 7, 2.0), (0.05, 4, 0.0), (0.1 / 6, 2, 0.0), (1.4 / 6, 1, 6.0)],
        [(0.2, 2, 0.0), (0.1, 4, 0.0), (0.2 / 6, 6, 0.0), (0.7 / 6, 6, 6.0), (0.05, 2, 2.0)],
        [(-3.0, 0.9861469), (0.0, 0.5170232), (4.0, 0.0152041)],
    ),
}


def table1_spec(row: str) -> QuadraticFormSpec:
    positive, negative, _ = TABLE1_ROWS[row]
    return spec_from_lambdas(positive, negative)


def table1_suite(seed: Optional[int] = None) -> List[CheckResult]:
    results = []
    for row, (_, _, targets) in TABLE1_ROWS.items():
        spec = table1_spec(row)
        for s, target in targets:
            results.append(_case("table1", f"{row} survivor({s})",
                                 lambda spec=spec, s=s: survivor_diff(spec, s).value,
                                 target, CheckDefaults.table1_tol))
    return results


def closed_forms_suite(seed: Optional[int] = None) -> List[CheckResult]:
    results = []
    theta = 0.7
    for n in range(1, 9):
        spec = normalize_spec([(theta, n, 0.0)])
        for x in (0.5, 2.0, 6.0):
            results.append(_case("closed-forms", f"chi2_{n} pdf({x})", lambda spec=spec, x=x: pdf(spec, x).value,
                                 gamma_pdf(theta, n, x), CheckDefaults.gamma_rtol, relative=True))
            results.append(_case("closed-forms", f"chi2_{n} cdf({x})", lambda spec=spec, x=x: cdf(spec, x).value,
                                 gamma_cdf(theta, n, x), CheckDefaults.gamma_rtol, relative=True))

    for rates in ((0.5, 1.3), (0.5, 1.3, 2.1), (0.4, 0.9, 1.7, 3.2)):
        spec = normalize_spec([(r, 2, 0.0) for r in rates])
        for x in (0.3, 1.5, 5.0):
            results.append(_case("closed-forms", f"hypoexp{rates} pdf({x})", lambda spec=spec, x=x: pdf(spec, x).value,
                                 hypoexponential_pdf(rates, x), CheckDefaults.hypoexp_rtol, relative=True))
            results.append(_case("closed-forms", f"hypoexp{rates} cdf({x})", lambda spec=spec, x=x: cdf(spec, x).value,
                                 hypoexponential_cdf(rates, x), CheckDefaults.hypoexp_rtol, relative=True))

    results.append(_case("closed-forms", "bingham circle (0, 2)",
                         lambda: bingham_const(BinghamParams((0.0, 2.0))),
                         circle_bessel((0.0, 2.0)), 1e-8, relative=True))
    for theta in ((1.0, 2.0), (0.5, 1.5, 3.0), (0.3, 1.1, 2.0, 2.8)):
        results.append(_case("closed-forms", f"complex bingham {theta}",
                             lambda theta=theta: bingham_const(BinghamParams(theta, n=(2,) * len(theta))),
                             complex_bingham_const(theta), CheckDefaults.route_rtol, relative=True))
    return results


def identities_suite(seed: Optional[int] = None) -> List[CheckResult]:
    results = []
    spec = normalize_spec([(0.8, 1, 0.0), (1.7, 1, 0.0), (3.1, 2, 0.0), (4.5, 1, 0.0)])
    for s in (0.4, 1.2, 3.0):
        results.append(_case("identities", f"central-simple vs contour at {s}",
                             lambda s=s: pdf_central_simple(spec, s).value,
                             lambda s=s: pdf_general_contour(spec, s).value, CheckDefaults.route_rtol, relative=True))

    noncentral = normalize_spec([(0.8, 1, 0.5), (1.7, 3, 0.0), (3.1, 2, 1.2)])

    def reference():
        return cdf(noncentral, 1.5, theta0=1.0).value

    for theta0 in (0.25, 4.0):
        results.append(_case("identities", f"cdf theta0={theta0}",
                             lambda theta0=theta0: cdf(noncentral, 1.5, theta0=theta0).value,
                             reference, CheckDefaults.theta0_rtol, relative=True))

    for s, c in ((0.7, 0.3), (2.5, -1.0)):
        def rescaled(s=s, c=c):
            shifted, prefactor = rescale_shift(noncentral, s, c)
            return prefactor * pdf(shifted, 1.0).value
        results.append(_case("identities", f"rescale s={s} c={c}", rescaled,
                             lambda s=s: pdf(noncentral, s).value, CheckDefaults.rescale_rtol, relative=True))

    difference = spec_from_lambdas([(0.5, 2, 0.0), (0.2, 1, 1.0)], [(0.4, 1, 0.0)])
    results.append(_case("identities", "difference cdf theta0 0.5 vs 1.0",
                         lambda: cdf_diff(difference, 0.3, theta0=1.0).value,
                         lambda: cdf_diff(difference, 0.3, theta0=0.5).value, CheckDefaults.theta0_rtol, relative=True))
    return results


def _random_spec(rng: np.random.Generator) -> QuadraticFormSpec:
    n_pos = int(rng.integers(1, 4))
    n_neg = int(rng.integers(0, 3))

    def terms(k):
        out = []
        for _ in range(k):
            delta = float(rng.uniform(0, 6)) if rng.random() < 0.5 else 0.0
            out.append((float(rng.uniform(0.1, 1.0)), int(rng.integers(1, 5)), delta))
        return out

    return spec_from_lambdas(terms(n_pos), terms(n_neg))


def oracles_suite(seed: Optional[int] = 0, n_specs: int = CheckDefaults.n_random_specs,
                  mc_samples: int = CheckDefaults.mc_samples) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for k in range(n_specs):
        spec = _random_spec(rng)
        mean, variance = moments(spec)
        x = mean + math.sqrt(variance) * float(rng.normal())
        results.append(_case("oracles", f"imhof #{k} {spec} at {x:.4g}",
                             lambda spec=spec, x=x: cdf_diff(spec, x).value,
                             lambda spec=spec, x=x: imhof_cdf(spec, x), CheckDefaults.imhof_atol))

    exp1 = normalize_spec([(1.0, 2, 0.0)])
    exp2 = normalize_spec([(2.0, 2, 0.0)])
    difference = normalize_spec([(1.0, 2, 0.0)], [(2.0, 2, 0.0)])
    for z in (-0.5, 0.0, 1.0):
        results.append(_case("oracles", f"Exp(1)-Exp(2) convolution at {z}",
                             lambda z=z: pdf_diff(difference, z).value,
                             lambda z=z: convolve_pdf_diff(exp1, exp2, z), CheckDefaults.convolution_atol))

    row2 = table1_spec("row2")
    grid = np.array([-2.0, 2.0, 7.0])
    estimate = mc_estimate(row2, grid, mc_samples, seed if seed is not None else 0)
    reference = np.array([cdf_diff(row2, x).value for x in grid])
    outliers = set(mc_outliers(estimate, reference, CheckDefaults.mc_sigma))
    for i, x in enumerate(grid):
        se = float(estimate.cdf_se[i])
        results.append(CheckResult("oracles", f"monte carlo row2 cdf({x}) within {CheckDefaults.mc_sigma} SE",
                                   float(estimate.cdf[i]), float(reference[i]),
                                   CheckDefaults.mc_sigma * max(se, 1.0 / mc_samples),
                                   error_message="outside the band" if i in outliers else ""))
    return results


SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "table1": table1_suite,
    "closed-forms": closed_forms_suite,
    "identities": identities_suite,
    "oracles": oracles_suite,
}


def run_suites(name: str, seed: Optional[int] = 0) -> List[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    results = []
    for suite in names:
        logging.info(f"Running suite {suite} with seed {seed}")
        results += SUITES[suite](seed=seed)
    return results
