from argparse import ArgumentParser
import json
import logging
import math
from multiprocessing import Pool
import os
import sys
from typing import List, Optional, Sequence, Union

import ipdb  # noqa
import numpy as np
from tqdm import tqdm

from branchcut.checks import SUITES, run_suites
from branchcut.config import LOG_FPATH, LOG_LEVEL
from branchcut.difference import cdf_diff, pdf_diff, survivor_diff
from branchcut.directional import (
    BinghamParams,
    KentParams,
    bingham_const,
    complex_bingham_const,
    fisher_so3_const,
    fisher_so3_grad,
    kent_const,
)
from branchcut.exceptions import (
    DuplicateRatesError,
    EmptyGridError,
    InadmissibleRadiusError,
    NoConvergenceError,
    PoleEvaluationError,
    RouteUnavailableError,
    SaddleOutOfRangeError,
    SpecParseError,
    Theta0OutOfRangeError,
)
from branchcut.inversion import closed_form_applicable, quantile
from branchcut.qform import QuadraticFormSpec, load_spec
from branchcut.quadrature import QuadratureDefaults
from branchcut.spa import CgfContext, spa_cdf, spa_cdf_via_pdf, spa_normalization, spa_pdf

MaybePathLike = Union[os.PathLike, str]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3

# Errors that come from what the user asked for rather than from the numerics
USAGE_ERRORS = (
    SpecParseError,
    EmptyGridError,
    PoleEvaluationError,
    Theta0OutOfRangeError,
    SaddleOutOfRangeError,
    InadmissibleRadiusError,
    DuplicateRatesError,
    RouteUnavailableError,
    ValueError,
)


class CliDefaults(object):
    out = "csv"
    verbosity = 1
    n_workers = 0
    seed = 0
    suite = "all"
    float_format = "{:.17g}"


_EVALUATORS = {
    "pdf": lambda spec, s, theta0, tol: pdf_diff(spec, s, rel_tol=tol),
    "cdf": lambda spec, s, theta0, tol: cdf_diff(spec, s, theta0=theta0, rel_tol=tol),
    "survivor": lambda spec, s, theta0, tol: survivor_diff(spec, s, theta0=theta0, rel_tol=tol),
}


def evaluate_point(kind: str, spec: QuadraticFormSpec, s: float, theta0: Optional[float], tol: float) -> tuple:
    result = _EVALUATORS[kind](spec, s, theta0, tol)
    logging.debug(f"{kind}({s}) = {result.value} +- {result.abs_err} via {result.route.value}: {result.contour}")
    return s, result.value, result.abs_err


def _or_nan(approximation, *args) -> float:
    try:
        return approximation(*args)
    except SaddleOutOfRangeError as e:
        logging.debug(f"no saddlepoint: {e}")
        return math.nan


def spa_compare_point(spec: QuadraticFormSpec, s: float, tol: float, norm: Optional[float] = None) -> tuple:
    ctx = CgfContext(spec)
    exact_pdf = pdf_diff(spec, s, rel_tol=tol).value
    exact_cdf = cdf_diff(spec, s, rel_tol=tol).value
    approx_pdf = _or_nan(spa_pdf, ctx, s)
    approx_pdf_normalized = approx_pdf / norm if norm else math.nan
    approx_cdf = _or_nan(spa_cdf, ctx, s)
    approx_cdf_via_pdf = _or_nan(spa_cdf_via_pdf, ctx, s)

    def rel(approx, exact):
        return abs(approx - exact) / abs(exact) if exact != 0 else math.inf

    return (s, exact_pdf, approx_pdf, approx_pdf_normalized, exact_cdf, approx_cdf, approx_cdf_via_pdf,
            rel(approx_pdf, exact_pdf), rel(approx_pdf_normalized, exact_pdf),
            rel(approx_cdf, exact_cdf), rel(approx_cdf_via_pdf, exact_cdf))


SPA_COLUMNS = ("s", "exact_pdf", "spa_pdf", "spa_pdf_normalized", "exact_cdf", "spa_cdf", "spa_cdf_via_pdf",
               "rel_err_pdf", "rel_err_pdf_normalized", "rel_err_cdf", "rel_err_cdf_via_pdf")
GRID_COLUMNS = ("s", "value", "abs_err")


def parse_grid(text: str) -> np.ndarray:
    """ A:B:N -> N equally spaced points from A to B """
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise EmptyGridError(text)
    if n < 1 or (n > 1 and not a < b):
        raise EmptyGridError(text)
    return np.linspace(a, b, n) if n > 1 else np.array([a])


def parse_floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def format_rows(rows: Sequence[tuple], columns: Sequence[str], out: str) -> str:
    if out == "json":
        return json.dumps([dict(zip(columns, map(float, row))) for row in rows], indent=2)
    fmt = CliDefaults.float_format
    lines = [",".join(columns)]
    lines += [",".join(fmt.format(v) for v in row) for row in rows]
    return "\n".join(lines)


class BranchcutSystem(object):
    def __init__(self, verbosity: int = CliDefaults.verbosity, n_workers: int = CliDefaults.n_workers):
        self.verbosity = verbosity
        self.n_workers = n_workers

    def _log_print(self, msg, log_op):
        if self.verbosity > 0:
            print(msg, file=sys.stderr)

        log_op(msg)

    def _map(self, fn, args_list: List[tuple], desc: str) -> List[tuple]:
        # Results come back in grid order either way
        if self.n_workers > 0:
            with Pool(self.n_workers) as p:
                return p.starmap(
                    fn,
                    tqdm(args_list, total=len(args_list), desc=desc, disable=self.verbosity == 0)
                )
        return [fn(*args) for args in tqdm(args_list, total=len(args_list), desc=desc,
                                          disable=self.verbosity == 0)]

    def evaluate(
        self,
        kind: str,
        spec: QuadraticFormSpec,
        points: Sequence[float],
        theta0: Optional[float] = None,
        tol: float = QuadratureDefaults.rel_tol,
    ) -> List[tuple]:
        """ Evaluates pdf, cdf or survivor over points
            Parameters:
                - kind: one of pdf, cdf, survivor
                - spec: normalized spec, with or without a negative list
                - points: evaluation points
                - theta0: tilt for the distribution function
                - tol: relative quadrature tolerance
            Returns:
                - list of (s, value, abs_err) in the order of points
        """
        args_list = [(kind, spec, float(s), theta0, tol) for s in points]
        return self._map(evaluate_point, args_list, f"[{kind}] {len(args_list)} points")

    def spa_compare(self, spec: QuadraticFormSpec, points: Sequence[float],
                    tol: float = QuadratureDefaults.rel_tol) -> List[tuple]:
        if closed_form_applicable(spec):
            self._log_print("exact values from the closed-form residue route", logging.info)
        norm = _or_nan(spa_normalization, CgfContext(spec))
        self._log_print(f"saddlepoint density integrates to {norm:.6g}", logging.info)
        args_list = [(spec, float(s), tol, norm) for s in points]
        return self._map(spa_compare_point, args_list, f"[spa-compare] {len(args_list)} points")


def _add_grid_arguments(parser: ArgumentParser, with_theta0: bool = True) -> None:
    parser.add_argument(
        "--spec",
        required=True,
        help="spec file (JSON with `positive` and optional `negative` term lists)"
    )
    parser.add_argument(
        "--at",
        default=None,
        type=float,
        help="single evaluation point"
    )
    parser.add_argument(
        "--grid",
        default=None,
        help="evaluation grid in form A:B:N"
    )
    if with_theta0:
        parser.add_argument(
            "--theta0",
            default=None,
            type=float,
            help="tilt used by the distribution function identity"
        )
    parser.add_argument(
        "--out",
        default=CliDefaults.out,
        choices=("csv", "json"),
        help="output format"
    )
    parser.add_argument(
        "--tol",
        default=QuadratureDefaults.rel_tol,
        type=float,
        help="relative quadrature tolerance"
    )


def parse_args(argv: Optional[Sequence[str]] = None):
    parser = ArgumentParser(description="densities and distribution functions of quadratic forms in normals")
    parser.add_argument(
        "--verbosity",
        default=CliDefaults.verbosity,
        type=int,
        help="0 silences progress bars and messages on standard error"
    )
    parser.add_argument(
        "--n_workers",
        default=CliDefaults.n_workers,
        type=int,
        help="number of workers to dispatch for grid evaluation"
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="drop into ipdb on uncaught exceptions"
    )
    parser.add_argument(
        "-o", "--fpath_out",
        default=None,
        help="output filepath, standard output when omitted"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for kind in ("pdf", "cdf", "survivor"):
        _add_grid_arguments(subparsers.add_parser(kind, help=f"{kind} over a point or grid"))

    sub = subparsers.add_parser("quantile", help="inverse of the distribution function")
    sub.add_argument("--spec", required=True, help="spec file")
    sub.add_argument("--p", required=True, type=float, help="probability in (0, 1)")

    sub = subparsers.add_parser("spa-compare", help="saddlepoint approximations against the exact values")
    _add_grid_arguments(sub, with_theta0=False)

    sub = subparsers.add_parser("bingham", help="Bingham normalizing constant")
    sub.add_argument("--theta", required=True, help="comma separated thetas, any sign")
    sub.add_argument("--n", default=None, help="comma separated multiplicities, all 1 when omitted")

    sub = subparsers.add_parser("fisher-so3", help="Fisher matrix constant on SO(3)")
    sub.add_argument("--phi", required=True, help="comma separated phi1,phi2,phi3")
    sub.add_argument("--grad", action="store_true", help="also print the gradient of the log constant")
    sub.add_argument("--normalized", action="store_true", help="divide by the value at phi = 0")

    sub = subparsers.add_parser("cbingham", help="complex Bingham constant")
    sub.add_argument("--theta", required=True, help="comma separated distinct thetas")

    sub = subparsers.add_parser("kent", help="Kent (FB5) constant")
    sub.add_argument("--beta", required=True, type=float, help="ovalness")
    sub.add_argument("--kappa", default=0.0, type=float, help="concentration")
    sub.add_argument("--radius", default=None, type=float, help="contour radius in (beta/2, beta)")

    sub = subparsers.add_parser("check", help="acceptance suites")
    sub.add_argument(
        "--suite",
        default=CliDefaults.suite,
        choices=tuple(SUITES) + ("all",),
        help="which suite to run"
    )
    sub.add_argument("--seed", default=CliDefaults.seed, type=int, help="seed for the randomized cases")

    return parser.parse_args(argv)


def _points(args) -> np.ndarray:
    if args.grid is not None:
        return parse_grid(args.grid)
    if args.at is not None:
        return np.array([args.at])
    raise EmptyGridError("<none>")


def _emit(text: str, fpath_out: Optional[MaybePathLike]) -> None:
    if fpath_out is None:
        print(text)
    else:
        with open(fpath_out, 'w') as fid:
            fid.write(text + "\n")


def run(args) -> int:
    controller = BranchcutSystem(verbosity=args.verbosity, n_workers=args.n_workers)
    command = args.command

    if command in _EVALUATORS:
        spec = load_spec(args.spec)
        rows = controller.evaluate(command, spec, _points(args), theta0=args.theta0, tol=args.tol)
        _emit(format_rows(rows, GRID_COLUMNS, args.out), args.fpath_out)

    elif command == "spa-compare":
        spec = load_spec(args.spec)
        rows = controller.spa_compare(spec, _points(args), tol=args.tol)
        _emit(format_rows(rows, SPA_COLUMNS, args.out), args.fpath_out)

    elif command == "quantile":
        spec = load_spec(args.spec)
        x = quantile(spec, args.p, cdf_fn=lambda spec, x: cdf_diff(spec, x))
        _emit(CliDefaults.float_format.format(x), args.fpath_out)

    elif command == "bingham":
        theta = parse_floats(args.theta)
        n = tuple(int(v) for v in parse_floats(args.n)) if args.n else ()
        _emit(CliDefaults.float_format.format(bingham_const(BinghamParams(theta, n))), args.fpath_out)

    elif command == "fisher-so3":
        phi = parse_floats(args.phi)
        lines = [CliDefaults.float_format.format(fisher_so3_const(phi, normalized=args.normalized))]
        if args.grad:
            lines.append(",".join(CliDefaults.float_format.format(g) for g in fisher_so3_grad(phi)))
        _emit("\n".join(lines), args.fpath_out)

    elif command == "cbingham":
        value = complex_bingham_const(parse_floats(args.theta))
        _emit(CliDefaults.float_format.format(value), args.fpath_out)

    elif command == "kent":
        value = kent_const(KentParams(beta=args.beta, kappa=args.kappa), radius=args.radius)
        _emit(CliDefaults.float_format.format(value), args.fpath_out)

    elif command == "check":
        results = run_suites(args.suite, seed=args.seed)
        for result in results:
            controller._log_print(result.describe(), logging.info)
        n_passed = sum(r.passed for r in results)
        _emit(f"{n_passed}/{len(results)} pass", args.fpath_out)
        return EXIT_OK if n_passed == len(results) else EXIT_CHECK_FAILED

    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(filename=LOG_FPATH, level=LOG_LEVEL)
    if args.debug:
        with ipdb.launch_ipdb_on_exception():
            return run(args)
    try:
        return run(args)
    except NoConvergenceError as e:
        logging.error(f"Caught {e}")
        print(e, file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except USAGE_ERRORS as e:
        logging.error(f"Caught {e}")
        print(e, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
