from dataclasses import dataclass
from enum import Enum
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from branchcut.exceptions import NoConvergenceError
from branchcut.qform import BranchCutLayout, QuadraticFormSpec


class QuadratureDefaults(object):
    rel_tol = 1e-10
    composite_rel_tol = 1e-8
    abs_tol = 0.0
    # scipy.integrate.quad subinterval limit (about 20 bisection levels on hard integrands)
    max_subintervals = 500
    max_evals = 1_000_000
    circle_n0 = 64
    circle_n_max = 2 ** 17
    # Roundoff allowance for the circle rule, in units of machine epsilon
    circle_roundoff = 64
    semi_infinite_step = 1.0
    max_doublings = 60


class ContourDefaults(object):
    # Margins are fractions of the gap to the nearest excluded singularity
    cut_margin = 0.25
    isolated_pole_margin = 0.5
    max_right_margin = 0.6
    keyhole_rho = 0.5
    keyhole_max_rho = 0.75
    keyhole_nu = 0.1
    # Right-hand margins shrink to about 2/s so that exp(s t) costs at most e^2 in precision
    right_margin_s = 2.0
    # Cap on s * nu, keeps the keyhole rays from oscillating too much
    keyhole_max_phase = 40.0
    min_margin_fraction = 0.1


@dataclass(frozen=True)
class QuadratureResult:
    value: Union[float, complex]
    abs_err: float
    n_evals: int

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(self.value + other.value, self.abs_err + other.abs_err,
                                self.n_evals + other.n_evals)

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(self.value * factor, abs(factor) * self.abs_err, self.n_evals)


RealFunction = Callable[[float], float]


def _l1_norm(f, a, b, points=None, weight=None, wvar=None) -> float:
    """ Rough integral of |f| (times the weight for algebraic weights) on [a, b] """
    kwargs = dict(epsrel=1e-3, epsabs=0.0, limit=QuadratureDefaults.max_subintervals, full_output=1)
    if weight == "alg":
        kwargs.update(weight="alg", wvar=wvar)
    elif points is not None and len(points) > 0 and weight is None and math.isfinite(b):
        kwargs.update(points=points)
    norm = integrate.quad(lambda x: abs(f(x)), a, b, **kwargs)[0]
    return norm if math.isfinite(norm) else 0.0


def _quad_real(f, a, b, rel_tol, abs_tol, points=None, weight=None, wvar=None, what="quad"):
    kwargs = dict(epsrel=rel_tol, epsabs=abs_tol, limit=QuadratureDefaults.max_subintervals, full_output=1)
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)
    elif points is not None and len(points) > 0:
        kwargs.update(points=points)
    out = integrate.quad(f, a, b, **kwargs)
    value, abs_err, info = out[0], out[1], out[2]
    n_evals = int(info.get("neval", 0)) if isinstance(info, dict) else 0
    if len(out) > 3:
        # scipy reports a problem; accept it when the error estimate is still within reach
        tolerance = max(abs_tol, 100 * rel_tol * abs(value))
        if math.isfinite(value) and not abs_err <= tolerance:
            # near-zero values are judged against the size of |f|
            tolerance = max(tolerance, 100 * rel_tol * _l1_norm(f, a, b, points, weight, wvar))
        if not abs_err <= tolerance or not math.isfinite(value):
            raise NoConvergenceError(what, f"[{a}, {b}]: {out[3].splitlines()[0]} "
                                           f"(value {value}, abs_err {abs_err})")
        logging.debug(f"{what} on [{a}, {b}] accepted despite: {out[3].splitlines()[0]}")
    if n_evals > QuadratureDefaults.max_evals:
        raise NoConvergenceError(what, f"{n_evals} evaluations")
    return value, abs_err, n_evals


def integrate_finite(
    f: Callable[[float], Union[float, complex]],
    a: float,
    b: float,
    rel_tol: float = QuadratureDefaults.rel_tol,
    abs_tol: float = QuadratureDefaults.abs_tol,
    points: Optional[Sequence[float]] = None,
    weight: Optional[str] = None,
    wvar=None,
    complex_valued: bool = False,
) -> QuadratureResult:
    """ Adaptive Gauss-Kronrod integration of f on [a, b]
        Parameters:
            - f: scalar integrand, finite on (a, b)
            - a, b: limits, a < b
            - rel_tol, abs_tol: target accuracy
            - points: interior break points
            - weight, wvar: algebraic endpoint weights as in scipy.integrate.quad
            - complex_valued: integrate real and imaginary parts separately
        Returns:
            - QuadratureResult
    """
    if not a < b:
        raise ValueError(f"integration limits must satisfy a < b, got [{a}, {b}]")

    if complex_valued:
        re = _quad_real(lambda x: f(x).real, a, b, rel_tol, abs_tol, points, weight, wvar, "integrate_finite")
        im = _quad_real(lambda x: f(x).imag, a, b, rel_tol, abs_tol, points, weight, wvar, "integrate_finite")
        return QuadratureResult(complex(re[0], im[0]), math.hypot(re[1], im[1]), re[2] + im[2])

    value, abs_err, n_evals = _quad_real(f, a, b, rel_tol, abs_tol, points, weight, wvar, "integrate_finite")
    return QuadratureResult(value, abs_err, n_evals)


def integrate_semi_infinite(
    f: RealFunction,
    a: float = 0.0,
    rel_tol: float = QuadratureDefaults.rel_tol,
    abs_tol: float = QuadratureDefaults.abs_tol,
    points: Optional[Sequence[float]] = None,
) -> QuadratureResult:
    """ Integrates a Gaussian-decaying f on [a, inf) by truncating at U where
        |f(U)| (U - a) drops below rel_tol times the running value
    """
    width = QuadratureDefaults.semi_infinite_step
    total = QuadratureResult(0.0, 0.0, 0)
    magnitude = 0.0
    lower = a
    for _ in range(QuadratureDefaults.max_doublings):
        upper = a + width
        inside = [p for p in (points or ()) if lower < p < upper]
        piece = integrate_finite(f, lower, upper, rel_tol=rel_tol, abs_tol=abs_tol, points=inside)
        total = total + piece
        magnitude += abs(piece.value)
        tail = abs(f(upper)) * max(width, 1.0)
        if tail <= max(rel_tol * max(abs(total.value), magnitude), abs_tol):
            return QuadratureResult(total.value, total.abs_err + tail, total.n_evals + 1)
        lower = upper
        width *= 2
    raise NoConvergenceError("integrate_semi_infinite", f"integrand still {tail} at u={a + width}")


def circle_trapezoid(f: Callable[[np.ndarray], np.ndarray], center: float, radius: float, n: int) -> complex:
    """ (1/2 pi i) times the n-point trapezoidal approximation of the contour integral of f """
    u = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * u)
    return complex(radius * np.mean(f(center + radius * e) * e))


def integrate_circle(
    f: Callable[[np.ndarray], np.ndarray],
    center: float,
    radius: float,
    rel_tol: float = QuadratureDefaults.rel_tol,
    residue_normalized: bool = True,
) -> QuadratureResult:
    """ Periodic trapezoidal rule on t = center + radius e^(iu), doubling the node count
        from 64 and reusing previous nodes
        Parameters:
            - f: vectorized complex integrand, analytic in an annulus around the circle
            - center, radius: circle geometry
            - residue_normalized: return (1/2 pi i) times the integral when True
        Returns:
            - QuadratureResult with complex value
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, not {radius}")

    n = QuadratureDefaults.circle_n0
    u = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * u)
    values = f(center + radius * e) * e
    weighted_sum = values.sum()
    magnitude = np.abs(values).sum()
    estimate = radius * weighted_sum / n
    eps = np.finfo(float).eps

    while n < QuadratureDefaults.circle_n_max:
        u_new = 2 * np.pi * (np.arange(n) + 0.5) / n
        e_new = np.exp(1j * u_new)
        values_new = f(center + radius * e_new) * e_new
        weighted_sum += values_new.sum()
        magnitude += np.abs(values_new).sum()
        n *= 2
        previous, estimate = estimate, radius * weighted_sum / n
        delta = abs(estimate - previous)
        mean_size = radius * magnitude / n
        roundoff = QuadratureDefaults.circle_roundoff * eps * mean_size
        # near-cancelling loops are judged against the mean size of |f|
        if delta <= max(rel_tol * max(abs(estimate), mean_size), roundoff):
            scale = 1.0 if residue_normalized else 2j * np.pi
            return QuadratureResult(complex(estimate * scale), float(abs(scale) * delta), n)

    raise NoConvergenceError("integrate_circle",
                             f"center {center}, radius {radius}: {n} nodes, last change {delta}")


# Contour geometry ----------------------------------------------------------

class PieceKind(str, Enum):
    SEGMENT = "real-segment"
    SEMI_INFINITE = "semi-infinite"
    CIRCLE = "circle"
    KEYHOLE = "keyhole-rays"
    RESIDUE = "residue"


@dataclass(frozen=True)
class ContourPiece:
    """ One closed counterclockwise loop of the deformed Bromwich contour.
        `span` gives the enclosed thetas (pole at t = -theta); `exclude` lists the
        positive-list factors removed analytically from the kernel.
    """
    kind: PieceKind
    span: Tuple[float, float]
    exclude: Tuple[int, ...] = ()
    center: Optional[float] = None
    radius: Optional[float] = None
    order: Optional[int] = None
    rho: Optional[float] = None
    nu: Optional[float] = None
    interior: Tuple[float, ...] = ()

    def describe(self) -> str:
        a, b = self.span
        if self.kind == PieceKind.CIRCLE:
            return f"circle[{a:.6g},{b:.6g}](c={self.center:.6g},r={self.radius:.6g})"
        if self.kind == PieceKind.KEYHOLE:
            return f"keyhole[{a:.6g},inf)(rho={self.rho:.6g},nu={self.nu:.6g})"
        if self.kind == PieceKind.RESIDUE:
            return f"residue[{a:.6g}](order={self.order})"
        if self.kind == PieceKind.SEMI_INFINITE:
            return f"semi-infinite[{a:.6g},inf)"
        return f"segment[{a:.6g},{b:.6g}]"


@dataclass(frozen=True)
class ContourPlan:
    pieces: Tuple[ContourPiece, ...]
    s: float
    collapsed: bool = True

    def describe(self) -> str:
        return " + ".join(p.describe() for p in self.pieces)

    def margin_violations(self, spec: QuadraticFormSpec) -> List[Tuple[str, float, float]]:
        """ Singularities outside a circle's span lying within 10% of its radius
            Returns:
                - list of (piece description, singular point t, distance to circle / radius)
        """
        singular = [-t.theta for t in spec.positive] + [t.theta for t in spec.negative]
        violations = []
        for piece in self.pieces:
            if piece.kind != PieceKind.CIRCLE:
                continue
            a, b = piece.span
            for loc in singular:
                if -b <= loc <= -a:
                    continue
                relative = abs(abs(loc - piece.center) - piece.radius) / piece.radius
                if relative < ContourDefaults.min_margin_fraction:
                    violations.append((piece.describe(), loc, relative))
        return violations


def _gaps(thetas: np.ndarray, a: float, b: float) -> Tuple[float, float]:
    """ Distances from [a, b] to the nearest smaller theta (or to 0) and to the nearest larger theta """
    smaller = thetas[thetas < a]
    larger = thetas[thetas > b]
    gap_right = a - smaller.max() if smaller.size else a
    gap_left = larger.min() - b if larger.size else math.inf
    return gap_right, gap_left


def _per_s(c: float, s: float) -> float:
    return c / s if s > 0 else math.inf


def _right_margin(base: float, gap_right: float, members, a: float, s: float) -> float:
    # Non-central members need room to the right: exp(gamma2 / (4 d)) against exp(-s d)
    target = min(base, _per_s(ContourDefaults.right_margin_s, s))
    for theta, gamma2 in members:
        if gamma2 > 0:
            target = max(target, _per_s(math.sqrt(gamma2) / 2, math.sqrt(s)) - (theta - a))
    return min(target, ContourDefaults.max_right_margin * gap_right)


def _circle_piece(thetas, gamma2s, a, b, exclude, s, base_factor) -> ContourPiece:
    gap_right, gap_left = _gaps(thetas, a, b)
    base = base_factor * min(gap_right, gap_left)
    members = [(th, g2) for th, g2 in zip(thetas, gamma2s) if a <= th <= b]
    m_right = _right_margin(base, gap_right, members, a, s)
    m_left = base
    t_right, t_left = -a + m_right, -b - m_left
    return ContourPiece(
        kind=PieceKind.CIRCLE,
        span=(a, b),
        exclude=exclude,
        center=0.5 * (t_left + t_right),
        radius=0.5 * (t_right - t_left),
        interior=tuple(th for th in thetas if a < th < b),
    )


def plan_contours(layout: BranchCutLayout, spec: QuadraticFormSpec, s: float, collapse: bool = True) -> ContourPlan:
    """ Turns a branch cut layout into concrete loops for the evaluation point s
        Parameters:
            - layout: branch_layout(spec)
            - spec: the spec, for non-centralities and the negative list
            - s: positive evaluation point
            - collapse: shrink central half-order cuts onto the real axis; False forces circles
        Returns:
            - ContourPlan
    """
    thetas = spec.thetas
    gamma2s = spec.gamma2s
    pieces = []

    for cut in layout.finite_cuts:
        if collapse and cut.collapsible:
            pieces.append(ContourPiece(PieceKind.SEGMENT, (cut.left, cut.right), exclude=cut.endpoint_indices))
        else:
            pieces.append(_circle_piece(thetas, gamma2s, cut.left, cut.right, (), s, ContourDefaults.cut_margin))

    for pole in layout.isolated_even_poles:
        if pole.noncentral:
            pieces.append(_circle_piece(thetas, gamma2s, pole.location, pole.location, (), s,
                                        ContourDefaults.isolated_pole_margin))
        else:
            pieces.append(ContourPiece(PieceKind.RESIDUE, (pole.location, pole.location),
                                       exclude=(pole.index,), order=pole.order))

    cut = layout.unbounded_cut
    if cut is not None:
        if collapse and cut.collapsible:
            pieces.append(ContourPiece(PieceKind.SEMI_INFINITE, (cut.start, math.inf),
                                       exclude=(cut.endpoint_index,)))
        else:
            pieces.append(_keyhole_piece(thetas, gamma2s, cut, s))

    plan = ContourPlan(pieces=tuple(pieces), s=s, collapsed=collapse)
    for desc, loc, relative in plan.margin_violations(spec):
        logging.warning(f"{desc}: singularity at t={loc:.6g} within {relative:.3g} radii of the contour")
    logging.debug(f"contour plan at s={s}: {plan.describe()}")
    return plan


def _keyhole_piece(thetas, gamma2s, cut, s) -> ContourPiece:
    start = cut.start
    smaller = thetas[thetas < start]
    gap = start - smaller.max() if smaller.size else start
    rho = min(ContourDefaults.keyhole_rho * gap, _per_s(ContourDefaults.right_margin_s, s))
    gamma2_end = gamma2s[cut.endpoint_index]
    if gamma2_end > 0:
        rho = min(max(rho, _per_s(math.sqrt(gamma2_end) / 2, math.sqrt(s))), ContourDefaults.keyhole_max_rho * gap)
    under = gamma2s[thetas >= start]
    gamma2_max = under.max() if under.size else 0.0
    height = max(ContourDefaults.keyhole_nu * gap, gamma2_max / 8)
    nu = max(rho, min(height, _per_s(ContourDefaults.keyhole_max_phase, s)))
    return ContourPiece(
        kind=PieceKind.KEYHOLE,
        span=(start, math.inf),
        rho=rho,
        nu=nu,
        interior=tuple(th for th in thetas if th > start),
    )
