from dataclasses import dataclass, field, replace
import json
import logging
import math
from numbers import Integral
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union
import os

import numpy as np

from branchcut.exceptions import (
    EmptyPositiveListError,
    NegativeNoncentralityError,
    NonIntegerDofError,
    NonPositiveThetaError,
    NotAPositiveCombinationError,
    ShiftTooLargeError,
    SpecParseError,
    Theta0OutOfRangeError,
)

MaybePathLike = Union[os.PathLike, str]


class SpecDefaults(object):
    # Two thetas are the same pole iff their relative difference is below this
    theta_rtol = 1e-12
    version = "1.0"


def _coerce_dof(n) -> int:
    if isinstance(n, bool):
        raise NonIntegerDofError(n)
    if isinstance(n, Integral):
        n = int(n)
    elif isinstance(n, float) and n.is_integer():
        n = int(n)
    else:
        raise NonIntegerDofError(n)
    if n < 1:
        raise NonIntegerDofError(n)
    return n


@dataclass(frozen=True)
class ChiSquareTerm:
    """ One scaled non-central chi-square component (1/(2 theta)) chi2_n(delta),
        delta = gamma2 / (2 theta).
    """
    theta: float
    n: int
    gamma2: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        gamma2 = float(self.gamma2)
        if not theta > 0 or not math.isfinite(theta):
            raise NonPositiveThetaError(self.theta)
        if not gamma2 >= 0 or not math.isfinite(gamma2):
            raise NegativeNoncentralityError(self.gamma2)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "gamma2", gamma2)
        object.__setattr__(self, "n", _coerce_dof(self.n))

    @property
    def lam(self) -> float:
        return 1 / (2 * self.theta)

    @property
    def delta(self) -> float:
        return self.gamma2 / (2 * self.theta)

    @property
    def noncentral(self) -> bool:
        return self.gamma2 > 0

    @classmethod
    def from_lambda(cls, lam: float, n: int, delta: float = 0.0) -> "ChiSquareTerm":
        if not lam > 0:
            raise NonPositiveThetaError(lam)
        theta = 1 / (2 * lam)
        return cls(theta=theta, n=n, gamma2=2 * theta * delta)


TermLike = Union[ChiSquareTerm, Sequence[float]]


def _as_term(term: TermLike) -> ChiSquareTerm:
    if isinstance(term, ChiSquareTerm):
        return term
    return ChiSquareTerm(*term)


@dataclass(frozen=True)
class QuadraticFormSpec:
    """ X - Y where X and Y are independent positive combinations of chi-squares.
        Construct through normalize_spec to get sorted, merged lists.
    """
    positive: Tuple[ChiSquareTerm, ...]
    negative: Tuple[ChiSquareTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(_as_term(t) for t in self.positive))
        object.__setattr__(self, "negative", tuple(_as_term(t) for t in self.negative))

    @property
    def thetas(self) -> np.ndarray:
        return np.array([t.theta for t in self.positive], dtype=float)

    @property
    def ns(self) -> np.ndarray:
        return np.array([t.n for t in self.positive], dtype=int)

    @property
    def gamma2s(self) -> np.ndarray:
        return np.array([t.gamma2 for t in self.positive], dtype=float)

    @property
    def thetas_prime(self) -> np.ndarray:
        return np.array([t.theta for t in self.negative], dtype=float)

    @property
    def p(self) -> int:
        return len(self.positive)

    @property
    def has_negative(self) -> bool:
        return len(self.negative) > 0

    @property
    def is_central(self) -> bool:
        return all(not t.noncentral for t in self.positive + self.negative)

    @property
    def total_dof(self) -> int:
        return sum(t.n for t in self.positive + self.negative)

    def __repr__(self):
        def fmt(terms):
            return " + ".join(f"{t.lam:.6g}*chi2_{t.n}({t.delta:.6g})" for t in terms)
        s = f"{self.__class__.__name__}({fmt(self.positive)}"
        if self.negative:
            s += f" - [{fmt(self.negative)}]"
        s += ")"
        return s


def _merge_terms(terms: Iterable[TermLike], rtol: float) -> Tuple[ChiSquareTerm, ...]:
    ordered = sorted((_as_term(t) for t in terms), key=lambda t: t.theta)
    merged: List[ChiSquareTerm] = []
    for term in ordered:
        if merged and abs(term.theta - merged[-1].theta) < rtol * max(term.theta, merged[-1].theta):
            last = merged[-1]
            # chi2_n1(d1) + chi2_n2(d2) = chi2_{n1+n2}(d1+d2) at equal scale
            merged[-1] = replace(last, n=last.n + term.n, gamma2=last.gamma2 + term.gamma2)
        else:
            merged.append(term)
    return tuple(merged)


def normalize_spec(
    positive: Iterable[TermLike],
    negative: Iterable[TermLike] = (),
    rtol: float = SpecDefaults.theta_rtol,
) -> QuadraticFormSpec:
    """ Validates, merges and sorts raw term lists
        Parameters:
            - positive: terms of X, as ChiSquareTerm or (theta, n, gamma2) tuples
            - negative: terms of Y (possibly empty)
            - rtol: relative tolerance under which two thetas are merged
        Returns:
            - QuadraticFormSpec with strictly increasing thetas in each list
    """
    positive = _merge_terms(positive, rtol)
    if len(positive) == 0:
        raise EmptyPositiveListError()
    negative = _merge_terms(negative, rtol)
    return QuadraticFormSpec(positive=positive, negative=negative)


def spec_from_lambdas(
    positive: Iterable[Sequence[float]],
    negative: Iterable[Sequence[float]] = (),
) -> QuadraticFormSpec:
    """ Builds a spec from (lambda, n, delta) triples, lambda being the chi-square coefficient
    """
    return normalize_spec(
        [ChiSquareTerm.from_lambda(*t) for t in positive],
        [ChiSquareTerm.from_lambda(*t) for t in negative],
    )


def swap_roles(spec: QuadraticFormSpec) -> QuadraticFormSpec:
    return QuadraticFormSpec(positive=spec.negative, negative=spec.positive)


def moments(spec: QuadraticFormSpec) -> Tuple[float, float]:
    mean = sum(t.lam * (t.n + t.delta) for t in spec.positive)
    mean -= sum(t.lam * (t.n + t.delta) for t in spec.negative)
    variance = sum(2 * t.lam ** 2 * (t.n + 2 * t.delta) for t in spec.positive + spec.negative)
    return mean, variance


def log_kappa(terms: Sequence[ChiSquareTerm]) -> float:
    """ log of prod theta^(n/2) exp(-sum gamma2 / (4 theta))
    """
    return sum(0.5 * t.n * math.log(t.theta) - t.gamma2 / (4 * t.theta) for t in terms)


# Branch cut geometry -------------------------------------------------------

@dataclass(frozen=True)
class PoleSite:
    location: float
    order: int
    noncentral: bool
    index: int


@dataclass(frozen=True)
class FiniteCut:
    """ Cut between -right and -left on the t axis, in theta coordinates """
    left: float
    right: float
    interior_poles: Tuple[PoleSite, ...]
    endpoints_noncentral: Tuple[bool, bool]
    endpoint_dofs: Tuple[int, int]
    endpoint_indices: Tuple[int, int]

    @property
    def collapsible(self) -> bool:
        # Small circles around the endpoints vanish only for half-order central endpoints
        return (not any(self.endpoints_noncentral)
                and self.endpoint_dofs == (1, 1)
                and len(self.interior_poles) == 0)


@dataclass(frozen=True)
class UnboundedCut:
    """ Cut (-inf, -start] """
    start: float
    noncentral_endpoint: bool
    endpoint_dof: int
    endpoint_index: int
    interior_poles: Tuple[PoleSite, ...] = ()

    @property
    def collapsible(self) -> bool:
        return not self.noncentral_endpoint and self.endpoint_dof == 1 and len(self.interior_poles) == 0


@dataclass(frozen=True)
class BranchCutLayout:
    finite_cuts: Tuple[FiniteCut, ...] = ()
    unbounded_cut: Optional[UnboundedCut] = None
    isolated_even_poles: Tuple[PoleSite, ...] = field(default_factory=tuple)

    @property
    def n_cuts(self) -> int:
        return len(self.finite_cuts) + (self.unbounded_cut is not None)

    @property
    def interior_poles(self) -> Tuple[PoleSite, ...]:
        poles = tuple(p for c in self.finite_cuts for p in c.interior_poles)
        if self.unbounded_cut is not None:
            poles += self.unbounded_cut.interior_poles
        return poles


def branch_layout(spec: QuadraticFormSpec) -> BranchCutLayout:
    """ Pairs odd-multiplicity thetas of the positive list in ascending order and classifies
        the even-multiplicity ones as isolated (type 1) or cut-interior (type 2) poles.
    """
    terms = spec.positive
    odd = [i for i, t in enumerate(terms) if t.n % 2 == 1]
    even = [i for i, t in enumerate(terms) if t.n % 2 == 0]

    pairs = [(odd[k], odd[k + 1]) for k in range(0, len(odd) - 1, 2)]
    unbounded_index = odd[-1] if len(odd) % 2 == 1 else None

    def site(i):
        return PoleSite(location=terms[i].theta, order=terms[i].n // 2,
                        noncentral=terms[i].noncentral, index=i)

    finite_cuts = []
    claimed = set()
    for a, b in pairs:
        inside = tuple(site(i) for i in even if terms[a].theta < terms[i].theta < terms[b].theta)
        claimed.update(s.index for s in inside)
        finite_cuts.append(FiniteCut(
            left=terms[a].theta,
            right=terms[b].theta,
            interior_poles=inside,
            endpoints_noncentral=(terms[a].noncentral, terms[b].noncentral),
            endpoint_dofs=(terms[a].n, terms[b].n),
            endpoint_indices=(a, b),
        ))

    unbounded = None
    if unbounded_index is not None:
        start = terms[unbounded_index].theta
        inside = tuple(site(i) for i in even if terms[i].theta > start)
        claimed.update(s.index for s in inside)
        unbounded = UnboundedCut(
            start=start,
            noncentral_endpoint=terms[unbounded_index].noncentral,
            endpoint_dof=terms[unbounded_index].n,
            endpoint_index=unbounded_index,
            interior_poles=inside,
        )

    isolated = tuple(site(i) for i in even if i not in claimed)
    layout = BranchCutLayout(finite_cuts=tuple(finite_cuts), unbounded_cut=unbounded,
                             isolated_even_poles=isolated)
    logging.debug(f"branch layout for {spec}: {layout}")
    return layout


# Identities ----------------------------------------------------------------

def rescale_shift(spec: QuadraticFormSpec, s: float, c: float) -> Tuple[QuadraticFormSpec, float]:
    """ Rescale and shift: pdf(spec, s) = prefactor * pdf(shifted, 1)
        Parameters:
            - spec: positive combination
            - s: positive evaluation point
            - c: shift, smaller than every theta
        Returns:
            - (spec with theta -> s*theta - s*c and gamma2 -> s*gamma2, prefactor)
    """
    if spec.has_negative:
        raise NotAPositiveCombinationError(spec)
    if not s > 0:
        raise ValueError(f"s must be positive, not {s}")
    theta_min = min(t.theta for t in spec.positive)
    if c >= theta_min:
        raise ShiftTooLargeError(c, theta_min)

    shifted = QuadraticFormSpec(positive=tuple(
        ChiSquareTerm(theta=s * (t.theta - c), n=t.n, gamma2=s * t.gamma2) for t in spec.positive
    ))
    log_prefactor = -s * c - math.log(s)
    for t in spec.positive:
        log_prefactor += 0.5 * t.n * (math.log(t.theta) - math.log(t.theta - c))
        log_prefactor += t.gamma2 / (4 * (t.theta - c)) - t.gamma2 / (4 * t.theta)
    return shifted, math.exp(log_prefactor)


def tilt_for_cdf(spec: QuadraticFormSpec, theta0: float) -> Tuple[QuadraticFormSpec, float]:
    """ Augmented variable whose density is proportional to exp(-theta0 x) * cdf(x)
        Parameters:
            - spec: any normalized spec
            - theta0: tilt, 0 < theta0 < min(theta') when the negative list is non-empty
        Returns:
            - (tilted spec, log constant) with cdf(x) = exp(theta0 x + log constant) * pdf_tilted(x)
    """
    upper = min((t.theta for t in spec.negative), default=math.inf)
    if not 0 < theta0 < upper:
        raise Theta0OutOfRangeError(theta0, upper)

    positive = [ChiSquareTerm(theta=theta0, n=2)]
    positive += [ChiSquareTerm(theta=t.theta + theta0, n=t.n, gamma2=t.gamma2) for t in spec.positive]
    negative = [ChiSquareTerm(theta=t.theta - theta0, n=t.n, gamma2=t.gamma2) for t in spec.negative]
    tilted = normalize_spec(positive, negative)

    log_const = (log_kappa(spec.positive) + log_kappa(spec.negative)
                 - log_kappa(tilted.positive) - log_kappa(tilted.negative))
    return tilted, log_const


# Spec files ----------------------------------------------------------------

def _term_from_dict(entry: dict, source: str) -> ChiSquareTerm:
    keys = set(entry)
    if {"theta", "lambda"} <= keys:
        raise SpecParseError(source, f"term {entry} gives both theta and lambda")
    if {"gamma2", "delta"} <= keys:
        raise SpecParseError(source, f"term {entry} gives both gamma2 and delta")
    unknown = keys - {"theta", "lambda", "gamma2", "delta", "n"}
    if unknown:
        raise SpecParseError(source, f"unrecognized keys {sorted(unknown)}")
    try:
        if "theta" in entry:
            theta = float(entry["theta"])
        else:
            theta = 1 / (2 * float(entry["lambda"]))
        if "delta" in entry:
            gamma2 = 2 * theta * float(entry["delta"])
        else:
            gamma2 = float(entry.get("gamma2", 0.0))
        return ChiSquareTerm(theta=theta, n=entry["n"], gamma2=gamma2)
    except KeyError as e:
        raise SpecParseError(source, f"term {entry} is missing {e}")
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise SpecParseError(source, f"term {entry}: {e}")


def spec_from_dict(document: dict, source: str = "<dict>") -> QuadraticFormSpec:
    if not isinstance(document, dict) or "positive" not in document:
        raise SpecParseError(source, "top level must be an object with a `positive` list")
    positive = [_term_from_dict(e, source) for e in document["positive"]]
    negative = [_term_from_dict(e, source) for e in document.get("negative", [])]
    return normalize_spec(positive, negative)


def spec_to_dict(spec: QuadraticFormSpec) -> dict:
    def terms(ts):
        return [{"theta": t.theta, "n": t.n, "gamma2": t.gamma2} for t in ts]
    return {"positive": terms(spec.positive), "negative": terms(spec.negative)}


def load_spec(fpath: MaybePathLike) -> QuadraticFormSpec:
    """ Reads a spec file. Keys other than positive / negative (e.g. provenance) are ignored
    """
    fpath = str(Path(fpath).expanduser())
    try:
        with open(fpath, 'r') as fid:
            document = json.load(fid)
    except json.JSONDecodeError as e:
        logging.error(f"Caught {e} - {fpath} is not valid JSON")
        raise SpecParseError(fpath, str(e))
    except OSError as e:
        raise SpecParseError(fpath, str(e))
    spec = spec_from_dict(document, source=fpath)
    logging.info(f"Loaded {spec} from {fpath}")
    return spec


def dump_spec(spec: QuadraticFormSpec, fpath: MaybePathLike, provenance: Optional[str] = None) -> None:
    document = spec_to_dict(spec)
    if provenance is not None:
        document["provenance"] = provenance
    with open(str(Path(fpath).expanduser()), 'w') as fid:
        json.dump(document, fid, indent=2)
