from pprint import pformat


class EmptyPositiveListError(Exception):
    def __init__(self, *args, **kwargs):
        super().__init__("the positive term list must contain at least one term", *args, **kwargs)


class NonPositiveThetaError(Exception):
    def __init__(self, theta, *args, **kwargs):
        super().__init__(f"theta must be strictly positive, not {theta}", *args, **kwargs)


class NonIntegerDofError(Exception):
    def __init__(self, n, *args, **kwargs):
        super().__init__(f"degrees of freedom must be a positive integer, not {n!r}", *args, **kwargs)


class NegativeNoncentralityError(Exception):
    def __init__(self, gamma2, *args, **kwargs):
        super().__init__(f"gamma2 must be non-negative, not {gamma2}", *args, **kwargs)


class SpecParseError(Exception):
    def __init__(self, source, reason, *args, **kwargs):
        super().__init__(f"can't parse spec from {source}: {reason}", *args, **kwargs)


class ShiftTooLargeError(Exception):
    def __init__(self, c, theta_min, *args, **kwargs):
        super().__init__(f"shift c={c} must be smaller than min(theta)={theta_min}", *args, **kwargs)


class PoleEvaluationError(Exception):
    def __init__(self, t, reason, *args, **kwargs):
        super().__init__(f"integrand can't be evaluated at t={t}: {reason}", *args, **kwargs)


class NoConvergenceError(Exception):
    def __init__(self, what, detail, *args, **kwargs):
        super().__init__(f"{what} did not converge ({detail})", *args, **kwargs)


class RouteUnavailableError(Exception):
    def __init__(self, route, reason, *args, **kwargs):
        super().__init__(f"route {route} can't handle this spec: {reason}", *args, **kwargs)


class NotAPositiveCombinationError(Exception):
    def __init__(self, spec, *args, **kwargs):
        super().__init__(f"""expected a positive combination, but the negative list is not empty:
            {pformat(spec.negative)}""", *args, **kwargs)


class Theta0OutOfRangeError(Exception):
    def __init__(self, theta0, upper, *args, **kwargs):
        super().__init__(f"theta0 must lie in (0, {upper}), not {theta0}", *args, **kwargs)


class DuplicateRatesError(Exception):
    def __init__(self, rates, *args, **kwargs):
        super().__init__(f"rates must be pairwise distinct: {pformat(list(rates))}", *args, **kwargs)


class SaddleOutOfRangeError(Exception):
    def __init__(self, s, lower, upper, *args, **kwargs):
        super().__init__(f"no saddlepoint for s={s}: K' only covers ({lower}, {upper})", *args, **kwargs)


# TODO accept the full admissible annulus instead of the (alpha/2, alpha) band
class InadmissibleRadiusError(Exception):
    def __init__(self, radius, lower, upper, *args, **kwargs):
        super().__init__(f"contour radius {radius} must lie in ({lower}, {upper})", *args, **kwargs)


class EmptyGridError(Exception):
    def __init__(self, grid, *args, **kwargs):
        super().__init__(f"grid `{grid}` must be in form A:B:N with N >= 1 and A < B when N > 1",
                         *args, **kwargs)
