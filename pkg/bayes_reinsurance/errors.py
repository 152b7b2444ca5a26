class InvalidModelParams(ValueError):
    """Raised when model constants violate their domain constraints."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InvalidClaimFamily(ValueError):
    """Raised when a claim-size family is designated with unexpected
    kind or parameters."""

    pass


class InvalidJumpLaw(ValueError):
    """Raised when the stock-jump law is invalid."""

    pass


class InvalidFilterState(ValueError):
    """Raised when a probability vector does not lie on the simplex."""

    pass


class DivergentIntegral(ValueError):
    """Raised when an exponentially tilted integral does not exist."""

    pass


class ZeroLikelihood(ValueError):
    """Raised when no supported family explains an observed claim."""

    pass


class NoConvergence(ValueError):
    """Raised when a root finder exhausts its iteration budget."""

    pass


class InvestmentCapReached(ValueError):
    """Raised when a solved investment touches the technical cap K"""

    pass


class StepTooLarge(ValueError):
    """Raised when the explicit value iteration step loses positivity or
    exceeds the a-priori bound."""

    pass


class InvalidGridSpec(ValueError):
    """Raised when the time or simplex grid is unusable"""

    pass


class InvalidConfig(ValueError):
    """Raised when a run configuration cannot be parsed or validated."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        if lineno is not None:
            message = "{}:{}: {}".format(path, lineno, message)
        elif path is not None:
            message = "{}: {}".format(path, message)
        super().__init__(message)
