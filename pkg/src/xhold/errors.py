"""Exception hierarchy shared by the valuation, Greeks and correlation code."""
from __future__ import annotations


class XHoldError(Exception):
    """Base class for all package errors."""


class InvalidNetwork(XHoldError, ValueError):
    """A cross-holding network violates the admissibility constraints."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid network: " + "; ".join(self.problems))


class DimensionMismatch(XHoldError, ValueError):
    pass


class NonConvergence(XHoldError, RuntimeError):
    """Picard iteration hit ``max_iter`` before reaching ``tol``.

    ``assets`` holds the terminal asset vector of the offending path when the
    failure happened inside a Monte-Carlo run.
    """

    def __init__(self, message, assets=None, iterations=None):
        super().__init__(message)
        self.assets = assets
        self.iterations = iterations


class NotTwoFirms(XHoldError, ValueError):
    pass


class NotPSD(XHoldError, ValueError):
    pass


class NotSymmetric(XHoldError, ValueError):
    pass


class InvalidMarket(XHoldError, ValueError):
    pass


class SingularSystem(XHoldError, RuntimeError):
    """``I - dg/dx`` could not be inverted; impossible for admissible networks."""


class ConditioningDegenerate(XHoldError, ArithmeticError):
    pass


class ZeroEquity(XHoldError, ArithmeticError):
    """Equity price too close to zero for leverage (and correlation) to exist."""


class PreconditionViolated(XHoldError, ValueError):
    pass


class EmptyRegion(XHoldError, LookupError):
    """No Monte-Carlo path landed in the requested solvency region."""


class ConfigError(XHoldError, ValueError):
    pass
