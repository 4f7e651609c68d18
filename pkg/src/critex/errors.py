"""Exception types shared across the toolkit."""


class CritexError(Exception):
    """Base class for all toolkit errors."""


class ExprSyntaxError(CritexError):
    """Raised when an expression string does not match the grammar."""

    def __init__(self, position, expected, message=None):
        self.position = position
        self.expected = expected
        super().__init__(message or f"syntax error at position {position}: expected {expected}")


class UnknownIdentifier(CritexError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier {name!r}" + (f" at position {position}" if position is not None else ""))


class DomainError(CritexError):
    """Evaluation outside the real domain (ln of non-positive, fractional power of a negative base, division by zero)."""


class DomainMismatch(CritexError):
    """Profiles combined over different domain radii."""


class DegenerateDenominator(CritexError):
    """(a x, x) <= 0 at an evaluation point; ellipticity violated."""


class EllipticityViolation(CritexError):
    pass


class SamplingBudgetExceeded(CritexError):
    pass


class SearchBudgetExceeded(CritexError):
    pass


class QuadratureFailure(CritexError):
    pass


class EvaluationFailure(CritexError):
    """An integrand could not be evaluated where the classification needed it."""


class NonConvergent(CritexError):
    """Tail-window spread of a limit estimate exceeded tolerance."""


class StiffnessFailure(CritexError):
    """ODE step control failed without a certified blow-up."""


class NonMonotoneClassification(CritexError):
    """Trajectory classifications violate the comparison ordering in the shooting parameter."""


class AssumptionViolated(CritexError):
    pass


class DifferentiationNoise(CritexError):
    """Finite-difference error estimate too large for the residual tolerance."""


class ConfigError(CritexError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = "" if line is None else f" (line {line}" + ("" if column is None else f", col {column}") + ")"
        super().__init__(message + loc)
