"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""


class ExpFunctionalError(Exception):
    code = "ERROR"


class SchemaError(ExpFunctionalError, ValueError):
    code = "SCHEMA"


class ParameterViolation(ExpFunctionalError, ValueError):
    code = "PARAMETER"


class StripViolation(ExpFunctionalError, ValueError):
    """Argument outside (or too close to) the finiteness strip of an exponent."""

    code = "STRIP"


class BadBeta(ExpFunctionalError, ValueError):
    code = "BAD_BETA"


class NoSolution(ExpFunctionalError, ArithmeticError):
    code = "NO_SOLUTION"


class NoRoot(ExpFunctionalError, ArithmeticError):
    code = "NO_ROOT"


class NotPhilanthropic(ExpFunctionalError, ValueError):
    """A factor measure lacks a certified non-increasing density."""

    code = "NOT_PHILANTHROPIC"


class QuadratureFailure(ExpFunctionalError, ArithmeticError):
    code = "QUADRATURE"


class SignViolation(ExpFunctionalError, ValueError):
    code = "SIGN"


class RadiusViolation(ExpFunctionalError, ValueError):
    code = "RADIUS"


class MomentDivergence(ExpFunctionalError, ArithmeticError):
    code = "MOMENT_DIVERGENCE"


class UnkilledNonDrifting(ExpFunctionalError, ValueError):
    code = "UNKILLED_NON_DRIFTING"


class InconsistentFactors(ExpFunctionalError, ValueError):
    code = "INCONSISTENT_FACTORS"


class Inadmissible(ExpFunctionalError, ValueError):
    code = "INADMISSIBLE"


class Unsupported(ExpFunctionalError, NotImplementedError):
    code = "UNSUPPORTED"
