"""Exception types shared across the package."""


class CritwaveError(Exception):
    """Base class for all package errors."""


class DomainError(CritwaveError, ValueError):
    """Argument outside the domain of a modulus of continuity."""


class QuadratureFailure(CritwaveError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class NoAdmissiblePartner(CritwaveError, ValueError):
    """No exponent q >= p > 1 on the critical curve for the given p."""


class NonFiniteInput(CritwaveError, ValueError):
    pass


class NonFiniteOutput(CritwaveError, ArithmeticError):
    pass


class GridMismatch(CritwaveError, ValueError):
    pass


class CoverageError(CritwaveError, ValueError):
    """Trajectory does not cover the space-time region requested."""


class LedgerTooShort(CritwaveError, ValueError):
    pass


class InsufficientData(CritwaveError, ValueError):
    pass


class ParameterError(CritwaveError, ValueError):
    pass


class ConfigError(CritwaveError, ValueError):
    pass
