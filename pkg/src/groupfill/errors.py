"""Exception types shared by all groupfill modules."""


class GroupfillError(Exception):
    """Base class for all groupfill errors."""


class ValidationError(GroupfillError):
    """Problem input rejected during validation."""


class OverlappingGroups(ValidationError):
    pass


class UncoveredAntenna(ValidationError):
    pass


class NonPositiveBudget(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class NegativeGain(ValidationError):
    pass


class EmptyProblem(ValidationError):
    """All antennas were stripped (every gain was zero)."""


class IndexOutOfRange(GroupfillError):
    pass


class LengthMismatch(GroupfillError):
    pass


class DimensionMismatch(GroupfillError):
    pass


class DomainError(GroupfillError):
    """Argument outside the supported domain of a special function."""


class ProblemTooLarge(GroupfillError):
    """Exhaustive grid search is only available for very small problems."""


class NonFiniteGradient(GroupfillError):
    pass


class ToleranceNotReached(GroupfillError):
    """Bisection hit its iteration cap before meeting the residual tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual
