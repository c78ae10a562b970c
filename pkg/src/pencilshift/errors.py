"""Exception hierarchy.

Every error carries a stable string ``code`` (the class name) and maps to
one of three CLI exit statuses through its base class.
"""


class PencilShiftError(Exception):
    """Base class for all library errors."""

    exit_status = 1

    @property
    def code(self):
        return type(self).__name__


class ValidationError(PencilShiftError, ValueError):
    """Input data violates a precondition."""

    exit_status = 2


class NumericalFailure(PencilShiftError, ArithmeticError):
    """A numerical kernel broke down or a tolerance could not be met."""

    exit_status = 3


class VerificationFailure(PencilShiftError):
    """A post-solve residual check failed."""

    exit_status = 4


# -- validation -------------------------------------------------------------
class DimensionMismatch(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class RankDeficientB(ValidationError):
    pass


class TargetNotInSpectrum(ValidationError):
    pass


class NonSelfConjugateSelection(ValidationError):
    pass


class DistinctnessViolation(ValidationError):
    pass


class TargetCollision(ValidationError):
    pass


class DegenerateSpacing(ValidationError):
    pass


class NotControllable(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


# -- numerical --------------------------------------------------------------
class SingularMatrix(NumericalFailure):
    pass


class SingularH(NumericalFailure):
    pass


class SingularShiftedPencil(NumericalFailure):
    pass


class IllConditionedStep(NumericalFailure):
    pass


class ImaginaryResidue(NumericalFailure):
    pass


class EigensolverFailure(NumericalFailure):
    pass


class DefectivePencil(NumericalFailure):
    pass


class GenerationRetryExhausted(NumericalFailure):
    pass
