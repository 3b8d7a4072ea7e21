"""Exception hierarchy.

Every error raised by the package derives from :class:`ReftrajError`. The
``exit_code`` attribute is what the command line front-end returns when the
error escapes a subcommand.
"""


class ReftrajError(Exception):
    """Base class for package errors."""

    exit_code = 1


class InvalidArgumentError(ReftrajError, ValueError):
    exit_code = 2


class OutOfDomainError(InvalidArgumentError):
    """A time or state lies outside the interval/box it must belong to."""


class ConfigError(InvalidArgumentError):
    exit_code = 2


class IngestionError(ReftrajError):
    """A reference file could not be read or is malformed."""

    exit_code = 3

    def __init__(self, message, path=None):
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class CoverageError(IngestionError):
    """Samples do not span the whole projection interval."""


class EmptyReferenceSetError(IngestionError):
    pass


class NoAdmissibleSolutionError(ReftrajError):
    exit_code = 4


class NumericalError(ReftrajError):
    exit_code = 5


class InsufficientDataError(NumericalError):
    pass


class RankError(NumericalError):
    """A matrix that must have full row rank does not."""

    def __init__(self, message, deficient_rows=()):
        super().__init__(message)
        self.deficient_rows = tuple(deficient_rows)


class ModelMismatchError(NumericalError):
    """Covariance and endpoint matrix do not annihilate each other."""


class DegenerateProblemError(NumericalError):
    """The free subspace is empty, there is nothing to optimize."""


class UnboundedProblemError(NumericalError):
    pass


class CollinearityError(NumericalError):
    pass


class ConstraintEvaluationError(NumericalError):
    def __init__(self, message, index=None, time=None):
        super().__init__(message)
        self.index = index
        self.time = time


class GenerationStarvedError(NumericalError):
    def __init__(self, message, acceptance_rate=0.0):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class StageError(ReftrajError):
    """Wraps an error raised inside one stage of a pipeline run."""

    def __init__(self, stage, error):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error
        self.exit_code = getattr(error, "exit_code", 1)
