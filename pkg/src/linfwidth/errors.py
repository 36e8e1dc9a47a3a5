"""Exception hierarchy.

Exit codes used by the command line front end are attached to the classes
so that ``cli`` does not need to know about individual failure sites.
"""


class LinfWidthError(Exception):
    exit_code = 1


class PreconditionError(LinfWidthError, ValueError):
    """An operation was called outside its stated hypothesis."""

    exit_code = 2


class GroupSizeError(PreconditionError):
    pass


class DegeneratePoseError(LinfWidthError):
    """Transversality could not be restored within the jitter budget."""

    exit_code = 1


class SeparationFailure(LinfWidthError):
    """The random union process ran out of steps; carries the partial state."""

    exit_code = 3

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class SearchExhausted(LinfWidthError):
    """A sampled existence search used its whole budget without success."""

    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class QueryInSeparatorError(LinfWidthError):
    exit_code = 2

    def __init__(self, message, copies=()):
        super().__init__(message)
        self.copies = tuple(copies)


class FalsificationError(LinfWidthError):
    """A computed object contradicts a proven statement (bug or bad input)."""

    exit_code = 4
