"""Exception hierarchy shared by every stage of the pipeline."""


class GcmcError(Exception):
    """Base class; ``stage`` names the module that raised."""

    stage = "gcmc"

    def __init__(self, message="", stage=None):
        if stage is not None:
            self.stage = stage
        super().__init__(message)


class ParseError(GcmcError):
    stage = "parse"

    def __init__(self, message, line=None, column=None, stage=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message, stage)


class SortError(ParseError):
    """Ill-sorted or unbound variable use in a formula."""


class ResourceLimitError(GcmcError):
    """A configured size cap was exceeded."""

    stage = "resource"


class InfeasibleError(GcmcError):
    """The constraint admits no feasible partition."""

    stage = "infeasible"


class InvariantError(GcmcError):
    """An internal invariant failed; always a bug or a solver-precision problem."""

    stage = "invariant"
