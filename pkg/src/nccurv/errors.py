class NcCurvError(Exception):
    """Base class for library errors."""


class InputError(NcCurvError, ValueError):
    """Malformed or inconsistent user input (maps to CLI exit code 2)."""


class ParseError(InputError):
    def __init__(self, message: str, text: str = "", pos: int = -1):
        self.text = text
        self.pos = pos
        if pos >= 0:
            message = f"{message} at position {pos}: {text[:pos]}<HERE>{text[pos:]}"
        super().__init__(message)


class ContractViolation(NcCurvError):
    """A precondition that the caller promised was found false."""


class ComputationFailure(NcCurvError):
    """A search or sampling procedure ran out of budget (CLI exit code 3)."""


class InvariantViolation(NcCurvError, AssertionError):
    """A proven identity failed numerically; indicates a bug, never input."""
