"""Exception hierarchy shared by every accord_kit module."""


class AccordError(Exception):
    """Base class for all toolkit errors."""


class KindMismatch(AccordError):
    pass


class InfeasibleSpec(AccordError):
    pass


class SolverTimeout(AccordError):
    pass


class ValidationFailure(AccordError):
    """An emitted record failed its own validation. Always an internal bug."""


class WorkBoundExceeded(AccordError):
    pass


class TooLarge(AccordError):
    pass


class InfeasibleInstance(AccordError):
    pass


class NotTwoMachines(AccordError):
    pass


class NonpositiveOracle(AccordError):
    pass


class SourceUnavailable(AccordError):
    pass


class SourceTimeout(SourceUnavailable):
    pass


class SequenceTooLong(AccordError):
    pass


class MissingClass(AccordError):
    pass


class Malformed(AccordError):
    """Text could not be parsed. Carries the 1-based location of the failure."""

    def __init__(self, line: int, column: int, expected: str):
        self.line = line
        self.column = column
        self.expected = expected
        super().__init__(f"line {line}, column {column}: expected {expected}")
