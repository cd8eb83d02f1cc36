"""Exception hierarchy shared by every cpo module."""

from __future__ import annotations


class CPOError(Exception):
    """Base class for all errors raised by cpo."""


# taxonomy / graph store


class UnknownClassError(CPOError, KeyError):
    def __str__(self) -> str:
        return f"unknown class: {self.args[0]!r}"


class UnknownRelationError(CPOError, KeyError):
    def __str__(self) -> str:
        return f"unknown relation: {self.args[0]!r}"


class DuplicateNodeError(CPOError, ValueError):
    pass


class UnknownNodeError(CPOError, KeyError):
    def __str__(self) -> str:
        return f"unknown node: {self.args[0]!r}"


class DomainViolation(CPOError, ValueError):
    pass


class RangeViolation(CPOError, ValueError):
    pass


class AttributeViolation(CPOError, ValueError):
    """Missing, unexpected or out-of-vocabulary edge attribute."""


class LiteralKindError(CPOError, ValueError):
    pass


class MalformedPatternError(CPOError, ValueError):
    pass


class FormatError(CPOError, ValueError):
    """An interchange document could not be parsed."""


# shapes / reasoner


class MissingClassificationError(CPOError, ValueError):
    pass


class PipelineCycleError(CPOError):
    def __init__(self, cycle: list[str]):
        super().__init__(cycle)
        self.cycle = cycle

    def __str__(self) -> str:
        return "process pipeline contains a cycle: " + " -> ".join(self.cycle)


class DanglingReferenceError(CPOError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class NotClassifiedError(CPOError, KeyError):
    def __str__(self) -> str:
        return f"node {self.args[0]!r} is not a member of any derived class"


class StaleResultError(CPOError):
    pass


# tagging / analytics / generation


class MalformedEventError(CPOError, ValueError):
    pass


class InconsistentTableError(CPOError, ValueError):
    pass


class NoSuchRecordError(CPOError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class OutcomeAlreadySetError(CPOError, ValueError):
    pass


class OutOfRangeError(CPOError, ValueError):
    pass


class MissingOutcomeError(CPOError, ValueError):
    pass


class InsufficientDataError(CPOError, ValueError):
    pass


class SingleUnitError(CPOError, ValueError):
    pass


class InvalidSpecError(CPOError, ValueError):
    pass
