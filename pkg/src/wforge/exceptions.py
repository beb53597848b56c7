"""Error hierarchy for wforge."""

from typing import List, Optional


class WforgeError(Exception):
    """Base class for all wforge domain errors."""


class DialectSyntaxError(WforgeError):
    """Malformed program text."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ArityMismatch(WforgeError):
    """A predicate is used with two different arities."""


class UnsafeRule(WforgeError):
    """A head variable is neither existential nor bound in the body."""


class ProgramError(WforgeError):
    """A structural program invariant is violated."""


class NotHarmfulJoin(WforgeError):
    """The rule does not contain a harmful join."""


class PredicateMismatch(WforgeError):
    """Unfolding with a cause whose head predicate differs from the atom."""


class NonUnifiable(WforgeError):
    """Two terms or atoms have no unifier."""


class NotWarded(WforgeError):
    """The program violates wardedness."""

    def __init__(self, violations: list):
        self.violations = violations
        details = "; ".join(str(v) for v in violations)
        super().__init__(f"Program is not warded: {details}")


class BudgetExceeded(WforgeError):
    """HU-tree construction created more nodes than allowed."""


class NormalizationError(WforgeError):
    """HJE output failed its harmlessness or wardedness check."""


class IncompatibleScenario(WforgeError):
    """The scenario parameters cannot be satisfied together."""

    def __init__(self, constraints: List[dict]):
        self.constraints = constraints
        names = ", ".join(c["constraint"] for c in constraints)
        super().__init__(f"Incompatible scenario: {names}")


class GenerationStuck(WforgeError):
    """The generator ran out of feasible choices."""


class EdbError(WforgeError):
    """Reading or writing EDB data failed."""
