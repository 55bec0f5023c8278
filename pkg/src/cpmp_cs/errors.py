"""Exception hierarchy shared by every module of the package."""


class CPMPError(Exception):
    """Base class for all errors raised by cpmp_cs."""


class ContractViolation(CPMPError, ValueError):
    """An operation was called with arguments that break its preconditions."""


class ParameterError(CPMPError, ValueError):
    """A solver parameter lies outside its admissible range."""


class InfeasibleInstanceError(CPMPError):
    """Total demand exceeds the sum of the p largest capacities."""


class ParseError(CPMPError):
    """Malformed instance text. Carries 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SeedingFailed(CPMPError):
    """No feasible random median set was found within the attempt budget."""


class SelectionUndefined(CPMPError):
    """Roulette selection over weights that are all zero."""


class OracleTooLarge(CPMPError):
    """The brute-force enumeration would exceed the configured limits."""


class NoFeasibleSolution(CPMPError):
    """Exhaustive search found no capacity-feasible solution."""
