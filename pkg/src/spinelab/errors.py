"""
Exception types raised across spinelab.

Most errors are ValueError subclasses so callers that only care about bad
input can keep catching ValueError.
"""


class SpinelabError(Exception):
    """Base class for every spinelab error."""


class ContractViolation(SpinelabError, ValueError):
    """A caller broke an operation's precondition (e.g. unassigned variable)."""


class InvalidUniverse(SpinelabError, ValueError):
    """The constraint universe cannot be built (n < k)."""


class InvalidSpec(SpinelabError, ValueError):
    """Generator or sweep parameters are out of range."""


class UnsupportedDomain(SpinelabError, ValueError):
    """The operation needs a boolean domain or a different model."""


class ProofError(SpinelabError, ValueError):
    """A resolution proof failed step-by-step checking."""


class SatisfiableInputError(SpinelabError, ValueError):
    """An operation that needs an unsatisfiable formula got a satisfiable one."""


class PreconditionError(SpinelabError, ValueError):
    """Greedy witness construction preconditions do not hold."""


class DomainError(SpinelabError, ValueError):
    """Argument lies outside the domain of a closed-form bound."""


class ThresholdBracketError(SpinelabError, ValueError):
    """The density grid does not bracket a requested satisfiability quantile."""

    def __init__(self, n: int, side: str, quantile: float):
        self.n = n
        self.side = side
        self.quantile = quantile
        super().__init__(
            f"density grid for n={n} does not bracket p_sat={quantile:g} "
            f"on the {side} side"
        )


class BudgetExceeded(SpinelabError, RuntimeError):
    """An exact computation was refused because it exceeds its budget."""

    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: size {size} exceeds budget {limit}")


class InstanceFormatError(SpinelabError, ValueError):
    """An instance, graph, CNF or CSV file is malformed."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)
