"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage-type errors exit with 1,
numerical failures with 2 and runtime invariant violations with 3.
"""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SizeLimitError(ValueError):
    """The requested instance is too large for an exhaustive method."""


class InvalidPartitionError(ValueError):
    """A triple partition or box-count table breaks its defining constraints."""


class ConvergenceError(ArithmeticError):
    """A root finder, quadrature or repair loop did not reach its tolerance."""


class SamplerStallError(ConvergenceError):
    """Rejection sampling accepted too few proposals (points at a density bug)."""


class InvariantViolation(RuntimeError):
    """A self-check that must always hold failed at runtime."""
