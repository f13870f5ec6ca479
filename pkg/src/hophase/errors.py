"""Exception taxonomy shared across the library.

Validation failures raise before any computation starts; numerical-invariant
failures raise (or are flagged) after computation; I/O problems propagate as
OSError. The CLI maps these onto exit codes 1 / 2 / 3.
"""


class ConfigurationError(ValueError):
    """A constructor or driver was given inconsistent or out-of-range parameters."""


class ExtrapolationError(ValueError):
    """A tabulated potential was queried outside its table range."""


class GapConditionError(ValueError):
    """A recovery window does not fit: eps*T exceeds half the relevant jump gap."""


class DiagnosticError(RuntimeError):
    """A diagnostic found pathological input (e.g. no well points to project onto)."""


class InvariantViolation(RuntimeError):
    """A numerical invariant that should hold at run time was violated."""
