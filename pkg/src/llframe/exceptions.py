"""Exception hierarchy for llframe."""


class LLFError(Exception):
    """Base class for all llframe errors."""


class DomainError(LLFError, ValueError):
    """A point lies outside the interval an operation is defined on."""


class ConfigError(LLFError, ValueError):
    """Invalid discretization parameters or partition."""


class DimensionError(LLFError, ValueError):
    """Array lengths do not match what the factorization or partition expects."""


class NumericalError(LLFError, ArithmeticError):
    """A linear-algebra routine failed (e.g. SVD did not converge)."""


class FormatError(LLFError, ValueError):
    """A serialized file is truncated, has the wrong magic or version, or is malformed."""


class InvariantError(FormatError):
    """A loaded object violates its invariants (corrupt or tampered file)."""


class LocalizationError(LLFError, RuntimeError):
    """No indicator jump was found inside a flagged window."""


class WindowTooNarrowError(LLFError, ValueError):
    """A singular window has too few samples for one-sided reconstruction."""
