"""Exception types shared across the package."""


class LethargyError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidSpecError(LethargyError):
    """A space specification is malformed or unusable."""


class ChainError(LethargyError):
    """A subspace chain specification is malformed or exhausted."""


class SequenceError(LethargyError):
    """A target sequence violates a required property."""


class SummabilityError(LethargyError):
    """The strict weighted-tail condition fails at some level.

    The inductive construction needs, at every level n, the weighted tail
    sum_{j>=n} 2^(j-n) e_j to be strictly below min(e_(n-1), d_n) where d_n
    is the level separation of the chain.  Equality is a hard failure.
    """

    def __init__(self, level, lhs, bound, hint=None):
        self.level = level
        self.lhs = lhs
        self.bound = bound
        message = (
            f"strict weighted-tail condition violated at n={level}: "
            f"sum_(j>=n) 2^(j-n) e_j = {float(lhs)!r} is not strictly below "
            f"min(e_(n-1), d_n) = {float(bound)!r}"
        )
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)


class DivergenceRiskError(LethargyError):
    """A series transform was requested for a sequence that decays too slowly."""


class InfeasibleTargetError(LethargyError):
    """A distance target exceeds what scaling a fresh direction can reach."""


class BracketError(LethargyError):
    """An intermediate-value solve was called without a valid bracket."""


class DimensionTooLargeError(LethargyError):
    """The brute-force minimizer only handles very small subspace dimensions."""


class DegenerateChainError(LethargyError):
    """The chain separation collapses and the targets are not dominated by it."""


class UnsupportedSpecError(LethargyError):
    """The requested operation is not available for this space variant."""


class ScanLimitError(LethargyError):
    """A bounded scan hit its safety cap before the predicate turned false."""


class ToleranceError(LethargyError):
    """A numeric certificate could not be met at the requested tolerance."""


class ConfigError(LethargyError):
    """A run configuration failed to parse or validate (CLI exit code 2)."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
