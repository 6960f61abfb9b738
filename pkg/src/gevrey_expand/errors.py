"""Exception types shared across the package."""


class GevreyExpandError(Exception):
    """Base class for all package errors."""


class InvalidModeError(GevreyExpandError):
    """A wavevector violates its invariants (e.g. the zero mode)."""


class DomainMismatchError(GevreyExpandError):
    """Two fields live on incompatible domains."""


class NormOverflowError(GevreyExpandError):
    """A Gevrey weight exponent exceeded the overflow guard."""


class SupportCapError(GevreyExpandError):
    """Convolution support exceeded the configured cap.

    Carries the capped field plus the band and norm of what was dropped so
    callers may recover and log instead of aborting.
    """

    def __init__(self, message, retained=None, dropped_band=None, dropped_norm=None):
        super().__init__(message)
        self.retained = retained
        self.dropped_band = dropped_band
        self.dropped_norm = dropped_norm


class NoCommonClassError(GevreyExpandError):
    """A term sum admits no common (m, mu) class descriptor."""


class PlusClassError(GevreyExpandError):
    """A substitution function fails a plus-class requirement.

    ``clause`` names the violated requirement so config validation can point
    at it directly.
    """

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class LogDomainError(GevreyExpandError):
    """Evaluation time lies outside an iterated logarithm's domain."""


class EvaluationError(GevreyExpandError):
    """A sum could not be evaluated at the requested time."""


class LatticeError(GevreyExpandError):
    """Exponent-lattice construction or lookup failed."""


class BuildError(GevreyExpandError):
    """Expansion construction failed (class mismatch, bad input term, ...)."""


class SolverDivergenceError(GevreyExpandError):
    """Time integration produced NaN/overflow; carries the last valid time."""

    def __init__(self, message, last_valid_t=None):
        super().__init__(message)
        self.last_valid_t = last_valid_t


class FitError(GevreyExpandError):
    """Decay-rate fitting received unusable samples."""


class ConfigError(GevreyExpandError):
    """A run configuration is missing or inconsistent; carries the JSON path."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path

    def __str__(self):
        base = super().__str__()
        if self.path:
            return f"{self.path}: {base}"
        return base
