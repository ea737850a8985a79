"""Exception and warning types shared across the toolkit.

The CLI maps these onto its exit-code taxonomy: configuration/schema
problems exit 2, physics/domain violations exit 3, non-converged fits
exit 4.
"""


class CryoscopeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CryoscopeError, ValueError):
    """Invalid configuration: bad schema, inconsistent sample rates, bad windows."""


class SchemaError(ConfigError):
    """A config document failed JSON-schema validation.

    ``path`` holds the JSON-pointer-style location of the offending key.
    """

    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path


class FluxDomainError(CryoscopeError, ValueError):
    """Flux value outside the domain where the flux-to-detuning model is defined."""


class DetuningRangeError(CryoscopeError, ValueError):
    """Detuning value outside the invertible range of the flux model."""


class FilterInstabilityError(CryoscopeError, ValueError):
    """IIR corrector parameters yield an unstable filter (requires A > -1)."""


class SignalTooWeakError(CryoscopeError):
    """Trace carries no usable signal (all-zero Bloch components)."""


class IdentifiabilityError(CryoscopeError, ValueError):
    """Fit design matrix is degenerate (e.g. a single pulse amplitude)."""


class FitFailureError(CryoscopeError):
    """An optimizer failed to converge; ``best`` carries the best result so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class TransmonRegimeWarning(UserWarning):
    """ej/ec below the regime where the cosine band formula is trustworthy."""


class KernelTruncationWarning(UserWarning):
    """Impulse-response window too short for the slowest time constant."""


class NyquistAmbiguityWarning(UserWarning):
    """Mean detuning too close to an alias boundary to assign an order safely."""


class SnrCapWarning(UserWarning):
    """Measured noise underflowed; SNR reported at the cap value."""
