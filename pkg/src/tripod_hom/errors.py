"""Exception and warning types shared across the package."""


class TripodHomError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(TripodHomError, ValueError):
    pass


class NonSymmetricKernelError(TripodHomError, ValueError):
    """Kernel violates the G(t, t') = G(t', t) contract."""


class UnphysicalKernelError(TripodHomError):
    """Kernel spectrum leaves [0, 1], i.e. the memory would amplify."""


class DegenerateKernelError(TripodHomError):
    pass


class InsufficientModesError(TripodHomError):
    """Envelope weight outside the retained Schmidt modes exceeds the bound."""

    def __init__(self, message, truncation_weight):
        super().__init__(message)
        self.truncation_weight = truncation_weight


class FastProtocolWarning(UserWarning):
    """Write time is not short compared to the excited-state lifetime."""


class UndefinedConditionalWarning(UserWarning):
    """Two-photon sector is empty, conditional HOM metrics are undefined."""
