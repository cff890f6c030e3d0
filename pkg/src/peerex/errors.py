"""Exception types shared across the package."""


class PeerexError(Exception):
    """Base class for all package-specific errors."""


class EmptyInputError(PeerexError):
    """Raised when an operation receives an empty network or edge list."""


class FormatError(PeerexError):
    """Raised on malformed input rows; the message names the offending line."""


class DegenerateStateError(PeerexError):
    """Raised when no non-activated nodes remain and the mean-field
    classification threshold is undefined (the network is saturated)."""


class UndefinedFractionError(PeerexError):
    """Raised when a peer fraction is requested for a period without activations."""


class UnknownAttributeError(PeerexError):
    """Raised when an attribute name does not match any loaded attribute table."""
