"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised for invalid user-supplied configuration (orders, dimensions, files)."""


class SingularMatrixError(ValueError):
    """Raised when a matrix handed to QR is rank deficient."""


class DegenerateChannelError(RuntimeError):
    """Raised when a channel singular value is numerically zero.

    Under continuous Rayleigh fading this is a probability-zero event; the
    decoder refuses to proceed instead of regularizing so that complexity
    statistics stay uncontaminated.
    """


class UnsupportedDimensionError(ConfigurationError):
    """Raised when decoding is requested for a dimension without a real-valued
    effective channel (the 3- and 6-stream perfect codes)."""
