"""Exception types shared across the package."""


class TapsimError(Exception):
    """Base class for all package errors."""


class ParamError(TapsimError):
    """Invalid parameter or precondition violation."""


class EncodeError(TapsimError):
    """Message field out of range for its wire representation."""


class CapacityError(EncodeError):
    """Message would exceed a hard capacity limit."""


class DecodeError(TapsimError):
    """Malformed wire data (bad length or framing)."""


class RangeError(TapsimError):
    """Physical quantity outside its admissible range."""


class NoDetection(TapsimError):
    """Correlation peak below the detection threshold."""


class OverrunError(TapsimError):
    """Local processing exceeded the gate-timer budget."""


class ConfigError(TapsimError):
    """Scenario or module configuration is invalid."""
