"""Exception hierarchy shared by all pixelprobe modules."""


class PixelProbeError(Exception):
    """Base class for all pixelprobe errors."""


class BoundsError(PixelProbeError, ValueError):
    """A coordinate or vector falls outside its image."""


class ParameterError(PixelProbeError, ValueError):
    """An argument or configuration value violates its documented range."""


class ImageIOError(PixelProbeError, OSError):
    """An image file is missing, malformed, or of an unsupported kind."""


class FormatError(PixelProbeError, ValueError):
    """A pixelprobe-owned file (map, weights, records) is malformed."""


class ConfigurationError(PixelProbeError, ValueError):
    """Unknown preset name or unusable scorer/weights configuration."""


class ScorerProtocolError(PixelProbeError, RuntimeError):
    """An external scorer broke the wire protocol (bad id, count, JSON)."""


class ContractViolationError(PixelProbeError, RuntimeError):
    """A scorer returned values outside the score contract ([0,1], finite)."""


class DataError(PixelProbeError, ValueError):
    """A record carries values inconsistent with the requested operation."""


class EmptyCollectionError(PixelProbeError, ValueError):
    """A statistic was requested over an empty record collection."""
