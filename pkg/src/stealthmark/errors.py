class StealthmarkError(Exception):
    """Base class for all errors raised by this package."""


class ImageFormatError(StealthmarkError, ValueError):
    """Unreadable, malformed or unsupported image/mask file."""


class DimensionError(StealthmarkError, ValueError):
    pass


class PlacementError(StealthmarkError, ValueError):
    """Payload does not fit, or a feasible placement was required but not found."""


class ConfigError(StealthmarkError, ValueError):
    pass
