"""Exception types shared across the package."""


class HermvolError(Exception):
    """Base class for all errors raised by hermvol."""


class BackendMismatch(HermvolError, ValueError):
    """Operands live in different coefficient backends or dimensions."""


class CapabilityError(HermvolError, ValueError):
    """The coefficient backend cannot perform the requested operation."""


class BandwidthOverflow(HermvolError, ArithmeticError):
    """A Fourier product would exceed the configured bandwidth cap."""


class ConfigError(HermvolError, ValueError):
    """A scenario configuration could not be parsed or validated."""
