"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericalError -> 3,
guard errors (window/instance/resource) -> 4.
"""


class AkpzError(Exception):
    """Base class for package errors."""


class ConfigError(AkpzError):
    """Malformed run configuration: bad file, missing key, inconsistent values."""


class DomainError(AkpzError):
    """Slope or argument outside the admissible domain (open slope triangle)."""


class WindowExhaustedError(AkpzError):
    """The dynamics needed lattice data outside the represented finite window."""


class InstanceTooLargeError(AkpzError):
    """Brute-force enumeration guard tripped (too many events or particles)."""


class NumericalError(AkpzError):
    """Iterative numerics failed: Newton divergence, degenerate transform, ..."""


class ResourceGuardError(AkpzError):
    """A run exceeded its configured event or buffer budget."""
