"""Error taxonomy shared across the package.

Three families so the CLI can map failures to distinct exit codes:
configuration problems (bad scenario files, inconsistent grids), domain
problems (numerically degenerate inputs at run time), and plain I/O errors
(left to the builtin OSError).
"""


class LensMimoError(Exception):
    """Base class for package errors."""


class ConfigError(LensMimoError):
    """Invalid or inconsistent configuration (scenario file, grid, flags)."""


class DomainError(LensMimoError):
    """Numerically degenerate or out-of-domain input discovered at run time."""
