"""Exception taxonomy shared across the toolkit.

Exit-code mapping used by the CLI lives in cli.py; library code raises
these and never calls sys.exit.
"""


class PixelFasError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PixelFasError):
    """Invalid or inconsistent run configuration."""


class ParseError(PixelFasError):
    """Malformed input file. Carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class SingularMatrixError(PixelFasError):
    """Singular or numerically unusable linear system.

    ``config_id`` identifies the pixel configuration that produced the
    system, when there is one.
    """

    def __init__(self, message, config_id=None):
        self.config_id = config_id
        if config_id is not None:
            message = f"{message} (configuration {config_id})"
        super().__init__(message)


class GridMismatchError(PixelFasError):
    """Pattern data and quadrature grid disagree."""


class DegenerateStateError(PixelFasError):
    """A state radiates zero energy; its covariance is undefined."""

    def __init__(self, state_index):
        self.state_index = state_index
        super().__init__(f"state {state_index} has zero pattern energy")


class NoSolutionError(PixelFasError):
    """Search budget exhausted without finding what was asked for."""

    def __init__(self, message, stats=None):
        self.stats = stats
        super().__init__(message)
