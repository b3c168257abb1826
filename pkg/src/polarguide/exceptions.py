"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so new error conditions should
subclass one of the four leaf categories below rather than raising bare
ValueError from deep inside the pipeline.
"""


class PolarguideError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(PolarguideError):
    """Two grids that must share a shape do not.

    Carries the name of the offending grid so callers can report which
    input file or argument is wrong.
    """

    def __init__(self, name: str, expected, actual):
        self.name = name
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(
            f"grid '{name}' has shape {self.actual}, expected {self.expected}"
        )


class EmptyMaskError(PolarguideError):
    """The validity mask excluded every pixel; the loss is undefined."""

    def __init__(self, message: str = "no valid pixels"):
        super().__init__(message)


class NumericError(PolarguideError):
    """A numeric quantity became non-finite during optimization."""

    def __init__(self, message: str, step: int | None = None, partial_trace=None):
        self.step = step
        self.partial_trace = partial_trace
        super().__init__(message)


class BackboneError(PolarguideError):
    """A backbone session failed (shape mismatch, unsupported capability)."""


class BridgeError(BackboneError):
    """Transport failure talking to an external bridge process."""


class ConfigError(PolarguideError):
    """A configuration file violates the documented schema.

    ``key_path`` points at the offending key, dotted from the document root.
    """

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class EditError(PolarguideError):
    """An appearance edit produced a physically invalid radiance."""
