"""Exception hierarchy; each class maps to a CLI exit code."""


class FovEnhanceError(Exception):
    exit_code = 1


class ConfigError(FovEnhanceError, ValueError):
    """Invalid parameters, unsupported depth, malformed config files."""

    exit_code = 2


class DegenerateSpectrumError(ConfigError):
    """Fewer than two reliable bands carry any variance."""


class InputError(FovEnhanceError, ValueError):
    """Unreadable images or buffers of the wrong shape."""

    exit_code = 3


class DimensionError(InputError):
    pass


class InvariantError(FovEnhanceError, RuntimeError):
    """An internal consistency check failed."""

    exit_code = 4
