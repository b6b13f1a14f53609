"""Exception hierarchy.

Every exception carries a short ``code`` so the CLI can emit a one-line,
machine-parsable error (``error[<code>]: <message>``).
"""


class FsvarError(Exception):
    code = "error"


class ParameterError(FsvarError, ValueError):
    """Invalid distribution or model parameter."""

    code = "parameter"


class ConfigError(FsvarError, ValueError):
    code = "config"


class DataError(FsvarError, ValueError):
    """Malformed or out-of-domain input data."""

    code = "data"


class NumericalError(FsvarError, ArithmeticError):
    """A linear-algebra step failed or a sampler produced a non-finite state."""

    code = "numerical"


class StoreError(FsvarError, IOError):
    code = "store"
