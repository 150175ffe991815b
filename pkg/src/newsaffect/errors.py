"""Exception classes shared across the pipeline.

Each class maps to a distinct CLI exit code (see cli.py): configuration
problems exit 2, data problems exit 3, numerical failures exit 4.
"""


class ConfigError(Exception):
    """Bad or missing configuration: unknown keys, absent paths, invalid values."""

    exit_code = 2


class DataError(Exception):
    """Input data violates a contract: malformed corpus, empty vocabulary, etc."""

    exit_code = 3


class NumericalError(Exception):
    """A numerical routine could not produce a valid result."""

    exit_code = 4
