"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError and its subclasses are
user/input problems (exit 2), everything else raised from the library is an
internal or numeric failure (exit 1).
"""


class SparseVarError(Exception):
    """Base class for errors raised by this package."""


class InputError(SparseVarError):
    """Bad user input: malformed files, inconsistent configuration."""


class PanelFormatError(InputError):
    """Structured CSV parse error carrying the offending location.

    Attributes:
        row: 1-based line number in the file, or None when not line-specific.
        column: header name of the offending column, or None.
    """

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(message + suffix)
        self.row = row
        self.column = column


class ConfigError(InputError):
    """Invalid or inconsistent run configuration."""


class InsufficientDataError(InputError):
    """Not enough observations for the requested operation."""


class NumericError(SparseVarError):
    """Numeric failure inside an estimation or simulation routine."""
