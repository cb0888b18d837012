"""Exception types shared across the package."""


class SolarHomeError(Exception):
    """Base class for all package errors."""


class ValidationError(SolarHomeError, ValueError):
    """Raised when a parameter or record violates its documented bounds."""


class ParseError(ValidationError):
    """A row/column of an input file could not be parsed or validated."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class NonUniformStepError(ValidationError):
    """Profile timestamps are not evenly spaced."""


class NonMonotoneTimeError(ValidationError):
    """Timestamps are not strictly increasing."""


class FitError(SolarHomeError):
    """The PV curve fit could not meet its tolerance."""


class OutOfTemperatureError(SolarHomeError):
    """Panel evaluated outside its datasheet operating window."""

    def __init__(self, temp, temp_min, temp_max):
        self.temp = temp
        super().__init__(
            f"panel temperature {temp:g} degC outside operating window "
            f"[{temp_min:g}, {temp_max:g}]"
        )


class ConfigError(ValidationError):
    """Configuration file is missing keys or contains invalid values."""
