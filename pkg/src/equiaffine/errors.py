"""Exception types shared across the package."""


class EquiaffineError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(EquiaffineError, ValueError):
    """An argument is out of range or has the wrong shape."""


class DomainError(EquiaffineError, ArithmeticError):
    """An elementary function was evaluated outside its domain."""

    def __init__(self, message, value=None, location=None):
        if location is not None:
            message = f"{message} (at offset {location})"
        super().__init__(message)
        self.value = value
        self.location = location


class SingularPointError(DomainError):
    """Division by a quantity whose constant term vanishes."""


class ParseError(EquiaffineError, ValueError):
    """Syntax error in an expression, with a 0-based byte offset."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += " (expected one of: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    def __init__(self, name, offset):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset)


class SingularFormError(EquiaffineError, ArithmeticError):
    """A symmetric form is numerically singular where an inverse was required."""


class CriticalPointError(EquiaffineError):
    """dF vanishes at the requested point."""


class DegenerateError(EquiaffineError):
    """U(F) vanishes, so normal-dependent quantities are undefined."""


class CalibrationError(EquiaffineError):
    """A centroaffine immersion failed a calibration requirement."""
