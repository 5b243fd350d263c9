"""Exception types shared across the package."""


class ColombeauError(Exception):
    """Base class for all errors raised by this package."""


class InsufficientLadder(ColombeauError):
    """Too few usable ladder points to fit a scaling exponent."""


class LadderMismatch(ColombeauError):
    """Two objects live on different epsilon ladders."""


class UnsupportedOrder(ColombeauError):
    """A derivative order beyond the supported maximum was requested."""


class EvaluationError(ColombeauError):
    """A closed-form expression produced a non-finite value."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class OutOfDomain(ColombeauError):
    """A point, support or cutoff falls outside the grid box."""


class SupportError(ColombeauError):
    """Neither the functional nor the test object is compactly supported."""


class CertificateViolation(ColombeauError):
    """A probe refutes the continuity certificate of a basic functional."""


class AliasingError(ColombeauError):
    """Spectral energy in the top octave exceeds the aliasing guard."""


class EmptyCone(ColombeauError):
    """The cone does not meet the frequency window."""


class ExpressionSyntaxError(ColombeauError):
    """Parse error in the expression or constructor language."""

    def __init__(self, message, position=0, text=""):
        super().__init__(f"{message} at column {position + 1}")
        self.position = position
        self.text = text


class ScenarioParseError(ColombeauError):
    """Malformed scenario text; carries 1-based line and column."""

    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ScenarioValidationError(ColombeauError):
    """A well-formed scenario that cannot run (unknown keys, bad references)."""

    def __init__(self, message, where=""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
