"""Exception hierarchy.

Every exception carries a short machine-readable ``code`` which the CLI
prints as ``ERR <code>``.
"""


class VerstringError(Exception):
    code = "error"


class SyntaxErrorAt(VerstringError, ValueError):
    """A version-tree file could not be parsed."""

    code = "syntax"

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ValidationError(VerstringError, ValueError):
    code = "invalid"


class InvalidVersion(VerstringError, KeyError):
    code = "version"

    def __str__(self):
        return str(self.args[0]) if self.args else "invalid version id"


class RankOutOfRange(VerstringError, IndexError):
    """A rank (or position) exceeds the number of available elements."""

    code = "range"


class InvariantViolation(VerstringError, ValueError):
    """Input to a builder breaks a structural precondition."""

    code = "invariant"


class InternalInconsistency(VerstringError, RuntimeError):
    code = "internal"


class FormatError(VerstringError, ValueError):
    code = "format"
