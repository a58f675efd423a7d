"""Exception types raised across the package."""


class LdaError(Exception):
    """Base class for package errors."""


class DimensionError(LdaError, ValueError):
    """State, mask or gauge length does not match the instance."""


class ParameterError(LdaError, ValueError):
    """A numeric parameter is outside its valid range."""


class CapabilityError(LdaError):
    """Problem size exceeds what an exact/dense routine is allowed to handle."""


class ParseError(LdaError, ValueError):
    """Malformed instance or topology file."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = [str(path)] if path is not None else []
        if line is not None:
            where.append(f"line {line}")
        super().__init__(": ".join(where + [message]))


class DegenerateGapError(LdaError, ArithmeticError):
    """Requested excitation is degenerate with the ground state."""
