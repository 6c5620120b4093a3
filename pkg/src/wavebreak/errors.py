"""Exception hierarchy for wavebreak.

Every error raised on purpose by the package derives from :class:`WavebreakError`,
and additionally from the builtin that best describes it so callers can keep
catching ``ValueError`` or ``ArithmeticError`` if they prefer.
"""

from __future__ import annotations


class WavebreakError(Exception):
    """Base class for all wavebreak errors."""


class GridError(WavebreakError, ValueError):
    """Invalid grid, or operands living on different grids."""


class NonFiniteFieldError(WavebreakError, ArithmeticError):
    """A field would contain NaN or Inf samples.

    Attributes:
        count: Number of non-finite samples found.
    """

    def __init__(self, count: int, context: str = "field") -> None:
        super().__init__(f"{context} has {count} non-finite sample(s)")
        self.count = count


class ParameterError(WavebreakError, ValueError):
    """Invalid coefficient data or a coefficient structure a routine cannot accept."""


class DivergentMassError(WavebreakError, ArithmeticError):
    """The L1 mass of a coefficient over an infinite horizon diverges."""


class HypothesisError(WavebreakError, ValueError):
    """A regularity or range hypothesis of a theorem check is violated."""


class OutOfRangeError(WavebreakError, ValueError):
    """A requested time or index lies outside the stored data."""


class FramesTooSparseError(WavebreakError, ValueError):
    """Stored frames are too far apart for time interpolation."""


class TransportInstabilityError(WavebreakError, ArithmeticError):
    """A linear transport solve blew up.

    Attributes:
        iteration: Index of the iterate being built when the solve failed, if known.
    """

    def __init__(self, message: str, iteration: int | None = None) -> None:
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class ConfigError(WavebreakError, ValueError):
    """Configuration document could not be parsed or validated.

    Attributes:
        line: 1-based line of a syntax error, when known.
        key: Dotted key that failed validation, when known.
    """

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None) -> None:
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)
        self.line = line
        self.key = key
