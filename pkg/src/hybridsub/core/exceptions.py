"""Exception types raised by hybridsub."""

from typing import Any, List, Optional


class HybridSubError(Exception):
    """Base class for all hybridsub errors."""


class DimensionMismatchError(HybridSubError, ValueError):
    """Operands have incompatible shapes."""


class InvalidParameterError(HybridSubError, ValueError):
    """A parameter is outside its admissible range."""


class NonFiniteError(HybridSubError, ValueError):
    """A NaN or Inf value was admitted or produced."""


class SvdConvergenceError(HybridSubError, ArithmeticError):
    """LAPACK failed to converge on a singular value decomposition."""


class PathNotTerminatedError(HybridSubError):
    """The warm-start path hit its safety cap before the overlap vanished."""

    def __init__(self, message: str, path: Optional[List[Any]] = None,
                 last_gamma: float = float("nan"), last_overlap: float = float("nan")):
        super().__init__(message)
        self.path = path or []
        self.last_gamma = last_gamma
        self.last_overlap = last_overlap


class DataFormatError(HybridSubError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
                if column is not None:
                    location += f":{column}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line
        self.column = column
