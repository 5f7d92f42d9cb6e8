"""Helper functions for hybridsub."""

import hashlib
import math
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import InvalidParameterError


def parse_theta(text: Union[str, Sequence[float]]) -> Tuple[float, float, float]:
    """Parse ``"a,b,c"`` into a validated probability triple."""
    if isinstance(text, str):
        try:
            values = [float(part) for part in text.split(",")]
        except ValueError:
            raise InvalidParameterError(f"theta must be three comma-separated numbers, got '{text}'")
    else:
        values = [float(v) for v in text]
    if len(values) != 3:
        raise InvalidParameterError(f"theta needs exactly three components, got {len(values)}")
    if any(v < 0 for v in values) or not math.isclose(sum(values), 1.0, abs_tol=1e-9):
        raise InvalidParameterError(f"theta must be non-negative and sum to 1, got {values}")
    return values[0], values[1], values[2]


def parse_float_list(text: Union[str, Iterable[float]]) -> List[float]:
    """Parse ``"0.1,1,10"`` (or pass through an iterable) into floats."""
    if isinstance(text, str):
        return [float(part) for part in text.split(",") if part.strip()]
    return [float(v) for v in text]


def stream_id_for(trial: int, method: str) -> int:
    """Stable 63-bit stream id for a (trial, method) pair.

    Python's ``hash`` is salted per process, so a digest is used instead.
    """
    digest = hashlib.blake2b(f"{trial}:{method}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and standard error (0 for a single value), ignoring NaN."""
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        return float("nan"), float("nan")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def format_duration(seconds: float) -> str:
    """Format a duration in human-readable form."""
    if seconds < 1.0:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60.0:
        return f"{seconds:.1f} s"
    minutes, rest = divmod(seconds, 60.0)
    return f"{int(minutes)} min {rest:.0f} s"


def format_float(value: float) -> str:
    """Stable text form for result tables (10 significant digits)."""
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.10g}"


def format_cell(value) -> str:
    """Text form of one CSV cell: blanks for None, lowercase booleans."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def json_clean(value):
    """Replace non-finite floats by None, recursively (JSON has no NaN)."""
    if isinstance(value, dict):
        return {key: json_clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_clean(item) for item in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return None
    return value
