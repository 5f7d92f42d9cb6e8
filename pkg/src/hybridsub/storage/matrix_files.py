"""Matrix CSV files and ground-truth JSON sidecars.

Data files hold one sample per row, comma separated, no header unless
requested. Ground truth for generated data lives next to the CSV as
``<name>.truth.json``. Floats are written with 17 significant digits so a
write/read cycle reproduces every value bit for bit.
"""

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import DataFormatError
from ..core.linalg import DenseMatrix
from ..core.synth import SynthInstance, SynthSpec
from ..utils.logger import logger

PathLike = Union[str, Path]
SIDECAR_SUFFIX = ".truth.json"
SIDECAR_SCHEMA_VERSION = 1


def sidecar_path(csv_path: PathLike) -> Path:
    """``data/x.csv`` -> ``data/x.truth.json``."""
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + SIDECAR_SUFFIX)


def read_matrix_csv(path: PathLike, header: bool = False) -> DenseMatrix:
    """Read a numeric CSV; errors name the offending line and column."""
    path = Path(path)
    rows = []
    width = None
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            for line_no, record in enumerate(reader, start=1):
                if header and line_no == 1:
                    continue
                if not record or all(not cell.strip() for cell in record):
                    continue
                if width is None:
                    width = len(record)
                elif len(record) != width:
                    raise DataFormatError(f"expected {width} columns, found {len(record)}",
                                          path=str(path), line=line_no)
                values = []
                for col_no, cell in enumerate(record, start=1):
                    try:
                        value = float(cell)
                    except ValueError:
                        raise DataFormatError(f"non-numeric cell '{cell.strip()}'",
                                              path=str(path), line=line_no, column=col_no)
                    if not math.isfinite(value):
                        raise DataFormatError(f"non-finite cell '{cell.strip()}'",
                                              path=str(path), line=line_no, column=col_no)
                    values.append(value)
                rows.append(values)
    except OSError as e:
        raise DataFormatError(f"cannot read file: {e.strerror or e}", path=str(path))

    if not rows:
        raise DataFormatError("file contains no data rows", path=str(path))
    logger.info(f"Loaded {len(rows)}x{width} matrix from {path}")
    return np.array(rows, dtype=np.float64)


def write_matrix_csv(path: PathLike, m: np.ndarray,
                     header: Optional[Sequence[str]] = None) -> Path:
    """Write a matrix (or a vector as one column) as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    kwargs = {"header": ",".join(header), "comments": ""} if header else {}
    np.savetxt(path, m, delimiter=",", fmt="%.17g", **kwargs)
    return path


def write_table_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a plain table of already formatted values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    return path


def write_json(path: PathLike, data: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")
    return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_instance(instance: SynthInstance, csv_path: PathLike) -> Tuple[Path, Path]:
    """Write ``X`` as CSV and its ground truth as a JSON sidecar."""
    csv_path = write_matrix_csv(csv_path, instance.X)
    truth = {
        "schema_version": SIDECAR_SCHEMA_VERSION,
        "spec": instance.spec.to_dict(),
        "Z": instance.true_Z.tolist(),
        "A": instance.true_A.tolist(),
        "W": instance.true_W.tolist(),
        "b": instance.true_b.tolist(),
        "support_lowr": instance.support_lowr.tolist(),
        "support_highd": instance.support_highd.tolist(),
    }
    truth_path = write_json(sidecar_path(csv_path), truth)
    logger.info(f"Wrote {csv_path} and {truth_path}")
    return csv_path, truth_path


def load_instance(csv_path: PathLike, header: bool = False) -> Tuple[DenseMatrix, Optional[SynthInstance]]:
    """Read ``X``; when a sidecar exists also rebuild the ground-truth instance."""
    X = read_matrix_csv(csv_path, header=header)
    truth_path = sidecar_path(csv_path)
    if not truth_path.exists():
        return X, None
    try:
        truth = json.loads(truth_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e.msg}", path=str(truth_path), line=e.lineno, column=e.colno)
    try:
        instance = SynthInstance(
            X=X,
            true_Z=np.array(truth["Z"], dtype=np.float64).reshape(X.shape[0], -1),
            true_A=np.array(truth["A"], dtype=np.float64).reshape(-1, X.shape[1]),
            true_W=np.array(truth["W"], dtype=np.float64).reshape(X.shape),
            true_b=np.array(truth["b"], dtype=np.float64).reshape(X.shape[1]),
            support_lowr=np.array(truth["support_lowr"], dtype=np.int64),
            support_highd=np.array(truth["support_highd"], dtype=np.int64),
            spec=SynthSpec.from_dict(truth.get("spec", {})),
        )
    except (KeyError, ValueError) as e:
        raise DataFormatError(f"malformed ground truth ({e})", path=str(truth_path))
    return X, instance
