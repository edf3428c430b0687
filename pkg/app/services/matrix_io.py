"""
Matrix/vector persistence and instance directories.

Matrices are stored either as CSV (one row per line, '.'-decimal reals, no
header) or in a dense binary format: little-endian header {u64 n_rows,
u64 n_cols} followed by n_rows * n_cols little-endian float64 values,
row-major. Vectors use the CSV format with one value per line.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from app.core.errors import InvalidMatrixError
from app.models.system import GenSpec, LinearSystem
from app.services.linalg import as_matrix, as_vector

logger = logging.getLogger(__name__)

_HEADER_DTYPE = np.dtype("<u8")
_VALUE_DTYPE = np.dtype("<f8")
_FLOAT_FORMAT = "%.17g"

MATRIX_FORMATS = ("csv", "binary")


def write_matrix_csv(path: Path, A: np.ndarray) -> None:
    A = as_matrix(A)
    np.savetxt(path, A, delimiter=",", fmt=_FLOAT_FORMAT)


def read_matrix_csv(path: Path) -> np.ndarray:
    try:
        A = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise InvalidMatrixError(f"Malformed matrix CSV {path}: {e}") from e
    return as_matrix(A, name=str(path))


def write_matrix_binary(path: Path, A: np.ndarray) -> None:
    A = as_matrix(A)
    with open(path, "wb") as f:
        np.array(A.shape, dtype=_HEADER_DTYPE).tofile(f)
        np.ascontiguousarray(A, dtype=_VALUE_DTYPE).tofile(f)


def read_matrix_binary(path: Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 2 * _HEADER_DTYPE.itemsize:
        raise InvalidMatrixError(f"Binary matrix {path} is shorter than its header")
    n_rows, n_cols = (int(v) for v in np.frombuffer(raw, dtype=_HEADER_DTYPE, count=2))
    payload = raw[2 * _HEADER_DTYPE.itemsize:]
    expected = n_rows * n_cols * _VALUE_DTYPE.itemsize
    if len(payload) != expected:
        raise InvalidMatrixError(
            f"Binary matrix {path} declares {n_rows}x{n_cols} but carries {len(payload)} bytes"
        )
    values = np.frombuffer(payload, dtype=_VALUE_DTYPE).reshape(n_rows, n_cols)
    return as_matrix(values, name=str(path))


def write_vector_csv(path: Path, v: np.ndarray) -> None:
    np.savetxt(path, as_vector(v), fmt=_FLOAT_FORMAT)


def read_vector_csv(path: Path) -> np.ndarray:
    try:
        v = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=1)
    except ValueError as e:
        raise InvalidMatrixError(f"Malformed vector CSV {path}: {e}") from e
    return as_vector(v, name=str(path))


def write_labels_csv(path: Path, labels: np.ndarray, column: str = "label") -> None:
    """Write per-row integer labels as `row_index,<column>`"""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["row_index", column])
        for i, label in enumerate(np.asarray(labels, dtype=np.int64)):
            writer.writerow([i, int(label)])


def read_labels_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader, None)
        rows = [(int(i), int(label)) for i, label in reader]
    labels = np.empty(len(rows), dtype=np.int64)
    for i, label in rows:
        labels[i] = label
    return labels


def save_instance(
    directory: Path,
    system: LinearSystem,
    spec: Optional[GenSpec] = None,
    labels: Optional[np.ndarray] = None,
    fmt: str = "csv",
) -> Path:
    """Persist an instance as A.csv|A.bin, b.csv, x_star.csv, labels.csv, spec.json"""
    if fmt not in MATRIX_FORMATS:
        raise ValueError(f"Unknown matrix format {fmt!r}; expected one of {MATRIX_FORMATS}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    if fmt == "csv":
        write_matrix_csv(directory / "A.csv", system.A)
    else:
        write_matrix_binary(directory / "A.bin", system.A)
    write_vector_csv(directory / "b.csv", system.b)
    if system.x_star is not None:
        write_vector_csv(directory / "x_star.csv", system.x_star)
    if labels is not None:
        write_labels_csv(directory / "labels.csv", labels)
    if spec is not None:
        (directory / "spec.json").write_text(json.dumps(spec.model_dump(), indent=2) + "\n")

    logger.info(f"Saved {system.n}x{system.p} instance to {directory}")
    return directory


def load_instance(directory: Path) -> Tuple[LinearSystem, Optional[np.ndarray], Optional[GenSpec]]:
    """Load an instance directory; e is recomputed as A x* - b when x* is present"""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Instance directory not found: {directory}")

    if (directory / "A.bin").exists():
        A = read_matrix_binary(directory / "A.bin")
    elif (directory / "A.csv").exists():
        A = read_matrix_csv(directory / "A.csv")
    else:
        raise FileNotFoundError(f"No A.csv or A.bin in {directory}")
    b = read_vector_csv(directory / "b.csv")

    x_star = None
    e = None
    if (directory / "x_star.csv").exists():
        x_star = read_vector_csv(directory / "x_star.csv")
        e = A @ x_star - b

    labels = read_labels_csv(directory / "labels.csv") if (directory / "labels.csv").exists() else None
    spec = None
    if (directory / "spec.json").exists():
        spec = GenSpec.model_validate_json((directory / "spec.json").read_text())

    return LinearSystem(A=A, b=b, x_star=x_star, e=e), labels, spec
