"""CSV matrix I/O, dataset descriptors and synthetic data.

Internally every data matrix is ``m x n`` with one data point per column
("dims-as-rows"). CSV files are comma separated, UTF-8, with an optional
single header row.
"""

import csv
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .matrix import NonNegativityError, as_nonneg


class CsvFormatError(ValueError):
    """Malformed CSV content (bad number, ragged row, empty file)."""


class Orientation(str, Enum):
    DIMS_AS_ROWS = "dims-as-rows"
    DIMS_AS_COLS = "dims-as-cols"


class ScaleMode(str, Enum):
    NONE = "none"
    GLOBAL_MAX = "global-max"


@dataclass
class DatasetDescriptor:
    """How to interpret a data file.

    ``m`` and ``n`` are optional expectations; when given they are checked
    against the loaded (already re-oriented) matrix.
    """

    name: str = "data"
    m: int | None = None
    n: int | None = None
    orientation: Orientation = Orientation.DIMS_AS_ROWS
    scale_mode: ScaleMode = ScaleMode.NONE

    def __post_init__(self):
        self.orientation = Orientation(self.orientation)
        self.scale_mode = ScaleMode(self.scale_mode)
        for attr in ("m", "n"):
            val = getattr(self, attr)
            if val is not None and val < 1:
                raise ValueError(f"descriptor {attr} must be >= 1, got {val}")


@dataclass
class SyntheticSpec:
    m: int
    n: int
    r_true: int
    noise_sigma: float = 0.0
    sparsity: float = 0.0
    seed: int = 0

    def validate(self):
        if min(self.m, self.n, self.r_true) < 1:
            raise ValueError("m, n and r_true must be >= 1")
        if self.r_true > min(self.m, self.n):
            raise ValueError(
                f"r_true={self.r_true} exceeds min(m, n)={min(self.m, self.n)}"
            )
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")


def _parse_float(cell):
    val = float(cell)
    if not np.isfinite(val):
        raise ValueError(cell)
    return val


def _is_numeric_row(row):
    try:
        for cell in row:
            _parse_float(cell)
    except ValueError:
        return False
    return True


def read_csv(path, header=None):
    """Parse a numeric CSV file into a 2-D array, as stored on disk.

    Parameters
    ----------
    header : bool or None
        ``True``: skip the first row. ``False``: every row is data.
        ``None`` (default): skip the first row only if it is not numeric.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    # drop blank lines but keep their physical numbering for error messages
    numbered = [(i + 1, row) for i, row in enumerate(rows) if row and any(c.strip() for c in row)]
    if numbered and (header or (header is None and not _is_numeric_row(numbered[0][1]))):
        numbered = numbered[1:]
    if not numbered:
        raise CsvFormatError(f"{path}: no data rows")
    width = len(numbered[0][1])
    data = np.empty((len(numbered), width))
    for r, (lineno, row) in enumerate(numbered):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: line {lineno} has {len(row)} fields, expected {width}"
            )
        for c, cell in enumerate(row):
            try:
                data[r, c] = _parse_float(cell.strip())
            except ValueError:
                raise CsvFormatError(
                    f"{path}: line {lineno}, column {c + 1}: not a finite number: {cell!r}"
                ) from None
    return data


def apply_scaling(V, mode):
    """Return ``(scaled, factor)`` where ``scaled = V / factor``."""
    mode = ScaleMode(mode)
    if mode is ScaleMode.NONE:
        return V, 1.0
    top = float(V.max())
    if top <= 0:
        return V, 1.0
    return V / top, top


def load_csv(path, descriptor=None, header=None):
    """Load a non-negative data matrix in dims-as-rows orientation.

    Negative entries are rejected with their file coordinates (1-based
    data row and column, before any transposition).
    """
    desc = descriptor or DatasetDescriptor()
    raw = read_csv(path, header=header)
    try:
        as_nonneg(raw, desc.name)
    except NonNegativityError:
        i, j = np.argwhere(raw < 0)[0]
        raise NonNegativityError(
            f"{path}: negative value {raw[i, j]!r} at data row {i + 1}, column {j + 1}"
        ) from None
    V = raw.T.copy() if desc.orientation is Orientation.DIMS_AS_COLS else raw
    V, _ = apply_scaling(V, desc.scale_mode)
    for attr, actual in (("m", V.shape[0]), ("n", V.shape[1])):
        want = getattr(desc, attr)
        if want is not None and want != actual:
            raise CsvFormatError(f"{path}: expected {attr}={want}, got {actual}")
    return np.ascontiguousarray(V)


def save_csv(matrix, path, header=None):
    """Write a matrix as CSV with a header row and full-precision values.

    ``header`` defaults to ``c0, c1, ...``. Floats are written with
    ``repr`` so they round-trip exactly.
    """
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if header is None:
        header = [f"c{j}" for j in range(A.shape[1])]
    if len(header) != A.shape[1]:
        raise ValueError(f"header has {len(header)} names for {A.shape[1]} columns")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in A:
                writer.writerow([repr(float(x)) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror}") from exc


def generate_synthetic(spec):
    """Draw ``V = max(W_true @ H_true + noise, 0)`` with known factors.

    ``W_true`` (m x r_true) and ``H_true`` (r_true x n) are drawn from a
    unit exponential with each entry zeroed with probability
    ``spec.sparsity``.

    Returns
    -------
    V, W_true, H_true : ndarray
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    W = rng.exponential(size=(spec.m, spec.r_true))
    H = rng.exponential(size=(spec.r_true, spec.n))
    if spec.sparsity > 0:
        W[rng.uniform(size=W.shape) < spec.sparsity] = 0.0
        H[rng.uniform(size=H.shape) < spec.sparsity] = 0.0
    V = W @ H
    if spec.noise_sigma > 0:
        V = np.maximum(V + rng.normal(0.0, spec.noise_sigma, size=V.shape), 0.0)
    return V, W, H
