"""Dense float64 matrix helpers shared by every other module.

Matrices are plain 2-D ``numpy.ndarray`` objects in C (row-major) order.
The helpers here add the shape and finiteness checks the rest of the
package relies on; they do not wrap the arrays in a new type.
"""

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


class NonNegativityError(ValueError):
    """Raised when a matrix that must be non-negative has a negative entry."""


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 C-ordered array."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_nonneg(a, name="matrix"):
    """Validate a non-negative matrix.

    Parameters
    ----------
    a : array_like
        Candidate matrix.
    name : str
        Used in error messages.

    Returns
    -------
    numpy.ndarray
        Finite float64 array with every entry >= 0.

    Raises
    ------
    NonNegativityError
        If any entry is negative; the message names the first offending cell.
    """
    arr = as_matrix(a, name)
    neg = np.argwhere(arr < 0)
    if neg.size:
        i, j = neg[0]
        raise NonNegativityError(
            f"{name} has negative entry {arr[i, j]!r} at row {i}, col {j}"
        )
    return arr


def matmul(a, b):
    """Matrix product with a shape check that reports both operands."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"non-finite product of {a.shape} and {b.shape}")
    return out


def frobenius_sq(a, b):
    """Squared Frobenius norm of ``a - b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sum(d * d))


def project_nonneg(a):
    # max(x, 0); -0.0 is normalised to +0.0 so the result is idempotent bit-for-bit
    return np.maximum(np.asarray(a, dtype=np.float64), 0.0) + 0.0


def relative_error(v, v_hat):
    """``||v - v_hat||_F / ||v||_F``; 0 when both are zero."""
    denom = np.sqrt(frobenius_sq(v, np.zeros_like(v)))
    num = np.sqrt(frobenius_sq(v, v_hat))
    if denom == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(num / denom)
