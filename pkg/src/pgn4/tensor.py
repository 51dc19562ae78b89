"""Validated construction and multiplication of dense float64 arrays.

Matrices are 2-D numpy arrays (rows x cols, row-major) and feature-map
tensors are 3-D numpy arrays (batch x channels x length).  numpy supplies
the storage and BLAS; this module adds the shape validation the rest of
the package relies on.  Values are treated as immutable once built except
through the explicit mutating operations of the layer classes.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when array dimensions do not match an operation's contract."""


def matrix(data: Sequence[float] | np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Build a (rows x cols) float64 matrix from row-major data."""
    flat = np.asarray(data, dtype=np.float64).reshape(-1)
    if flat.size != rows * cols:
        raise ShapeError(
            f"matrix data has {flat.size} elements, expected {rows}x{cols}={rows * cols}"
        )
    return flat.reshape(rows, cols)


def tensor3(
    data: Sequence[float] | np.ndarray, batch: int, channels: int, length: int
) -> np.ndarray:
    """Build a (batch x channels x length) float64 tensor from flat data."""
    flat = np.asarray(data, dtype=np.float64).reshape(-1)
    expected = batch * channels * length
    if flat.size != expected:
        raise ShapeError(
            f"tensor data has {flat.size} elements, expected "
            f"{batch}x{channels}x{length}={expected}"
        )
    return flat.reshape(batch, channels, length)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit dimension check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b
