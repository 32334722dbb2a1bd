"""Half-vectorization helpers for symmetric matrices.

Quadratic forms z^T S z are linear in the packed coefficients of S, which is
what lets a Q-function kernel be estimated by least squares. Two packings of
the upper triangle are used together:

    vech(S)  plain upper-triangle entries (features: vech(z z^T))
    vecs(S)  upper-triangle entries with off-diagonals doubled (parameters)

so that vech(z z^T) @ vecs(S) == z @ S @ z exactly. Scan order is row-major
over the upper triangle (the np.triu_indices order).
"""

from __future__ import annotations

import numpy as np

from .errors import MalformedVectorError, ValidationError


def packed_length(n: int) -> int:
    """Length of the packed upper triangle of an n x n matrix."""
    return n * (n + 1) // 2


def side_from_packed_length(s: int) -> int:
    """Inverse of packed_length; raises MalformedVectorError if s is not triangular."""
    n = int((np.sqrt(8 * s + 1) - 1) / 2 + 0.5)
    if n * (n + 1) // 2 != s:
        raise MalformedVectorError(
            f"length {s} is not n*(n+1)/2 for any integer n"
        )
    return n


def symmetrize(mat: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Return (M + M^T)/2, rejecting matrices that are asymmetric beyond rtol.

    The tolerance is relative to the matrix magnitude; genuinely asymmetric
    input is an error, not something to silently average away.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {mat.shape}")
    scale = max(np.abs(mat).max(), 1.0)
    asym = np.abs(mat - mat.T).max()
    if asym > rtol * scale:
        raise ValidationError(
            f"matrix is asymmetric: max |M - M^T| = {asym:.3e} "
            f"exceeds {rtol:.1e} relative to scale {scale:.3e}"
        )
    return (mat + mat.T) / 2.0


def vech(mat: np.ndarray) -> np.ndarray:
    """Pack the upper triangle of a symmetric matrix, row-major scan."""
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[0]
    rows, cols = np.triu_indices(n)
    return mat[rows, cols]


def vecs(mat: np.ndarray) -> np.ndarray:
    """Pack the upper triangle with off-diagonal entries doubled."""
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[0]
    rows, cols = np.triu_indices(n)
    out = mat[rows, cols].copy()
    out[rows != cols] *= 2.0
    return out


def unvecs(vec: np.ndarray) -> np.ndarray:
    """Invert vecs: rebuild the symmetric matrix from a doubled-off-diagonal packing."""
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1:
        raise MalformedVectorError(f"expected a 1-d packed vector, got shape {vec.shape}")
    n = side_from_packed_length(vec.shape[0])
    rows, cols = np.triu_indices(n)
    mat = np.zeros((n, n))
    off = rows != cols
    vals = vec.copy()
    vals[off] /= 2.0
    mat[rows, cols] = vals
    mat[cols, rows] = vals
    return mat


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (thin wrapper so callers stay on one surface)."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
