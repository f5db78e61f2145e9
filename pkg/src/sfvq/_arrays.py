"""Validation helpers shared by the public modules.

VectorSets and codebooks are plain ``(count, dim)`` float64 arrays; these
helpers coerce and check them at module boundaries.
"""

import numpy as np

from .errors import DimensionError, InsufficientDataError, NumericError


def as_vectors(x, name: str = "vectors", allow_empty: bool = False) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D (count, dim) array, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise DimensionError(f"{name} must have dim >= 1")
    if arr.shape[0] == 0 and not allow_empty:
        raise InsufficientDataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def as_codebook(c, min_size: int = 2) -> np.ndarray:
    arr = as_vectors(c, "codebook")
    if arr.shape[0] < min_size:
        raise InsufficientDataError(f"codebook needs at least {min_size} codewords, got {arr.shape[0]}")
    return arr


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"{name} has dim {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def check_same_dim(a: np.ndarray, b: np.ndarray, what: str = "data and codebook") -> None:
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"dimension mismatch between {what}: {a.shape[1]} vs {b.shape[1]}")


def sq_dists(x: np.ndarray, c: np.ndarray, chunk_elems: int = 1 << 22) -> np.ndarray:
    """Squared Euclidean distances, shape ``(len(x), len(c))``.

    Uses explicit differences rather than the ``|x|^2 - 2x.c + |c|^2``
    expansion so that exact ties stay exact; rows are chunked to bound memory.
    """
    n, d = x.shape
    m = c.shape[0]
    out = np.empty((n, m))
    step = max(1, chunk_elems // max(1, m * d))
    for s in range(0, n, step):
        diff = x[s:s + step, None, :] - c[None, :, :]
        out[s:s + step] = np.einsum("bnd,bnd->bn", diff, diff)
    return out
