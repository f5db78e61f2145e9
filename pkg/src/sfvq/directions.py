"""Directions between adjacent codewords, latent shifts, line sampling and
codebook pullback to a source space."""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._arrays import as_codebook, as_vector, as_vectors, check_same_dim, sq_dists
from .errors import ConfigError, DimensionError, InsufficientDataError, ZeroDirectionError


@dataclass(frozen=True)
class DirectionVec:
    """Unit direction in latent space plus where it came from.

    ``layer_mask`` is an opaque annotation (e.g. ``"W3-W8"``) for whatever
    generator consumes the direction; nothing here interprets it.
    """

    vector: np.ndarray
    source_pair: tuple[int, int] = (-1, -1)
    label: str = ""
    layer_mask: str = ""
    raw_norm: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.vector)

    def __neg__(self) -> "DirectionVec":
        return DirectionVec(-self.vector, self.source_pair, self.label, self.layer_mask, self.raw_norm)


def _check_segment_index(i, n):
    if int(i) != i or not 0 <= i < n - 1:
        raise ConfigError(f"segment index must lie in [0, {n - 2}], got {i}")
    return int(i)


def _normalize(v):
    # pre-scale so tiny (subnormal) or huge differences neither underflow nor overflow
    scale = float(np.max(np.abs(v)))
    if scale == 0:
        return v, 0.0
    w = v / scale
    n = float(np.linalg.norm(w))
    return w / n, scale * n


def extract_direction(codebook, i: int, label: str = "", layer_mask: str = "") -> DirectionVec:
    """Unit vector from codeword ``i`` to codeword ``i + 1``."""
    c = as_codebook(codebook)
    i = _check_segment_index(i, len(c))
    unit, norm = _normalize(c[i + 1] - c[i])
    if norm == 0:
        raise ZeroDirectionError(f"codewords {i} and {i + 1} coincide")
    return DirectionVec(unit, (i, i + 1), label, layer_mask, norm)


def make_direction(vector, label: str = "", layer_mask: str = "") -> DirectionVec:
    """Wrap an arbitrary non-zero vector as a unit direction."""
    unit, norm = _normalize(as_vector(vector))
    if norm == 0:
        raise ZeroDirectionError("zero vector has no direction")
    return DirectionVec(unit, (-1, -1), label, layer_mask, norm)


def _vec(d):
    return d.vector if isinstance(d, DirectionVec) else as_vector(d)


def angle_deg(d1, d2) -> float:
    """Angle between two directions in degrees, in [0, 180].

    Uses ``2 atan2(|u - v|, |u + v|)`` on the normalized vectors, which
    equals ``arccos(u . v)`` but stays accurate near 0 and 180 degrees.
    """
    u, v = _vec(d1), _vec(d2)
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroDirectionError("zero vector has no direction")
    u = u / nu
    v = v / nv
    return math.degrees(2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def apply_shift(w, d, sigma: float) -> np.ndarray:
    """``w + sigma * d``; negative ``sigma`` walks the other way."""
    w = np.asarray(w, dtype=np.float64)
    v = _vec(d)
    if w.shape[-1] != v.shape[0]:
        raise DimensionError(f"dimension mismatch: {w.shape[-1]} vs {v.shape[0]}")
    if not math.isfinite(sigma):
        raise ConfigError("sigma must be finite")
    return w + sigma * v


def apply_shifts(w, shifts) -> np.ndarray:
    """Apply several ``(direction, sigma)`` shifts at once.

    Each coordinate is the correctly rounded sum of ``w`` and all
    ``sigma * d`` terms, so the result does not depend on the order of
    ``shifts`` (sequential :func:`apply_shift` calls round after every
    step and can differ in the last bit).
    """
    w = as_vector(w, name="w")
    terms = [w]
    for d, sigma in shifts:
        v = _vec(d)
        if v.shape != w.shape:
            raise DimensionError(f"dimension mismatch: {w.shape[0]} vs {v.shape[0]}")
        if not math.isfinite(sigma):
            raise ConfigError("sigma must be finite")
        terms.append(sigma * v)
    stacked = np.stack(terms, axis=1)
    return np.array([math.fsum(row) for row in stacked])


def commutativity_error(w, d1, sigma1: float, d2, sigma2: float) -> float:
    """Max-abs difference between shifting by ``d1`` then ``d2`` and the reverse."""
    a = apply_shifts(w, [(d1, sigma1), (d2, sigma2)])
    b = apply_shifts(w, [(d2, sigma2), (d1, sigma1)])
    return float(np.max(np.abs(a - b)))


def sample_line(codebook, i: int, k: int = 20, noise_std: float = 0.3,
                seed: int = 0) -> np.ndarray:
    """``k`` equally spaced points from codeword ``i`` to ``i + 1`` (both included),
    each plus i.i.d. Gaussian noise of std ``noise_std``."""
    c = as_codebook(codebook)
    i = _check_segment_index(i, len(c))
    if k < 2:
        raise ConfigError("k must be >= 2")
    if not math.isfinite(noise_std) or noise_std < 0:
        raise ConfigError("noise_std must be finite and >= 0")
    t = (np.arange(k) / (k - 1))[:, None]
    pts = (1.0 - t) * c[i] + t * c[i + 1]
    if noise_std > 0:
        pts = pts + noise_std * np.random.default_rng(seed).standard_normal(pts.shape)
    return pts


class Pullback(NamedTuple):
    codebook: np.ndarray
    filled: np.ndarray  # True where a cell had no samples and was copied from a neighbour
    counts: np.ndarray


def pullback_codebook(source, image, codebook_image) -> Pullback:
    """Map an image-space codebook back to the source space.

    Row ``r`` of ``source`` maps to row ``r`` of ``image``. Every image row is
    assigned to its nearest codeword; each pulled-back codeword is the mean
    of the source rows in its cell. Empty cells copy the nearest non-empty
    cell along the curve (the earlier one on a tie) and are flagged.
    """
    src = as_vectors(source, "source")
    img = as_vectors(image, "image")
    c = as_codebook(codebook_image, min_size=1)
    if len(src) != len(img):
        raise DimensionError(f"source has {len(src)} rows but image has {len(img)}")
    check_same_dim(img, c, "image and codebook")
    if len(src) == 0:
        raise InsufficientDataError("no sample pairs")
    cell = np.argmin(sq_dists(img, c), axis=1)
    n = len(c)
    counts = np.bincount(cell, minlength=n)
    sums = np.zeros((n, src.shape[1]))
    np.add.at(sums, cell, src)
    out = np.zeros_like(sums)
    full = counts > 0
    out[full] = sums[full] / counts[full, None]
    donors = np.flatnonzero(full)
    for e in np.flatnonzero(~full):
        gaps = np.abs(donors - e)
        out[e] = out[donors[int(np.argmin(gaps))]]
    return Pullback(out, ~full, counts)
