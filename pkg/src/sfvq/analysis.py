"""Distortion-independent lenses on a codebook: arrangement, jumps, outliers,
coverage, distance heatmaps, distribution statistics, PCA and correlation
profiles."""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from ._arrays import as_codebook, as_vectors, check_same_dim
from .errors import ConfigError, DimensionError, InsufficientDataError
from .ordering import path_length, validate_order

DEFAULT_TAU = 3.0
DEFAULT_FACTOR = 2.0
DEFAULT_PERCENTILE = 95.0


@dataclass
class ArrangementReport:
    adjacency_ratio: float
    jump_count: int
    outlier_count: int
    inside_fraction: float
    total_path_length: float

    def to_text(self) -> str:
        """``key=value`` lines, one per field, in declaration order."""
        lines = []
        for k, v in asdict(self).items():
            lines.append(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}")
        return "\n".join(lines) + "\n"


@dataclass
class CorrelationProfile:
    values: np.ndarray
    names: tuple[str, ...]

    @property
    def dominant(self) -> str:
        return self.names[int(np.argmax(self.values))]

    def wrong_attribute(self, intended: str) -> bool:
        """True when the direction correlates most with some other attribute."""
        if intended not in self.names:
            raise ConfigError(f"unknown attribute {intended!r}")
        return bool(np.any(self.values > 0)) and self.dominant != intended

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.values)))


def _ordered(codebook, order):
    c = as_codebook(codebook, min_size=1)
    if order is None:
        return c
    return c[validate_order(order, len(c))]


def consecutive_distances(codebook, order=None) -> np.ndarray:
    c = _ordered(codebook, order)
    return np.linalg.norm(np.diff(c, axis=0), axis=1)


def adjacency_ratio(codebook, order=None) -> float:
    """Mean consecutive distance over mean all-pairs distance (lower is better).

    ``order`` is a permutation of codeword indices; ``None`` means the
    stored order. All-coincident codewords give 0.
    """
    c = _ordered(codebook, order)
    if len(c) < 3:
        raise InsufficientDataError("adjacency_ratio needs at least 3 codewords")
    all_mean = pdist(c).mean()
    if all_mean == 0:
        return 0.0
    return float(consecutive_distances(c).mean() / all_mean)


def jump_count(codebook, order=None, tau: float = DEFAULT_TAU) -> int:
    """Number of consecutive distances above ``tau`` times their median."""
    if not tau > 0:
        raise ConfigError("tau must be positive")
    c = _ordered(codebook, order)
    if len(c) < 3:
        raise InsufficientDataError("jump_count needs at least 3 codewords")
    d = consecutive_distances(c)
    return int(np.count_nonzero(d > tau * np.median(d)))


def data_threshold(data, factor: float = DEFAULT_FACTOR,
                   percentile: float = DEFAULT_PERCENTILE) -> float:
    """``factor`` times the given percentile of nearest-other-point distances in ``data``."""
    x = as_vectors(data, "data")
    if len(x) < 2:
        raise InsufficientDataError("need at least 2 data points")
    if not factor > 0 or not 0 <= percentile <= 100:
        raise ConfigError("factor must be positive and percentile in [0, 100]")
    nn, _ = cKDTree(x).query(x, k=2)
    return float(factor * np.percentile(nn[:, 1], percentile))


def _nearest_data_distance(points, data):
    d, _ = cKDTree(data).query(points, k=1)
    return d


def outlier_count(codebook, data, factor: float = DEFAULT_FACTOR,
                  percentile: float = DEFAULT_PERCENTILE) -> int:
    """Codewords farther than the data threshold from every data point."""
    c = as_codebook(codebook, min_size=1)
    x = as_vectors(data, "data")
    check_same_dim(x, c)
    theta = data_threshold(x, factor, percentile)
    return int(np.count_nonzero(_nearest_data_distance(c, x) > theta))


def segment_samples(codebook, samples_per_segment: int = 100) -> np.ndarray:
    """Equally spaced points (endpoints included) on every segment, in curve order."""
    c = as_codebook(codebook)
    if samples_per_segment < 1:
        raise ConfigError("samples_per_segment must be positive")
    t = np.linspace(0.0, 1.0, samples_per_segment) if samples_per_segment > 1 else np.zeros(1)
    t = t[None, :, None]
    pts = (1.0 - t) * c[:-1, None, :] + t * c[1:, None, :]
    return pts.reshape(-1, c.shape[1])


def inside_fraction(codebook, data, samples_per_segment: int = 100,
                    factor: float = DEFAULT_FACTOR,
                    percentile: float = DEFAULT_PERCENTILE) -> float:
    """Fraction of curve sample points lying within the data threshold of some data point."""
    c = as_codebook(codebook)
    x = as_vectors(data, "data")
    check_same_dim(x, c)
    theta = data_threshold(x, factor, percentile)
    pts = segment_samples(c, samples_per_segment)
    return float(np.mean(_nearest_data_distance(pts, x) <= theta))


def arrangement_report(codebook, data, order=None, *, tau: float = DEFAULT_TAU,
                       factor: float = DEFAULT_FACTOR, percentile: float = DEFAULT_PERCENTILE,
                       samples_per_segment: int = 100) -> ArrangementReport:
    c = _ordered(codebook, order)
    return ArrangementReport(
        adjacency_ratio=adjacency_ratio(c),
        jump_count=jump_count(c, tau=tau),
        outlier_count=outlier_count(c, data, factor, percentile),
        inside_fraction=inside_fraction(c, data, samples_per_segment, factor, percentile),
        total_path_length=path_length(c),
    )


def heatmap_matrix(codebook) -> np.ndarray:
    """All-pairs Euclidean distance matrix (exactly symmetric, zero diagonal)."""
    c = as_codebook(codebook, min_size=1)
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))


def pairwise_stats(data, subsample: int = 2000, seed: int = 0) -> tuple[float, float, float]:
    """``(mean_dist, var_dist, eigen_sum)`` of a point cloud.

    Distance statistics use a seeded subsample of at most ``subsample`` rows;
    ``eigen_sum`` is the trace of the full-data sample covariance, which
    equals the sum of its eigenvalues.
    """
    x = as_vectors(data, "data")
    if len(x) < 2:
        raise InsufficientDataError("need at least 2 vectors")
    if subsample < 2:
        raise ConfigError("subsample must be >= 2")
    if len(x) > subsample:
        rng = np.random.default_rng(seed)
        sub = x[np.sort(rng.choice(len(x), size=subsample, replace=False))]
    else:
        sub = x
    d = pdist(sub)
    eigen_sum = float(np.sum(np.var(x, axis=0, ddof=1)))
    return float(d.mean()), float(d.var()), eigen_sum


def pca_directions(data, k: int, seed: int = 0, tol: float = 1e-7,
                   max_iter: int = 1000) -> np.ndarray:
    """Top-``k`` principal directions by power iteration with deflation.

    Returns a ``(k, dim)`` array of orthonormal rows, largest variance first.
    Each component is re-orthogonalized against the previous ones on every
    iteration.
    """
    x = as_vectors(data, "data")
    dim = x.shape[1]
    if not 1 <= k <= dim:
        raise DimensionError(f"k must lie in [1, {dim}], got {k}")
    if len(x) <= k:
        raise InsufficientDataError("need more samples than components")
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / (len(x) - 1)
    rng = np.random.default_rng(seed)
    comps = np.zeros((k, dim))
    for i in range(k):
        prev = comps[:i]
        v = rng.standard_normal(dim)
        for _ in range(max_iter):
            v = v - prev.T @ (prev @ v)
            v /= np.linalg.norm(v)
            w = cov @ v
            w = w - prev.T @ (prev @ w)
            norm = np.linalg.norm(w)
            if norm == 0:
                break
            w /= norm
            done = min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol
            v = w
            if done:
                break
        v = v - prev.T @ (prev @ v)
        comps[i] = v / np.linalg.norm(v)
        cov = cov - (comps[i] @ cov @ comps[i]) * np.outer(comps[i], comps[i])
    return comps


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0:
        return 0.0
    return float(np.dot(a, b) / den)


def correlation_profile(step_indices, scores, names=None) -> CorrelationProfile:
    """L1-normalized absolute Pearson correlation of each attribute with the step index.

    ``scores`` is a sequence of per-attribute score lists (or a mapping
    name -> list). Constant attributes contribute 0; if every correlation is
    0 the profile is all zeros.
    """
    if isinstance(scores, dict):
        names = tuple(scores) if names is None else tuple(names)
        scores = [scores[n] for n in names]
    idx = np.asarray(step_indices, dtype=np.float64)
    if idx.ndim != 1 or len(idx) < 3:
        raise DimensionError("need at least 3 step indices")
    rows = [np.asarray(s, dtype=np.float64) for s in scores]
    if not rows:
        raise DimensionError("need at least one attribute")
    for r in rows:
        if r.shape != idx.shape:
            raise DimensionError(f"score list of length {r.shape} does not match {len(idx)} indices")
    if names is None:
        names = tuple(f"attr{i}" for i in range(len(rows)))
    elif len(names) != len(rows):
        raise DimensionError("names and scores differ in length")
    corr = np.abs(np.array([_pearson(idx, r) for r in rows]))
    total = corr.sum()
    values = corr / total if total > 0 else np.zeros_like(corr)
    return CorrelationProfile(values, tuple(names))
