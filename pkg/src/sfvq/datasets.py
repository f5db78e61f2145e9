"""Synthetic point distributions and the Hilbert-curve reference sequence."""

import math

import numpy as np

from .errors import ConfigError, InsufficientDataError

KINDS = ("pentagon2d", "moons3d", "circles3d", "spiral3d", "gaussian")

DEFAULT_NOISE = 0.05
CIRCLES_FACTOR = 0.5
SPIRAL_TURNS = 2.0


def pentagon_vertices() -> np.ndarray:
    """Vertices of the regular pentagon inscribed in the unit circle, first vertex pointing up."""
    angles = np.pi / 2 + 2 * np.pi * np.arange(5) / 5
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def in_pentagon(points) -> np.ndarray:
    """Boolean mask: which 2-D points satisfy all five half-plane inequalities."""
    p = np.asarray(points, dtype=np.float64)
    v = pentagon_vertices()
    inside = np.ones(len(p), dtype=bool)
    for k in range(5):
        a, b = v[k], v[(k + 1) % 5]
        # vertices run counter-clockwise, so the interior is on the left of each edge
        cross = (b[0] - a[0]) * (p[:, 1] - a[1]) - (b[1] - a[1]) * (p[:, 0] - a[0])
        inside &= cross >= 0
    return inside


def _pentagon(n, rng):
    out = []
    have = 0
    while have < n:
        cand = rng.uniform(-1.0, 1.0, size=(2 * (n - have) + 16, 2))
        cand = cand[in_pentagon(cand)]
        out.append(cand)
        have += len(cand)
    return np.concatenate(out)[:n]


def _lift(xy, noise, rng):
    xy = xy + noise * rng.standard_normal(xy.shape)
    z = noise * rng.standard_normal((len(xy), 1))
    return np.hstack([xy, z])


def _moons(n, noise, rng):
    n_out = n // 2
    n_in = n - n_out
    t_out = rng.uniform(0.0, np.pi, n_out)
    t_in = rng.uniform(0.0, np.pi, n_in)
    outer = np.stack([np.cos(t_out), np.sin(t_out)], axis=1)
    inner = np.stack([1.0 - np.cos(t_in), 0.5 - np.sin(t_in)], axis=1)
    return _lift(np.vstack([outer, inner]), noise, rng)


def _circles(n, noise, factor, rng):
    n_out = n // 2
    n_in = n - n_out
    t_out = rng.uniform(0.0, 2 * np.pi, n_out)
    t_in = rng.uniform(0.0, 2 * np.pi, n_in)
    outer = np.stack([np.cos(t_out), np.sin(t_out)], axis=1)
    inner = factor * np.stack([np.cos(t_in), np.sin(t_in)], axis=1)
    return _lift(np.vstack([outer, inner]), noise, rng)


def _spiral(n, noise, turns, rng):
    # Archimedean: radius grows linearly with angle, from 0 to 1
    t = rng.uniform(0.0, 1.0, n)
    theta = 2 * np.pi * turns * t
    xy = np.stack([t * np.cos(theta), t * np.sin(theta)], axis=1)
    return _lift(xy, noise, rng)


def generate(kind: str, n: int, seed: int, *, noise: float = DEFAULT_NOISE, dim: int = 2,
             factor: float = CIRCLES_FACTOR, turns: float = SPIRAL_TURNS) -> np.ndarray:
    """Draw ``n`` samples from one of the synthetic distributions.

    Args:
        kind: one of ``KINDS``.
        n: number of samples, at least 1.
        seed: RNG seed; output is bit-identical for identical arguments.
        noise: std of the Gaussian noise for the 3-D shapes (in-plane and
            the lifted third coordinate). Ignored by pentagon2d and gaussian.
        dim: dimension for ``gaussian`` only.
        factor: inner/outer radius ratio for ``circles3d``.
        turns: number of revolutions of ``spiral3d``.

    Returns:
        ``(n, dim)`` float64 array.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown distribution kind {kind!r}; expected one of {KINDS}")
    if int(n) != n or n < 1:
        raise InsufficientDataError(f"n must be a positive integer, got {n}")
    n = int(n)
    if not math.isfinite(noise) or noise < 0:
        raise ConfigError(f"noise must be finite and >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    if kind == "pentagon2d":
        return _pentagon(n, rng)
    if kind == "moons3d":
        return _moons(n, noise, rng)
    if kind == "circles3d":
        if not 0 < factor < 1:
            raise ConfigError("circles factor must lie in (0, 1)")
        return _circles(n, noise, factor, rng)
    if kind == "spiral3d":
        if not turns > 0:
            raise ConfigError("spiral turns must be positive")
        return _spiral(n, noise, turns, rng)
    if dim < 1:
        raise ConfigError("gaussian dim must be >= 1")
    return rng.standard_normal((n, int(dim)))


def _d2xy(side: int, d: int) -> tuple[int, int]:
    # classic index -> cell conversion for the Hilbert curve
    x = y = 0
    s = 1
    t = d
    while s < side:
        rx = 1 & (t // 2)
        ry = 1 & (t ^ rx)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        x += s * rx
        y += s * ry
        t //= 4
        s *= 2
    return x, y


def hilbert_corners(order: int) -> np.ndarray:
    """Corner points of the order-``order`` Hilbert curve in the unit square, in curve order.

    Points are cell centres of a ``2**order`` grid, so consecutive points are
    axis-aligned neighbours at distance ``2**-order``.
    """
    if int(order) != order or not 1 <= order <= 10:
        raise ConfigError(f"order must be an integer in [1, 10], got {order}")
    side = 1 << int(order)
    cells = np.array([_d2xy(side, d) for d in range(side * side)], dtype=np.float64)
    return (cells + 0.5) / side
