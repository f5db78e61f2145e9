"""Space-filling vector quantization.

A codebook is an ordered ``(N, dim)`` array; consecutive codewords span the
segments of a piecewise-linear curve. Training replaces the codebook with a
*dithered* one, a random point on every segment, quantizes each sample to
the nearest dithered point and descends the squared error. The codebook
starts at four codewords and is doubled after every stage until it holds
``2**target_bits`` codewords.

All indices are 0-based: segment ``j`` joins codewords ``j`` and ``j + 1``.
"""

from dataclasses import dataclass
from typing import NamedTuple, TextIO

import numpy as np

from ._arrays import as_codebook, as_vector, as_vectors, check_same_dim, sq_dists
from .errors import ConfigError, DimensionError, InsufficientDataError
from .optim import AdamState, LrSchedule, adam_step, lr_at

EXPAND_KEEP = 0.99
EXPAND_MOVE = 0.01
INIT_CODEWORDS = 4
INIT_MODES = ("norm_sorted", "random_normal")
MODES = ("sfvq", "vq")
LAMBDA_MODES = ("per_segment", "per_sample")


class Assignment(NamedTuple):
    """Per-sample quantization result for a batch.

    ``index`` is the segment (or codeword, for nearest-codeword quantization),
    ``lam`` the interpolation factor along that segment, ``xhat`` the
    reconstruction and ``sq_error`` the squared reconstruction error.
    """

    index: np.ndarray
    lam: np.ndarray
    xhat: np.ndarray
    sq_error: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    target_bits: int = 6
    batch_size: int = 64
    batches_per_stage: int = 100_000
    base_lr: float = 1e-3
    halve_fractions: tuple[float, ...] = (0.6, 0.8)
    seed: int = 0
    init_mode: str = "norm_sorted"
    mode: str = "sfvq"
    init_sample_count: int = 1000
    lambda_mode: str = "per_segment"
    log_every: int = 1000

    def __post_init__(self):
        if int(self.target_bits) != self.target_bits or not 2 <= self.target_bits <= 12:
            raise ConfigError(f"target_bits must be an integer in [2, 12], got {self.target_bits}")
        for name in ("batch_size", "batches_per_stage", "init_sample_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.base_lr > 0:
            raise ConfigError("base_lr must be positive")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(f"init_mode must be one of {INIT_MODES}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ConfigError(f"lambda_mode must be one of {LAMBDA_MODES}")
        if self.log_every < 0:
            raise ConfigError("log_every must be >= 0")

    def schedule(self) -> LrSchedule:
        return LrSchedule.from_fractions(self.base_lr, self.batches_per_stage, self.halve_fractions)


@dataclass
class StageRecord:
    n_codewords: int
    losses: np.ndarray

    @property
    def initial_loss(self) -> float:
        return float(self.losses[0])

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses))


class TrainResult(NamedTuple):
    codebook: np.ndarray
    history: list[StageRecord]


def bits_of(codebook) -> int | None:
    """``log2(N)`` when the codebook size is a power of two, else ``None``."""
    n = len(codebook)
    return n.bit_length() - 1 if n >= 1 and n & (n - 1) == 0 else None


# ---------------------------------------------------------------------------
# initialization and expansion


def init_norm_sorted(data, n: int = INIT_CODEWORDS, sample_count: int = 1000,
                     seed: int | np.random.Generator = 0) -> np.ndarray:
    """Codewords from the means of norm-sorted groups.

    Draws ``sample_count`` rows (all rows if there are fewer), sorts them by
    Euclidean norm, splits the sorted run into ``n`` contiguous groups (the
    first groups take the remainder) and returns the group means, lowest
    norm first. The resulting curve starts at small-norm vectors and ends at
    large-norm ones.
    """
    data = as_vectors(data, "data")
    if n < 2:
        raise ConfigError("need at least 2 codewords")
    if len(data) < n:
        raise InsufficientDataError(f"need at least {n} vectors, got {len(data)}")
    rng = np.random.default_rng(seed)
    if len(data) > sample_count:
        rows = data[rng.choice(len(data), size=sample_count, replace=False)]
    else:
        rows = data
    order = np.argsort(np.linalg.norm(rows, axis=1), kind="stable")
    groups = np.array_split(rows[order], n)
    return np.stack([g.mean(axis=0) for g in groups])


def init_random(n: int, dim: int, seed: int | np.random.Generator = 0) -> np.ndarray:
    """i.i.d. standard-normal codewords."""
    if n < 2:
        raise ConfigError("need at least 2 codewords")
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    return np.random.default_rng(seed).standard_normal((n, dim))


def expand(codebook) -> np.ndarray:
    """Double the codebook without moving the curve.

    After every codeword ``c_i`` (except the last) a new point
    ``0.99 c_i + 0.01 c_{i+1}`` is inserted; one more point
    ``0.01 c_{N-2} + 0.99 c_{N-1}`` goes right before the last codeword so
    the size is exactly ``2N``.
    """
    c = as_codebook(codebook)
    n, d = c.shape
    keep, move = EXPAND_KEEP, EXPAND_MOVE
    out = np.empty((2 * n, d))
    out[0:2 * n - 2:2] = c[:-1]
    out[1:2 * n - 2:2] = keep * c[:-1] + move * c[1:]
    out[2 * n - 2] = move * c[-2] + keep * c[-1]
    out[2 * n - 1] = c[-1]
    return out


# ---------------------------------------------------------------------------
# dithered quantization (training-time)


def dithered_codebook(codebook, lambdas) -> np.ndarray:
    """``(1 - lam_k) c_k + lam_k c_{k+1}`` for every segment ``k``.

    ``lambdas`` has shape ``(N-1,)``, or ``(B, N-1)`` for one dithered
    codebook per sample; the result is ``(N-1, dim)`` or ``(B, N-1, dim)``.
    """
    c = np.asarray(codebook, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.shape[-1] != len(c) - 1:
        raise DimensionError(f"expected {len(c) - 1} interpolation factors, got {lam.shape[-1]}")
    lam = lam[..., None]
    return (1.0 - lam) * c[:-1] + lam * c[1:]


def _dithered_assign(x, c, lam):
    dc = dithered_codebook(c, lam)
    if lam.ndim == 1:
        d2 = sq_dists(x, dc)
        j = np.argmin(d2, axis=1)
        lam_j = lam[j]
        xhat = dc[j]
    else:
        diff = x[:, None, :] - dc
        d2 = np.einsum("bnd,bnd->bn", diff, diff)
        j = np.argmin(d2, axis=1)
        rows = np.arange(len(x))
        lam_j = lam[rows, j]
        xhat = dc[rows, j]
    err = d2[np.arange(len(x)), j]
    return Assignment(j, lam_j, xhat, err)


def _check_lambdas(lam, n_codewords, batch_len):
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape not in ((n_codewords - 1,), (batch_len, n_codewords - 1)):
        raise DimensionError(
            f"lambdas must have shape ({n_codewords - 1},) or ({batch_len}, {n_codewords - 1}), "
            f"got {lam.shape}")
    if np.any((lam < 0) | (lam > 1)):
        raise ConfigError("interpolation factors must lie in [0, 1]")
    return lam


def assign_dithered(batch, codebook, lambdas) -> Assignment:
    """Map each sample to its closest dithered codeword (lowest segment wins ties)."""
    x = as_vectors(batch, "batch")
    c = as_codebook(codebook)
    check_same_dim(x, c)
    lam = _check_lambdas(lambdas, len(c), len(x))
    return _dithered_assign(x, c, lam)


def _accumulate(shape, idx, contrib):
    # np.add.at applies updates in index order, i.e. ascending sample order
    g = np.zeros(shape)
    np.add.at(g, idx, contrib)
    return g


def sfvq_loss_grad(batch, codebook, lambdas):
    """Dithered training loss and its gradient w.r.t. the codewords.

    The loss is the batch mean of ``|x - (1-lam_j) c_j - lam_j c_{j+1}|^2``
    with the segment ``j`` of each sample held fixed. Returns
    ``(loss, grads, assignment)``; codewords nobody used get zero gradient.
    """
    x = as_vectors(batch, "batch")
    c = as_codebook(codebook)
    check_same_dim(x, c)
    lam = _check_lambdas(lambdas, len(c), len(x))
    return _sfvq_loss_grad(x, c, lam)


def _sfvq_loss_grad(x, c, lam):
    a = _dithered_assign(x, c, lam)
    b = len(x)
    resid = x - a.xhat
    loss = float(np.mean(a.sq_error))
    scale = (-2.0 / b) * resid
    idx = np.concatenate([a.index, a.index + 1])
    contrib = np.concatenate([(1.0 - a.lam)[:, None] * scale, a.lam[:, None] * scale])
    # interleave so updates land sample by sample: (j_0, j_0+1, j_1, j_1+1, ...)
    order = np.arange(2 * b).reshape(2, b).T.ravel()
    grads = _accumulate(c.shape, idx[order], contrib[order])
    return loss, grads, a


def vq_loss_grad(batch, codebook):
    """Plain VQ loss: nearest base codeword, gradient only to the selected codeword."""
    x = as_vectors(batch, "batch")
    c = as_codebook(codebook, min_size=1)
    check_same_dim(x, c)
    return _vq_loss_grad(x, c)


def _vq_loss_grad(x, c):
    a = _nearest(x, c)
    resid = x - a.xhat
    loss = float(np.mean(a.sq_error))
    grads = _accumulate(c.shape, a.index, (-2.0 / len(x)) * resid)
    return loss, grads, a


# ---------------------------------------------------------------------------
# inference-time quantization


def _nearest(x, c):
    d2 = sq_dists(x, c)
    j = np.argmin(d2, axis=1)
    return Assignment(j, np.zeros(len(x)), c[j], d2[np.arange(len(x)), j])


def quantize_nearest_batch(data, codebook) -> Assignment:
    """Nearest-codeword quantization of every row (lowest index wins ties)."""
    x = as_vectors(data, "data")
    c = as_codebook(codebook, min_size=1)
    check_same_dim(x, c)
    return _nearest(x, c)


def quantize_nearest(x, codebook) -> tuple[int, np.ndarray, float]:
    """Return ``(index, codeword, squared_error)`` for a single vector."""
    c = as_codebook(codebook, min_size=1)
    v = as_vector(x, c.shape[1], "x")
    a = _nearest(v[None, :], c)
    return int(a.index[0]), a.xhat[0].copy(), float(a.sq_error[0])


def _project(x, c, chunk_elems=1 << 22):
    start = c[:-1]
    end = c[1:]
    seg = end - start
    seg_len2 = np.einsum("nd,nd->n", seg, seg)
    safe_len2 = np.where(seg_len2 > 0, seg_len2, 1.0)
    n, d = x.shape
    m = len(seg)
    index = np.empty(n, dtype=np.intp)
    lam_out = np.empty(n)
    err_out = np.empty(n)
    step = max(1, chunk_elems // max(1, m * d))
    for s in range(0, n, step):
        xs = x[s:s + step]
        rel = xs[:, None, :] - start[None, :, :]
        lam = np.einsum("bnd,nd->bn", rel, seg) / safe_len2
        lam = np.where(seg_len2 > 0, np.clip(lam, 0.0, 1.0), 0.0)
        proj = (1.0 - lam)[..., None] * start + lam[..., None] * end
        diff = xs[:, None, :] - proj
        err = np.einsum("bnd,bnd->bn", diff, diff)
        # endpoints are always feasible; guard against rounding in the projection
        e0 = np.einsum("bnd,bnd->bn", rel, rel)
        rel1 = xs[:, None, :] - end[None, :, :]
        e1 = np.einsum("bnd,bnd->bn", rel1, rel1)
        use0 = e0 < err
        err = np.where(use0, e0, err)
        lam = np.where(use0, 0.0, lam)
        use1 = e1 < err
        err = np.where(use1, e1, err)
        lam = np.where(use1, 1.0, lam)
        j = np.argmin(err, axis=1)
        rows = np.arange(len(xs))
        index[s:s + step] = j
        lam_out[s:s + step] = lam[rows, j]
        err_out[s:s + step] = err[rows, j]
    lj = lam_out[:, None]
    xhat = (1.0 - lj) * start[index] + lj * end[index]
    return Assignment(index, lam_out, xhat, err_out)


def quantize_segment_batch(data, codebook) -> Assignment:
    """Closed-form projection of every row onto the curve (lowest segment wins ties)."""
    x = as_vectors(data, "data")
    c = as_codebook(codebook)
    check_same_dim(x, c)
    return _project(x, c)


def quantize_segment(x, codebook) -> Assignment:
    """Project a single vector onto the curve; fields of the result are scalars."""
    c = as_codebook(codebook)
    v = as_vector(x, c.shape[1], "x")
    a = _project(v[None, :], c)
    return Assignment(int(a.index[0]), float(a.lam[0]), a.xhat[0], float(a.sq_error[0]))


def codeword_distortion(data, codebook) -> float:
    """Mean squared error of nearest-codeword quantization."""
    return float(np.mean(quantize_nearest_batch(data, codebook).sq_error))


def segment_distortion(data, codebook) -> float:
    """Mean squared error of projecting onto the curve."""
    return float(np.mean(quantize_segment_batch(data, codebook).sq_error))


# ---------------------------------------------------------------------------
# training


def train(config: TrainConfig, data, log: TextIO | None = None) -> TrainResult:
    """Recursively train a codebook of ``2**config.target_bits`` codewords.

    Each stage runs ``batches_per_stage`` Adam steps at a fixed size, with a
    fresh learning-rate schedule and zeroed optimizer moments; the codebook
    is then doubled with :func:`expand`. ``mode='vq'`` runs the same pipeline
    with plain nearest-codeword assignment.

    If ``log`` is given, ``batch<TAB>loss<TAB>lr`` lines are written every
    ``config.log_every`` batches (global batch index).
    """
    x = as_vectors(data, "data")
    if len(x) < config.batch_size:
        raise InsufficientDataError(
            f"need at least batch_size={config.batch_size} vectors, got {len(x)}")
    rng = np.random.default_rng(config.seed)
    if config.init_mode == "norm_sorted":
        c = init_norm_sorted(x, INIT_CODEWORDS, config.init_sample_count, rng)
    else:
        c = init_random(INIT_CODEWORDS, x.shape[1], rng)

    schedule = config.schedule()
    lrs = np.array([lr_at(schedule, b) for b in range(schedule.stage_batches)])
    n_stages = config.target_bits - 1
    bsz = config.batch_size
    per_sample = config.lambda_mode == "per_sample"
    history = []
    global_batch = 0
    for stage in range(n_stages):
        n_cw = len(c)
        state = AdamState.zeros(c.shape)
        losses = np.empty(config.batches_per_stage)
        for b in range(config.batches_per_stage):
            xb = x[rng.integers(0, len(x), size=bsz)]
            if config.mode == "sfvq":
                lam_shape = (bsz, n_cw - 1) if per_sample else (n_cw - 1,)
                loss, grads, _ = _sfvq_loss_grad(xb, c, rng.random(lam_shape))
            else:
                loss, grads, _ = _vq_loss_grad(xb, c)
            c, state = adam_step(state, c, grads, lrs[b])
            losses[b] = loss
            if log is not None and config.log_every and global_batch % config.log_every == 0:
                log.write(f"{global_batch}\t{loss:.6g}\t{lrs[b]:.6g}\n")
            global_batch += 1
        history.append(StageRecord(n_cw, losses))
        if stage < n_stages - 1:
            c = expand(c)
    return TrainResult(c, history)
