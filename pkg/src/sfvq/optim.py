"""Adam with a per-stage step schedule for codebook training."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NumericError


@dataclass(frozen=True)
class LrSchedule:
    """Piecewise-constant learning rate, halved at each of ``halve_points``.

    The schedule restarts at every recursion stage, so indices are
    batch-within-stage.
    """

    base_lr: float = 1e-3
    stage_batches: int = 100_000
    halve_points: tuple[int, ...] = (60_000, 80_000)

    def __post_init__(self):
        if not self.base_lr > 0:
            raise ConfigError("base_lr must be positive")
        if self.stage_batches < 1:
            raise ConfigError("stage_batches must be positive")
        pts = tuple(int(p) for p in self.halve_points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("halve_points must be strictly increasing")
        if pts and (pts[0] < 0 or pts[-1] >= self.stage_batches):
            raise ConfigError("halve_points must lie in [0, stage_batches)")
        object.__setattr__(self, "halve_points", pts)

    @classmethod
    def from_fractions(cls, base_lr: float, stage_batches: int,
                       fractions: tuple[float, ...] = (0.6, 0.8)) -> "LrSchedule":
        """Halve at fixed fractions of the stage (60% / 80% gives 60k / 80k of 100k)."""
        pts = sorted({int(round(f * stage_batches)) for f in fractions})
        pts = [p for p in pts if 0 <= p < stage_batches]
        return cls(base_lr, stage_batches, tuple(pts))


def lr_at(schedule: LrSchedule, batch_in_stage: int) -> float:
    if not 0 <= batch_in_stage < schedule.stage_batches:
        raise ConfigError(
            f"batch index {batch_in_stage} outside stage of {schedule.stage_batches} batches")
    k = sum(1 for p in schedule.halve_points if p <= batch_in_stage)
    return schedule.base_lr * 2.0 ** (-k)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, shape, **kwargs) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), **kwargs)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray, lr: float):
    """One bias-corrected Adam update.

    Returns ``(new_params, new_state)``; the inputs are left untouched.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.m.shape != params.shape:
        raise DimensionError(f"shape mismatch: params {params.shape}, grads {grads.shape}, "
                             f"state {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite gradient")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grads * grads)
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, AdamState(m, v, t, state.beta1, state.beta2, state.eps)
