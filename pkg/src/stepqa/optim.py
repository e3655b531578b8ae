"""Adam optimizer with bias correction, plus the training hyperparameters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import ModelParams


@dataclass
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 100
    batch_size: int = 16  # step-instances per update; samples are never split
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    teacher_forcing: bool = True
    precision: str = "f64"  # "f32" trades exactness for throughput

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ConfigError("learning rate must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("Adam betas must be in [0, 1)")
        if self.eps <= 0:
            raise ConfigError("Adam eps must be positive")
        if self.precision not in ("f64", "f32"):
            raise ConfigError(f"unknown precision {self.precision!r}")


@dataclass
class OptState:
    """First/second moment buffers mirroring the parameter tensors."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def init_opt_state(params: ModelParams) -> OptState:
    return OptState(
        m={name: np.zeros_like(tensor) for name, tensor in params.tensors()},
        v={name: np.zeros_like(tensor) for name, tensor in params.tensors()},
        t=0,
    )


def adam_update(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: OptState,
    cfg: TrainConfig,
) -> tuple[ModelParams, OptState]:
    """One bias-corrected Adam step, in place:

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)
    """
    state.t += 1
    bc1 = 1.0 - cfg.beta1**state.t
    bc2 = 1.0 - cfg.beta2**state.t
    for name, tensor in params.tensors():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        tensor -= cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)
    return params, state
