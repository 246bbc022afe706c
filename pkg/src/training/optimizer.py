"""
Loss and optimizer for the RAF head
Softmax cross-entropy and bias-corrected Adam over named parameter arrays
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from config.settings import settings
from src.autodiff.engine import SoftmaxCrossEntropy
from src.errors import NonFiniteError, ShapeMismatchError
from src.tensors.tensor_core import ArrayLike, as_array

logger = logging.getLogger(__name__)


def cross_entropy_loss(logits: ArrayLike, target: int) -> float:
    """-log softmax(logits)[target], evaluated in log space"""
    return float(SoftmaxCrossEntropy(target).forward(as_array(logits)))


@dataclass
class TrainConfig:
    learning_rate: float = settings.LEARNING_RATE
    batch_size: int = settings.BATCH_SIZE
    steps: int = settings.TRAIN_STEPS
    beta1: float = settings.ADAM_BETA1
    beta2: float = settings.ADAM_BETA2
    epsilon: float = settings.ADAM_EPSILON
    seed: int = 0
    shuffle: bool = True
    log_every: int = settings.LOG_EVERY
    threads: int = settings.NUM_THREADS

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError(f"Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    v: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray]) -> 'AdamState':
        return cls(
            OrderedDict((name, np.zeros_like(value)) for name, value in params.items()),
            OrderedDict((name, np.zeros_like(value)) for name, value in params.items()),
            0,
        )

    def copy(self) -> 'AdamState':
        return AdamState(
            OrderedDict((name, value.copy()) for name, value in self.m.items()),
            OrderedDict((name, value.copy()) for name, value in self.v.items()),
            self.step,
        )


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState,
              cfg: TrainConfig) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    One bias-corrected Adam update, applied in place

    Raises:
        ShapeMismatchError: gradient or moment shapes differ from the parameters
        NonFiniteError: any gradient entry is NaN/Inf; nothing is modified
    """
    for name, value in params.items():
        if name not in grads or grads[name].shape != value.shape:
            raise ShapeMismatchError(f"gradient for '{name}' is missing or has the wrong shape")
        if state.m[name].shape != value.shape or state.v[name].shape != value.shape:
            raise ShapeMismatchError(f"Adam moments for '{name}' do not match the parameter shape")
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteError(f"non-finite gradient for '{name}' at step {state.step + 1}")

    state.step += 1
    t = state.step
    correction1 = 1.0 - cfg.beta1 ** t
    correction2 = 1.0 - cfg.beta2 ** t
    for name, value in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        value -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.epsilon)
    return params, state
