"""
Question-guided soft attention over a set of visual locations
Per-location Tucker fusion, shared logit head, softmax over locations, weighted-sum pooling
"""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.autodiff.engine import SOFTMAX, TRANSPOSE, WEIGHTED_SUM, Trace
from src.errors import ShapeMismatchError
from src.fusion.tucker_fusion import (
    FusionDims,
    TuckerFusionParams,
    backprop_fusion,
    fuse,
    init_params,
    project_out,
    trace_fusion,
)
from src.tensors.tensor_core import ArrayLike, as_array, softmax

logger = logging.getLogger(__name__)


@dataclass
class AttentionBranch:
    """One attention branch; its fusion unit outputs one logit per glimpse"""
    fusion: TuckerFusionParams

    @property
    def glimpses(self) -> int:
        return self.fusion.dims.n_out

    @property
    def feature_dim(self) -> int:
        return self.fusion.dims.n_v_in


@dataclass
class AttentionResult:
    weights: np.ndarray  # [g x L]
    pooled: np.ndarray  # [g * n_v], glimpse-major


def init_branch(n_q: int, n_v: int, t_q: int, t_v: int, t_rho: int, glimpses: int,
                seed: int) -> AttentionBranch:
    return AttentionBranch(init_params(FusionDims(n_q, n_v, t_q, t_v, t_rho, glimpses), seed))


def _check_features(b: AttentionBranch, features: np.ndarray):
    if features.ndim != 2 or features.shape[0] < 1:
        raise ShapeMismatchError(f"features must be a non-empty [L x n_v] matrix, got {features.shape}")
    if features.shape[1] != b.feature_dim:
        raise ShapeMismatchError(
            f"features have width {features.shape[1]}, branch expects {b.feature_dim}"
        )


def score_locations(b: AttentionBranch, q: ArrayLike, features: ArrayLike) -> np.ndarray:
    """Logits [g x L]; every location goes through the same fusion parameters"""
    features = as_array(features)
    _check_features(b, features)
    per_location = project_out(b.fusion, fuse(b.fusion, q, features))
    return np.ascontiguousarray(per_location.T)


def normalize_attention(logits: ArrayLike) -> np.ndarray:
    """Softmax over locations, independently per glimpse row"""
    logits = as_array(logits)
    if logits.ndim != 2:
        raise ShapeMismatchError(f"attention logits must be [g x L], got {logits.shape}")
    return softmax(logits)


def attend(weights: ArrayLike, features: ArrayLike) -> np.ndarray:
    """Weighted sum of feature rows per glimpse, glimpses concatenated in order"""
    weights = as_array(weights)
    features = as_array(features)
    if weights.ndim != 2 or features.ndim != 2 or weights.shape[1] != features.shape[0]:
        raise ShapeMismatchError(f"weights {weights.shape} do not match features {features.shape}")
    return (weights @ features).reshape(-1)


def apply_branch(b: AttentionBranch, q: ArrayLike, features: ArrayLike) -> AttentionResult:
    features = as_array(features)
    weights = normalize_attention(score_locations(b, q, features))
    return AttentionResult(weights, attend(weights, features))


def trace_branch(trace: Trace, prefix: str, b: AttentionBranch, q: np.ndarray,
                 features: np.ndarray) -> np.ndarray:
    """Record the branch on `trace`; returns the pooled vector"""
    features = as_array(features)
    _check_features(b, features)
    per_location = trace_fusion(trace, f"{prefix}.fusion", b.fusion, q, features)
    logits = trace.apply(f"{prefix}.logits", TRANSPOSE, per_location)
    weights = trace.apply(f"{prefix}.weights", SOFTMAX, logits)
    return trace.apply(f"{prefix}.pool", WEIGHTED_SUM, weights, features)


def backprop_branch(trace: Trace, prefix: str, d_pooled: np.ndarray) -> Dict[str, np.ndarray]:
    d_weights, _ = trace.vjp(f"{prefix}.pool", d_pooled)
    (d_logits,) = trace.vjp(f"{prefix}.weights", d_weights)
    (d_per_location,) = trace.vjp(f"{prefix}.logits", d_logits)
    grads, _ = backprop_fusion(trace, f"{prefix}.fusion", d_per_location)
    return grads
