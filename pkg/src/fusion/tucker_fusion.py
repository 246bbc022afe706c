"""
Tucker-decomposed bilinear fusion
Question/visual fusion through a small core tensor, with a dense-tensor oracle
and closed-form parameter accounting
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, fields
from typing import Dict, Optional, Tuple

import numpy as np

from config.settings import settings
from src.autodiff.engine import LINEAR, TANH, ModeProduct, Trace
from src.errors import NonFiniteError, ShapeMismatchError, SizeLimitError
from src.tensors.tensor_core import (
    ArrayLike,
    Tensor,
    as_array,
    linear_map,
    mode_n_vector_product,
    tanh_map,
)

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ('T_q', 'T_v', 'T_c', 'T_out')
CORE_Q_PRODUCT = ModeProduct(1)


@dataclass(frozen=True)
class FusionDims:
    n_q: int
    n_v_in: int
    t_q: int
    t_v: int
    t_rho: int
    n_out: int

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if int(value) != value or value < 1:
                raise ValueError(f"Fusion dimension {f.name} must be a positive integer, got {value}")

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return OrderedDict([
            ('T_q', (self.n_q, self.t_q)),
            ('T_v', (self.n_v_in, self.t_v)),
            ('T_c', (self.t_q, self.t_v, self.t_rho)),
            ('T_out', (self.t_rho, self.n_out)),
        ])


@dataclass
class TuckerFusionParams:
    """
    Factor matrices and core tensor of one fusion unit

    T_out is stored output-oriented [t_rho x n_out] so the same unit serves as
    attention-logit head (n_out = glimpses) and as answer classifier.
    """
    dims: FusionDims
    T_q: np.ndarray
    T_v: np.ndarray
    T_c: np.ndarray
    T_out: np.ndarray

    def __post_init__(self):
        for name, shape in self.dims.shapes().items():
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != shape:
                raise ShapeMismatchError(f"{name} has shape {value.shape}, dims require {shape}")
            if not np.all(np.isfinite(value)):
                raise NonFiniteError(f"{name} contains non-finite entries")
            setattr(self, name, value)

    def named(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, getattr(self, name)) for name in PARAMETER_NAMES)

    @classmethod
    def from_named(cls, dims: FusionDims, named: Dict[str, np.ndarray]) -> 'TuckerFusionParams':
        return cls(dims, *(named[name] for name in PARAMETER_NAMES))

    def num_parameters(self) -> int:
        return sum(int(getattr(self, name).size) for name in PARAMETER_NAMES)


def init_params(dims: FusionDims, seed: int) -> TuckerFusionParams:
    """
    Fan-based uniform initialization

    Matrices draw from U(-s, s) with s = sqrt(6 / (rows + cols)); the core uses
    s = sqrt(6 / (t_q + t_v + t_rho)). Draw order is T_q, T_v, T_c, T_out.
    """
    rng = np.random.default_rng(seed)
    drawn = {}
    for name, shape in dims.shapes().items():
        scale = np.sqrt(6.0 / sum(shape))
        drawn[name] = rng.uniform(-scale, scale, size=shape)
    return TuckerFusionParams.from_named(dims, drawn)


def _check_inputs(p: TuckerFusionParams, q: np.ndarray, v: np.ndarray):
    if q.ndim != 1 or q.shape[0] != p.dims.n_q:
        raise ShapeMismatchError(f"fusion expects a question vector of length {p.dims.n_q}, got {q.shape}")
    if v.ndim not in (1, 2) or v.shape[-1] != p.dims.n_v_in:
        raise ShapeMismatchError(f"fusion expects visual input of width {p.dims.n_v_in}, got {v.shape}")


def fuse(p: TuckerFusionParams, q: ArrayLike, v: ArrayLike, nonlinear: bool = True) -> np.ndarray:
    """
    Fused vector tau = T_c x_1 q~ x_2 v~ with q~ = tanh(q T_q), v~ = tanh(v T_v)

    `v` may be a matrix of rows, giving one fused row per visual vector.
    """
    q = as_array(q)
    v = as_array(v)
    _check_inputs(p, q, v)

    q_proj = linear_map(p.T_q, q)
    v_proj = linear_map(p.T_v, v)
    if nonlinear:
        q_proj = tanh_map(q_proj)
        v_proj = tanh_map(v_proj)

    core = mode_n_vector_product(p.T_c, q_proj, 1).numpy()
    return linear_map(core, v_proj)


def fuse_linear(p: TuckerFusionParams, q: ArrayLike, v: ArrayLike) -> np.ndarray:
    """fuse without the tanh encodings"""
    return fuse(p, q, v, nonlinear=False)


def project_out(p: TuckerFusionParams, tau: ArrayLike) -> np.ndarray:
    tau = as_array(tau)
    if tau.shape[-1] != p.dims.t_rho:
        raise ShapeMismatchError(f"projection expects width {p.dims.t_rho}, got {tau.shape}")
    return linear_map(p.T_out, tau)


def reconstruct_full_tensor(p: TuckerFusionParams, cap: Optional[int] = None) -> Tensor:
    """
    Dense W[a, b, c] = sum_ijk T_q[a,i] T_v[b,j] T_out[k,c] T_c[i,j,k]

    Raises:
        SizeLimitError: n_q * n_v_in * n_out exceeds `cap`
    """
    cap = settings.RECONSTRUCT_CAP if cap is None else cap
    requested = p.dims.n_q * p.dims.n_v_in * p.dims.n_out
    if requested > cap:
        raise SizeLimitError(requested, cap)
    full = np.einsum('ai,bj,kc,ijk->abc', p.T_q, p.T_v, p.T_out, p.T_c, optimize=True)
    return Tensor.from_array(full)


def full_bilinear_oracle(w: ArrayLike, q: ArrayLike, v: ArrayLike) -> np.ndarray:
    """rho = W x_1 q x_2 v, no nonlinearity"""
    w = as_array(w)
    if w.ndim != 3:
        raise ShapeMismatchError(f"bilinear tensor must be rank 3, got shape {w.shape}")
    by_question = mode_n_vector_product(w, q, 1)
    return linear_map(by_question.numpy(), v)


def parameter_count(dims: FusionDims, warn_degenerate: bool = True) -> Tuple[int, int]:
    """(full bilinear count, Tucker count) as exact integers"""
    full = dims.n_q * dims.n_v_in * dims.n_out
    tucker = (dims.n_q * dims.t_q + dims.n_v_in * dims.t_v
              + dims.t_q * dims.t_v * dims.t_rho + dims.t_rho * dims.n_out)
    if warn_degenerate and tucker >= full:
        logger.warning(f"Degenerate factorization: tucker count {tucker:,} >= full count {full:,}")
    return full, tucker


def trace_fusion(trace: Trace, prefix: str, p: TuckerFusionParams, q: np.ndarray,
                 v: np.ndarray) -> np.ndarray:
    """Record fuse followed by project_out on `trace` under node names `<prefix>.*`"""
    _check_inputs(p, np.asarray(q), np.asarray(v))
    q_proj = trace.apply(f"{prefix}.q_proj", LINEAR, p.T_q, q)
    q_tilde = trace.apply(f"{prefix}.q_tanh", TANH, q_proj)
    v_proj = trace.apply(f"{prefix}.v_proj", LINEAR, p.T_v, v)
    v_tilde = trace.apply(f"{prefix}.v_tanh", TANH, v_proj)
    core = trace.apply(f"{prefix}.core_q", CORE_Q_PRODUCT, p.T_c, q_tilde)
    tau = trace.apply(f"{prefix}.core_v", LINEAR, core, v_tilde)
    return trace.apply(f"{prefix}.out", LINEAR, p.T_out, tau)


def backprop_fusion(trace: Trace, prefix: str,
                    d_out: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """
    Reverse pass through a traced fusion unit

    Returns:
        (parameter gradients keyed T_q/T_v/T_c/T_out, gradient w.r.t. the visual input)
    """
    d_T_out, d_tau = trace.vjp(f"{prefix}.out", d_out)
    d_core, d_v_tilde = trace.vjp(f"{prefix}.core_v", d_tau)
    d_T_c, d_q_tilde = trace.vjp(f"{prefix}.core_q", d_core)
    (d_v_proj,) = trace.vjp(f"{prefix}.v_tanh", d_v_tilde)
    d_T_v, d_v = trace.vjp(f"{prefix}.v_proj", d_v_proj)
    (d_q_proj,) = trace.vjp(f"{prefix}.q_tanh", d_q_tilde)
    d_T_q, _ = trace.vjp(f"{prefix}.q_proj", d_q_proj)
    grads = OrderedDict([('T_q', d_T_q), ('T_v', d_T_v), ('T_c', d_T_c), ('T_out', d_T_out)])
    return grads, d_v
