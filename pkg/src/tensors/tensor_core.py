"""
Dense tensor storage and multilinear primitives
Row-major float64 tensors, mode-n vector products, linear maps, softmax and tanh
"""

import logging
from typing import Sequence, Union

import numpy as np

from src.errors import NonFiniteError, ShapeMismatchError

logger = logging.getLogger(__name__)

ArrayLike = Union['Tensor', np.ndarray, Sequence[float]]


class Tensor:
    """
    Immutable dense real tensor

    Data is kept as a read-only float64 numpy array in row-major (C) order,
    so the flat view is exactly the documented layout with the last index fastest.
    """

    def __init__(self, shape: Sequence[int], data: Sequence[float]):
        shape = tuple(int(extent) for extent in shape)
        if len(shape) < 1:
            raise ValueError("Tensor rank must be at least 1")
        if any(extent < 1 for extent in shape):
            raise ValueError(f"Tensor extents must be >= 1, got {shape}")

        flat = np.array(data, dtype=np.float64).reshape(-1)
        expected = int(np.prod(shape))
        if flat.size != expected:
            raise ShapeMismatchError(
                f"Shape {shape} needs {expected} entries but data has {flat.size}"
            )

        self._array = flat.reshape(shape, order='C')
        self._array.flags.writeable = False

    @classmethod
    def from_array(cls, array: np.ndarray) -> 'Tensor':
        array = np.asarray(array, dtype=np.float64)
        return cls(array.shape, array.reshape(-1))

    @property
    def shape(self) -> tuple:
        return self._array.shape

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the entries"""
        return self._array.reshape(-1)

    def numpy(self) -> np.ndarray:
        return self._array

    def entry(self, *index: int) -> float:
        return float(self._array[index])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def as_array(value: ArrayLike) -> np.ndarray:
    """Float64 array view of a Tensor, ndarray or sequence"""
    if isinstance(value, Tensor):
        return value.numpy()
    return np.asarray(value, dtype=np.float64)


def _require_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} received non-finite input")


def tensor_create(shape: Sequence[int], data: Sequence[float]) -> Tensor:
    return Tensor(shape, data)


def mode_n_vector_product(t: ArrayLike, v: ArrayLike, mode: int) -> Tensor:
    """
    Contract a rank-3 tensor with a vector along one mode

    Args:
        t: rank-3 tensor
        v: vector whose length equals the extent of `t` at `mode`
        mode: 1-based mode index (1, 2 or 3), matching the x_1/x_2/x_3 notation

    Returns:
        Rank-2 tensor over the two remaining modes, in their original order
    """
    t = as_array(t)
    v = as_array(v)
    if t.ndim != 3:
        raise ShapeMismatchError(f"mode-n product needs a rank-3 tensor, got rank {t.ndim}")
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    if v.ndim != 1 or v.shape[0] != t.shape[mode - 1]:
        raise ShapeMismatchError(
            f"vector of shape {v.shape} cannot contract mode {mode} of tensor {t.shape}"
        )
    return Tensor.from_array(np.tensordot(v, t, axes=([0], [mode - 1])))


def linear_map(m: ArrayLike, x: ArrayLike) -> np.ndarray:
    """
    Compute x^T m

    `x` may also be a matrix of row vectors [L x d_in]; each row is mapped.
    """
    m = as_array(m)
    x = as_array(x)
    if m.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != m.shape[0]:
        raise ShapeMismatchError(f"cannot map input of shape {x.shape} through matrix {m.shape}")
    return x @ m


def softmax(logits: ArrayLike) -> np.ndarray:
    """Softmax over the last axis, computed with max-subtraction"""
    logits = as_array(logits)
    if logits.size == 0:
        raise ValueError("softmax needs at least one logit")
    _require_finite(logits, "softmax")
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def tanh_map(x: ArrayLike) -> np.ndarray:
    """
    Elementwise tanh kept strictly inside (-1, 1)

    float64 tanh rounds to exactly +-1 once |x| passes about 19.1; those entries are
    pulled back to the nearest representable value inside the interval.
    """
    x = as_array(x)
    _require_finite(x, "tanh")
    bound = np.nextafter(1.0, 0.0)
    return np.clip(np.tanh(x), -bound, bound)


def concat_vectors(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    a = as_array(a).reshape(-1)
    b = as_array(b).reshape(-1)
    return np.concatenate([a, b])
