"""
Tensor package for the RAF VQA head
Dense row-major tensors and the multilinear primitives built on them
"""

from .tensor_core import (
    Tensor,
    as_array,
    concat_vectors,
    linear_map,
    mode_n_vector_product,
    softmax,
    tanh_map,
    tensor_create,
)

__all__ = [
    'Tensor',
    'as_array',
    'concat_vectors',
    'linear_map',
    'mode_n_vector_product',
    'softmax',
    'tanh_map',
    'tensor_create',
]
