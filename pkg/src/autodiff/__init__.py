"""
Autodiff package
Per-primitive vector-Jacobian products, traced composition and gradient checking
"""

from .engine import (
    CONCAT,
    LINEAR,
    SOFTMAX,
    TANH,
    TRANSPOSE,
    WEIGHTED_SUM,
    Concat,
    DifferentiableGraph,
    LinearMap,
    ModeProduct,
    Primitive,
    Softmax,
    SoftmaxCrossEntropy,
    Tanh,
    Trace,
    Transpose,
    WeightedSum,
    batch_forward_backward,
    evaluate_loss,
    forward_backward,
)
from .gradcheck import (
    GradientReport,
    finite_difference_gradient,
    gradient_check,
    relative_error,
    sample_entries,
)

__all__ = [
    'CONCAT',
    'LINEAR',
    'SOFTMAX',
    'TANH',
    'TRANSPOSE',
    'WEIGHTED_SUM',
    'Concat',
    'DifferentiableGraph',
    'LinearMap',
    'ModeProduct',
    'Primitive',
    'Softmax',
    'SoftmaxCrossEntropy',
    'Tanh',
    'Trace',
    'Transpose',
    'WeightedSum',
    'batch_forward_backward',
    'evaluate_loss',
    'forward_backward',
    'GradientReport',
    'finite_difference_gradient',
    'gradient_check',
    'relative_error',
    'sample_entries',
]
