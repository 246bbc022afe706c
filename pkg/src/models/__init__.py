"""
Models package for the RAF VQA head
"""

from .raf_model import (
    VARIANTS,
    ForwardResult,
    ModelConfig,
    RafModel,
    forward,
    init_model,
    model_parameter_count,
    predict,
    predict_logits,
    probe_example,
    variant_forward,
    with_variant,
)

__all__ = [
    'VARIANTS',
    'ForwardResult',
    'ModelConfig',
    'RafModel',
    'forward',
    'init_model',
    'model_parameter_count',
    'predict',
    'predict_logits',
    'probe_example',
    'variant_forward',
    'with_variant',
]
