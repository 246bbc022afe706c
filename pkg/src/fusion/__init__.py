"""
Fusion package for the RAF VQA head
Tucker-decomposed question/visual bilinear fusion
"""

from .tucker_fusion import (
    PARAMETER_NAMES,
    FusionDims,
    TuckerFusionParams,
    backprop_fusion,
    full_bilinear_oracle,
    fuse,
    fuse_linear,
    init_params,
    parameter_count,
    project_out,
    reconstruct_full_tensor,
    trace_fusion,
)

__all__ = [
    'PARAMETER_NAMES',
    'FusionDims',
    'TuckerFusionParams',
    'backprop_fusion',
    'full_bilinear_oracle',
    'fuse',
    'fuse_linear',
    'init_params',
    'parameter_count',
    'project_out',
    'reconstruct_full_tensor',
    'trace_fusion',
]
