"""
Attention package for the RAF VQA head
"""

from .attention_branch import (
    AttentionBranch,
    AttentionResult,
    apply_branch,
    attend,
    backprop_branch,
    init_branch,
    normalize_attention,
    score_locations,
    trace_branch,
)

__all__ = [
    'AttentionBranch',
    'AttentionResult',
    'apply_branch',
    'attend',
    'backprop_branch',
    'init_branch',
    'normalize_attention',
    'score_locations',
    'trace_branch',
]
