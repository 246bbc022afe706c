"""
Evaluation package for the RAF VQA head
"""

from .evaluator import attention_table, dump_attention, evaluate_dataset, predict_dataset
from .metrics import (
    EvalReport,
    HumanAnswerRecord,
    consensus_fraction,
    consensus_score,
    label_accuracy,
    read_human_answers,
    read_predictions,
    score_predictions,
    vqa_accuracy,
    write_predictions,
)

__all__ = [
    'attention_table',
    'dump_attention',
    'evaluate_dataset',
    'predict_dataset',
    'EvalReport',
    'HumanAnswerRecord',
    'consensus_fraction',
    'consensus_score',
    'label_accuracy',
    'read_human_answers',
    'read_predictions',
    'score_predictions',
    'vqa_accuracy',
    'write_predictions',
]
