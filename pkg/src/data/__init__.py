"""
Data package for the RAF VQA head
Answer vocabulary, dataset files and planted synthetic tasks
"""

from .answers import AnswerVocab, build_answer_vocab, class_vocab, normalize_answer
from .dataset_io import Dataset, Example, read_dataset, read_manifest, write_dataset
from .synthetic import (
    SynthSpec,
    generate_synthetic,
    location_code_width,
    location_codes,
    marginal_dataset,
    planted_targets,
)

__all__ = [
    'AnswerVocab',
    'build_answer_vocab',
    'class_vocab',
    'normalize_answer',
    'Dataset',
    'Example',
    'read_dataset',
    'read_manifest',
    'write_dataset',
    'SynthSpec',
    'generate_synthetic',
    'location_code_width',
    'location_codes',
    'marginal_dataset',
    'planted_targets',
]
