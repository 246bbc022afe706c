"""
Answer normalization and vocabulary construction
"""

import logging
import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import pandas as pd

from config.settings import settings

logger = logging.getLogger(__name__)

_ASCII_LOWER = str.maketrans(string.ascii_uppercase, string.ascii_lowercase)
_DROP_PUNCTUATION = str.maketrans('', '', string.punctuation)


def normalize_answer(raw: str) -> str:
    """Lowercase ASCII letters, drop ASCII punctuation, collapse and trim whitespace"""
    text = raw.translate(_ASCII_LOWER).translate(_DROP_PUNCTUATION)
    return ' '.join(text.split())


@dataclass
class AnswerVocab:
    """Ordered answer list; position is the class index"""
    answers: List[str]
    counts: Optional[List[int]] = None
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.answers = list(self.answers)
        self.index = {}
        for i, answer in enumerate(self.answers):
            if answer in self.index:
                raise ValueError(f"Duplicate answer '{answer}' in vocabulary")
            self.index[answer] = i
        if self.counts is not None and len(self.counts) != len(self.answers):
            raise ValueError("counts and answers differ in length")

    def __len__(self) -> int:
        return len(self.answers)

    def __eq__(self, other) -> bool:
        return isinstance(other, AnswerVocab) and self.answers == other.answers

    def index_of(self, answer: str) -> int:
        return self.index[normalize_answer(answer)]

    def answer_at(self, index: int) -> str:
        return self.answers[index]


def build_answer_vocab(answers: Iterable[str], k: Optional[int] = None) -> AnswerVocab:
    """
    Top-k normalized answers by frequency, ties broken by ascending string

    Fewer than k distinct answers gives the full set and a warning.
    """
    k = settings.ANSWER_VOCAB_SIZE if k is None else k
    if k < 1:
        raise ValueError(f"Vocabulary size must be >= 1, got {k}")

    normalized = pd.Series([normalize_answer(a) for a in answers], dtype=object)
    normalized = normalized[normalized != '']
    counts = normalized.value_counts()
    table = pd.DataFrame({'answer': counts.index.astype(str), 'count': counts.to_numpy()})
    table = table.sort_values(['count', 'answer'], ascending=[False, True], kind='mergesort')

    if len(table) < k:
        logger.warning(f"Only {len(table)} distinct answers available for a vocabulary of {k}")
    top = table.head(k)
    return AnswerVocab(top['answer'].tolist(), [int(c) for c in top['count']])


def class_vocab(k: int) -> AnswerVocab:
    """Vocabulary of k synthetic class labels '0' .. 'k-1'"""
    return AnswerVocab([str(i) for i in range(k)])
