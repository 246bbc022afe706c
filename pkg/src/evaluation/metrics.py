"""
VQA consensus accuracy
An answer scores min(#matching humans / 3, 1); answers are compared after normalization
"""

import csv
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score

from src.data.answers import normalize_answer
from src.errors import DatasetFormatError
from src.utils.fileio import atomic_write_tsv

logger = logging.getLogger(__name__)

HUMAN_ANSWERS = 10
MATCHES_FOR_FULL_CREDIT = 3


@dataclass(frozen=True)
class HumanAnswerRecord:
    qid: str
    answers: Tuple[str, ...]

    def __post_init__(self):
        if len(self.answers) != HUMAN_ANSWERS:
            raise ValueError(f"qid {self.qid}: expected {HUMAN_ANSWERS} human answers, got {len(self.answers)}")
        object.__setattr__(self, 'answers', tuple(self.answers))


@dataclass
class EvalReport:
    """Per-example scores indexed by qid (ascending) and their mean"""
    overall: float
    scores: pd.Series
    count: int
    predictions: Dict[str, str] = field(default_factory=dict)


def consensus_score(matches: int) -> Fraction:
    """Exact min(matches / 3, 1)"""
    if matches < 0:
        raise ValueError(f"matches must be >= 0, got {matches}")
    return min(Fraction(matches, MATCHES_FOR_FULL_CREDIT), Fraction(1))


def consensus_fraction(prediction: str, humans: HumanAnswerRecord, subset_average: bool = False) -> Fraction:
    target = normalize_answer(prediction)
    hits = [normalize_answer(a) == target for a in humans.answers]
    if not subset_average:
        return consensus_score(sum(hits))
    # leave one annotator out at a time and average the ten 9-annotator scores
    total = sum(hits)
    return sum((consensus_score(total - int(hit)) for hit in hits), Fraction(0)) / len(hits)


def vqa_accuracy(prediction: str, humans: HumanAnswerRecord, subset_average: bool = False) -> float:
    return float(consensus_fraction(prediction, humans, subset_average))


def _read_tsv(path: Union[str, Path], what: str) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{what} file not found: {path}")
    if path.stat().st_size == 0:
        return pd.DataFrame()
    try:
        return pd.read_csv(path, sep='\t', header=None, dtype=str, keep_default_na=False,
                           quoting=csv.QUOTE_NONE)
    except pd.errors.ParserError as e:
        raise DatasetFormatError(f"Malformed {what} file {path}: {e}") from e


def read_human_answers(path: Union[str, Path]) -> Dict[str, HumanAnswerRecord]:
    """humans.tsv: qid followed by ten raw answers per line"""
    table = _read_tsv(path, 'human answers')
    if table.empty:
        return {}
    if table.shape[1] != HUMAN_ANSWERS + 1 or table.isna().any().any():
        raise DatasetFormatError(f"{path}: every line needs a qid and {HUMAN_ANSWERS} answers")

    records = {}
    for row in table.itertuples(index=False):
        qid = row[0]
        if qid in records:
            raise DatasetFormatError(f"{path}: duplicate qid {qid}")
        records[qid] = HumanAnswerRecord(qid, tuple(row[1:]))
    return records


def read_predictions(path: Union[str, Path]) -> Dict[str, str]:
    """preds.tsv: qid<TAB>answer_string"""
    table = _read_tsv(path, 'predictions')
    if table.empty:
        return {}
    if table.shape[1] != 2 or table.isna().any().any():
        raise DatasetFormatError(f"{path}: every line needs exactly a qid and an answer")
    if table[0].duplicated().any():
        raise DatasetFormatError(f"{path}: duplicate qids")
    return dict(zip(table[0], table[1]))


def write_predictions(predictions: Mapping[str, str], path: Union[str, Path]) -> Path:
    frame = pd.DataFrame({'qid': list(predictions.keys()), 'answer': list(predictions.values())})
    return atomic_write_tsv(frame, path)


def report_from_scores(scores: pd.Series, predictions: Dict[str, str] = None) -> EvalReport:
    scores = scores.sort_index(kind='mergesort')
    if len(scores) == 0:
        logger.warning("Evaluating an empty set of predictions; reporting accuracy 0")
        return EvalReport(0.0, scores, 0, predictions or {})
    # summation in ascending qid order
    overall = float(np.sum(scores.to_numpy()) / len(scores))
    return EvalReport(overall, scores, len(scores), predictions or {})


def score_predictions(predictions: Mapping[str, str], humans: Mapping[str, HumanAnswerRecord],
                      subset_average: bool = False) -> EvalReport:
    """
    Mean consensus accuracy over the predicted qids

    Raises:
        DatasetFormatError: some predicted qids have no human answers (all are listed)
    """
    missing = sorted(qid for qid in predictions if qid not in humans)
    if missing:
        raise DatasetFormatError(f"No human answers for qids: {', '.join(missing)}")

    qids = sorted(predictions)
    scores = pd.Series(
        [vqa_accuracy(predictions[qid], humans[qid], subset_average) for qid in qids],
        index=pd.Index(qids, name='qid'), dtype=np.float64,
    )
    return report_from_scores(scores, {qid: predictions[qid] for qid in qids})


def label_accuracy(predicted: Sequence[int], labels: Sequence[int]) -> float:
    """Exact-match accuracy over class indices"""
    if len(labels) == 0:
        return 0.0
    return float(accuracy_score(np.asarray(labels), np.asarray(predicted)))
