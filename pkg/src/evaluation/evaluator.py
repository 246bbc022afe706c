"""
Dataset-level evaluation and attention export
"""

import logging
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.data.dataset_io import Dataset
from src.evaluation.metrics import (
    EvalReport,
    HumanAnswerRecord,
    label_accuracy,
    report_from_scores,
    score_predictions,
)
from src.models.raf_model import RafModel, forward, predict
from src.utils.fileio import atomic_write_tsv

logger = logging.getLogger(__name__)

ATTENTION_COLUMNS = ['qid', 'branch', 'glimpse', 'index', 'weight']


def predict_dataset(model: RafModel, data: Dataset, threads: int = 1) -> np.ndarray:
    """Predicted class index per example, in dataset order"""
    if threads > 1:
        predicted = Parallel(n_jobs=threads, backend='threading')(
            delayed(predict)(model, example) for example in data
        )
    else:
        predicted = [predict(model, example) for example in data]
    return np.asarray(predicted, dtype=np.int64)


def evaluate_dataset(model: RafModel, data: Dataset,
                     humans: Optional[Mapping[str, HumanAnswerRecord]] = None,
                     subset_average: bool = False, threads: int = 1) -> EvalReport:
    """
    Consensus accuracy against human answers, or exact-match label accuracy without them
    """
    predicted = predict_dataset(model, data, threads)
    answers = {qid: data.vocab.answer_at(int(i)) for qid, i in zip(data.qids, predicted)}

    if humans is not None:
        report = score_predictions(answers, humans, subset_average)
    else:
        correct = (predicted == data.labels).astype(np.float64)
        scores = pd.Series(correct, index=pd.Index(data.qids, name='qid'), dtype=np.float64)
        report = report_from_scores(scores, answers)
        if report.count:
            report.overall = label_accuracy(predicted, data.labels)

    logger.info(f"Accuracy {report.overall:.4f} over {report.count} examples")
    return report


def attention_table(model: RafModel, data: Dataset) -> pd.DataFrame:
    rows = []
    for example in data:
        result = forward(model, example.q, example.v_I, example.v_O)
        for branch, weights in (('image', result.att_I), ('object', result.att_O)):
            if weights is None:
                continue
            for glimpse, row in enumerate(weights):
                for index, weight in enumerate(row):
                    rows.append((example.qid, branch, glimpse, index, float(weight)))
    return pd.DataFrame(rows, columns=ATTENTION_COLUMNS)


def dump_attention(model: RafModel, data: Dataset, path: Union[str, Path]) -> int:
    """Write attn.tsv (header row, then one row per weight); returns the number of weight rows"""
    table = attention_table(model, data)
    atomic_write_tsv(table, path, header=True)
    logger.info(f"Wrote {len(table)} attention weights to {path}")
    return len(table)
