"""
Dataset container and its on-disk directory format

    manifest.txt   key=value lines
    vocab.txt      one normalized answer per line, line number = class index
    features.bin   per example: q, v_I (location-major), v_O; little-endian float32
    labels.tsv     qid<TAB>answer_index, in feature-record order
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Union

import numpy as np
import pandas as pd

from src.data.answers import AnswerVocab
from src.errors import DatasetFormatError, ShapeMismatchError
from src.utils.fileio import atomic_write_bytes, atomic_write_text, atomic_write_tsv

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = 'manifest.txt'
DEFAULT_FILES = {'vocab': 'vocab.txt', 'features': 'features.bin', 'labels': 'labels.tsv'}
MANIFEST_KEYS = ('version', 'count', 'n_q', 'n_v', 'grid', 'objects', 'vocab', 'features', 'labels')


@dataclass(frozen=True)
class Example:
    qid: str
    q: np.ndarray
    v_I: np.ndarray
    v_O: np.ndarray
    answer: int


@dataclass
class Dataset:
    """
    Column-stored examples

    q is [count x n_q], v_I is [count x G x n_v], v_O is [count x N x n_v].
    """
    qids: List[str]
    q: np.ndarray
    v_I: np.ndarray
    v_O: np.ndarray
    labels: np.ndarray
    vocab: AnswerVocab

    def __post_init__(self):
        self.qids = [str(qid) for qid in self.qids]
        self.q = np.asarray(self.q, dtype=np.float64)
        self.v_I = np.asarray(self.v_I, dtype=np.float64)
        self.v_O = np.asarray(self.v_O, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)

        count = len(self.qids)
        if self.q.ndim != 2 or self.v_I.ndim != 3 or self.v_O.ndim != 3 or self.labels.ndim != 1:
            raise ShapeMismatchError("dataset arrays have the wrong rank")
        if {self.q.shape[0], self.v_I.shape[0], self.v_O.shape[0], self.labels.shape[0]} != {count}:
            raise ShapeMismatchError(f"dataset arrays disagree with {count} qids")
        if self.v_I.shape[2] != self.v_O.shape[2]:
            raise ShapeMismatchError(f"grid and object features differ in width "
                                     f"({self.v_I.shape[2]} vs {self.v_O.shape[2]})")
        if len(set(self.qids)) != count:
            raise ValueError("duplicate qids in dataset")
        if count and (self.labels.min() < 0 or self.labels.max() >= len(self.vocab)):
            raise ValueError(f"labels must lie in [0, {len(self.vocab)})")
        for name in ('q', 'v_I', 'v_O'):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"dataset {name} contains non-finite values")

    @classmethod
    def from_examples(cls, examples: Sequence[Example], vocab: AnswerVocab, n_q: int, n_v: int,
                      grid: int, objects: int) -> 'Dataset':
        count = len(examples)
        if count == 0:
            return cls([], np.zeros((0, n_q)), np.zeros((0, grid, n_v)), np.zeros((0, objects, n_v)),
                       np.zeros(0, dtype=np.int64), vocab)
        return cls(
            [e.qid for e in examples],
            np.stack([e.q for e in examples]),
            np.stack([e.v_I for e in examples]),
            np.stack([e.v_O for e in examples]),
            np.array([e.answer for e in examples], dtype=np.int64),
            vocab,
        )

    @property
    def n_q(self) -> int:
        return self.q.shape[1]

    @property
    def n_v(self) -> int:
        return self.v_I.shape[2]

    @property
    def grid(self) -> int:
        return self.v_I.shape[1]

    @property
    def objects(self) -> int:
        return self.v_O.shape[1]

    def __len__(self) -> int:
        return len(self.qids)

    def __getitem__(self, i: int) -> Example:
        return Example(self.qids[i], self.q[i], self.v_I[i], self.v_O[i], int(self.labels[i]))

    def __iter__(self) -> Iterator[Example]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, indices: Sequence[int]) -> 'Dataset':
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset([self.qids[i] for i in idx], self.q[idx], self.v_I[idx], self.v_O[idx],
                       self.labels[idx], self.vocab)


def write_dataset(data: Dataset, directory: Union[str, Path]) -> Path:
    """
    Write the four dataset files; each is replaced atomically, manifest last
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    count = len(data)

    records = np.concatenate(
        [data.q, data.v_I.reshape(count, data.grid * data.n_v),
         data.v_O.reshape(count, data.objects * data.n_v)], axis=1
    )
    atomic_write_bytes(directory / DEFAULT_FILES['features'], records.astype('<f4').tobytes())
    atomic_write_text(directory / DEFAULT_FILES['vocab'],
                      ''.join(f"{answer}\n" for answer in data.vocab.answers))
    atomic_write_tsv(pd.DataFrame({'qid': data.qids, 'answer': data.labels}),
                     directory / DEFAULT_FILES['labels'])

    manifest = {
        'version': FORMAT_VERSION, 'count': count, 'n_q': data.n_q, 'n_v': data.n_v,
        'grid': data.grid, 'objects': data.objects, **DEFAULT_FILES,
    }
    atomic_write_text(directory / MANIFEST, ''.join(f"{key}={manifest[key]}\n" for key in MANIFEST_KEYS))
    logger.info(f"Wrote {count} examples to {directory}")
    return directory


def read_manifest(directory: Union[str, Path]) -> Dict[str, str]:
    path = Path(directory) / MANIFEST
    if not path.exists():
        raise DatasetFormatError(f"No {MANIFEST} in {directory}")

    manifest = {}
    for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise DatasetFormatError(f"{MANIFEST} line {number} is not key=value: {line!r}")
        manifest[key.strip()] = value.strip()

    missing = [key for key in MANIFEST_KEYS if key not in manifest]
    if missing:
        raise DatasetFormatError(f"{MANIFEST} is missing keys {missing}")
    if manifest['version'] != str(FORMAT_VERSION):
        raise DatasetFormatError(f"Unsupported dataset version {manifest['version']}")
    return manifest


def _read_labels(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise DatasetFormatError(f"Missing labels file {path}")
    if path.stat().st_size == 0:
        return pd.DataFrame({'qid': [], 'answer': []})
    try:
        table = pd.read_csv(path, sep='\t', header=None, names=['qid', 'answer'], dtype=str,
                            keep_default_na=False, quoting=csv.QUOTE_NONE)
    except pd.errors.ParserError as e:
        raise DatasetFormatError(f"Malformed labels file {path}: {e}") from e
    if (table['answer'] == '').any() or not table['answer'].str.fullmatch(r'\d+').all():
        raise DatasetFormatError(f"labels file {path} has non-integer answer indices")
    return table


def read_dataset(directory: Union[str, Path]) -> Dataset:
    directory = Path(directory)
    manifest = read_manifest(directory)
    try:
        count, n_q, n_v, grid, objects = (int(manifest[key]) for key in ('count', 'n_q', 'n_v', 'grid', 'objects'))
    except ValueError as e:
        raise DatasetFormatError(f"Non-integer dimension in {MANIFEST}: {e}") from e

    vocab_path = directory / manifest['vocab']
    if not vocab_path.exists():
        raise DatasetFormatError(f"Missing vocabulary file {vocab_path}")
    vocab = AnswerVocab(vocab_path.read_text(encoding='utf-8').splitlines())

    features_path = directory / manifest['features']
    if not features_path.exists():
        raise DatasetFormatError(f"Missing features file {features_path}")
    raw = features_path.read_bytes()
    record = n_q + (grid + objects) * n_v
    record_bytes = record * 4
    if len(raw) != count * record_bytes:
        held = len(raw) / record_bytes
        raise DatasetFormatError(
            f"manifest count={count} but {features_path.name} holds {held:g} records "
            f"({len(raw)} bytes, {record_bytes} per record)"
        )
    features = np.frombuffer(raw, dtype='<f4').astype(np.float64).reshape(count, record)

    labels = _read_labels(directory / manifest['labels'])
    if len(labels) != count:
        raise DatasetFormatError(f"manifest count={count} but labels file has {len(labels)} rows")
    answers = labels['answer'].astype(np.int64).to_numpy()
    if count and answers.max() >= len(vocab):
        raise DatasetFormatError(f"label {answers.max()} out of range for vocabulary of {len(vocab)}")

    q = features[:, :n_q]
    v_I = features[:, n_q:n_q + grid * n_v].reshape(count, grid, n_v)
    v_O = features[:, n_q + grid * n_v:].reshape(count, objects, n_v)
    data = Dataset(labels['qid'].tolist(), q, v_I, v_O, answers, vocab)
    logger.info(f"Read {count} examples from {directory}")
    return data
