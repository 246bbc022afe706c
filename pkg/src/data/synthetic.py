"""
Planted synthetic VQA tasks
Each question names one grid cell and one object; the answer is the class code
stored at the named cell (grid task), at the named object (object task), or
their sum mod K (joint task). Questions and feature rows carry a constant
1 channel after the codes.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from config.settings import settings
from src.data.answers import AnswerVocab, class_vocab
from src.data.dataset_io import Dataset

logger = logging.getLogger(__name__)

TASKS = ('grid', 'object', 'joint')
LOCATION_CODES = ('binary', 'onehot')


def location_code_width(locations: int) -> int:
    return max(1, int(np.ceil(np.log2(locations))))


def location_codes(locations: int, encoding: str = 'binary') -> np.ndarray:
    """
    Row i encodes location i

    binary: +/-1 per bit of i, least significant bit first; onehot: identity rows.
    """
    if encoding == 'onehot':
        return np.eye(locations)
    width = location_code_width(locations)
    bits = (np.arange(locations)[:, None] >> np.arange(width)[None, :]) & 1
    return np.where(bits == 1, 1.0, -1.0)


@dataclass(frozen=True)
class SynthSpec:
    task: str
    count: int
    answers: int
    n_q: int
    n_v: int
    grid: int
    objects: int
    noise: float = settings.SYNTH_NOISE
    seed: int = 0
    location_code: str = 'binary'

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"Unknown task '{self.task}' (expected one of {TASKS})")
        if self.location_code not in LOCATION_CODES:
            raise ValueError(f"Unknown location code '{self.location_code}'")
        if self.count < 0:
            raise ValueError(f"count must be >= 0, got {self.count}")
        if min(self.answers, self.grid, self.objects) < 1:
            raise ValueError("answers, grid and objects must all be >= 1")
        if self.noise < 0:
            raise ValueError(f"noise must be >= 0, got {self.noise}")

        grid_width, object_width = self.code_widths
        if self.n_q < grid_width + object_width + 1:
            raise ValueError(f"n_q={self.n_q} cannot hold location codes of width "
                             f"{grid_width} + {object_width} plus a bias channel")
        if self.n_v < self.answers + max(grid_width, object_width) + 1:
            raise ValueError(f"n_v={self.n_v} cannot hold {self.answers} class channels plus "
                             f"{max(grid_width, object_width)} location channels and a bias channel")

    @property
    def code_widths(self) -> Tuple[int, int]:
        if self.location_code == 'onehot':
            return self.grid, self.objects
        return location_code_width(self.grid), location_code_width(self.objects)

    @classmethod
    def from_preset(cls, name: str, task: str, count: int, **overrides) -> 'SynthSpec':
        preset = settings.get_preset(name)
        params = dict(answers=preset['answers'], n_q=preset['n_q'], n_v=preset['n_v'],
                      grid=preset['grid'], objects=preset['objects'])
        params.update(overrides)
        return cls(task=task, count=count, **params)


@dataclass
class _Draws:
    grid_target: np.ndarray
    object_target: np.ndarray
    grid_classes: np.ndarray
    object_classes: np.ndarray
    q: np.ndarray
    v_I: np.ndarray
    v_O: np.ndarray
    labels: np.ndarray


def _draw(spec: SynthSpec) -> _Draws:
    rng = np.random.default_rng(spec.seed)
    n, k = spec.count, spec.answers
    grid_target = rng.integers(0, spec.grid, size=n)
    object_target = rng.integers(0, spec.objects, size=n)
    grid_classes = rng.integers(0, k, size=(n, spec.grid))
    object_classes = rng.integers(0, k, size=(n, spec.objects))

    grid_codes = location_codes(spec.grid, spec.location_code)
    object_codes = location_codes(spec.objects, spec.location_code)
    grid_width, object_width = spec.code_widths

    q = np.zeros((n, spec.n_q))
    q[:, :grid_width] = grid_codes[grid_target]
    q[:, grid_width:grid_width + object_width] = object_codes[object_target]
    q[:, grid_width + object_width] = 1.0

    classes = np.eye(k)
    v_I = np.zeros((n, spec.grid, spec.n_v))
    v_I[:, :, :k] = classes[grid_classes]
    v_I[:, :, k:k + grid_width] = grid_codes[None, :, :]
    v_I[:, :, k + grid_width] = 1.0
    v_O = np.zeros((n, spec.objects, spec.n_v))
    v_O[:, :, :k] = classes[object_classes]
    v_O[:, :, k:k + object_width] = object_codes[None, :, :]
    v_O[:, :, k + object_width] = 1.0

    q += rng.normal(0.0, spec.noise, size=q.shape)
    v_I += rng.normal(0.0, spec.noise, size=v_I.shape)
    v_O += rng.normal(0.0, spec.noise, size=v_O.shape)

    rows = np.arange(n)
    grid_answer = grid_classes[rows, grid_target]
    object_answer = object_classes[rows, object_target]
    if spec.task == 'grid':
        labels = grid_answer
    elif spec.task == 'object':
        labels = object_answer
    else:
        labels = (grid_answer + object_answer) % k

    return _Draws(grid_target, object_target, grid_classes, object_classes, q, v_I, v_O, labels)


def synthetic_qids(count: int):
    width = max(6, len(str(count)))
    return [f"{i:0{width}d}" for i in range(count)]


def generate_synthetic(spec: SynthSpec) -> Tuple[Dataset, AnswerVocab]:
    """Deterministic in `spec`; the vocabulary is the K class labels '0'..'K-1'"""
    draws = _draw(spec)
    vocab = class_vocab(spec.answers)
    data = Dataset(synthetic_qids(spec.count), draws.q, draws.v_I, draws.v_O, draws.labels, vocab)
    logger.info(f"Generated {spec.count} {spec.task} examples (K={spec.answers}, sigma={spec.noise:g}, "
                f"seed={spec.seed})")
    return data, vocab


def planted_targets(spec: SynthSpec) -> pd.DataFrame:
    """Target cell, target object and their class codes for every example of `spec`"""
    draws = _draw(spec)
    rows = np.arange(spec.count)
    return pd.DataFrame({
        'qid': synthetic_qids(spec.count),
        'grid_target': draws.grid_target,
        'object_target': draws.object_target,
        'grid_class': draws.grid_classes[rows, draws.grid_target],
        'object_class': draws.object_classes[rows, draws.object_target],
    })


def marginal_dataset(spec: SynthSpec) -> Dataset:
    """
    Localization warm-up set for `spec`

    Every generated example appears twice with the same features: once labelled
    with its target cell's class (qid suffix `g`) and once with its target
    object's class (qid suffix `o`). Either label depends on one branch only,
    so attention over both branches gets a direct training signal.
    """
    draws = _draw(spec)
    rows = np.arange(spec.count)
    qids = synthetic_qids(spec.count)
    data = Dataset(
        [f"{qid}g" for qid in qids] + [f"{qid}o" for qid in qids],
        np.concatenate([draws.q, draws.q]),
        np.concatenate([draws.v_I, draws.v_I]),
        np.concatenate([draws.v_O, draws.v_O]),
        np.concatenate([draws.grid_classes[rows, draws.grid_target],
                        draws.object_classes[rows, draws.object_target]]),
        class_vocab(spec.answers),
    )
    logger.info(f"Built {len(data)} marginal-label examples from {spec.count} {spec.task} draws")
    return data
