"""
Shared pytest fixtures for the RAF VQA head
Small model configs, random datasets and human-answer fixtures
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.data.answers import class_vocab
from src.data.dataset_io import Dataset
from src.models.raf_model import ModelConfig, init_model


def small_config(variant: str = 'IO', seed: int = 0, **overrides) -> ModelConfig:
    dims = dict(n_q=6, n_v=5, grid=4, objects=3, t_q=3, t_v=4, t_rho=5, glimpses=1, n_answers=3)
    dims.update(overrides)
    return ModelConfig(variant=variant, seed=seed, **dims)


def random_dataset(cfg: ModelConfig, count: int, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(
        [f"q{i:03d}" for i in range(count)],
        rng.normal(size=(count, cfg.n_q)),
        rng.normal(size=(count, cfg.grid, cfg.n_v)),
        rng.normal(size=(count, cfg.objects, cfg.n_v)),
        rng.integers(0, cfg.n_answers, size=count),
        class_vocab(cfg.n_answers),
    )


@pytest.fixture
def config():
    return small_config()


@pytest.fixture
def model(config):
    return init_model(config)


@pytest.fixture
def dataset(config):
    return random_dataset(config, 12)


@pytest.fixture
def probe_gradcheck_config():
    """n_v=16, n_q=12, G=9, N=4, t_q=t_v=8, t_rho=10, five answers"""
    def build(variant: str, seed: int) -> ModelConfig:
        return ModelConfig(n_q=12, n_v=16, grid=9, objects=4, t_q=8, t_v=8, t_rho=10,
                           glimpses=1, n_answers=5, variant=variant, seed=seed)
    return build


@pytest.fixture
def three_question_files(tmp_path):
    """preds/humans pair scoring 1, 2/3 and 0"""
    humans = [
        ['q1', 'yes', 'yes', 'Yes.', 'yes', 'no', 'no', 'no', 'no', 'no', 'no'],
        ['q2', 'two', '2', 'two', 'three', '2', '2', '2', '2', '2', '2'],
        ['q3', 'red', 'red', 'red', 'red', 'red', 'red', 'red', 'red', 'red', 'red'],
    ]
    preds = [['q1', 'yes'], ['q2', 'Two'], ['q3', 'blue']]

    human_path = tmp_path / 'humans.tsv'
    pred_path = tmp_path / 'preds.tsv'
    human_path.write_text(''.join('\t'.join(row) + '\n' for row in humans), encoding='utf-8')
    pred_path.write_text(''.join('\t'.join(row) + '\n' for row in preds), encoding='utf-8')
    return pred_path, human_path
