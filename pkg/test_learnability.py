"""
Desk-scale learnability runs on the planted synthetic tasks
Slow: run with `pytest -m slow`
"""

import numpy as np
import pytest

from src.data.synthetic import SynthSpec, generate_synthetic, marginal_dataset, planted_targets
from src.evaluation.evaluator import evaluate_dataset
from src.models.raf_model import ModelConfig, forward, init_model
from src.training.optimizer import TrainConfig
from src.training.trainer import train, train_phases

pytestmark = pytest.mark.slow

TRAIN_COUNT = 8000
HELDOUT_COUNT = 2000
RUN = TrainConfig(learning_rate=3e-3, batch_size=32, steps=5000, log_every=500, seed=0)
# joint task: attention is localized on the marginal labels first, then the sum is learned
WARMUP = TrainConfig(learning_rate=1e-2, batch_size=32, steps=2000, log_every=500, seed=0)
JOINT_RUN = TrainConfig(learning_rate=3e-3, batch_size=32, steps=3000, log_every=500, seed=1)


def task_split(task, noise=0.1):
    train_spec = SynthSpec.from_preset('desk', task, TRAIN_COUNT, noise=noise, seed=10)
    heldout_spec = SynthSpec.from_preset('desk', task, HELDOUT_COUNT, noise=noise, seed=11)
    return generate_synthetic(train_spec)[0], generate_synthetic(heldout_spec)[0], heldout_spec


def heldout_accuracy(variant, train_data, heldout, cfg=RUN):
    model = init_model(ModelConfig.from_preset('desk', variant=variant, seed=0))
    result = train(model, train_data, cfg)
    assert not result.diverged
    return result.model, evaluate_dataset(result.model, heldout).overall


def test_grid_task_beats_chance_within_default_budget():
    train_data, heldout, _ = task_split('grid')
    cfg = TrainConfig(learning_rate=3e-3, batch_size=32, steps=2000, seed=0)
    _, accuracy = heldout_accuracy('I', train_data, heldout, cfg)
    assert accuracy >= 0.25 + 0.3


def test_grid_task_image_branch():
    train_data, heldout, _ = task_split('grid')
    _, accuracy = heldout_accuracy('I', train_data, heldout)
    assert accuracy >= 0.95


def test_object_task_object_branch():
    train_data, heldout, _ = task_split('object')
    _, accuracy = heldout_accuracy('O', train_data, heldout)
    assert accuracy >= 0.95


def test_joint_task_needs_both_branches():
    train_data, heldout, _ = task_split('joint')
    warmup = marginal_dataset(SynthSpec.from_preset('desk', 'joint', TRAIN_COUNT, seed=10))
    accuracies = {}
    for variant in ('I', 'O', 'IO'):
        model = init_model(ModelConfig.from_preset('desk', variant=variant, seed=0))
        result = train_phases(model, [(warmup, WARMUP), (train_data, JOINT_RUN)])
        assert not result.diverged
        assert result.steps_completed <= 5000
        accuracies[variant] = evaluate_dataset(result.model, heldout).overall
    assert accuracies['IO'] >= 0.90, accuracies
    assert accuracies['I'] <= 0.40, accuracies
    assert accuracies['O'] <= 0.40, accuracies


def test_attention_finds_planted_cell():
    train_data, heldout, heldout_spec = task_split('grid', noise=0.0)
    model, _ = heldout_accuracy('I', train_data, heldout)
    cells = planted_targets(heldout_spec)['grid_target'].to_numpy()
    attended = np.array([int(np.argmax(forward(model, e.q, e.v_I, e.v_O).att_I[0])) for e in heldout])
    assert np.mean(attended == cells) >= 0.90
