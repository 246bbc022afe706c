"""
Mini-batch training loop
Seeded shuffled batches, per-example gradients averaged in example order, Adam updates
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.autodiff.engine import batch_forward_backward
from src.errors import NonFiniteError, ShapeMismatchError
from src.models.raf_model import RafModel
from src.training.optimizer import AdamState, TrainConfig, adam_step

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: RafModel
    adam_state: AdamState
    steps_completed: int
    loss_history: List[float] = field(default_factory=list)
    history_steps: List[int] = field(default_factory=list)
    diverged: bool = False


def batch_stream(count: int, batch_size: int, seed: int, shuffle: bool = True) -> Iterator[np.ndarray]:
    """
    Endless stream of index batches

    Each epoch is a fresh permutation (identity order without shuffling); a batch
    may straddle an epoch boundary.
    """
    rng = np.random.default_rng(seed)
    epoch = np.array([], dtype=np.int64)
    position = 0
    while True:
        batch = []
        while len(batch) < batch_size:
            if position == epoch.size:
                epoch = rng.permutation(count) if shuffle else np.arange(count)
                position = 0
            take = min(batch_size - len(batch), epoch.size - position)
            batch.extend(epoch[position:position + take].tolist())
            position += take
        yield np.array(batch, dtype=np.int64)


def check_dataset_fits(model: RafModel, data) -> None:
    cfg = model.config
    expected = (cfg.n_q, cfg.n_v, cfg.grid, cfg.objects)
    actual = (data.n_q, data.n_v, data.grid, data.objects)
    if expected != actual:
        raise ShapeMismatchError(f"dataset dims (n_q, n_v, G, N) = {actual} but model expects {expected}")
    if len(data) and int(np.max(data.labels)) >= cfg.n_answers:
        raise ShapeMismatchError(
            f"dataset label {int(np.max(data.labels))} out of range for {cfg.n_answers} answers"
        )


def train(model: RafModel, data, cfg: TrainConfig, state: Optional[AdamState] = None) -> TrainResult:
    """
    Train a copy of `model` for cfg.steps Adam steps

    A non-finite loss or gradient stops training; the result then holds the
    parameters and optimizer state from before the failing step and has
    `diverged=True`.
    """
    check_dataset_fits(model, data)
    trained = model.copy()
    params = trained.parameters()
    state = AdamState.zeros_like(params) if state is None else state.copy()

    result = TrainResult(trained, state, 0)
    if cfg.steps == 0:
        return result
    if len(data) == 0:
        raise ValueError("Cannot train on an empty dataset")

    logger.info(f"Training RAF-{model.config.variant} for {cfg.steps} steps "
                f"(batch {cfg.batch_size}, lr {cfg.learning_rate:g}, {len(data)} examples)")

    batches = batch_stream(len(data), cfg.batch_size, cfg.seed, cfg.shuffle)
    interval: List[float] = []
    for step in range(1, cfg.steps + 1):
        indices = next(batches)
        examples = [data[int(i)] for i in indices]
        try:
            loss, grads = batch_forward_backward(trained, params, examples, cfg.threads)
            adam_step(params, grads, state, cfg)
        except NonFiniteError as e:
            logger.warning(f"Stopping at step {step}: {e}; keeping parameters from step {step - 1}")
            result.diverged = True
            break

        interval.append(loss)
        result.steps_completed = step
        if step % cfg.log_every == 0 or step == cfg.steps:
            mean_loss = float(np.mean(interval))
            result.loss_history.append(mean_loss)
            result.history_steps.append(step)
            interval = []
            logger.info(f"step {step}/{cfg.steps} mean loss {mean_loss:.4f}")

    if result.diverged and interval:
        result.loss_history.append(float(np.mean(interval)))
        result.history_steps.append(result.steps_completed)

    return result


def train_phases(model: RafModel, phases: Sequence[Tuple[Any, TrainConfig]],
                 state: Optional[AdamState] = None) -> TrainResult:
    """
    Run `train` over (dataset, config) phases in order

    Parameters and Adam state carry from one phase to the next; loss history
    steps count from the start of the first phase. A diverged phase ends the run.
    """
    if not phases:
        raise ValueError("train_phases needs at least one phase")

    state = AdamState.zeros_like(model.parameters()) if state is None else state.copy()
    result = TrainResult(model.copy(), state, 0)
    for number, (data, cfg) in enumerate(phases, start=1):
        logger.info(f"Phase {number}/{len(phases)}: {cfg.steps} steps on {len(data)} examples")
        phase = train(result.model, data, cfg, result.adam_state)
        result.loss_history.extend(phase.loss_history)
        result.history_steps.extend(result.steps_completed + s for s in phase.history_steps)
        result.model = phase.model
        result.adam_state = phase.adam_state
        result.steps_completed += phase.steps_completed
        if phase.diverged:
            result.diverged = True
            break
    return result
