"""
Training package for the RAF VQA head
Loss, Adam, the training loop and checkpoint files
"""

from .checkpoint import (
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from .optimizer import AdamState, TrainConfig, adam_step, cross_entropy_loss
from .trainer import TrainResult, batch_stream, check_dataset_fits, train, train_phases

__all__ = [
    'decode_checkpoint',
    'encode_checkpoint',
    'load_checkpoint',
    'read_checkpoint',
    'save_checkpoint',
    'AdamState',
    'TrainConfig',
    'adam_step',
    'cross_entropy_loss',
    'TrainResult',
    'batch_stream',
    'check_dataset_fits',
    'train',
    'train_phases',
]
