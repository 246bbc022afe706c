"""
Checkpoint persistence

Layout (all little-endian):
    b"RAFC" | uint32 version=1 | 9 x uint32 dims (n_q, n_v, G, N, t_q, t_v, t_rho, g, n_answers)
    | uint8 variant (0=IO, 1=I, 2=O) | float64 parameters in model order
    | uint8 has_adam | [uint64 step | float64 first moments | float64 second moments]
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from src.errors import CheckpointError
from src.models.raf_model import ModelConfig, RafModel
from src.training.optimizer import AdamState
from src.utils.fileio import atomic_write_bytes

logger = logging.getLogger(__name__)

MAGIC = b'RAFC'
VERSION = 1
VARIANT_CODES = {'IO': 0, 'I': 1, 'O': 2}
HEADER = struct.Struct('<4sI9IB')
STEP = struct.Struct('<Q')


def _config_dims(cfg: ModelConfig) -> Tuple[int, ...]:
    return (cfg.n_q, cfg.n_v, cfg.grid, cfg.objects, cfg.t_q, cfg.t_v, cfg.t_rho,
            cfg.glimpses, cfg.n_answers)


def encode_checkpoint(model: RafModel, adam_state: Optional[AdamState] = None) -> bytes:
    cfg = model.config
    params = model.parameters()
    chunks = [HEADER.pack(MAGIC, VERSION, *_config_dims(cfg), VARIANT_CODES[cfg.variant])]
    chunks.extend(np.ascontiguousarray(value, dtype='<f8').tobytes() for value in params.values())

    if adam_state is None:
        chunks.append(b'\x00')
    else:
        chunks.append(b'\x01')
        chunks.append(STEP.pack(adam_state.step))
        for moments in (adam_state.m, adam_state.v):
            for name in params:
                chunks.append(np.ascontiguousarray(moments[name], dtype='<f8').tobytes())
    return b''.join(chunks)


def save_checkpoint(model: RafModel, path: Union[str, Path],
                    adam_state: Optional[AdamState] = None) -> Path:
    path = atomic_write_bytes(path, encode_checkpoint(model, adam_state))
    logger.info(f"Saved RAF-{model.config.variant} checkpoint to {path}")
    return path


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.payload):
            raise CheckpointError(
                f"Checkpoint truncated while reading {what} "
                f"(need {size} bytes at offset {self.offset}, file has {len(self.payload)})"
            )
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def array(self, shape: Tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(count * 8, what)
        return np.frombuffer(raw, dtype='<f8').astype(np.float64).reshape(shape)


def decode_checkpoint(payload: bytes,
                      expected: Optional[ModelConfig] = None) -> Tuple[RafModel, Optional[AdamState]]:
    reader = _Reader(payload)
    magic, version, *rest = HEADER.unpack(reader.take(HEADER.size, 'header'))
    if magic != MAGIC:
        raise CheckpointError(f"Bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}")

    dims, variant_code = tuple(rest[:9]), rest[9]
    variants = {code: name for name, code in VARIANT_CODES.items()}
    if variant_code not in variants:
        raise CheckpointError(f"Unknown variant byte {variant_code}")

    try:
        cfg = ModelConfig(*dims, variant=variants[variant_code])
    except ValueError as e:
        raise CheckpointError(f"Invalid dims in checkpoint header: {e}") from e

    if expected is not None:
        wanted = _config_dims(expected) + (expected.variant,)
        found = dims + (cfg.variant,)
        if wanted != found:
            raise CheckpointError(f"Checkpoint dims/variant {found} do not match requested {wanted}")
        cfg = expected

    shapes = OrderedDict(
        (f"{stage}.{name}", shape)
        for stage, stage_dims in cfg.stage_dims().items()
        for name, shape in stage_dims.shapes().items()
    )
    params = OrderedDict((name, reader.array(shape, name)) for name, shape in shapes.items())

    flag = reader.take(1, 'optimizer flag')[0]
    adam_state = None
    if flag == 1:
        (step,) = STEP.unpack(reader.take(STEP.size, 'optimizer step'))
        m = OrderedDict((name, reader.array(shape, f"first moment of {name}")) for name, shape in shapes.items())
        v = OrderedDict((name, reader.array(shape, f"second moment of {name}")) for name, shape in shapes.items())
        adam_state = AdamState(m, v, int(step))
    elif flag != 0:
        raise CheckpointError(f"Bad optimizer flag {flag}")

    if reader.offset != len(payload):
        raise CheckpointError(f"{len(payload) - reader.offset} trailing bytes after checkpoint data")

    return RafModel.from_parameters(cfg, params), adam_state


def read_checkpoint(path: Union[str, Path],
                    expected: Optional[ModelConfig] = None) -> Tuple[RafModel, Optional[AdamState]]:
    payload = Path(path).read_bytes()
    model, adam_state = decode_checkpoint(payload, expected)
    logger.info(f"Loaded RAF-{model.config.variant} checkpoint from {path}")
    return model, adam_state


def load_checkpoint(path: Union[str, Path], expected: Optional[ModelConfig] = None) -> RafModel:
    return read_checkpoint(path, expected)[0]
