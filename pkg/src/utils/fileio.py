"""
File writing helpers
Every output file is written to a sibling temp file and renamed into place
"""

import logging
import os
from pathlib import Path
from typing import Union

import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write bytes so that `path` either keeps its old content or holds all of `payload`"""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)

    tmp_path = path.with_name(path.name + '.tmp')
    try:
        with open(tmp_path, 'wb') as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if tmp_path.exists():
            tmp_path.unlink()
        raise

    logger.debug(f"Wrote {len(payload)} bytes to {path}")
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode('utf-8'))


def atomic_write_tsv(frame: pd.DataFrame, path: PathLike, header: bool = False) -> Path:
    """Tab-separated table with LF line endings"""
    text = frame.to_csv(sep='\t', header=header, index=False, lineterminator='\n')
    return atomic_write_text(path, text)
