"""
Utility helpers shared by the I/O modules
"""

from .fileio import atomic_write_bytes, atomic_write_text, atomic_write_tsv

__all__ = [
    'atomic_write_bytes',
    'atomic_write_text',
    'atomic_write_tsv',
]
