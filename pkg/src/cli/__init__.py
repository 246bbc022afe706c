"""
Command-line package for the RAF VQA head
"""

from .commands import build_parser, run_cli, setup_logging

__all__ = [
    'build_parser',
    'run_cli',
    'setup_logging',
]
