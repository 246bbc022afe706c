"""
Main entry point for the RAF VQA head
Loads optional .env settings and dispatches to the command-line interface
"""

import logging
import os
import sys

# Load environment variables
try:
    from dotenv import load_dotenv
    load_dotenv()
    _DOTENV_LOADED = True
except ImportError:
    _DOTENV_LOADED = False

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.cli.commands import run_cli

logger = logging.getLogger(__name__)


def main() -> int:
    code = run_cli(sys.argv[1:])
    if not _DOTENV_LOADED:
        logger.debug("python-dotenv not installed, using system environment variables")
    return code


if __name__ == '__main__':
    sys.exit(main())
