"""
Configuration settings for the RAF VQA head
Numeric defaults, dimension presets and logging options
"""
import copy
import os
from typing import Dict, Any


class Settings:
    """Main settings class"""

    # Logging
    LOG_LEVEL = os.getenv('RAF_LOG_LEVEL', 'INFO')
    LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
    LOG_FILE = os.getenv('RAF_LOG_FILE', '')

    # Worker threads for per-example forward/backward and evaluation
    NUM_THREADS = int(os.getenv('RAF_THREADS', '1'))

    # Training Parameters (Adam, base learning rate 1e-4)
    LEARNING_RATE = 1e-4
    BATCH_SIZE = 32
    TRAIN_STEPS = 2000
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPSILON = 1e-8
    LOG_EVERY = 50

    # Gradient checking
    GRADCHECK_STEP = 1e-5
    GRADCHECK_TOLERANCE = 1e-4
    GRADCHECK_FULL_LIMIT = 4096  # tensors up to this size are checked entry by entry
    GRADCHECK_SAMPLE_SIZE = 256
    RELATIVE_ERROR_FLOOR = 1e-8

    # Full bilinear tensor reconstruction refuses anything larger
    RECONSTRUCT_CAP = 10 ** 7

    # Synthetic data
    SYNTH_NOISE = 0.1
    ANSWER_VOCAB_SIZE = 2000

    # Dimension presets: n_q, n_v, grid cells G, objects N, fusion dims, glimpses, answers K
    PRESETS = {
        'desk': {
            'n_q': 12, 'n_v': 16, 'grid': 16, 'objects': 8,
            't_q': 8, 't_v': 8, 't_rho': 10, 'glimpses': 1, 'answers': 4,
        },
        'paper': {
            'n_q': 2400, 'n_v': 2048, 'grid': 196, 'objects': 36,
            't_q': 310, 't_v': 310, 't_rho': 510, 'glimpses': 1, 'answers': 2000,
        },
    }

    @classmethod
    def get_preset(cls, name: str) -> Dict[str, int]:
        """Return a copy of a named dimension preset"""
        if name not in cls.PRESETS:
            known = ', '.join(sorted(cls.PRESETS))
            raise ValueError(f"Unknown preset '{name}' (known presets: {known})")
        return copy.deepcopy(cls.PRESETS[name])

    @classmethod
    def get_all_settings(cls) -> Dict[str, Any]:
        """Return all settings as dictionary"""
        return {
            key: getattr(cls, key)
            for key in dir(cls)
            if not key.startswith('_') and not callable(getattr(cls, key))
        }


# Create settings instance
settings = Settings()
