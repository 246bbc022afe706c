# Config Package: settings shared by the RAF VQA head
from .settings import Settings, settings

__all__ = ['Settings', 'settings']
