from .engine import GrushinChoquardEngine
from .cli import CLI

__all__ = [
    'GrushinChoquardEngine',
    'CLI'
]
