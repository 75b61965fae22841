from .cache import KernelCache, global_kernel_cache
from .errors import GrushinChoquardError

__all__ = [
    'KernelCache',
    'global_kernel_cache',
    'GrushinChoquardError'
]
