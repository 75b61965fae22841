"""
In-process cache of assembled kernels
"""
import threading
from collections import OrderedDict
from concurrent.futures import Future
from typing import Callable, Hashable, Optional, Tuple


def kernel_key(grid, params, n_theta: int, matrix_free: bool = False) -> Tuple:
    """Everything a kernel depends on; p is deliberately absent"""
    return (grid.nr, grid.ns, grid.R, grid.S, params.gamma, params.mu,
            params.m, params.ell, int(n_theta), bool(matrix_free))


class KernelCache:
    """Bounded LRU of KernelMatrix objects shared by sweeps over p"""

    def __init__(self, max_size: int = 4):
        self.max_size = max_size
        self._store = OrderedDict()
        self._lock = threading.RLock()
        self._pending = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable):
        with self._lock:
            if key not in self._store:
                return None
            self._store.move_to_end(key)
            return self._store[key]

    def put(self, key: Hashable, kernel) -> None:
        with self._lock:
            self._store[key] = kernel
            self._store.move_to_end(key)
            while len(self._store) > self.max_size:
                self._store.popitem(last=False)

    def get_or_build(self, key: Hashable, build: Callable[[], object],
                     monitor: Optional[object] = None):
        """
        Concurrent callers for one key share a single build; builds for different
        keys run in parallel. A failed build is re-raised in every waiting caller.
        """
        with self._lock:
            kernel = self.get(key)
            if kernel is not None:
                self.hits += 1
                if monitor is not None:
                    monitor.record_cache_hit()
                return kernel
            pending = self._pending.get(key)
            owner = pending is None
            if owner:
                pending = self._pending[key] = Future()
                self.misses += 1
                if monitor is not None:
                    monitor.record_cache_miss()
            else:
                self.hits += 1
                if monitor is not None:
                    monitor.record_cache_hit()
        if not owner:
            return pending.result()

        try:
            kernel = build()
        except BaseException as e:
            with self._lock:
                del self._pending[key]
            pending.set_exception(e)
            raise
        with self._lock:
            self.put(key, kernel)
            del self._pending[key]
        pending.set_result(kernel)
        return kernel

    def clear(self) -> None:
        with self._lock:
            self._store.clear()

    def __len__(self) -> int:
        return len(self._store)

    def get_stats(self) -> dict:
        return {'size': len(self._store), 'max_size': self.max_size,
                'hits': self.hits, 'misses': self.misses}


global_kernel_cache = KernelCache()
