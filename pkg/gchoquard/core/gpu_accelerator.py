"""
Optional CuPy back end for dense kernel application
"""
import threading
import warnings
from typing import Any, Dict

import numpy as np

try:
    import cupy as cp
    HAS_CUPY = True
except ImportError:
    HAS_CUPY = False


class GPUAccelerator:
    """Device matrix-vector products with a NumPy fallback"""

    def __init__(self, memory_limit_bytes: int = 2 ** 31):
        self._gpu_available = HAS_CUPY and self._check_gpu()
        self._lock = threading.Lock()
        # one resident matrix; the host array is held so its identity stays valid
        self._resident_key = None
        self._resident = None
        if self._gpu_available:
            self._gpu_memory_pool = cp.get_default_memory_pool()
            self._gpu_memory_pool.set_limit(size=memory_limit_bytes)

    def _check_gpu(self) -> bool:
        try:
            with cp.cuda.Device(0):
                probe = cp.array([1.0, 2.0, 3.0])
                return abs(float(cp.sum(probe).get()) - 6.0) < 1e-10
        except Exception:
            return False

    @property
    def available(self) -> bool:
        return self._gpu_available

    def matvec(self, matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
        if not self._gpu_available:
            return matrix @ vector
        try:
            with self._lock:
                if self._resident_key is not matrix:
                    self._release()
                    self._resident = cp.asarray(matrix, dtype=cp.float64)
                    self._resident_key = matrix
                result = self._resident @ cp.asarray(vector, dtype=cp.float64)
                return cp.asnumpy(result)
        except Exception as e:
            warnings.warn(f"GPU matvec failed, falling back to CPU: {e}")
            self._gpu_available = False
            self._release()
            return matrix @ vector

    def _release(self):
        self._resident = None
        self._resident_key = None
        if hasattr(self, '_gpu_memory_pool'):
            self._gpu_memory_pool.free_all_blocks()

    def get_accelerator_status(self) -> Dict[str, Any]:
        return {
            'gpu_available': self._gpu_available,
            'cupy_available': HAS_CUPY,
            'resident_matrix': self._resident_key is not None,
        }


# Global accelerator instance
global_gpu_accelerator = GPUAccelerator()
