"""
Stage timing for kernel builds, solves and audits
"""
import statistics
import threading
import time
from collections import defaultdict, deque
from contextlib import contextmanager
from functools import wraps
from typing import Any, Dict, List


class PerformanceMonitor:
    """Thread-safe wall-clock store keyed by stage name"""

    def __init__(self, max_history: int = 1000):
        self.stage_times = defaultdict(lambda: deque(maxlen=max_history))
        self.cache_hits = 0
        self.cache_misses = 0
        self._lock = threading.RLock()
        self.start_time = time.time()

        # stages slower than this show up in the report
        self.slow_threshold = 1.0

    def record(self, stage: str, seconds: float) -> None:
        with self._lock:
            self.stage_times[stage].append(seconds)

    def time_it(self, func):
        """Decorator recording each call under the function name"""
        @wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                self.record(func.__name__, time.perf_counter() - start)
        return wrapper

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(name, time.perf_counter() - start)

    def last(self, stage: str) -> float:
        with self._lock:
            times = self.stage_times.get(stage)
            return times[-1] if times else 0.0

    def record_cache_hit(self):
        with self._lock:
            self.cache_hits += 1

    def record_cache_miss(self):
        with self._lock:
            self.cache_misses += 1

    def get_performance_stats(self) -> Dict[str, Any]:
        with self._lock:
            stages = {}
            for name, times in self.stage_times.items():
                if not times:
                    continue
                values = list(times)
                stages[name] = {
                    'calls': len(values),
                    'avg_time': statistics.mean(values),
                    'max_time': max(values),
                    'total_time': sum(values),
                    'std_dev': statistics.stdev(values) if len(values) > 1 else 0.0,
                    'slow_calls': sum(1 for t in values if t > self.slow_threshold),
                }
            lookups = self.cache_hits + self.cache_misses
            return {
                'stages': stages,
                'cache': {
                    'hits': self.cache_hits,
                    'misses': self.cache_misses,
                    'hit_rate_percent': 100.0 * self.cache_hits / lookups if lookups else 0.0,
                },
                'uptime_seconds': time.time() - self.start_time,
            }

    def get_slow_operations(self) -> List[Dict[str, Any]]:
        stats = self.get_performance_stats()['stages']
        slow = [
            {'stage': name, 'avg_time': s['avg_time'], 'slow_calls': s['slow_calls']}
            for name, s in stats.items() if s['slow_calls'] > 0
        ]
        return sorted(slow, key=lambda x: x['avg_time'], reverse=True)

    def reset_stats(self):
        with self._lock:
            self.stage_times.clear()
            self.cache_hits = 0
            self.cache_misses = 0
            self.start_time = time.time()

    def get_performance_report(self) -> str:
        stats = self.get_performance_stats()
        lines = ["=== PERFORMANCE REPORT ==="]
        lines.append(f"Uptime: {stats['uptime_seconds']:.1f}s")
        for name, s in sorted(stats['stages'].items()):
            lines.append(f"  {name}: {s['calls']} call(s), {s['total_time']:.3f}s total, "
                         f"{s['avg_time'] * 1000:.1f}ms avg")
        lines.append(f"Kernel cache hit rate: {stats['cache']['hit_rate_percent']:.1f}%")
        return "\n".join(lines)


# Global performance monitor
perf_monitor = PerformanceMonitor()
