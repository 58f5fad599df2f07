from typing import Dict, Any, List, Optional
from datetime import datetime
import logging
import threading

import psutil

logger = logging.getLogger(__name__)


def _empty_metrics(start_time: datetime) -> Dict[str, Any]:
    return {
        "start_time": start_time,
        "calls": {},
        "success": {},
        "success_rate": {},
        "performance": {},
        "resource_usage": {},
        "errors": {},
    }


class RunMonitor:
    """Tracks engine runs: counts, timings, resource snapshots and errors per engine"""

    def __init__(self):
        self.start_time = datetime.now()
        self.last_reset = self.start_time
        self._lock = threading.Lock()
        self.metrics = _empty_metrics(self.start_time)

    def _ensure_engine(self, engine: str):
        self.metrics["calls"].setdefault(engine, 0)
        self.metrics["success"].setdefault(engine, 0)
        self.metrics["success_rate"].setdefault(engine, 0.0)
        self.metrics["performance"].setdefault(engine, [])
        self.metrics["resource_usage"].setdefault(engine, [])
        self.metrics["errors"].setdefault(engine, [])

    def track_call(
        self,
        engine: str,
        success: bool,
        error: Optional[BaseException] = None,
        execution_time: Optional[float] = None,
    ):
        """Record one engine run"""
        logger.debug(f"Tracking {engine} run, success: {success}")
        with self._lock:
            self._ensure_engine(engine)
            self.metrics["calls"][engine] += 1
            if success:
                self.metrics["success"][engine] += 1
            if error is not None:
                self.metrics["errors"][engine].append({
                    "error": str(error),
                    "type": type(error).__name__,
                    "timestamp": datetime.now().isoformat(),
                })
            if execution_time is not None:
                self.metrics["performance"][engine].append(execution_time)
                self.metrics["resource_usage"][engine].append(self._get_resource_usage(execution_time))

            calls = self.metrics["calls"][engine]
            self.metrics["success_rate"][engine] = self.metrics["success"][engine] / calls if calls else 0.0

    def _get_resource_usage(self, execution_time: float) -> Dict[str, Any]:
        process = psutil.Process()
        return {
            "usage": {
                "cpu_percent": process.cpu_percent(),
                "memory_percent": process.memory_percent(),
                "memory_rss": process.memory_info().rss / 1024 / 1024,  # MB
                "threads": process.num_threads(),
            },
            "timestamp": datetime.now().isoformat(),
            "execution_time": execution_time,
        }

    @staticmethod
    def _performance_stats(times: List[float]) -> Dict[str, float]:
        if not times:
            return {}
        ordered = sorted(times)
        return {
            "min": ordered[0],
            "max": ordered[-1],
            "avg": sum(times) / len(times),
            "count": len(times),
            "p95": ordered[int(len(ordered) * 0.95)] if len(ordered) > 1 else ordered[0],
        }

    @staticmethod
    def _resource_stats(usages: List[Dict[str, Any]]) -> Dict[str, Any]:
        if not usages:
            return {}

        def column(key):
            return [u["usage"][key] for u in usages]

        return {
            "cpu": {"avg": sum(column("cpu_percent")) / len(usages), "max": max(column("cpu_percent"))},
            "memory": {
                "avg": sum(column("memory_percent")) / len(usages),
                "max": max(column("memory_percent")),
                "rss_avg": sum(column("memory_rss")) / len(usages),
                "rss_max": max(column("memory_rss")),
            },
            "threads": {"avg": sum(column("threads")) / len(usages), "max": max(column("threads"))},
        }

    @property
    def engines(self) -> List[str]:
        return sorted(self.metrics["calls"])

    def get_metrics(self) -> Dict[str, Any]:
        with self._lock:
            metrics = {key: (dict(value) if isinstance(value, dict) else value)
                       for key, value in self.metrics.items()}
            metrics["start_time"] = self.start_time
            metrics["last_reset"] = self.last_reset
            metrics["performance_stats"] = {
                engine: self._performance_stats(times)
                for engine, times in self.metrics["performance"].items()
            }
            metrics["resource_stats"] = {
                engine: self._resource_stats(usages)
                for engine, usages in self.metrics["resource_usage"].items()
            }
        return metrics

    def snapshot(self) -> Dict[str, Any]:
        """JSON-friendly subset of the metrics for run metadata"""
        metrics = self.get_metrics()
        return {
            "start_time": metrics["start_time"].isoformat(),
            "calls": metrics["calls"],
            "success_rate": metrics["success_rate"],
            "performance_stats": metrics["performance_stats"],
            "resource_stats": metrics["resource_stats"],
            "errors": metrics["errors"],
        }

    def reset_metrics(self) -> Dict[str, Any]:
        """Clear all counters while keeping the start time"""
        with self._lock:
            self.metrics = _empty_metrics(self.start_time)
            self.last_reset = datetime.now()
        return {"start_time": self.start_time}

    def get_summary(self) -> str:
        metrics = self.get_metrics()
        summary = [
            f"Monitoring started at: {self.start_time}",
            f"Last reset at: {self.last_reset}",
            "\nCall Statistics:",
        ]
        engines = self.engines
        for engine in engines:
            summary.append(f"{engine} runs: {metrics['calls'][engine]}")

        summary.append("\nSuccess Rates:")
        for engine in engines:
            summary.append(f"{engine} success rate: {metrics['success_rate'][engine]:.2%}")

        summary.append("\nError Counts:")
        for engine in engines:
            summary.append(f"{engine} errors: {len(metrics['errors'][engine])}")

        summary.append("\nPerformance Statistics:")
        for engine in engines:
            stats = metrics["performance_stats"][engine]
            if stats:
                summary.extend([
                    f"{engine}:",
                    f"  Min time: {stats['min']:.2f}s",
                    f"  Max time: {stats['max']:.2f}s",
                    f"  Avg time: {stats['avg']:.2f}s",
                    f"  P95 time: {stats['p95']:.2f}s",
                    f"  Samples: {stats['count']}",
                ])

        summary.append("\nResource Usage Statistics:")
        for engine in engines:
            stats = metrics["resource_stats"][engine]
            if stats:
                summary.extend([
                    f"{engine}:",
                    f"  CPU avg/max: {stats['cpu']['avg']:.1f}% / {stats['cpu']['max']:.1f}%",
                    f"  RSS avg/max: {stats['memory']['rss_avg']:.1f}MB / {stats['memory']['rss_max']:.1f}MB",
                    f"  Threads max: {stats['threads']['max']}",
                ])

        return "\n".join(summary)
